#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "qmg/numerics.hpp"

namespace qmg {

/// Which canonical variable a price eigenstate diagonalises.
enum class Representation { demand, supply };

/// Symbolic eigenstate |a> of Q (demand) or P (supply).
///
/// A demand eigenstate at `point` = a refuses to buy below c = e^a and buys
/// at any price at or above it; a supply eigenstate at b sells while
/// -ln c >= b. These states are not square integrable and are never gridded.
struct PriceEigenstate {
    Representation rep;
    double point;
};

/// Normalised marginal density with its running integral.
///
/// The density is modelled as a non-negative piecewise cubic (Hermite, with
/// clamped slopes); cumulative holds its exact running integral.
struct MarginalTable {
    Grid1D grid;
    std::vector<double> density;
    std::vector<double> slopes;
    std::vector<double> cumulative;

    /// Normalises a non-negative density so that the model integrates to 1.
    static MarginalTable from_density(const Grid1D& grid, std::vector<double> density);

    /// Running integral at x, clamped to [0, 1].
    double cdf(double x) const;
};

struct MarginalStats {
    double mean;
    double variance;
    double excess_kurtosis;
};

/// A trader strategy |psi>.
///
/// Either a complex demand amplitude <q|psi> on a grid or a symbolic price
/// eigenstate. Values are immutable; the supply amplitude and the marginal
/// tables are derived on first use and shared between copies.
class Strategy {
public:
    static Strategy from_amplitude(ComplexField1D amplitude, double h_E);
    static Strategy price_eigenstate(Representation rep, double point, double h_E);

    bool is_grid() const;
    bool is_eigenstate() const { return !is_grid(); }

    double h_E() const;
    double hbar() const;

    /// Throws ValidationError for eigenstates.
    const ComplexField1D& amplitude() const;
    /// Throws ValidationError for grid strategies.
    const PriceEigenstate& eigenstate() const;

    /// <psi|psi> by trapezoid quadrature.
    double norm_squared() const;

    const ComplexField1D& supply_amplitude() const;
    const MarginalTable& demand_marginal() const;
    const MarginalTable& supply_marginal() const;

    /// Shared handles to the marginal tables; they keep the strategy alive.
    std::shared_ptr<const MarginalTable> demand_marginal_shared() const;
    std::shared_ptr<const MarginalTable> supply_marginal_shared() const;

private:
    struct State;
    explicit Strategy(std::shared_ptr<const State> state);
    std::shared_ptr<const State> state_;
};

/// Zero-padding factor used when deriving the supply representation.
inline constexpr std::size_t supply_oversample = 16;

/// Parameters of the risk inclination operator
///
///     H(P, Q) = (P - p0)^2 / (2m) + m omega^2 (Q - q0)^2 / 2,  omega = 2 pi / theta.
///
/// theta_nc is the noncommutativity parameter; it shifts h_E to
/// sqrt(h_E^2 + theta_nc^2).
struct RiskParams {
    double m = 1.0;
    double theta = 2.0 * pi;
    double h_E = 2.0 * pi;
    double theta_nc = 0.0;

    double omega() const { return 2.0 * pi / theta; }
    double hbar() const { return h_E / (2.0 * pi); }
    double h_eff() const;
    double hbar_eff() const { return h_eff() / (2.0 * pi); }

    /// Throws ValidationError unless m, theta, h_E > 0 and theta_nc >= 0.
    void validate() const;
};

Strategy normalize(const Strategy& s);

/// <p|psi> on the (oversampled) conjugate grid.
ComplexField1D supply_rep(const Strategy& s);

/// Probability of buying at price e^{ln_c} or lower.
double buy_cdf(const Strategy& s, double ln_c);

/// Probability of selling, integrated over p up to -ln_c.
double sell_cdf(const Strategy& s, double ln_c);

MarginalStats demand_stats(const Strategy& s);
MarginalStats supply_stats(const Strategy& s);

/// Real Gaussian amplitude whose demand density is N(q0, sigma_q^2).
Strategy make_gaussian(double q0, double sigma_q, double h_E, const Grid1D& grid = default_grid());

/// Gaussian with dispersions Delta_q = eta / sqrt(1 - r^2), Delta_p = hbar_E / (2 eta)
/// and p-q correlation r, centred at (p0, q0). Saturates
/// Delta_p Delta_q sqrt(1 - r^2) = hbar_E / 2.
Strategy make_coherent_correlated(double r, double eta, double p0, double q0, double h_E,
                                  const Grid1D& grid = default_grid());

/// n-th eigenstate of the risk inclination operator centred at (p0, q0).
/// The state carries the shifted constant h_eff of params.
Strategy make_oscillator_eigenstate(int n, const RiskParams& params, double p0, double q0,
                                    const Grid1D& grid = default_grid());

/// <H(P, Q)> about the state's own means p0, q0.
double risk_expectation(const Strategy& s, const RiskParams& params);

/// Projects the demand amplitude on [q_center - width/2, q_center + width/2]
/// and renormalises.
Strategy collapse_demand(const Strategy& s, double q_center, double width);

/// Normalised linear combination sum c_i |psi_i> of grid strategies sharing
/// grid and h_E.
Strategy superpose(std::span<const std::pair<complex, Strategy>> terms);

} // namespace qmg
