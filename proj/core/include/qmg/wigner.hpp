#pragma once

#include <vector>

#include "qmg/numerics.hpp"
#include "qmg/strategy.hpp"

namespace qmg {

/// Pseudo-probability W(p, q) sampled on a (p, q) grid.
///
/// values are stored row-major with one row per p: values[ip * nq + iq].
/// Rows may go negative; that is what makes a strategy a giffen.
struct WignerField {
    Grid1D p_grid;
    Grid1D q_grid;
    std::vector<double> values;
    double h_E;

    double at(std::size_t ip, std::size_t iq) const { return values[ip * q_grid.size() + iq]; }
    std::vector<double> row(std::size_t ip) const;
    std::vector<double> column(std::size_t iq) const;

    /// Trapezoid integral over both axes.
    double integral() const;
    double max_abs() const;
};

/// Output grid of wigner_of_pure. Rows span the whole strategy grid; the p
/// window has n_p samples centred on the mean of p.
struct WignerOptions {
    std::size_t n_q = 512;
    std::size_t n_p = 512;
};

/// W(p, q) = h_E^{-1} int exp(i p x / hbar_E) psi(q + x/2) psi*(q - x/2) dx / <psi|psi>,
/// one FFT along x per q row. The row and column nearest the state's mean
/// (p, q) pass through it exactly.
WignerField wigner_of_pure(const Strategy& s, const WignerOptions& options = {});

struct MixedStrategy {
    std::vector<double> weights;
    std::vector<Strategy> components;

    /// weights >= 0 summing to 1 within 1e-12, at least one component.
    void validate() const;
};

/// sum_n w_n W_n on the grid of the mixture's mean.
WignerField wigner_of_mixed(const MixedStrategy& mixed, const WignerOptions& options = {});

/// Cumulative curve F(ln c) sampled at increasing ln c.
struct Curve {
    std::vector<double> ln_c;
    std::vector<double> values;

    /// No step moves against the direction by more than tol.
    bool is_monotone_nondecreasing(double tol = 0.0) const;
    bool is_monotone_nonincreasing(double tol = 0.0) const;
};

/// Demand curve F_d(ln c) = int_{-inf}^{ln c} W(p_const, q) dq on the row
/// nearest p_const.
Curve demand_curve(const WignerField& field, double p_const);
/// Uses the field's mean p as the slice.
Curve demand_curve(const WignerField& field);

/// Supply curve F_s(ln c) = int_{-inf}^{-ln c} W(p, q_const) dp on the
/// column nearest q_const.
Curve supply_curve(const WignerField& field, double q_const);
Curve supply_curve(const WignerField& field);

/// Marginal means of a field.
double field_mean_p(const WignerField& field);
double field_mean_q(const WignerField& field);

struct GiffenReport {
    bool giffen = false;
    double min_value = 0.0;
    double p = 0.0; ///< location of the minimum
    double q = 0.0;
    double threshold = 0.0;
};

/// Flags a field whose minimum falls below -tol. With tol < 0 the default
/// 1e-8 * max|W| is used.
GiffenReport is_giffen(const WignerField& field, double tol = -1.0);

/// Gaussianity test: excess kurtosis of both marginals below 1e-4 and
/// Wigner minimum above -1e-6.
bool hudson_check(const Strategy& s, const WignerOptions& options = {});

/// Gibbs mixture of oscillator levels at inverse temperature beta.
struct GibbsSpec {
    double beta = 1.0;
    int n_max = 0;
    RiskParams params;

    /// sum_{n > n_max} w_n(beta).
    double tail_weight() const;
    double weight(int n) const;
    void validate() const;
};

/// Smallest n_max whose Gibbs tail falls below tail_bound.
int required_n_max(double beta, const RiskParams& params, double tail_bound = 1e-10);

/// W_n(p, q) = (-1)^n / (pi hbar) exp(-2H / (hbar omega)) L_n(4H / (hbar omega)),
/// centred at the origin, hbar = hbar_eff of params.
WignerField oscillator_wigner(int n, const RiskParams& params, const Grid1D& p_grid, const Grid1D& q_grid);

/// sum_n w_n(beta) W_n truncated at n_max; throws TruncationError when the
/// Gibbs tail exceeds 1e-10.
WignerField thermal_series(const GibbsSpec& spec, const Grid1D& p_grid, const Grid1D& q_grid);

/// (omega / 2 pi) x exp(-x H(p, q)), x = (2 / (hbar omega)) tanh(beta hbar omega / 2).
WignerField thermal_closed_form(const GibbsSpec& spec, const Grid1D& p_grid, const Grid1D& q_grid);

/// [-12, 12] x [-12, 12] with 256 points per axis.
Grid1D default_phase_grid();

} // namespace qmg
