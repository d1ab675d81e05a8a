#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qmg/numerics.hpp"
#include "qmg/strategy.hpp"

namespace qmg {

enum class FlowMode { capital, probability };
enum class Side { buyer, seller };

enum class NoTradeReason { none, no_crossing, empty_side, zeno_collapse };

std::string_view to_string(FlowMode mode);
std::string_view to_string(Side side);
std::string_view to_string(NoTradeReason reason);

/// One trader's submission {|psi>_k, s_k, d_k}.
struct TraderDeclaration {
    int trader_id = 0;
    Strategy strategy;
    double s = 0.0; ///< units of the asset
    double d = 0.0; ///< money units

    /// s, d >= 0 and s + d > 0.
    void validate() const;
};

/// Partition of the traders into buyers and sellers.
///
/// Encoded as a bitmask over the traders sorted by id: bit i set means the
/// i-th trader buys.
struct Division {
    std::uint64_t mask = 0;
    std::vector<int> buyers;
    std::vector<int> sellers;

    static Division from_mask(std::span<const int> sorted_ids, std::uint64_t mask);
    Side side_of(int trader_id) const;
};

/// One side of one trader after rescaling: its declared capital spread by
/// the normalised demand (buyer) or supply (seller) density.
class FlowLeg {
public:
    /// Leg backed by a grid marginal (density integrates to `capital`).
    FlowLeg(int trader_id, Side side, double capital, std::shared_ptr<const MarginalTable> table);
    /// Leg of a price eigenstate. For a buyer the threshold is the demand
    /// point a (fills for ln c >= a); for a seller it is -b (fills for ln c <= -b).
    FlowLeg(int trader_id, Side side, double capital, double threshold);

    /// Builds a leg from an explicit non-negative density on a grid; the
    /// density is normalised so that it integrates to `capital`.
    static FlowLeg from_density(int trader_id, Side side, double capital, const Grid1D& grid,
                                std::vector<double> density);

    int trader_id() const { return trader_id_; }
    Side side() const { return side_; }
    double capital() const { return capital_; }
    bool is_step() const { return threshold_.has_value(); }
    std::optional<double> threshold() const { return threshold_; }
    const MarginalTable* table() const { return table_.get(); }

    /// Rescaled density samples on the table grid; empty for step legs.
    std::vector<double> density() const;

    /// Volume at ln c. Buyers: capital * P(q <= ln c); sellers:
    /// capital * P(p <= -ln c). Step legs count as filled at the threshold.
    double amount(double ln_c) const;

private:
    int trader_id_;
    Side side_;
    double capital_;
    std::shared_ptr<const MarginalTable> table_;
    std::optional<double> threshold_;
};

/// Rescaled flows for one division.
struct FlowProfile {
    Division division;
    FlowMode mode = FlowMode::capital;
    std::vector<FlowLeg> legs;
    /// Price span scanned by clear_price (ln c).
    Grid1D price_grid = default_grid();

    double demand(double ln_c) const;
    double supply(double ln_c) const;
    double total_capital() const;
};

/// Volumes at one price after rationing step legs that sit exactly at it.
struct Fill {
    double ln_c = 0.0;
    double demand = 0.0;      ///< money bought, sum over buyers
    double supply = 0.0;      ///< asset sold, sum over sellers
    double buyer_fraction = 1.0;  ///< fill fraction of buyer step legs at their threshold
    double seller_fraction = 1.0; ///< fill fraction of seller step legs at their threshold

    double residual() const;  ///< demand - c * supply
    double turnover() const;  ///< min(demand, c * supply)
};

struct PriceSolution {
    bool traded = false;
    NoTradeReason reason = NoTradeReason::none;
    Fill fill;
};

struct TraderDelta {
    int trader_id = 0;
    Side side = Side::buyer;
    double delta_g = 0.0;
    double delta_money = 0.0;
    double fill_ln_price = 0.0; ///< ln c for buyers, p = -ln c for sellers
};

struct ClearingOutcome {
    Division division;
    bool traded = false;
    NoTradeReason reason = NoTradeReason::none;
    double ln_c_star = 0.0;
    double turnover = 0.0;
    std::vector<TraderDelta> deltas;
    double residual = 0.0;

    double sum_delta_money() const;
    double sum_delta_g() const;
};

inline constexpr double default_clearing_tol = 1e-10;
inline constexpr std::size_t max_exhaustive_traders = 20;

/// Rescales the declared amplitudes to capital flows (capital mode: buyer
/// density integrates to d_k, seller density to s_k) or to probabilities
/// (d_k / sum d, s_k / sum s).
FlowProfile rescale(std::span<const TraderDeclaration> decls, const Division& division, FlowMode mode);

/// min{ sum_buyers D_k(ln c), c * sum_sellers S_k(ln c) }.
double turnover(const FlowProfile& profile, double ln_c);

/// Volumes at ln c with step legs at the threshold rationed to balance
/// demand against c * supply where possible, favouring the larger turnover.
Fill fill_at(const FlowProfile& profile, double ln_c);

/// Solves demand(ln c) = c * supply(ln c).
///
/// A sign change between the ends of the price grid is required; the first
/// grid cell with a sign change is then bisected to double precision, so the
/// smallest root on the grid is returned. No sign change or zero turnover at
/// the root is reported as a no-trade solution. Throws NumericalError when
/// the residual exceeds tol.
PriceSolution clear_price(const FlowProfile& profile, double tol = default_clearing_tol);

/// Capital flows at a cleared price. Buyers gain D_k / c assets for D_k
/// money; sellers give S_k assets for c S_k money.
ClearingOutcome settle(const FlowProfile& profile, double ln_c_star);

/// Exhaustive search over all 2^K - 2 divisions for maximal turnover. Ties go
/// to the smaller bitmask. K > 20 is rejected.
ClearingOutcome best_division(std::span<const TraderDeclaration> decls, FlowMode mode,
                              double tol = default_clearing_tol);

/// True iff every buyer/seller pair shares one price: q_buyer + p_seller = 0.
bool uniform_price_check(const ClearingOutcome& outcome);

/// Applies I + alpha_d P_d (buyers) or I + alpha_s P_s (sellers) and
/// renormalises. P_d projects the demand amplitude on q <= ln_c, P_s the
/// supply amplitude on p <= -ln_c. Eigenstate strategies pass through.
/// Results follow the order of decls.
std::vector<Strategy> apply_scattering(std::span<const TraderDeclaration> decls, const Division& division,
                                       double alpha_d, double alpha_s, double ln_c);

/// As above at the division's capital-mode clearing price, or at ln c = 0
/// when the division does not trade.
std::vector<Strategy> apply_scattering(std::span<const TraderDeclaration> decls, const Division& division,
                                       double alpha_d, double alpha_s);

} // namespace qmg
