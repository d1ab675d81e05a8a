#include "qmg/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "qmg/error.hpp"

namespace qmg {

std::string_view to_string(FlowMode mode) { return mode == FlowMode::capital ? "capital" : "probability"; }

std::string_view to_string(Side side) { return side == Side::buyer ? "buyer" : "seller"; }

std::string_view to_string(NoTradeReason reason) {
    switch (reason) {
    case NoTradeReason::none: return "none";
    case NoTradeReason::no_crossing: return "no-crossing";
    case NoTradeReason::empty_side: return "empty-side";
    case NoTradeReason::zeno_collapse: return "zeno-collapse";
    }
    return "unknown";
}

void TraderDeclaration::validate() const {
    if (!(s >= 0.0) || !(d >= 0.0) || !std::isfinite(s) || !std::isfinite(d)) {
        std::ostringstream msg;
        msg << "trader " << trader_id << ": s and d must be finite and non-negative";
        throw ValidationError(msg.str());
    }
    if (!(s + d > 0.0)) {
        std::ostringstream msg;
        msg << "trader " << trader_id << ": declares no capital (s + d = 0)";
        throw ValidationError(msg.str());
    }
}

Division Division::from_mask(std::span<const int> sorted_ids, std::uint64_t mask) {
    Division div;
    div.mask = mask;
    for (std::size_t i = 0; i < sorted_ids.size(); ++i) {
        if (mask & (std::uint64_t{1} << i)) {
            div.buyers.push_back(sorted_ids[i]);
        } else {
            div.sellers.push_back(sorted_ids[i]);
        }
    }
    return div;
}

Side Division::side_of(int trader_id) const {
    if (std::find(buyers.begin(), buyers.end(), trader_id) != buyers.end()) return Side::buyer;
    if (std::find(sellers.begin(), sellers.end(), trader_id) != sellers.end()) return Side::seller;
    std::ostringstream msg;
    msg << "division: trader " << trader_id << " is not part of the division";
    throw ValidationError(msg.str());
}

// ------------------------------------------------------------------- FlowLeg

FlowLeg::FlowLeg(int trader_id, Side side, double capital, std::shared_ptr<const MarginalTable> table)
    : trader_id_(trader_id), side_(side), capital_(capital), table_(std::move(table)) {}

FlowLeg::FlowLeg(int trader_id, Side side, double capital, double threshold)
    : trader_id_(trader_id), side_(side), capital_(capital), threshold_(threshold) {}

FlowLeg FlowLeg::from_density(int trader_id, Side side, double capital, const Grid1D& grid,
                              std::vector<double> density) {
    if (std::any_of(density.begin(), density.end(), [](double v) { return !(v >= 0.0); })) {
        throw ValidationError("flow leg: density must be non-negative");
    }
    if (!(integrate(grid, density) > 0.0)) throw ValidationError("flow leg: zero density");
    auto table = std::make_shared<const MarginalTable>(MarginalTable::from_density(grid, std::move(density)));
    return FlowLeg(trader_id, side, capital, std::move(table));
}

std::vector<double> FlowLeg::density() const {
    if (!table_) return {};
    std::vector<double> out(table_->density);
    for (auto& v : out) v *= capital_;
    return out;
}

double FlowLeg::amount(double ln_c) const {
    if (threshold_) {
        const bool filled = side_ == Side::buyer ? ln_c >= *threshold_ : ln_c <= *threshold_;
        return filled ? capital_ : 0.0;
    }
    return capital_ * table_->cdf(side_ == Side::buyer ? ln_c : -ln_c);
}

// --------------------------------------------------------------- FlowProfile

double FlowProfile::demand(double ln_c) const {
    double acc = 0.0;
    for (const auto& leg : legs) {
        if (leg.side() == Side::buyer) acc += leg.amount(ln_c);
    }
    return acc;
}

double FlowProfile::supply(double ln_c) const {
    double acc = 0.0;
    for (const auto& leg : legs) {
        if (leg.side() == Side::seller) acc += leg.amount(ln_c);
    }
    return acc;
}

double FlowProfile::total_capital() const {
    double acc = 0.0;
    for (const auto& leg : legs) acc += leg.capital();
    return acc;
}

double Fill::residual() const { return demand - std::exp(ln_c) * supply; }

double Fill::turnover() const { return std::min(demand, std::exp(ln_c) * supply); }

// ------------------------------------------------------------------ rescale

namespace {

bool can_buy(const TraderDeclaration& decl) {
    if (!(decl.d > 0.0)) return false;
    return decl.strategy.is_grid() || decl.strategy.eigenstate().rep == Representation::demand;
}

bool can_sell(const TraderDeclaration& decl) {
    if (!(decl.s > 0.0)) return false;
    return decl.strategy.is_grid() || decl.strategy.eigenstate().rep == Representation::supply;
}

std::vector<const TraderDeclaration*> sorted_by_id(std::span<const TraderDeclaration> decls) {
    std::vector<const TraderDeclaration*> out;
    out.reserve(decls.size());
    for (const auto& d : decls) out.push_back(&d);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->trader_id < b->trader_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i]->trader_id == out[i - 1]->trader_id) {
            std::ostringstream msg;
            msg << "duplicate trader id " << out[i]->trader_id;
            throw ValidationError(msg.str());
        }
    }
    return out;
}

// Right-continuous excess demand: buyer steps count at their threshold,
// seller steps do not. clear_price looks for the first x with g(x) >= 0.
double excess_demand_upper(const FlowProfile& profile, double x) {
    double demand = 0.0;
    double supply = 0.0;
    for (const auto& leg : profile.legs) {
        if (leg.side() == Side::buyer) {
            demand += leg.amount(x);
        } else if (leg.is_step()) {
            supply += (x < *leg.threshold()) ? leg.capital() : 0.0;
        } else {
            supply += leg.amount(x);
        }
    }
    return demand - std::exp(x) * supply;
}

} // namespace

FlowProfile rescale(std::span<const TraderDeclaration> decls, const Division& division, FlowMode mode) {
    FlowProfile profile;
    profile.division = division;
    profile.mode = mode;

    double total_d = 0.0;
    double total_s = 0.0;
    for (const auto& decl : decls) {
        decl.validate();
        const Side side = division.side_of(decl.trader_id);
        if (side == Side::buyer) {
            if (!can_buy(decl)) {
                std::ostringstream msg;
                msg << "rescale: trader " << decl.trader_id << " cannot buy (d = " << decl.d
                    << (decl.strategy.is_eigenstate() ? ", supply eigenstate" : "") << ")";
                throw ValidationError(msg.str());
            }
            total_d += decl.d;
        } else {
            if (!can_sell(decl)) {
                std::ostringstream msg;
                msg << "rescale: trader " << decl.trader_id << " cannot sell (s = " << decl.s
                    << (decl.strategy.is_eigenstate() ? ", demand eigenstate" : "") << ")";
                throw ValidationError(msg.str());
            }
            total_s += decl.s;
        }
    }

    bool grid_chosen = false;
    for (const auto* decl : sorted_by_id(decls)) {
        const Side side = division.side_of(decl->trader_id);
        double capital = side == Side::buyer ? decl->d : decl->s;
        if (mode == FlowMode::probability) capital /= (side == Side::buyer ? total_d : total_s);
        const auto& strat = decl->strategy;
        if (strat.is_eigenstate()) {
            const double point = strat.eigenstate().point;
            profile.legs.emplace_back(decl->trader_id, side, capital, side == Side::buyer ? point : -point);
        } else {
            if (!grid_chosen) {
                profile.price_grid = strat.amplitude().grid;
                grid_chosen = true;
            }
            auto table = side == Side::buyer ? strat.demand_marginal_shared() : strat.supply_marginal_shared();
            profile.legs.emplace_back(decl->trader_id, side, capital, std::move(table));
        }
    }
    return profile;
}

double turnover(const FlowProfile& profile, double ln_c) {
    return std::min(profile.demand(ln_c), std::exp(ln_c) * profile.supply(ln_c));
}

Fill fill_at(const FlowProfile& profile, double ln_c) {
    const double c = std::exp(ln_c);
    double demand_cont = 0.0;
    double demand_jump = 0.0;
    double supply_cont = 0.0;
    double supply_jump = 0.0;
    for (const auto& leg : profile.legs) {
        const bool at_threshold = leg.is_step() && *leg.threshold() == ln_c;
        if (leg.side() == Side::buyer) {
            (at_threshold ? demand_jump : demand_cont) += at_threshold ? leg.capital() : leg.amount(ln_c);
        } else {
            (at_threshold ? supply_jump : supply_cont) += at_threshold ? leg.capital() : leg.amount(ln_c);
        }
    }

    Fill fill;
    fill.ln_c = ln_c;
    if (demand_jump == 0.0 && supply_jump == 0.0) {
        fill.demand = demand_cont;
        fill.supply = supply_cont;
        return fill;
    }

    // Balance inside [D, D + dD] x c[S, S + dS], taking the largest volume.
    const double lo = std::max(demand_cont, c * supply_cont);
    const double hi = std::min(demand_cont + demand_jump, c * (supply_cont + supply_jump));
    double target_demand = 0.0;
    double target_supply = 0.0;
    if (lo <= hi) {
        target_demand = hi;
        target_supply = hi / c;
    } else if (demand_cont + demand_jump < c * supply_cont) {
        target_demand = demand_cont + demand_jump;
        target_supply = supply_cont;
    } else {
        target_demand = demand_cont;
        target_supply = supply_cont + supply_jump;
    }
    fill.buyer_fraction = demand_jump > 0.0 ? std::clamp((target_demand - demand_cont) / demand_jump, 0.0, 1.0) : 1.0;
    fill.seller_fraction = supply_jump > 0.0 ? std::clamp((target_supply - supply_cont) / supply_jump, 0.0, 1.0) : 1.0;
    fill.demand = demand_cont + fill.buyer_fraction * demand_jump;
    fill.supply = supply_cont + fill.seller_fraction * supply_jump;
    return fill;
}

PriceSolution clear_price(const FlowProfile& profile, double tol) {
    if (!(tol > 0.0)) throw ValidationError("clear_price: tol must be positive");
    PriceSolution out;
    const bool has_buyer = std::any_of(profile.legs.begin(), profile.legs.end(),
                                       [](const FlowLeg& l) { return l.side() == Side::buyer && l.capital() > 0.0; });
    const bool has_seller = std::any_of(profile.legs.begin(), profile.legs.end(),
                                        [](const FlowLeg& l) { return l.side() == Side::seller && l.capital() > 0.0; });
    if (!has_buyer || !has_seller) {
        out.reason = NoTradeReason::empty_side;
        return out;
    }

    const auto& grid = profile.price_grid;
    const auto g = [&](double x) { return excess_demand_upper(profile, x); };
    if (!(g(grid.lo()) < 0.0) || !(g(grid.hi()) >= 0.0)) {
        out.reason = NoTradeReason::no_crossing;
        return out;
    }

    std::size_t cell = 1;
    while (cell < grid.size() && !(g(grid.at(cell)) >= 0.0)) ++cell;
    const double left = grid.at(cell - 1);
    const double right = cell < grid.size() ? grid.at(cell) : grid.hi();
    const auto bracket = bisect_bracket(g, left, right, std::numeric_limits<double>::denorm_min());
    const double ln_c = bracket.hi;

    out.fill = fill_at(profile, ln_c);
    const double scale = std::max(1.0, profile.total_capital());
    if (!(out.fill.turnover() > 1e-12 * scale)) {
        out.reason = NoTradeReason::no_crossing;
        return out;
    }
    if (std::abs(out.fill.residual()) > tol) {
        std::ostringstream msg;
        msg << "clear_price: residual " << out.fill.residual() << " at ln c = " << ln_c << " exceeds tolerance " << tol;
        throw NumericalError(msg.str());
    }
    out.traded = true;
    return out;
}

ClearingOutcome settle(const FlowProfile& profile, double ln_c_star) {
    const Fill fill = fill_at(profile, ln_c_star);
    const double c = std::exp(ln_c_star);

    ClearingOutcome outcome;
    outcome.division = profile.division;
    outcome.traded = true;
    outcome.ln_c_star = ln_c_star;
    outcome.turnover = fill.turnover();
    outcome.residual = fill.residual();
    for (const auto& leg : profile.legs) {
        const bool at_threshold = leg.is_step() && *leg.threshold() == ln_c_star;
        TraderDelta delta;
        delta.trader_id = leg.trader_id();
        delta.side = leg.side();
        if (leg.side() == Side::buyer) {
            const double spent = at_threshold ? fill.buyer_fraction * leg.capital() : leg.amount(ln_c_star);
            delta.delta_g = spent / c;
            delta.delta_money = -spent;
            delta.fill_ln_price = ln_c_star;
        } else {
            const double sold = at_threshold ? fill.seller_fraction * leg.capital() : leg.amount(ln_c_star);
            delta.delta_g = -sold;
            delta.delta_money = c * sold;
            delta.fill_ln_price = -ln_c_star;
        }
        outcome.deltas.push_back(delta);
    }
    std::sort(outcome.deltas.begin(), outcome.deltas.end(),
              [](const TraderDelta& a, const TraderDelta& b) { return a.trader_id < b.trader_id; });
    return outcome;
}

double ClearingOutcome::sum_delta_money() const {
    return std::accumulate(deltas.begin(), deltas.end(), 0.0,
                           [](double acc, const TraderDelta& d) { return acc + d.delta_money; });
}

double ClearingOutcome::sum_delta_g() const {
    return std::accumulate(deltas.begin(), deltas.end(), 0.0,
                           [](double acc, const TraderDelta& d) { return acc + d.delta_g; });
}

namespace {

ClearingOutcome no_trade(std::span<const TraderDeclaration* const> sorted, NoTradeReason reason) {
    ClearingOutcome outcome;
    outcome.traded = false;
    outcome.reason = reason;
    outcome.ln_c_star = std::numeric_limits<double>::quiet_NaN();
    outcome.residual = std::numeric_limits<double>::quiet_NaN();
    for (const auto* decl : sorted) {
        TraderDelta delta;
        delta.trader_id = decl->trader_id;
        delta.side = decl->d > 0.0 ? Side::buyer : Side::seller;
        delta.fill_ln_price = std::numeric_limits<double>::quiet_NaN();
        outcome.deltas.push_back(delta);
    }
    return outcome;
}

} // namespace

ClearingOutcome best_division(std::span<const TraderDeclaration> decls, FlowMode mode, double tol) {
    if (decls.empty()) throw ValidationError("best_division: no traders");
    if (decls.size() > max_exhaustive_traders) {
        std::ostringstream msg;
        msg << "best_division: " << decls.size() << " traders exceed the exhaustive search limit of "
            << max_exhaustive_traders;
        throw ValidationError(msg.str());
    }
    const auto sorted = sorted_by_id(decls);
    std::vector<int> ids;
    for (const auto* d : sorted) {
        d->validate();
        ids.push_back(d->trader_id);
    }

    const std::size_t k = sorted.size();
    const std::uint64_t full = (std::uint64_t{1} << k) - 1;
    bool any_feasible = false;
    std::optional<ClearingOutcome> best;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
        bool feasible = true;
        for (std::size_t i = 0; i < k && feasible; ++i) {
            const bool buys = mask & (std::uint64_t{1} << i);
            feasible = buys ? can_buy(*sorted[i]) : can_sell(*sorted[i]);
        }
        if (!feasible) continue;
        any_feasible = true;

        const auto division = Division::from_mask(ids, mask);
        const auto profile = rescale(decls, division, mode);
        const auto price = clear_price(profile, tol);
        if (!price.traded) continue;
        auto outcome = settle(profile, price.fill.ln_c);
        const double tie_tol = 1e-12 * std::max(1.0, best ? best->turnover : 0.0);
        if (!best || outcome.turnover > best->turnover + tie_tol) best = std::move(outcome);
    }
    if (best) return *best;
    return no_trade(sorted, any_feasible ? NoTradeReason::no_crossing : NoTradeReason::empty_side);
}

bool uniform_price_check(const ClearingOutcome& outcome) {
    if (!outcome.traded) return true;
    for (const auto& b : outcome.deltas) {
        if (b.side != Side::buyer) continue;
        for (const auto& s : outcome.deltas) {
            if (s.side != Side::seller) continue;
            if (!(std::abs(b.fill_ln_price + s.fill_ln_price) <= 1e-9)) return false;
        }
    }
    return true;
}

namespace {

Strategy project_and_mix(const Strategy& s, Side side, double alpha, double ln_c) {
    if (s.is_eigenstate() || alpha == 0.0) return s;
    const auto& amp = s.amplitude();
    std::vector<complex> projected;
    if (side == Side::buyer) {
        projected.resize(amp.samples.size());
        for (std::size_t i = 0; i < projected.size(); ++i) {
            projected[i] = amp.grid.at(i) <= ln_c ? amp.samples[i] : complex{0.0, 0.0};
        }
    } else {
        auto phi = fourier_pair(amp, s.h_E());
        for (std::size_t k = 0; k < phi.samples.size(); ++k) {
            if (phi.grid.at(k) > -ln_c) phi.samples[k] = complex{0.0, 0.0};
        }
        projected = inverse_fourier_pair(phi, s.h_E(), amp.grid.lo()).samples;
    }
    std::vector<complex> mixed(amp.samples);
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] += alpha * projected[i];
    return normalize(Strategy::from_amplitude(ComplexField1D(amp.grid, std::move(mixed)), s.h_E()));
}

} // namespace

std::vector<Strategy> apply_scattering(std::span<const TraderDeclaration> decls, const Division& division,
                                       double alpha_d, double alpha_s, double ln_c) {
    if (!(alpha_d >= 0.0) || !(alpha_s >= 0.0)) throw ValidationError("apply_scattering: alphas must be non-negative");
    std::vector<Strategy> out;
    out.reserve(decls.size());
    for (const auto& decl : decls) {
        const Side side = division.side_of(decl.trader_id);
        out.push_back(project_and_mix(decl.strategy, side, side == Side::buyer ? alpha_d : alpha_s, ln_c));
    }
    return out;
}

std::vector<Strategy> apply_scattering(std::span<const TraderDeclaration> decls, const Division& division,
                                       double alpha_d, double alpha_s) {
    double ln_c = 0.0;
    const auto price = clear_price(rescale(decls, division, FlowMode::capital));
    if (price.traded) ln_c = price.fill.ln_c;
    return apply_scattering(decls, division, alpha_d, alpha_s, ln_c);
}

} // namespace qmg
