#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "qmg/clearing.hpp"
#include "qmg/error.hpp"
#include "qmg/numerics.hpp"
#include "qmg/strategy.hpp"

using namespace qmg;

namespace {

const double h_E = 2.0 * pi;
const double s_half = std::sqrt(0.5);

TraderDeclaration trader(int id, double q0, double sigma_q, double s, double d) {
    return TraderDeclaration{id, make_gaussian(q0, sigma_q, h_E), s, d};
}

// Closed forms for a real Gaussian amplitude (p centred at 0, sigma_p = hbar / (2 sigma_q)).
double demand_cf(double x, double q0, double sigma_q, double d) { return d * normal_cdf((x - q0) / sigma_q); }
double supply_cf(double x, double sigma_q, double s) { return s * normal_cdf(-x * 2.0 * sigma_q); }

// Independent root of d Phi((x - qb)/sb) = e^x s Phi(-x / sp) by plain bisection.
double root_cf(double qb, double sb, double d, double ss, double s) {
    auto g = [&](double x) { return demand_cf(x, qb, sb, d) - std::exp(x) * supply_cf(x, ss, s); };
    double lo = -12.0, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 0.0 ? hi : lo) = mid;
    }
    return hi;
}

Division two_way(int buyer, int seller) {
    const std::vector<int> ids{std::min(buyer, seller), std::max(buyer, seller)};
    return Division::from_mask(ids, buyer < seller ? 0b01 : 0b10);
}

} // namespace

TEST(Division, FromMask) {
    const std::vector<int> ids{3, 7, 9};
    const auto div = Division::from_mask(ids, 0b101);
    EXPECT_EQ(div.buyers, (std::vector<int>{3, 9}));
    EXPECT_EQ(div.sellers, (std::vector<int>{7}));
    EXPECT_EQ(div.side_of(7), Side::seller);
    EXPECT_EQ(div.side_of(9), Side::buyer);
}

TEST(Rescale, CapitalModeIntegratesToDeclared) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, 1.0, 0.0, 5.0), trader(2, 0.0, 1.0, 2.0, 0.0)};
    const auto profile = rescale(decls, two_way(1, 2), FlowMode::capital);
    ASSERT_EQ(profile.legs.size(), 2u);
    const auto& buyer = profile.legs[0];
    EXPECT_NEAR(integrate(buyer.table()->grid, buyer.density()), 5.0, 1e-9);
    EXPECT_NEAR(profile.demand(12.0), 5.0, 1e-9);
    EXPECT_NEAR(profile.supply(-12.0), 2.0, 1e-9);
}

TEST(Rescale, ProbabilityModeShares) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, 1.0, 0.0, 1.0), trader(2, 0.0, 1.0, 0.0, 3.0),
                                               trader(3, 0.0, 1.0, 4.0, 0.0)};
    const std::vector<int> ids{1, 2, 3};
    const auto profile = rescale(decls, Division::from_mask(ids, 0b011), FlowMode::probability);
    EXPECT_NEAR(profile.legs[0].capital(), 0.25, 1e-15);
    EXPECT_NEAR(profile.legs[1].capital(), 0.75, 1e-15);
    EXPECT_NEAR(profile.legs[2].capital(), 1.0, 1e-15);
}

TEST(Rescale, RejectsIneligibleSides) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, 1.0, 1.0, 0.0), trader(2, 0.0, 1.0, 1.0, 0.0)};
    EXPECT_THROW(rescale(decls, two_way(1, 2), FlowMode::capital), ValidationError);

    const std::vector<TraderDeclaration> eig{
        {1, Strategy::price_eigenstate(Representation::supply, 0.0, h_E), 0.0, 1.0},
        trader(2, 0.0, 1.0, 1.0, 0.0)};
    EXPECT_THROW(rescale(eig, two_way(1, 2), FlowMode::capital), ValidationError);

    const std::vector<TraderDeclaration> bad{trader(1, 0.0, 1.0, 0.0, 0.0), trader(2, 0.0, 1.0, 1.0, 0.0)};
    EXPECT_THROW(rescale(bad, two_way(1, 2), FlowMode::capital), ValidationError);
}

TEST(Turnover, Examples) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, s_half, 0.0, 1.0), trader(2, 0.0, s_half, 1.0, 0.0)};
    const auto profile = rescale(decls, two_way(1, 2), FlowMode::capital);
    EXPECT_NEAR(turnover(profile, -12.0), 0.0, 1e-12);
    EXPECT_NEAR(turnover(profile, 0.0), 0.5, 1e-10);
    const double x = 0.5;
    const double expect = std::min(demand_cf(x, 0.0, s_half, 1.0), std::exp(x) * supply_cf(x, s_half, 1.0));
    EXPECT_NEAR(turnover(profile, x), expect, 1e-8);
}

TEST(ClearPrice, SymmetricPair) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, s_half, 0.0, 1.0), trader(2, 0.0, s_half, 1.0, 0.0)};
    const auto sol = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital));
    ASSERT_TRUE(sol.traded);
    EXPECT_NEAR(sol.fill.ln_c, 0.0, 1e-10);
    EXPECT_NEAR(sol.fill.turnover(), 0.5, 1e-10);
    EXPECT_LE(std::abs(sol.fill.residual()), default_clearing_tol);
}

TEST(ClearPrice, MatchesClosedForm) {
    for (auto [qb, sb, d, ss, s] : std::vector<std::array<double, 5>>{
             {0.0, 1.0, 1.0, 1.0, 1.0}, {0.5, 0.6, 2.0, 0.8, 1.0}, {-1.0, 1.5, 0.3, 0.4, 3.0}}) {
        const std::vector<TraderDeclaration> decls{trader(1, qb, sb, 0.0, d), trader(2, 0.0, ss, s, 0.0)};
        const auto sol = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital));
        ASSERT_TRUE(sol.traded);
        EXPECT_NEAR(sol.fill.ln_c, root_cf(qb, sb, d, ss, s), 1e-7);
    }
}

TEST(ClearPrice, SmoothBumpsAgainstScan) {
    // Raised-cosine densities on [-1, 1]; CDF (x + 1)/2 + sin(pi x) / (2 pi).
    const Grid1D grid(-4.0, 4.0, 4096);
    std::vector<double> bump(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.at(i);
        bump[i] = std::abs(x) < 1.0 ? 0.5 * (1.0 + std::cos(pi * x)) : 0.0;
    }
    const double d = 1.0, s = 2.0;
    FlowProfile profile;
    profile.division = two_way(1, 2);
    profile.price_grid = grid;
    profile.legs.push_back(FlowLeg::from_density(1, Side::buyer, d, grid, bump));
    profile.legs.push_back(FlowLeg::from_density(2, Side::seller, s, grid, bump));
    const auto sol = clear_price(profile);
    ASSERT_TRUE(sol.traded);

    auto cdf = [](double x) { return x <= -1.0 ? 0.0 : x >= 1.0 ? 1.0 : (x + 1.0) / 2.0 + std::sin(pi * x) / (2.0 * pi); };
    auto g = [&](double x) { return d * cdf(x) - std::exp(x) * s * cdf(-x); };
    double scan = std::nan("");
    const int n = 100000;
    for (int i = 1; i <= n; ++i) {
        const double x = -4.0 + 8.0 * i / n;
        if (g(x) >= 0.0) {
            scan = x;
            break;
        }
    }
    EXPECT_NEAR(sol.fill.ln_c, scan, 8.0 / n);
}

TEST(ClearPrice, DisjointSupportsDoNotTrade) {
    // Buyer only buys above e^2, seller only sells below e^-2.
    const std::vector<TraderDeclaration> decls{
        {1, make_coherent_correlated(0.0, 0.1, 0.0, 3.0, h_E), 0.0, 1.0},
        {2, make_coherent_correlated(0.0, 1.0, 3.0, 0.0, h_E), 1.0, 0.0}};
    const auto sol = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital));
    EXPECT_FALSE(sol.traded);
    EXPECT_EQ(sol.reason, NoTradeReason::no_crossing);
}

TEST(ClearPrice, EmptySide) {
    FlowProfile profile;
    profile.legs.push_back(FlowLeg(1, Side::buyer, 1.0, 0.0));
    const auto sol = clear_price(profile);
    EXPECT_FALSE(sol.traded);
    EXPECT_EQ(sol.reason, NoTradeReason::empty_side);
    EXPECT_THROW(clear_price(profile, 0.0), ValidationError);
}

TEST(ClearPrice, EigenstateBuyerIsRationed) {
    const double a = 0.1;
    const std::vector<TraderDeclaration> decls{
        {1, Strategy::price_eigenstate(Representation::demand, a, h_E), 0.0, 1.0},
        trader(2, 0.0, s_half, 1.0, 0.0)};
    const auto profile = rescale(decls, two_way(1, 2), FlowMode::capital);
    const auto sol = clear_price(profile);
    ASSERT_TRUE(sol.traded);
    EXPECT_NEAR(sol.fill.ln_c, a, 1e-12);
    const double sold = supply_cf(a, s_half, 1.0);
    EXPECT_NEAR(sol.fill.buyer_fraction, std::exp(a) * sold, 1e-9);
    const auto outcome = settle(profile, sol.fill.ln_c);
    EXPECT_NEAR(outcome.deltas[0].delta_money, -std::exp(a) * sold, 1e-9);
    EXPECT_NEAR(outcome.sum_delta_money(), 0.0, 1e-12);
}

TEST(Settle, SymmetricPair) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, s_half, 0.0, 1.0), trader(2, 0.0, s_half, 1.0, 0.0)};
    const auto outcome = settle(rescale(decls, two_way(1, 2), FlowMode::capital), 0.0);
    ASSERT_EQ(outcome.deltas.size(), 2u);
    EXPECT_NEAR(outcome.deltas[0].delta_g, 0.5, 1e-10);
    EXPECT_NEAR(outcome.deltas[0].delta_money, -0.5, 1e-10);
    EXPECT_NEAR(outcome.deltas[1].delta_g, -0.5, 1e-10);
    EXPECT_NEAR(outcome.deltas[1].delta_money, 0.5, 1e-10);
}

TEST(Settle, AsymmetricCapitalAgainstClosedForm) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, s_half, 0.0, 2.0), trader(2, 0.0, s_half, 1.0, 0.0)};
    const auto profile = rescale(decls, two_way(1, 2), FlowMode::capital);
    const auto sol = clear_price(profile);
    ASSERT_TRUE(sol.traded);
    const double x = sol.fill.ln_c;
    EXPECT_NEAR(x, root_cf(0.0, s_half, 2.0, s_half, 1.0), 1e-7);
    const auto outcome = settle(profile, x);
    const double spent = demand_cf(x, 0.0, s_half, 2.0);
    const double sold = supply_cf(x, s_half, 1.0);
    EXPECT_NEAR(outcome.deltas[0].delta_money, -spent, 1e-8);
    EXPECT_NEAR(outcome.deltas[0].delta_g, spent / std::exp(x), 1e-8);
    EXPECT_NEAR(outcome.deltas[1].delta_g, -sold, 1e-8);
    EXPECT_NEAR(outcome.sum_delta_money(), 0.0, 1e-9);
    EXPECT_NEAR(outcome.sum_delta_g(), 0.0, 1e-9);
}

TEST(BestDivision, UniqueFeasibleDivision) {
    const std::vector<TraderDeclaration> decls{trader(1, -0.5, 1.0, 0.0, 1.0), trader(2, 0.5, 1.0, 1.0, 0.0)};
    const auto outcome = best_division(decls, FlowMode::capital);
    ASSERT_TRUE(outcome.traded);
    EXPECT_EQ(outcome.division.mask, 0b01u);
    const auto sol = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital));
    EXPECT_DOUBLE_EQ(outcome.ln_c_star, sol.fill.ln_c);
    EXPECT_TRUE(uniform_price_check(outcome));
}

TEST(BestDivision, TieGoesToSmallerMask) {
    const std::vector<TraderDeclaration> decls{trader(4, 0.0, s_half, 1.0, 1.0), trader(9, 0.0, s_half, 1.0, 1.0)};
    const auto outcome = best_division(decls, FlowMode::capital);
    ASSERT_TRUE(outcome.traded);
    EXPECT_EQ(outcome.division.mask, 0b01u);
    EXPECT_EQ(outcome.division.buyers, std::vector<int>{4});
}

TEST(BestDivision, NoSellersIsEmptySide) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, 1.0, 0.0, 1.0), trader(2, 0.0, 1.0, 0.0, 2.0)};
    const auto outcome = best_division(decls, FlowMode::capital);
    EXPECT_FALSE(outcome.traded);
    EXPECT_EQ(outcome.reason, NoTradeReason::empty_side);
    EXPECT_TRUE(std::isnan(outcome.ln_c_star));
    EXPECT_TRUE(uniform_price_check(outcome));
}

TEST(BestDivision, RejectsTooManyTraders) {
    std::vector<TraderDeclaration> decls;
    for (int i = 0; i < 21; ++i) decls.push_back(trader(i, 0.0, 1.0, 1.0, 1.0));
    EXPECT_THROW(best_division(decls, FlowMode::capital), ValidationError);
    decls.erase(decls.begin() + 2, decls.end());
    decls[1].trader_id = 0;
    EXPECT_THROW(best_division(decls, FlowMode::capital), ValidationError);
}

TEST(BestDivision, MaximisesTurnoverOverAllDivisions) {
    const std::vector<TraderDeclaration> decls{trader(1, -0.3, 0.8, 1.0, 2.0), trader(2, 0.4, 0.5, 2.0, 0.5),
                                               trader(3, 0.1, 1.2, 0.7, 1.0)};
    const auto best = best_division(decls, FlowMode::capital);
    ASSERT_TRUE(best.traded);
    const std::vector<int> ids{1, 2, 3};
    for (std::uint64_t mask = 1; mask < 7; ++mask) {
        const auto sol = clear_price(rescale(decls, Division::from_mask(ids, mask), FlowMode::capital));
        if (sol.traded) EXPECT_LE(sol.fill.turnover(), best.turnover * (1.0 + 1e-12));
    }
}

TEST(UniformPrice, HandBuiltTwoPriceOutcome) {
    ClearingOutcome outcome;
    outcome.traded = true;
    outcome.deltas.push_back(TraderDelta{1, Side::buyer, 0.5, -0.5, 0.1});
    outcome.deltas.push_back(TraderDelta{2, Side::seller, -0.5, 0.5, 0.2});
    EXPECT_FALSE(uniform_price_check(outcome));
    outcome.deltas[1].fill_ln_price = -0.1;
    EXPECT_TRUE(uniform_price_check(outcome));
}

TEST(Scattering, ZeroAlphaIsIdentity) {
    const std::vector<TraderDeclaration> decls{trader(1, 0.2, 0.9, 0.0, 1.0), trader(2, -0.1, 0.6, 1.0, 0.0)};
    const auto out = apply_scattering(decls, two_way(1, 2), 0.0, 0.0);
    ASSERT_EQ(out.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& a = decls[k].strategy.amplitude().samples;
        const auto& b = out[k].amplitude().samples;
        double worst = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        EXPECT_LT(worst, 1e-15);
    }
    EXPECT_THROW(apply_scattering(decls, two_way(1, 2), -1.0, 0.0), ValidationError);
}

TEST(Scattering, ProjectedWeightClosedForm) {
    // For P a projector with w = <psi|P|psi>, (I + alpha P) psi renormalised
    // carries weight (1 + alpha)^2 w / ((1 + alpha)^2 w + 1 - w) on P.
    auto boosted = [](double w, double alpha) {
        const double k = (1.0 + alpha) * (1.0 + alpha);
        return k * w / (k * w + 1.0 - w);
    };
    const double ln_c = 0.3;
    const std::vector<TraderDeclaration> decls{trader(1, 0.0, 1.0, 0.0, 1.0), trader(2, 0.0, 1.0, 1.0, 0.0)};
    const auto out = apply_scattering(decls, two_way(1, 2), 2.0, 1.0, ln_c);
    const double wb = buy_cdf(decls[0].strategy, ln_c);
    EXPECT_NEAR(buy_cdf(out[0], ln_c), boosted(wb, 2.0), 1e-4);
    EXPECT_GT(sell_cdf(out[1], ln_c), sell_cdf(decls[1].strategy, ln_c));

    // A sharp cut in p leaves slowly decaying q tails that the finite window
    // drops; the seller identity is recovered as the window widens.
    double prev = 1.0;
    for (double half : {12.0, 48.0, 192.0}) {
        const Grid1D grid(-half, half, static_cast<std::size_t>(4096 * half / 12.0));
        const std::vector<TraderDeclaration> wide{{1, make_gaussian(0.0, 1.0, h_E, grid), 0.0, 1.0},
                                                  {2, make_gaussian(0.0, 1.0, h_E, grid), 1.0, 0.0}};
        const auto post = apply_scattering(wide, two_way(1, 2), 0.0, 1.0, ln_c);
        const double dev = std::abs(sell_cdf(post[1], ln_c) - boosted(sell_cdf(wide[1].strategy, ln_c), 1.0));
        EXPECT_LT(dev, prev / 2.5);
        prev = dev;
    }
}

TEST(ClearingProperties, ScaleInvariance) {
    const std::vector<TraderDeclaration> base{trader(1, 0.3, 0.8, 0.0, 1.5), trader(2, -0.2, 0.6, 2.0, 0.0)};
    const double ref = clear_price(rescale(base, two_way(1, 2), FlowMode::capital)).fill.ln_c;
    for (double lambda : {0.5, 3.0, 10.0}) {
        auto scaled = base;
        for (auto& d : scaled) {
            d.s *= lambda;
            d.d *= lambda;
        }
        EXPECT_NEAR(clear_price(rescale(scaled, two_way(1, 2), FlowMode::capital)).fill.ln_c, ref, 1e-9);
    }
}

TEST(ClearingProperties, ProbabilityModeIgnoresSideTotals) {
    std::vector<TraderDeclaration> decls{trader(1, 0.3, 0.8, 0.0, 1.5), trader(2, 0.0, 1.0, 0.0, 0.5),
                                         trader(3, -0.2, 0.6, 2.0, 0.0)};
    const std::vector<int> ids{1, 2, 3};
    const auto div = Division::from_mask(ids, 0b011);
    const double ref = clear_price(rescale(decls, div, FlowMode::probability)).fill.ln_c;
    for (auto& d : decls) d.d *= 7.0;
    decls[2].s *= 0.1;
    EXPECT_NEAR(clear_price(rescale(decls, div, FlowMode::probability)).fill.ln_c, ref, 1e-9);
    // Probability mode equals capital mode once each side sums to one.
    decls[0].d = 0.75;
    decls[1].d = 0.25;
    decls[2].s = 1.0;
    EXPECT_NEAR(clear_price(rescale(decls, div, FlowMode::probability)).fill.ln_c,
                clear_price(rescale(decls, div, FlowMode::capital)).fill.ln_c, 1e-12);
}

TEST(ClearingProperties, PriceFallsWithBuyerCapital) {
    // More buyer money reaches balance earlier on the ln c axis.
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const std::vector<TraderDeclaration> decls{trader(1, 0.0, 0.9, 0.0, d), trader(2, 0.0, 0.7, 1.0, 0.0)};
        const double x = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital)).fill.ln_c;
        EXPECT_LE(x, prev + 1e-12);
        prev = x;
    }
    prev = -std::numeric_limits<double>::infinity();
    for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const std::vector<TraderDeclaration> decls{trader(1, 0.0, 0.9, 0.0, 1.0), trader(2, 0.0, 0.7, s, 0.0)};
        const double x = clear_price(rescale(decls, two_way(1, 2), FlowMode::capital)).fill.ln_c;
        EXPECT_GE(x, prev - 1e-12);
        prev = x;
    }
}

TEST(ClearingProperties, RandomMarketsConserveAndAreOrderFree) {
    std::mt19937 rng(20261017);
    std::uniform_real_distribution<double> q(-1.0, 1.0), sig(0.4, 1.5), cap(0.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<TraderDeclaration> decls;
        for (int k = 0; k < 4; ++k) decls.push_back(trader(10 + k, q(rng), sig(rng), cap(rng) + 0.05, cap(rng)));
        const auto outcome = best_division(decls, FlowMode::capital);
        if (!outcome.traded) continue;
        EXPECT_NEAR(outcome.sum_delta_money(), 0.0, 1e-9);
        EXPECT_LE(std::abs(outcome.residual), default_clearing_tol);
        EXPECT_TRUE(uniform_price_check(outcome));

        auto shuffled = decls;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto again = best_division(shuffled, FlowMode::capital);
        EXPECT_EQ(again.division.mask, outcome.division.mask);
        EXPECT_DOUBLE_EQ(again.ln_c_star, outcome.ln_c_star);
    }
}
