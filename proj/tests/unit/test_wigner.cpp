#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "qmg/error.hpp"
#include "qmg/numerics.hpp"
#include "qmg/strategy.hpp"
#include "qmg/wigner.hpp"

using namespace qmg;

namespace {

const RiskParams unit_params;

double max_diff(const WignerField& a, const WignerField& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    return worst;
}

std::size_t nearest(const Grid1D& g, double x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (std::abs(g.at(i) - x) < std::abs(g.at(best) - x)) best = i;
    }
    return best;
}

double curve_at(const Curve& c, double x) {
    const auto it = std::lower_bound(c.ln_c.begin(), c.ln_c.end(), x);
    const std::size_t j = std::clamp<std::size_t>(it - c.ln_c.begin(), 1, c.ln_c.size() - 1);
    const double t = (x - c.ln_c[j - 1]) / (c.ln_c[j] - c.ln_c[j - 1]);
    return c.values[j - 1] + t * (c.values[j] - c.values[j - 1]);
}

} // namespace

TEST(WignerPure, GroundState) {
    const auto f = wigner_of_pure(make_oscillator_eigenstate(0, unit_params, 0.0, 0.0));
    const std::size_t ip = nearest(f.p_grid, 0.0), iq = nearest(f.q_grid, 0.0);
    const double p = f.p_grid.at(ip), q = f.q_grid.at(iq);
    EXPECT_NEAR(f.at(ip, iq), std::exp(-p * p - q * q) / pi, 1e-10);
    EXPECT_NEAR(f.at(ip, iq), 1.0 / pi, 1e-4);
    EXPECT_NEAR(f.integral(), 1.0, 1e-6);
    EXPECT_FALSE(is_giffen(f).giffen);
}

TEST(WignerPure, FirstExcitedIsNegativeAtOrigin) {
    const auto f = wigner_of_pure(make_oscillator_eigenstate(1, unit_params, 0.0, 0.0));
    const auto report = is_giffen(f);
    EXPECT_TRUE(report.giffen);
    EXPECT_NEAR(report.min_value, -1.0 / pi, 1e-4);
    EXPECT_NEAR(report.p, 0.0, 0.05);
    EXPECT_NEAR(report.q, 0.0, 0.05);
    EXPECT_NEAR(f.integral(), 1.0, 1e-6);
}

TEST(WignerPure, MatchesLaguerreSeries) {
    for (int n : {0, 1, 2, 5}) {
        const auto f = wigner_of_pure(make_oscillator_eigenstate(n, unit_params, 0.0, 0.0));
        const auto ref = oscillator_wigner(n, unit_params, f.p_grid, f.q_grid);
        EXPECT_LT(max_diff(f, ref), 1e-10) << "n = " << n;
    }
}

TEST(WignerPure, CoherentStateIsDisplacedGaussian) {
    const auto s = make_coherent_correlated(0.0, std::sqrt(0.5), 0.7, -1.1, 2.0 * pi);
    const auto f = wigner_of_pure(s);
    EXPECT_NEAR(field_mean_p(f), 0.7, 1e-8);
    EXPECT_NEAR(field_mean_q(f), -1.1, 1e-8);
    double worst = 0.0;
    for (std::size_t ip = 0; ip < f.p_grid.size(); ip += 7) {
        for (std::size_t iq = 0; iq < f.q_grid.size(); iq += 7) {
            const double p = f.p_grid.at(ip) - 0.7, q = f.q_grid.at(iq) + 1.1;
            worst = std::max(worst, std::abs(f.at(ip, iq) - std::exp(-p * p - q * q) / pi));
        }
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(WignerMixed, SingleComponentEqualsPure) {
    const auto s = make_oscillator_eigenstate(2, unit_params, 0.0, 0.0);
    const MixedStrategy mixed{{1.0}, {s}};
    EXPECT_LT(max_diff(wigner_of_mixed(mixed), wigner_of_pure(s)), 1e-15);
}

TEST(WignerMixed, AverageOfLevels) {
    const MixedStrategy mixed{{0.5, 0.5},
                              {make_oscillator_eigenstate(0, unit_params, 0.0, 0.0),
                               make_oscillator_eigenstate(1, unit_params, 0.0, 0.0)}};
    const auto f = wigner_of_mixed(mixed);
    auto expect = oscillator_wigner(0, unit_params, f.p_grid, f.q_grid);
    const auto w1 = oscillator_wigner(1, unit_params, f.p_grid, f.q_grid);
    for (std::size_t i = 0; i < expect.values.size(); ++i) expect.values[i] = 0.5 * (expect.values[i] + w1.values[i]);
    EXPECT_LT(max_diff(f, expect), 1e-10);
    // W0 + W1 is zero at the origin and positive elsewhere.
    EXPECT_FALSE(is_giffen(f).giffen);
}

TEST(WignerMixed, Validation) {
    const auto s = make_oscillator_eigenstate(0, unit_params, 0.0, 0.0);
    EXPECT_THROW(wigner_of_mixed(MixedStrategy{{0.5, 0.6}, {s, s}}), ValidationError);
    EXPECT_THROW(wigner_of_mixed(MixedStrategy{{1.5, -0.5}, {s, s}}), ValidationError);
    EXPECT_THROW(wigner_of_mixed(MixedStrategy{{}, {}}), ValidationError);
}

TEST(Thermal, SeriesMatchesClosedForm) {
    const auto g = default_phase_grid();
    for (double beta : {0.3, 1.0, 4.0}) {
        GibbsSpec spec;
        spec.beta = beta;
        spec.n_max = required_n_max(beta, spec.params);
        const auto series = thermal_series(spec, g, g);
        const auto closed = thermal_closed_form(spec, g, g);
        EXPECT_LT(max_diff(series, closed), 1e-9) << "beta = " << beta;
        EXPECT_NEAR(closed.integral(), 1.0, 1e-6);
        EXPECT_FALSE(is_giffen(series).giffen);
    }
}

TEST(Thermal, WeightsAndTail) {
    GibbsSpec spec;
    spec.beta = 1.0;
    spec.n_max = 10;
    const double x = std::exp(-1.0); // beta hbar omega = 1
    EXPECT_NEAR(spec.weight(0), 1.0 - x, 1e-15);
    EXPECT_NEAR(spec.weight(3), (1.0 - x) * x * x * x, 1e-15);
    EXPECT_NEAR(spec.tail_weight(), std::pow(x, 11), 1e-15);

    const int n = required_n_max(1.0, spec.params);
    EXPECT_LE(std::pow(x, n + 1), 1e-10);
    EXPECT_GT(std::pow(x, n), 1e-10);
}

TEST(Thermal, ColdLimitIsGroundState) {
    const auto g = default_phase_grid();
    GibbsSpec spec;
    spec.beta = 1e3;
    spec.n_max = 0;
    const auto ground = oscillator_wigner(0, spec.params, g, g);
    EXPECT_LT(max_diff(thermal_series(spec, g, g), ground), 1e-12);
    EXPECT_LT(max_diff(thermal_closed_form(spec, g, g), ground), 1e-12);
}

TEST(Thermal, TruncationAndValidation) {
    const auto g = default_phase_grid();
    GibbsSpec spec;
    spec.beta = 0.5;
    spec.n_max = 5;
    EXPECT_THROW(thermal_series(spec, g, g), TruncationError);
    spec.beta = 0.0;
    EXPECT_THROW(thermal_closed_form(spec, g, g), ValidationError);
    EXPECT_THROW(required_n_max(-1.0, spec.params), ValidationError);
    EXPECT_THROW(required_n_max(0.0, spec.params), TruncationError);
}

TEST(Curves, GroundStateIsMonotone) {
    const auto f = wigner_of_pure(make_oscillator_eigenstate(0, unit_params, 0.0, 0.0));
    EXPECT_TRUE(demand_curve(f).is_monotone_nondecreasing(1e-12));
    EXPECT_TRUE(supply_curve(f).is_monotone_nonincreasing(1e-12));
}

TEST(Curves, ExcitedLevelsAreNotMonotone) {
    for (int n : {1, 2}) {
        const auto f = wigner_of_pure(make_oscillator_eigenstate(n, unit_params, 0.0, 0.0));
        EXPECT_FALSE(demand_curve(f).is_monotone_nondecreasing(1e-12)) << "n = " << n;
        EXPECT_FALSE(supply_curve(f).is_monotone_nonincreasing(1e-12)) << "n = " << n;
    }
}

TEST(Curves, SupplyAtUnitPriceIsHalfTheColumn) {
    const auto f = wigner_of_pure(make_oscillator_eigenstate(0, unit_params, 0.0, 0.0));
    const auto curve = supply_curve(f, 0.0);
    const auto column = f.column(nearest(f.q_grid, field_mean_q(f)));
    const double total = integrate(f.p_grid, column);
    EXPECT_NEAR(curve.values.front(), total, 1e-8);
    EXPECT_NEAR(curve_at(curve, 0.0), 0.5 * total, 1e-5);
    EXPECT_NEAR(curve.values.back(), 0.0, 1e-8);
}

TEST(Giffen, ToleranceControlsTheFlag) {
    const auto f = wigner_of_pure(make_oscillator_eigenstate(1, unit_params, 0.0, 0.0));
    EXPECT_TRUE(is_giffen(f, 0.3).giffen);
    EXPECT_FALSE(is_giffen(f, 0.4).giffen);
}

TEST(Hudson, GaussianOnlyForGaussians) {
    EXPECT_TRUE(hudson_check(make_coherent_correlated(0.0, 1.0, 0.3, -0.4, 2.0 * pi)));
    EXPECT_TRUE(hudson_check(make_oscillator_eigenstate(0, unit_params, 0.0, 0.0)));
    EXPECT_FALSE(hudson_check(make_oscillator_eigenstate(1, unit_params, 0.0, 0.0)));
    const std::vector<std::pair<complex, Strategy>> cat{{complex(1.0, 0.0), make_gaussian(-2.0, 0.7, 2.0 * pi)},
                                                        {complex(1.0, 0.0), make_gaussian(2.0, 0.7, 2.0 * pi)}};
    EXPECT_FALSE(hudson_check(superpose(cat)));
}
