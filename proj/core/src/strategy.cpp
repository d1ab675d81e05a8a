#include "qmg/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <sstream>
#include <variant>

#include "qmg/error.hpp"

namespace qmg {

namespace {

// Density at the grid edges above this means the state leaks off the grid.
constexpr double edge_density_limit = 1e-10;

MarginalTable make_table(const Grid1D& grid, std::vector<double> density) {
    return MarginalTable::from_density(grid, std::move(density));
}

std::vector<double> squared_modulus(const std::vector<complex>& samples) {
    std::vector<double> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(), [](complex z) { return std::norm(z); });
    return out;
}

MarginalStats stats_of(const MarginalTable& t) {
    const auto& g = t.grid;
    std::vector<double> f(t.density.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = g.at(i) * t.density[i];
    const double mean = integrate(g, f);
    double m2 = 0.0;
    double m4 = 0.0;
    {
        std::vector<double> f2(f.size()), f4(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double d = g.at(i) - mean;
            f2[i] = d * d * t.density[i];
            f4[i] = d * d * d * d * t.density[i];
        }
        m2 = integrate(g, f2);
        m4 = integrate(g, f4);
    }
    return MarginalStats{mean, m2, m4 / (m2 * m2) - 3.0};
}

void require_contained(const Strategy& s, const char* what) {
    const auto& a = s.amplitude().samples;
    const double edge = std::max(std::norm(a.front()), std::norm(a.back())) / s.norm_squared();
    if (edge > edge_density_limit) {
        std::ostringstream msg;
        msg << what << ": density " << edge << " at the grid edge exceeds " << edge_density_limit
            << "; widen the grid";
        throw ValidationError(msg.str());
    }
}

} // namespace

MarginalTable MarginalTable::from_density(const Grid1D& grid, std::vector<double> density) {
    auto slopes = positive_hermite_slopes(grid, density);
    const double total = hermite_cumulative(grid, density, slopes).back();
    if (!(total > 0.0)) throw ValidationError("strategy: zero-norm amplitude");
    for (auto& v : density) v /= total;
    for (auto& v : slopes) v /= total;
    auto cumulative = hermite_cumulative(grid, density, slopes);
    return MarginalTable{grid, std::move(density), std::move(slopes), std::move(cumulative)};
}

double MarginalTable::cdf(double x) const {
    return std::clamp(hermite_cumulative_at(grid, density, slopes, cumulative, x), 0.0, 1.0);
}

// ------------------------------------------------------------------ Strategy

struct Strategy::State {
    State(std::variant<ComplexField1D, PriceEigenstate> k, double h, double n)
        : kind(std::move(k)), h_E(h), norm_squared(n) {}

    std::variant<ComplexField1D, PriceEigenstate> kind;
    double h_E;
    double norm_squared = 0.0;

    mutable std::once_flag supply_once;
    mutable std::optional<ComplexField1D> supply;
    mutable std::once_flag demand_table_once;
    mutable std::optional<MarginalTable> demand_table;
    mutable std::once_flag supply_table_once;
    mutable std::optional<MarginalTable> supply_table;
};

Strategy::Strategy(std::shared_ptr<const State> state) : state_(std::move(state)) {}

Strategy Strategy::from_amplitude(ComplexField1D amplitude, double h_E) {
    if (!(h_E > 0.0)) throw ValidationError("strategy: h_E must be positive");
    const double norm = integrate(amplitude.grid, squared_modulus(amplitude.samples));
    if (!(norm > 0.0)) throw ValidationError("strategy: zero-norm amplitude");
    return Strategy(std::make_shared<State>(std::move(amplitude), h_E, norm));
}

Strategy Strategy::price_eigenstate(Representation rep, double point, double h_E) {
    if (!(h_E > 0.0)) throw ValidationError("strategy: h_E must be positive");
    if (!std::isfinite(point)) throw ValidationError("strategy: eigenstate point must be finite");
    return Strategy(std::make_shared<State>(PriceEigenstate{rep, point}, h_E, 0.0));
}

bool Strategy::is_grid() const { return std::holds_alternative<ComplexField1D>(state_->kind); }

double Strategy::h_E() const { return state_->h_E; }
double Strategy::hbar() const { return state_->h_E / (2.0 * pi); }

const ComplexField1D& Strategy::amplitude() const {
    if (const auto* f = std::get_if<ComplexField1D>(&state_->kind)) return *f;
    throw ValidationError("strategy: price eigenstates have no grid amplitude");
}

const PriceEigenstate& Strategy::eigenstate() const {
    if (const auto* e = std::get_if<PriceEigenstate>(&state_->kind)) return *e;
    throw ValidationError("strategy: not a price eigenstate");
}

double Strategy::norm_squared() const {
    if (!is_grid()) throw ValidationError("strategy: price eigenstates are not normalizable");
    return state_->norm_squared;
}

const ComplexField1D& Strategy::supply_amplitude() const {
    const auto& amp = amplitude();
    std::call_once(state_->supply_once, [&] { state_->supply = fourier_pair(amp, state_->h_E, supply_oversample); });
    return *state_->supply;
}

const MarginalTable& Strategy::demand_marginal() const {
    const auto& amp = amplitude();
    std::call_once(state_->demand_table_once,
                   [&] { state_->demand_table = make_table(amp.grid, squared_modulus(amp.samples)); });
    return *state_->demand_table;
}

const MarginalTable& Strategy::supply_marginal() const {
    const auto& phi = supply_amplitude();
    std::call_once(state_->supply_table_once,
                   [&] { state_->supply_table = make_table(phi.grid, squared_modulus(phi.samples)); });
    return *state_->supply_table;
}

std::shared_ptr<const MarginalTable> Strategy::demand_marginal_shared() const {
    return std::shared_ptr<const MarginalTable>(state_, &demand_marginal());
}

std::shared_ptr<const MarginalTable> Strategy::supply_marginal_shared() const {
    return std::shared_ptr<const MarginalTable>(state_, &supply_marginal());
}

// ---------------------------------------------------------------- RiskParams

double RiskParams::h_eff() const { return std::sqrt(h_E * h_E + theta_nc * theta_nc); }

void RiskParams::validate() const {
    if (!(m > 0.0)) throw ValidationError("risk params: m must be positive");
    if (!(theta > 0.0)) throw ValidationError("risk params: theta must be positive");
    if (!(h_E > 0.0)) throw ValidationError("risk params: h_E must be positive");
    if (!(theta_nc >= 0.0)) throw ValidationError("risk params: theta_nc must be non-negative");
}

// ---------------------------------------------------------------- operations

Strategy normalize(const Strategy& s) {
    if (s.is_eigenstate()) return s;
    const auto& amp = s.amplitude();
    const double scale = 1.0 / std::sqrt(s.norm_squared());
    std::vector<complex> out(amp.samples);
    for (auto& z : out) z *= scale;
    return Strategy::from_amplitude(ComplexField1D(amp.grid, std::move(out)), s.h_E());
}

ComplexField1D supply_rep(const Strategy& s) {
    if (s.is_eigenstate()) throw ValidationError("supply_rep: price eigenstates are symbolic and have no grid representation");
    return s.supply_amplitude();
}

double buy_cdf(const Strategy& s, double ln_c) {
    if (s.is_eigenstate()) {
        const auto& e = s.eigenstate();
        if (e.rep != Representation::demand) throw ValidationError("buy_cdf: supply eigenstate has no demand distribution");
        return ln_c < e.point ? 0.0 : 1.0;
    }
    return s.demand_marginal().cdf(ln_c);
}

double sell_cdf(const Strategy& s, double ln_c) {
    if (s.is_eigenstate()) {
        const auto& e = s.eigenstate();
        if (e.rep != Representation::supply) throw ValidationError("sell_cdf: demand eigenstate has no supply distribution");
        return -ln_c < e.point ? 0.0 : 1.0;
    }
    return s.supply_marginal().cdf(-ln_c);
}

MarginalStats demand_stats(const Strategy& s) { return stats_of(s.demand_marginal()); }
MarginalStats supply_stats(const Strategy& s) { return stats_of(s.supply_marginal()); }

Strategy make_gaussian(double q0, double sigma_q, double h_E, const Grid1D& grid) {
    if (!(sigma_q > 0.0)) throw ValidationError("make_gaussian: sigma_q must be positive");
    if (sigma_q < 4.0 * grid.spacing()) {
        std::ostringstream msg;
        msg << "make_gaussian: sigma_q " << sigma_q << " is below 4 grid spacings (" << 4.0 * grid.spacing() << ")";
        throw ValidationError(msg.str());
    }
    const double amp0 = std::pow(2.0 * pi * sigma_q * sigma_q, -0.25);
    std::vector<complex> samples(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid.at(i) - q0;
        samples[i] = amp0 * std::exp(-d * d / (4.0 * sigma_q * sigma_q));
    }
    auto s = normalize(Strategy::from_amplitude(ComplexField1D(grid, std::move(samples)), h_E));
    require_contained(s, "make_gaussian");
    return s;
}

Strategy make_coherent_correlated(double r, double eta, double p0, double q0, double h_E, const Grid1D& grid) {
    if (!(std::abs(r) < 1.0)) throw ValidationError("make_coherent_correlated: |r| must be < 1");
    if (!(eta > 0.0)) throw ValidationError("make_coherent_correlated: eta must be positive");
    if (!(h_E > 0.0)) throw ValidationError("make_coherent_correlated: h_E must be positive");
    const double hbar = h_E / (2.0 * pi);
    const double one_minus_r2 = 1.0 - r * r;
    const double sigma_q2 = eta * eta / one_minus_r2;
    if (std::sqrt(sigma_q2) < 4.0 * grid.spacing()) throw ValidationError("make_coherent_correlated: state narrower than 4 grid spacings");
    // Quadratic phase b (q - q0)^2 sets cov(p, q) = -2 hbar b sigma_q^2 = r Delta_p Delta_q.
    const double b = -r * std::sqrt(one_minus_r2) / (4.0 * eta * eta);
    std::vector<complex> samples(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid.at(i);
        const double d = q - q0;
        const double phase = b * d * d - p0 * q / hbar;
        samples[i] = std::exp(-d * d / (4.0 * sigma_q2)) * std::polar(1.0, phase);
    }
    auto s = normalize(Strategy::from_amplitude(ComplexField1D(grid, std::move(samples)), h_E));
    require_contained(s, "make_coherent_correlated");
    return s;
}

Strategy make_oscillator_eigenstate(int n, const RiskParams& params, double p0, double q0, const Grid1D& grid) {
    params.validate();
    if (n < 0 || n > max_hermite_order) {
        std::ostringstream msg;
        msg << "make_oscillator_eigenstate: level " << n << " outside [0, " << max_hermite_order << "]";
        throw ValidationError(msg.str());
    }
    const double hbar = params.hbar_eff();
    const double m_omega = params.m * params.omega();
    std::vector<complex> samples(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double q = grid.at(i);
        samples[i] = hermite_fn(n, q - q0, hbar, m_omega) * std::polar(1.0, -p0 * q / hbar);
    }
    auto s = normalize(Strategy::from_amplitude(ComplexField1D(grid, std::move(samples)), params.h_eff()));
    require_contained(s, "make_oscillator_eigenstate");
    return s;
}

double risk_expectation(const Strategy& s, const RiskParams& params) {
    params.validate();
    if (s.is_eigenstate()) throw ValidationError("risk_expectation: price eigenstates have unbounded dispersion");
    const auto q = demand_stats(s);
    const auto p = supply_stats(s);
    const double omega = params.omega();
    return p.variance / (2.0 * params.m) + params.m * omega * omega * q.variance / 2.0;
}

Strategy collapse_demand(const Strategy& s, double q_center, double width) {
    if (s.is_eigenstate()) throw ValidationError("collapse_demand: needs a grid strategy");
    const auto& amp = s.amplitude();
    if (!(width >= 4.0 * amp.grid.spacing())) {
        std::ostringstream msg;
        msg << "collapse_demand: window width " << width << " below 4 grid spacings";
        throw ValidationError(msg.str());
    }
    const double lo = q_center - 0.5 * width;
    const double hi = q_center + 0.5 * width;
    std::vector<complex> out(amp.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double q = amp.grid.at(i);
        out[i] = (q >= lo && q <= hi) ? amp.samples[i] : complex{0.0, 0.0};
    }
    if (std::all_of(out.begin(), out.end(), [](complex z) { return z == complex{0.0, 0.0}; })) {
        throw ValidationError("collapse_demand: window has no overlap with the strategy support");
    }
    return normalize(Strategy::from_amplitude(ComplexField1D(amp.grid, std::move(out)), s.h_E()));
}

Strategy superpose(std::span<const std::pair<complex, Strategy>> terms) {
    if (terms.empty()) throw ValidationError("superpose: no terms");
    const auto& first = terms.front().second;
    const Grid1D grid = first.amplitude().grid;
    std::vector<complex> acc(grid.size(), complex{0.0, 0.0});
    for (const auto& [c, s] : terms) {
        if (!(s.amplitude().grid == grid) || s.h_E() != first.h_E()) {
            throw ValidationError("superpose: terms must share grid and h_E");
        }
        const auto& a = s.amplitude().samples;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c * a[i];
    }
    return normalize(Strategy::from_amplitude(ComplexField1D(grid, std::move(acc)), first.h_E()));
}

} // namespace qmg
