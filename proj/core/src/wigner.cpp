#include "qmg/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qmg/error.hpp"

namespace qmg {

// --------------------------------------------------------------- WignerField

std::vector<double> WignerField::row(std::size_t ip) const {
    const std::size_t nq = q_grid.size();
    return std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(ip * nq),
                               values.begin() + static_cast<std::ptrdiff_t>((ip + 1) * nq));
}

std::vector<double> WignerField::column(std::size_t iq) const {
    std::vector<double> out(p_grid.size());
    for (std::size_t ip = 0; ip < out.size(); ++ip) out[ip] = at(ip, iq);
    return out;
}

double WignerField::integral() const {
    std::vector<double> row_integrals(p_grid.size());
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) row_integrals[ip] = integrate(q_grid, row(ip));
    return integrate(p_grid, row_integrals);
}

double WignerField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

Grid1D default_phase_grid() { return Grid1D(-12.0, 12.0, 256); }

// -------------------------------------------------------------- pure states

namespace {

// Row r sits at q = lo + r h / 2 (half-step index), column k at p = k dp with
// dp = h_E / (2 N h), so that x = (2m + parity) h lands on grid points.
WignerField wigner_centred(const Strategy& s, long k_centre, long r_centre, const WignerOptions& options) {
    const auto& amp = s.amplitude();
    const std::size_t n = amp.grid.size();
    const double h = amp.grid.spacing();
    const double h_E = s.h_E();
    if (!is_power_of_two(options.n_p) || options.n_p < 8 || options.n_p > n) {
        throw ValidationError("wigner: n_p must be a power of two in [8, grid size]");
    }
    if (!is_power_of_two(options.n_q) || options.n_q < 8) {
        throw ValidationError("wigner: n_q must be a power of two >= 8");
    }

    const double dp = h_E / (2.0 * static_cast<double>(n) * h);
    const long max_row = 2 * static_cast<long>(n - 1);
    const long stride = std::max<long>(1, (max_row + static_cast<long>(options.n_q) - 1) / static_cast<long>(options.n_q));
    const long n_q = static_cast<long>(options.n_q);
    const long n_p = static_cast<long>(options.n_p);
    const long r_first = r_centre - (n_q / 2) * stride;
    const long k_first = k_centre - n_p / 2;

    const double lo = amp.grid.lo();
    const Grid1D q_grid(lo + static_cast<double>(r_first) * h / 2.0,
                        lo + static_cast<double>(r_first + (n_q - 1) * stride) * h / 2.0, options.n_q);
    const Grid1D p_grid(static_cast<double>(k_first) * dp, static_cast<double>(k_first + n_p - 1) * dp, options.n_p);

    const double scale = 2.0 * h / (h_E * s.norm_squared());
    const auto& psi = amp.samples;
    const long len = static_cast<long>(n);

    std::vector<double> values(options.n_p * options.n_q, 0.0);
    std::vector<complex> work(n);
    for (long j = 0; j < n_q; ++j) {
        const long r = r_first + j * stride;
        if (r < 0 || r > max_row) continue;
        const long parity = r % 2;
        const long base = (r - parity) / 2;
        std::fill(work.begin(), work.end(), complex{0.0, 0.0});
        for (long m = -len / 2; m < len / 2; ++m) {
            const long i1 = base + parity + m;
            const long i2 = base - m;
            if (i1 < 0 || i1 >= len || i2 < 0 || i2 >= len) continue;
            work[static_cast<std::size_t>((m + len) % len)] = psi[static_cast<std::size_t>(i1)] *
                                                              std::conj(psi[static_cast<std::size_t>(i2)]);
        }
        fft_inplace(work, +1);
        for (long c = 0; c < n_p; ++c) {
            const long k = k_first + c;
            const auto idx = static_cast<std::size_t>(((k % len) + len) % len);
            const complex phase = parity ? std::polar(1.0, pi * static_cast<double>(k) / static_cast<double>(len))
                                         : complex{1.0, 0.0};
            values[static_cast<std::size_t>(c) * options.n_q + static_cast<std::size_t>(j)] =
                scale * (phase * work[idx]).real();
        }
    }
    return WignerField{p_grid, q_grid, std::move(values), h_E};
}

struct Centre {
    long k;
    long r;
};

Centre centre_for(const Strategy& s, double mean_p, double mean_q) {
    const auto& grid = s.amplitude().grid;
    const double h = grid.spacing();
    const double dp = s.h_E() / (2.0 * static_cast<double>(grid.size()) * h);
    return Centre{std::lround(mean_p / dp), std::lround(2.0 * (mean_q - grid.lo()) / h)};
}

} // namespace

WignerField wigner_of_pure(const Strategy& s, const WignerOptions& options) {
    if (s.is_eigenstate()) throw ValidationError("wigner_of_pure: price eigenstates have no Wigner field on a grid");
    const auto c = centre_for(s, supply_stats(s).mean, demand_stats(s).mean);
    return wigner_centred(s, c.k, c.r, options);
}

void MixedStrategy::validate() const {
    if (components.empty()) throw ValidationError("mixed strategy: no components");
    if (weights.size() != components.size()) throw ValidationError("mixed strategy: weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("mixed strategy: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "mixed strategy: weights sum to " << total << ", not 1";
        throw ValidationError(msg.str());
    }
}

WignerField wigner_of_mixed(const MixedStrategy& mixed, const WignerOptions& options) {
    mixed.validate();
    const auto& first = mixed.components.front();
    double mean_p = 0.0;
    double mean_q = 0.0;
    for (std::size_t i = 0; i < mixed.components.size(); ++i) {
        const auto& s = mixed.components[i];
        if (s.is_eigenstate()) throw ValidationError("wigner_of_mixed: components must be grid strategies");
        if (!(s.amplitude().grid == first.amplitude().grid) || s.h_E() != first.h_E()) {
            throw ValidationError("wigner_of_mixed: components must share grid and h_E");
        }
        mean_p += mixed.weights[i] * supply_stats(s).mean;
        mean_q += mixed.weights[i] * demand_stats(s).mean;
    }
    const auto c = centre_for(first, mean_p, mean_q);
    WignerField out = wigner_centred(first, c.k, c.r, options);
    for (auto& v : out.values) v *= mixed.weights.front();
    for (std::size_t i = 1; i < mixed.components.size(); ++i) {
        const auto part = wigner_centred(mixed.components[i], c.k, c.r, options);
        for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += mixed.weights[i] * part.values[j];
    }
    return out;
}

// ------------------------------------------------------------------- curves

bool Curve::is_monotone_nondecreasing(double tol) const {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1] - tol) return false;
    }
    return true;
}

bool Curve::is_monotone_nonincreasing(double tol) const {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1] + tol) return false;
    }
    return true;
}

double field_mean_p(const WignerField& field) {
    std::vector<double> weighted(field.p_grid.size());
    std::vector<double> mass(field.p_grid.size());
    for (std::size_t ip = 0; ip < weighted.size(); ++ip) {
        mass[ip] = integrate(field.q_grid, field.row(ip));
        weighted[ip] = field.p_grid.at(ip) * mass[ip];
    }
    return integrate(field.p_grid, weighted) / integrate(field.p_grid, mass);
}

double field_mean_q(const WignerField& field) {
    std::vector<double> weighted(field.q_grid.size());
    std::vector<double> mass(field.q_grid.size());
    for (std::size_t iq = 0; iq < weighted.size(); ++iq) {
        mass[iq] = integrate(field.p_grid, field.column(iq));
        weighted[iq] = field.q_grid.at(iq) * mass[iq];
    }
    return integrate(field.q_grid, weighted) / integrate(field.q_grid, mass);
}

Curve demand_curve(const WignerField& field, double p_const) {
    if (!field.p_grid.contains(p_const)) {
        std::ostringstream msg;
        msg << "demand_curve: p = " << p_const << " outside [" << field.p_grid.lo() << ", " << field.p_grid.hi() << "]";
        throw ValidationError(msg.str());
    }
    const auto row = field.row(field.p_grid.nearest(p_const));
    return Curve{field.q_grid.points(), cumulative_integral(field.q_grid, row)};
}

Curve demand_curve(const WignerField& field) { return demand_curve(field, field_mean_p(field)); }

Curve supply_curve(const WignerField& field, double q_const) {
    if (!field.q_grid.contains(q_const)) {
        std::ostringstream msg;
        msg << "supply_curve: q = " << q_const << " outside [" << field.q_grid.lo() << ", " << field.q_grid.hi() << "]";
        throw ValidationError(msg.str());
    }
    const auto cumulative = cumulative_integral(field.p_grid, field.column(field.q_grid.nearest(q_const)));
    const std::size_t n = field.p_grid.size();
    Curve curve;
    curve.ln_c.resize(n);
    curve.values.resize(n);
    // ln c = -p, so walk p downwards to get increasing ln c.
    for (std::size_t i = 0; i < n; ++i) {
        curve.ln_c[i] = -field.p_grid.at(n - 1 - i);
        curve.values[i] = cumulative[n - 1 - i];
    }
    return curve;
}

Curve supply_curve(const WignerField& field) { return supply_curve(field, field_mean_q(field)); }

// ------------------------------------------------------------------- giffen

GiffenReport is_giffen(const WignerField& field, double tol) {
    GiffenReport report;
    report.threshold = tol < 0.0 ? 1e-8 * field.max_abs() : tol;
    const auto it = std::min_element(field.values.begin(), field.values.end());
    const auto idx = static_cast<std::size_t>(it - field.values.begin());
    const std::size_t nq = field.q_grid.size();
    report.min_value = *it;
    report.p = field.p_grid.at(idx / nq);
    report.q = field.q_grid.at(idx % nq);
    report.giffen = report.min_value < -report.threshold;
    return report;
}

bool hudson_check(const Strategy& s, const WignerOptions& options) {
    const auto q = demand_stats(s);
    const auto p = supply_stats(s);
    if (!(std::abs(q.excess_kurtosis) < 1e-4) || !(std::abs(p.excess_kurtosis) < 1e-4)) return false;
    const auto field = wigner_of_pure(s, options);
    return *std::min_element(field.values.begin(), field.values.end()) >= -1e-6;
}

// ------------------------------------------------------------------ thermal

namespace {

double hbar_omega(const RiskParams& params) { return params.hbar_eff() * params.omega(); }

double risk_surface(const RiskParams& params, double p, double q) {
    const double omega = params.omega();
    return p * p / (2.0 * params.m) + params.m * omega * omega * q * q / 2.0;
}

} // namespace

double GibbsSpec::weight(int n) const {
    if (n < 0) return 0.0;
    if (std::isinf(beta)) return n == 0 ? 1.0 : 0.0;
    const double b = beta * hbar_omega(params);
    return -std::expm1(-b) * std::exp(-b * static_cast<double>(n));
}

double GibbsSpec::tail_weight() const {
    if (std::isinf(beta)) return 0.0;
    return std::exp(-beta * hbar_omega(params) * static_cast<double>(n_max + 1));
}

void GibbsSpec::validate() const {
    params.validate();
    if (!(beta >= 0.0)) throw ValidationError("gibbs: beta must be non-negative");
    if (n_max < 0 || n_max > max_laguerre_order) {
        std::ostringstream msg;
        msg << "gibbs: n_max " << n_max << " outside [0, " << max_laguerre_order << "]";
        throw ValidationError(msg.str());
    }
}

int required_n_max(double beta, const RiskParams& params, double tail_bound) {
    params.validate();
    if (!(beta >= 0.0)) throw ValidationError("gibbs: beta must be non-negative");
    if (beta == 0.0) throw TruncationError("gibbs: beta = 0 has no finite truncation");
    if (std::isinf(beta)) return 0;
    const double b = beta * hbar_omega(params);
    for (int n = 0; n <= max_laguerre_order; ++n) {
        if (std::exp(-b * static_cast<double>(n + 1)) < tail_bound) return n;
    }
    std::ostringstream msg;
    msg << "gibbs: beta " << beta << " needs more than " << max_laguerre_order << " levels for tail " << tail_bound;
    throw TruncationError(msg.str());
}

WignerField oscillator_wigner(int n, const RiskParams& params, const Grid1D& p_grid, const Grid1D& q_grid) {
    params.validate();
    if (n < 0 || n > max_laguerre_order) throw ValidationError("oscillator_wigner: level out of range");
    const double hw = hbar_omega(params);
    const double hbar = params.hbar_eff();
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    std::vector<double> values(p_grid.size() * q_grid.size());
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
        for (std::size_t iq = 0; iq < q_grid.size(); ++iq) {
            const double y = 4.0 * risk_surface(params, p_grid.at(ip), q_grid.at(iq)) / hw;
            values[ip * q_grid.size() + iq] = sign / (pi * hbar) * std::exp(-0.5 * y) * laguerre(n, y);
        }
    }
    return WignerField{p_grid, q_grid, std::move(values), params.h_eff()};
}

WignerField thermal_series(const GibbsSpec& spec, const Grid1D& p_grid, const Grid1D& q_grid) {
    spec.validate();
    if (!(spec.tail_weight() < 1e-10)) {
        std::ostringstream msg;
        msg << "thermal_series: Gibbs tail " << spec.tail_weight() << " beyond n_max = " << spec.n_max
            << " exceeds 1e-10";
        throw TruncationError(msg.str());
    }
    const double hw = hbar_omega(spec.params);
    const double hbar = spec.params.hbar_eff();
    std::vector<double> weights(static_cast<std::size_t>(spec.n_max) + 1);
    for (int n = 0; n <= spec.n_max; ++n) weights[static_cast<std::size_t>(n)] = spec.weight(n);

    std::vector<double> values(p_grid.size() * q_grid.size());
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
        for (std::size_t iq = 0; iq < q_grid.size(); ++iq) {
            const double y = 4.0 * risk_surface(spec.params, p_grid.at(ip), q_grid.at(iq)) / hw;
            // sum_n w_n (-1)^n L_n(y) with the Laguerre recurrence run alongside
            double prev = 1.0;
            double cur = 1.0 - y;
            double acc = weights[0];
            if (spec.n_max >= 1) acc -= weights[1] * cur;
            for (int k = 1; k < spec.n_max; ++k) {
                const double dk = static_cast<double>(k);
                const double next = ((2.0 * dk + 1.0 - y) * cur - dk * prev) / (dk + 1.0);
                prev = cur;
                cur = next;
                acc += ((k + 1) % 2 == 0 ? 1.0 : -1.0) * weights[static_cast<std::size_t>(k) + 1] * cur;
            }
            values[ip * q_grid.size() + iq] = std::exp(-0.5 * y) / (pi * hbar) * acc;
        }
    }
    return WignerField{p_grid, q_grid, std::move(values), spec.params.h_eff()};
}

WignerField thermal_closed_form(const GibbsSpec& spec, const Grid1D& p_grid, const Grid1D& q_grid) {
    spec.params.validate();
    if (!(spec.beta > 0.0)) throw ValidationError("thermal_closed_form: beta = 0 is not normalizable");
    const double hw = hbar_omega(spec.params);
    const double x = std::isinf(spec.beta) ? 2.0 / hw : 2.0 / hw * std::tanh(spec.beta * hw / 2.0);
    const double prefactor = spec.params.omega() / (2.0 * pi) * x;
    std::vector<double> values(p_grid.size() * q_grid.size());
    for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
        for (std::size_t iq = 0; iq < q_grid.size(); ++iq) {
            values[ip * q_grid.size() + iq] = prefactor * std::exp(-x * risk_surface(spec.params, p_grid.at(ip), q_grid.at(iq)));
        }
    }
    return WignerField{p_grid, q_grid, std::move(values), spec.params.h_eff()};
}

} // namespace qmg
