#include "qmg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmg/error.hpp"

namespace qmg {

namespace {

void require_finite(std::span<const double> f, const char* what) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) {
            std::ostringstream msg;
            msg << what << ": non-finite sample at index " << i;
            throw ValidationError(msg.str());
        }
    }
}

void require_matching(const Grid1D& grid, std::span<const double> f, const char* what) {
    if (f.size() != grid.size()) {
        std::ostringstream msg;
        msg << what << ": " << f.size() << " samples on a grid of " << grid.size();
        throw ValidationError(msg.str());
    }
}

} // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Grid1D::Grid1D(double lo, double hi, std::size_t n) : lo_(lo), hi_(hi), n_(n) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw ValidationError("Grid1D: requires finite lo < hi");
    }
    if (n < 8 || !is_power_of_two(n)) {
        std::ostringstream msg;
        msg << "Grid1D: point count " << n << " must be a power of two >= 8";
        throw ValidationError(msg.str());
    }
}

std::size_t Grid1D::nearest(double x) const {
    const double t = std::round((x - lo_) / spacing());
    if (t <= 0.0) return 0;
    if (t >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(t);
}

std::vector<double> Grid1D::points() const {
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = at(i);
    return out;
}

Grid1D default_grid() { return Grid1D(-12.0, 12.0, 4096); }

ComplexField1D::ComplexField1D(Grid1D g, std::vector<complex> s) : grid(g), samples(std::move(s)) {
    if (samples.size() != grid.size()) {
        throw ValidationError("ComplexField1D: sample count does not match grid");
    }
    for (const auto& z : samples) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw ValidationError("ComplexField1D: non-finite sample");
        }
    }
}

double integrate(const Grid1D& grid, std::span<const double> f) {
    require_matching(grid, f, "integrate");
    require_finite(f, "integrate");
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) interior += f[i];
    return grid.spacing() * (interior + 0.5 * (f.front() + f.back()));
}

std::vector<double> cumulative_integral(const Grid1D& grid, std::span<const double> f) {
    require_matching(grid, f, "cumulative_integral");
    require_finite(f, "cumulative_integral");
    const double half_h = 0.5 * grid.spacing();
    std::vector<double> out(f.size());
    out[0] = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + half_h * (f[i - 1] + f[i]);
    return out;
}

double interpolate(const Grid1D& grid, std::span<const double> f, double x) {
    if (x <= grid.lo()) return f.front();
    if (x >= grid.hi()) return f.back();
    const double t = (x - grid.lo()) / grid.spacing();
    auto i = static_cast<std::size_t>(t);
    if (i >= f.size() - 1) i = f.size() - 2;
    const double w = t - static_cast<double>(i);
    return f[i] + w * (f[i + 1] - f[i]);
}

std::vector<double> positive_hermite_slopes(const Grid1D& grid, std::span<const double> f) {
    require_matching(grid, f, "positive_hermite_slopes");
    const std::size_t n = f.size();
    const double h = grid.spacing();
    std::vector<double> d(n);
    d[0] = (f[1] - f[0]) / h;
    d[n - 1] = (f[n - 1] - f[n - 2]) / h;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    for (std::size_t i = 0; i < n; ++i) {
        const double bound = 3.0 * std::max(f[i], 0.0) / h;
        d[i] = std::clamp(d[i], -bound, bound);
    }
    return d;
}

std::vector<double> hermite_cumulative(const Grid1D& grid, std::span<const double> f, std::span<const double> slopes) {
    require_matching(grid, f, "hermite_cumulative");
    require_matching(grid, slopes, "hermite_cumulative");
    const double h = grid.spacing();
    std::vector<double> out(f.size());
    out[0] = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i)
        out[i] = out[i - 1] + h * (0.5 * (f[i - 1] + f[i]) + h * (slopes[i - 1] - slopes[i]) / 12.0);
    return out;
}

double hermite_cumulative_at(const Grid1D& grid, std::span<const double> f, std::span<const double> slopes,
                             std::span<const double> cumulative, double x) {
    if (x <= grid.lo()) return cumulative.front();
    if (x >= grid.hi()) return cumulative.back();
    const double h = grid.spacing();
    const double u = (x - grid.lo()) / h;
    auto i = static_cast<std::size_t>(u);
    if (i >= f.size() - 1) i = f.size() - 2;
    const double t = u - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    // Integrals over [0, t] of the four Hermite basis functions.
    const double a00 = 0.5 * t4 - t3 + t;
    const double a10 = 0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2;
    const double a01 = -0.5 * t4 + t3;
    const double a11 = 0.25 * t4 - t3 / 3.0;
    return cumulative[i] + h * (f[i] * a00 + h * slopes[i] * a10 + f[i + 1] * a01 + h * slopes[i + 1] * a11);
}

double l2_norm_squared(const ComplexField1D& field) {
    double acc = 0.0;
    for (const auto& z : field.samples) acc += std::norm(z);
    return acc * field.grid.spacing();
}

Bracket bisect_bracket(const std::function<double(double)>& g, double a, double b, double tol) {
    if (!(tol > 0.0)) throw ValidationError("bisect_root: tol must be positive");
    if (a > b) std::swap(a, b);
    const double ga = g(a);
    const double gb = g(b);
    if (!std::isfinite(ga) || !std::isfinite(gb)) throw NumericalError("bisect_root: non-finite endpoint value");
    if (ga == 0.0) return {a, a};
    if (ga * gb > 0.0) {
        std::ostringstream msg;
        msg << "bisect_root: no sign change on [" << a << ", " << b << "] (g = " << ga << ", " << gb << ")";
        throw BracketingError(msg.str());
    }
    const bool left_negative = ga < 0.0;
    double lo = a;
    double hi = b;
    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0 || (gm < 0.0) != left_negative) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return {lo, hi};
}

double bisect_root(const std::function<double(double)>& g, double a, double b, double tol) {
    return bisect_bracket(g, a, b, tol).hi;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(tol > 0.0) || !(a < b)) throw ValidationError("golden_section_max: need a < b and tol > 0");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int iter = 0; iter < 500 && b - a > tol; ++iter) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace qmg
