#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qmg {

using complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Uniform grid of n points spanning [lo, hi] inclusive.
///
/// n must be a power of two and at least 8 so that every grid can feed the
/// FFT-based transforms directly.
class Grid1D {
public:
    Grid1D(double lo, double hi, std::size_t n);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    std::size_t size() const { return n_; }
    double spacing() const { return (hi_ - lo_) / static_cast<double>(n_ - 1); }
    double at(std::size_t i) const { return lo_ + static_cast<double>(i) * spacing(); }
    bool contains(double x) const { return x >= lo_ && x <= hi_; }

    /// Index of the grid point closest to x (clamped to the grid).
    std::size_t nearest(double x) const;

    std::vector<double> points() const;

    friend bool operator==(const Grid1D&, const Grid1D&) = default;

private:
    double lo_;
    double hi_;
    std::size_t n_;
};

/// q in [-12, 12] with 4096 points.
Grid1D default_grid();

bool is_power_of_two(std::size_t n);

/// Complex samples attached to a grid.
struct ComplexField1D {
    ComplexField1D(Grid1D grid, std::vector<complex> samples);

    Grid1D grid;
    std::vector<complex> samples;
};

// ---------------------------------------------------------------- quadrature

/// Composite trapezoid rule.
double integrate(const Grid1D& grid, std::span<const double> f);

/// Running trapezoid integral; result[0] == 0.
std::vector<double> cumulative_integral(const Grid1D& grid, std::span<const double> f);

/// Linear interpolation of samples on a grid; constant extension outside.
double interpolate(const Grid1D& grid, std::span<const double> f, double x);

/// Node slopes for a piecewise cubic Hermite model of a non-negative f:
/// central differences clamped to |h f'| <= 3 f, which keeps every cubic
/// piece non-negative.
std::vector<double> positive_hermite_slopes(const Grid1D& grid, std::span<const double> f);

/// Running integral of the Hermite model given by f and slopes; exact for
/// cubics, non-decreasing when the model is non-negative.
std::vector<double> hermite_cumulative(const Grid1D& grid, std::span<const double> f, std::span<const double> slopes);

/// Integral of the Hermite model from the grid start to x, clamped to the grid.
double hermite_cumulative_at(const Grid1D& grid, std::span<const double> f, std::span<const double> slopes,
                             std::span<const double> cumulative, double x);

/// Discrete L2 norm sum |f|^2 h (rectangle weights, the metric preserved by
/// the discrete Fourier pair).
double l2_norm_squared(const ComplexField1D& field);

// -------------------------------------------------------------- root finding

struct Bracket {
    double lo;
    double hi;
};

/// Bisection keeping a sign change (or exact zero) inside [lo, hi].
///
/// Requires g(a)*g(b) <= 0. Stops when hi - lo <= tol or when the midpoint is
/// no longer representable between the endpoints. A midpoint with g == 0 is
/// treated as a sign change, so the left sub-bracket is kept.
Bracket bisect_bracket(const std::function<double(double)>& g, double a, double b, double tol);

/// Root from bisect_bracket: the upper end of the final bracket.
double bisect_root(const std::function<double(double)>& g, double a, double b, double tol);

/// Golden-section maximisation of a unimodal function on [a, b].
double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol);

// ------------------------------------------------------------------- fourier

/// Supply-side transform of a demand amplitude.
///
///     phi(p) = h_E^{-1/2} \int exp(+i p q / hbar_E) psi(q) dq,  hbar_E = h_E / 2pi
///
/// evaluated with an FFT. The field is zero-padded to oversample * n points
/// first, which refines the p spacing without changing the result. The
/// returned grid is the conjugate grid p_k = (k - M/2) dp, dp = h_E / (M h),
/// on which the pair is exactly unitary in the discrete L2 metric.
ComplexField1D fourier_pair(const ComplexField1D& psi_q, double h_E, std::size_t oversample = 1);

/// Inverse of fourier_pair. q_lo is the first point of the demand grid; the
/// result carries the (possibly padded) grid of length phi_p.size().
ComplexField1D inverse_fourier_pair(const ComplexField1D& phi_p, double h_E, double q_lo);

/// In-place unnormalised DFT. sign = +1 computes sum_j x_j exp(+2 pi i jk/n).
void fft_inplace(std::vector<complex>& data, int sign);

// --------------------------------------------------------- special functions

/// Normalised harmonic-oscillator eigenfunction psi_n(x) for the given hbar
/// and m*omega, by the stable three-term recurrence on normalised functions.
double hermite_fn(int n, double x, double hbar, double m_omega);

/// All psi_0..psi_n at x; result has n + 1 entries.
std::vector<double> hermite_fns(int n_max, double x, double hbar, double m_omega);

/// Laguerre polynomial L_n(x).
double laguerre(int n, double x);

double normal_pdf(double x);
double normal_cdf(double x);

inline constexpr int max_hermite_order = 64;
inline constexpr int max_laguerre_order = 512;

} // namespace qmg
