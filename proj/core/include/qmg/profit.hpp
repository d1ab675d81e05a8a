#pragma once

namespace qmg {

/// A price-eigenstate strategy withholding below threshold a against a
/// Gaussian Rest-of-the-World of dispersion sigma.
struct IntensitySpec {
    double sigma = 1.0;
    double a_lo = 0.0;
    double a_hi = 3.0;

    /// sigma > 0 and 0 <= a_lo < a_hi <= 3 sigma.
    void validate() const;
};

/// rho(a) = sigma * phi(a / sigma) / (1 + Phi(-a / sigma)) with phi, Phi the
/// standard normal pdf and cdf.
double profit_intensity(double a, const IntensitySpec& spec);

struct FixedPoint {
    double a_star;
    double rho_star;

    /// a (1 + Phi(-a)) - phi(a) in units of sigma; zero at the maximiser.
    double stationarity_residual;
};

/// Maximises rho by golden-section search on [a_lo, a_hi]. The maximiser is
/// also a fixed point, rho(a*) = a*. Throws NumericalError when the maximum
/// sits on the boundary of the search interval.
FixedPoint fixed_point(const IntensitySpec& spec, double tol = 1e-10);

} // namespace qmg
