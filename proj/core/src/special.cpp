#include <cmath>
#include <sstream>

#include "qmg/error.hpp"
#include "qmg/numerics.hpp"

namespace qmg {

std::vector<double> hermite_fns(int n_max, double x, double hbar, double m_omega) {
    if (n_max < 0 || n_max > max_hermite_order) {
        std::ostringstream msg;
        msg << "hermite_fn: order " << n_max << " outside [0, " << max_hermite_order << "]";
        throw ValidationError(msg.str());
    }
    if (!(hbar > 0.0) || !(m_omega > 0.0)) throw ValidationError("hermite_fn: hbar and m*omega must be positive");

    const double alpha = m_omega / hbar;
    const double xi = x * std::sqrt(alpha);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
    // psi_{n+1} = sqrt(2/(n+1)) xi psi_n - sqrt(n/(n+1)) psi_{n-1}
    out[0] = std::pow(alpha / pi, 0.25) * std::exp(-0.5 * xi * xi);
    if (n_max >= 1) out[1] = std::sqrt(2.0) * xi * out[0];
    for (int n = 1; n < n_max; ++n) {
        const double dn = static_cast<double>(n);
        out[n + 1] = std::sqrt(2.0 / (dn + 1.0)) * xi * out[n] - std::sqrt(dn / (dn + 1.0)) * out[n - 1];
    }
    return out;
}

double hermite_fn(int n, double x, double hbar, double m_omega) { return hermite_fns(n, x, hbar, m_omega).back(); }

double laguerre(int n, double x) {
    if (n < 0 || n > max_laguerre_order) {
        std::ostringstream msg;
        msg << "laguerre: order " << n << " outside [0, " << max_laguerre_order << "]";
        throw ValidationError(msg.str());
    }
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 1.0 - x;
    for (int k = 1; k < n; ++k) {
        const double dk = static_cast<double>(k);
        const double next = ((2.0 * dk + 1.0 - x) * cur - dk * prev) / (dk + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace qmg
