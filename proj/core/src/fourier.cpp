#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "qmg/error.hpp"
#include "qmg/numerics.hpp"

namespace qmg {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* buffer = fftw_alloc_complex(n);
        const int dir = sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD;
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer, dir, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buffer);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

} // namespace

void fft_inplace(std::vector<complex>& data, int sign) {
    if (!is_power_of_two(data.size())) throw ValidationError("fft: length must be a power of two");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_cache().get(data.size(), sign), ptr, ptr);
}

ComplexField1D fourier_pair(const ComplexField1D& psi_q, double h_E, std::size_t oversample) {
    if (!(h_E > 0.0)) throw ValidationError("fourier_pair: h_E must be positive");
    if (!is_power_of_two(psi_q.grid.size())) throw ValidationError("fourier_pair: grid size must be a power of two");
    if (!is_power_of_two(oversample)) throw ValidationError("fourier_pair: oversample must be a power of two");

    const std::size_t n = psi_q.grid.size();
    const std::size_t m = n * oversample;
    const double h = psi_q.grid.spacing();
    const double hbar = h_E / (2.0 * pi);
    const double dp = h_E / (static_cast<double>(m) * h);
    const double q_lo = psi_q.grid.lo();

    // exp(i p_k q_j / hbar) = exp(i p_k q_lo / hbar) (-1)^j exp(2 pi i jk / m)
    std::vector<complex> work(m, complex{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) work[j] = (j % 2 == 0) ? psi_q.samples[j] : -psi_q.samples[j];
    fft_inplace(work, +1);

    const double scale = h / std::sqrt(h_E);
    for (std::size_t k = 0; k < m; ++k) {
        const double p = (static_cast<double>(k) - static_cast<double>(m / 2)) * dp;
        work[k] *= scale * std::polar(1.0, p * q_lo / hbar);
    }
    const double p_lo = -static_cast<double>(m / 2) * dp;
    const double p_hi = (static_cast<double>(m / 2) - 1.0) * dp;
    return ComplexField1D(Grid1D(p_lo, p_hi, m), std::move(work));
}

ComplexField1D inverse_fourier_pair(const ComplexField1D& phi_p, double h_E, double q_lo) {
    if (!(h_E > 0.0)) throw ValidationError("inverse_fourier_pair: h_E must be positive");
    const std::size_t m = phi_p.grid.size();
    if (!is_power_of_two(m)) throw ValidationError("inverse_fourier_pair: grid size must be a power of two");
    const double dp = phi_p.grid.spacing();
    const double hbar = h_E / (2.0 * pi);
    const double h = h_E / (static_cast<double>(m) * dp);

    std::vector<complex> work(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double p = phi_p.grid.at(k);
        work[k] = phi_p.samples[k] * std::polar(1.0, -p * q_lo / hbar);
    }
    fft_inplace(work, -1);

    // The p grid starts at -m/2 dp, which contributes exp(+i pi j) = (-1)^j.
    const double scale = dp / std::sqrt(h_E);
    for (std::size_t j = 0; j < m; ++j) work[j] *= (j % 2 == 0) ? scale : -scale;
    return ComplexField1D(Grid1D(q_lo, q_lo + static_cast<double>(m - 1) * h, m), std::move(work));
}

} // namespace qmg
