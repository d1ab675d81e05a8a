#include "qmg/profit.hpp"

#include <cmath>
#include <sstream>

#include "qmg/error.hpp"
#include "qmg/numerics.hpp"

namespace qmg {

void IntensitySpec::validate() const {
    if (!(sigma > 0.0)) throw ValidationError("intensity: sigma must be positive");
    if (!(a_lo >= 0.0) || !(a_lo < a_hi) || !(a_hi <= 3.0 * sigma)) {
        std::ostringstream msg;
        msg << "intensity: search interval [" << a_lo << ", " << a_hi << "] must lie in [0, 3 sigma = " << 3.0 * sigma
            << "]";
        throw ValidationError(msg.str());
    }
}

double profit_intensity(double a, const IntensitySpec& spec) {
    if (!(spec.sigma > 0.0)) throw ValidationError("intensity: sigma must be positive");
    if (!(a >= 0.0)) throw ValidationError("intensity: a must be non-negative");
    const double t = a / spec.sigma;
    return spec.sigma * normal_pdf(t) / (1.0 + normal_cdf(-t));
}

FixedPoint fixed_point(const IntensitySpec& spec, double tol) {
    spec.validate();
    if (!(tol > 0.0)) throw ValidationError("fixed_point: tol must be positive");
    const auto rho = [&](double a) { return profit_intensity(a, spec); };
    const double a_star = golden_section_max(rho, spec.a_lo, spec.a_hi, tol * spec.sigma);
    const double edge = 10.0 * tol * spec.sigma;
    if (a_star - spec.a_lo < edge || spec.a_hi - a_star < edge) {
        std::ostringstream msg;
        msg << "fixed_point: maximum at the boundary of [" << spec.a_lo << ", " << spec.a_hi << "]";
        throw NumericalError(msg.str());
    }
    const double t = a_star / spec.sigma;
    return FixedPoint{a_star, rho(a_star), t * (1.0 + normal_cdf(-t)) - normal_pdf(t)};
}

} // namespace qmg
