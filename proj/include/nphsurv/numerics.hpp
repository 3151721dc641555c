#pragma once

#include <functional>

#include "nphsurv/survival.hpp"

namespace nphsurv {

// Standard normal CDF, evaluated through erfc so both tails keep full
// relative precision.
double std_normal_cdf(double x) noexcept;

// Inverse of std_normal_cdf. Acklam's rational approximation followed by one
// Halley refinement. Throws std::domain_error unless 0 < p < 1.
double std_normal_quantile(double p);

// Sample-size inflation needed for a test with power `power_alt` to match a
// reference test with power `power_ref`, both at one-sided level `alpha`:
//   ((z_{1-a} + z_{ref}) / (z_{1-a} + z_{alt}))^2
// Throws NumericalError when the denominator is not positive.
double relative_efficiency(double power_ref, double power_alt, double alpha_one_sided);

// Exact area under the step curve on [a, b]. Throws DataError when b exceeds
// the curve's support or the interval is malformed.
double integrate_step(const SurvivalCurve& curve, double a, double b);

// Bisection on a bracketing interval. Stops when |f(x)| <= tol or the
// bracket is narrower than tol. Throws NumericalError without a sign change.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace nphsurv
