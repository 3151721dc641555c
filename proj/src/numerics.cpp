#include "nphsurv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "nphsurv/error.hpp"

namespace nphsurv {

double std_normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace {

// Acklam (2003) lower-region and central-region coefficients.
constexpr double kA[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                         -2.759285104469687e+02, 1.383577518672690e+02,
                         -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                         -1.556989798598866e+02, 6.680131188771972e+01,
                         -1.328068155288572e+01};
constexpr double kC[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                         -2.400758277161838e+00, -2.549732539343734e+00,
                         4.374664141464968e+00, 2.938163982698783e+00};
constexpr double kD[] = {7.784695709041462e-03, 3.224671290700398e-01,
                         2.445134137142996e+00, 3.754408661907416e+00};
constexpr double kLowRegion = 0.02425;

double acklam(double p) {
  if (p < kLowRegion) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
           ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  }
  if (p > 1.0 - kLowRegion) return -acklam(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
         (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("std_normal_quantile: p must lie in (0, 1)");
  }
  if (p == 0.5) return 0.0;
  double x = acklam(p);
  // Halley step on Phi(x) - p.
  const double e = std_normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double relative_efficiency(double power_ref, double power_alt, double alpha_one_sided) {
  for (double v : {power_ref, power_alt, alpha_one_sided}) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::domain_error("relative_efficiency: arguments must lie in (0, 1)");
    }
  }
  const double z_alpha = std_normal_quantile(1.0 - alpha_one_sided);
  const double num = z_alpha + std_normal_quantile(power_ref);
  const double den = z_alpha + std_normal_quantile(power_alt);
  if (den <= 0.0) {
    throw NumericalError("alternative power too low for normal approximation");
  }
  const double ratio = num / den;
  return ratio * ratio;
}

double integrate_step(const SurvivalCurve& curve, double a, double b) {
  if (!(a >= 0.0) || !(b >= a)) {
    throw DataError("integrate_step: need 0 <= a <= b");
  }
  if (b > curve.support) {
    throw DataError("integrate_step: upper limit beyond curve support");
  }
  if (a == b) return 0.0;

  const auto& steps = curve.steps;
  auto it = std::upper_bound(steps.begin(), steps.end(), a,
                             [](double x, const SurvivalCurve::Step& s) { return x < s.time; });
  double s = it == steps.begin() ? 1.0 : std::prev(it)->survival;
  double t = a;
  double area = 0.0;
  for (; it != steps.end() && it->time <= b; ++it) {
    area += s * (it->time - t);
    t = it->time;
    s = it->survival;
  }
  area += s * (b - t);
  return area;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::domain_error("find_root: tol must be positive");
  if (lo > hi) std::swap(lo, hi);
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) {
    throw NumericalError("find_root: no sign change on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (std::abs(fmid) <= tol || 0.5 * (hi - lo) <= tol) return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace nphsurv
