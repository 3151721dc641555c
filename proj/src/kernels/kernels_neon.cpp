#include "nphsurv/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace nphsurv::kernels::detail {

#if defined(__aarch64__)

// Advanced SIMD is mandatory on AArch64.
bool cpu_has_neon() noexcept { return true; }

namespace {

RiskColumns tail_of(const RiskColumns& rows, std::size_t from) {
  return {rows.at_risk0.subspan(from), rows.at_risk1.subspan(from),
          rows.events0.subspan(from), rows.events1.subspan(from)};
}

}  // namespace

LogrankSums logrank_neon(const RiskColumns& rows, std::span<const double> w) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_vec = n_rows & ~std::size_t{1};
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t acc_u = vdupq_n_f64(0.0);
  float64x2_t acc_v = vdupq_n_f64(0.0);

  for (std::size_t j = 0; j < n_vec; j += 2) {
    const float64x2_t n0 = vld1q_f64(rows.at_risk0.data() + j);
    const float64x2_t n1 = vld1q_f64(rows.at_risk1.data() + j);
    const float64x2_t d0 = vld1q_f64(rows.events0.data() + j);
    const float64x2_t d1 = vld1q_f64(rows.events1.data() + j);
    const float64x2_t wj = vld1q_f64(w.data() + j);
    const float64x2_t n = vaddq_f64(n0, n1);
    const float64x2_t d = vaddq_f64(d0, d1);

    acc_u = vaddq_f64(acc_u, vmulq_f64(wj, vsubq_f64(d0, vdivq_f64(vmulq_f64(d, n0), n))));

    const uint64x2_t multi = vcgtq_f64(n, one);
    const float64x2_t num = vmulq_f64(vmulq_f64(vmulq_f64(n0, n1), d), vsubq_f64(n, d));
    const float64x2_t den =
        vbslq_f64(multi, vmulq_f64(vmulq_f64(n, n), vsubq_f64(n, one)), one);
    const float64x2_t term = vreinterpretq_f64_u64(
        vandq_u64(vreinterpretq_u64_f64(vdivq_f64(num, den)), multi));
    acc_v = vaddq_f64(acc_v, vmulq_f64(vmulq_f64(wj, wj), term));
  }

  LogrankSums out{vgetq_lane_f64(acc_u, 0) + vgetq_lane_f64(acc_u, 1),
                  vgetq_lane_f64(acc_v, 0) + vgetq_lane_f64(acc_v, 1)};
  if (n_vec < n_rows) {
    const auto rest = logrank_scalar(tail_of(rows, n_vec), w.subspan(n_vec));
    out.u += rest.u;
    out.v += rest.v;
  }
  return out;
}

CoxTerms cox_terms_neon(const RiskColumns& rows, std::span<const double> w, double exp_beta) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_vec = n_rows & ~std::size_t{1};
  const float64x2_t e = vdupq_n_f64(exp_beta);
  const float64x2_t one = vdupq_n_f64(1.0);
  float64x2_t acc_s = vdupq_n_f64(0.0);
  float64x2_t acc_i = vdupq_n_f64(0.0);

  for (std::size_t j = 0; j < n_vec; j += 2) {
    const float64x2_t n0 = vld1q_f64(rows.at_risk0.data() + j);
    const float64x2_t r1 = vmulq_f64(vld1q_f64(rows.at_risk1.data() + j), e);
    const float64x2_t d1 = vld1q_f64(rows.events1.data() + j);
    const float64x2_t d = vaddq_f64(vld1q_f64(rows.events0.data() + j), d1);
    const float64x2_t wj = vld1q_f64(w.data() + j);
    const float64x2_t p = vdivq_f64(r1, vaddq_f64(n0, r1));
    acc_s = vaddq_f64(acc_s, vmulq_f64(wj, vsubq_f64(d1, vmulq_f64(d, p))));
    acc_i = vaddq_f64(acc_i, vmulq_f64(vmulq_f64(vmulq_f64(wj, d), p), vsubq_f64(one, p)));
  }

  CoxTerms out{vgetq_lane_f64(acc_s, 0) + vgetq_lane_f64(acc_s, 1),
               vgetq_lane_f64(acc_i, 0) + vgetq_lane_f64(acc_i, 1)};
  if (n_vec < n_rows) {
    const auto rest = cox_terms_scalar(tail_of(rows, n_vec), w.subspan(n_vec), exp_beta);
    out.score += rest.score;
    out.information += rest.information;
  }
  return out;
}

#else

bool cpu_has_neon() noexcept { return false; }

LogrankSums logrank_neon(const RiskColumns& rows, std::span<const double> w) {
  return logrank_scalar(rows, w);
}
CoxTerms cox_terms_neon(const RiskColumns& rows, std::span<const double> w, double e) {
  return cox_terms_scalar(rows, w, e);
}

#endif

}  // namespace nphsurv::kernels::detail
