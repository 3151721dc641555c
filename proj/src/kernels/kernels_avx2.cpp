#include "nphsurv/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define NPHSURV_X86 1
#include <immintrin.h>
#else
#define NPHSURV_X86 0
#endif

namespace nphsurv::kernels::detail {

#if NPHSURV_X86

bool cpu_has_avx2() noexcept { return __builtin_cpu_supports("avx2"); }

namespace {

__attribute__((target("avx2"))) inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

__attribute__((target("avx2"))) LogrankSums logrank_avx2(const RiskColumns& rows,
                                                         std::span<const double> w) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_vec = n_rows & ~std::size_t{3};
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc_u = _mm256_setzero_pd();
  __m256d acc_v = _mm256_setzero_pd();

  for (std::size_t j = 0; j < n_vec; j += 4) {
    const __m256d n0 = _mm256_loadu_pd(rows.at_risk0.data() + j);
    const __m256d n1 = _mm256_loadu_pd(rows.at_risk1.data() + j);
    const __m256d d0 = _mm256_loadu_pd(rows.events0.data() + j);
    const __m256d d1 = _mm256_loadu_pd(rows.events1.data() + j);
    const __m256d wj = _mm256_loadu_pd(w.data() + j);
    const __m256d n = _mm256_add_pd(n0, n1);
    const __m256d d = _mm256_add_pd(d0, d1);

    const __m256d expected = _mm256_div_pd(_mm256_mul_pd(d, n0), n);
    acc_u = _mm256_add_pd(acc_u, _mm256_mul_pd(wj, _mm256_sub_pd(d0, expected)));

    const __m256d multi = _mm256_cmp_pd(n, one, _CMP_GT_OQ);
    const __m256d num = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(n0, n1), d),
                                      _mm256_sub_pd(n, d));
    const __m256d den = _mm256_blendv_pd(
        one, _mm256_mul_pd(_mm256_mul_pd(n, n), _mm256_sub_pd(n, one)), multi);
    const __m256d term = _mm256_and_pd(_mm256_div_pd(num, den), multi);
    acc_v = _mm256_add_pd(acc_v, _mm256_mul_pd(_mm256_mul_pd(wj, wj), term));
  }

  LogrankSums out{hsum(acc_u), hsum(acc_v)};
  if (n_vec < n_rows) {
    const RiskColumns tail{rows.at_risk0.subspan(n_vec), rows.at_risk1.subspan(n_vec),
                           rows.events0.subspan(n_vec), rows.events1.subspan(n_vec)};
    const auto rest = logrank_scalar(tail, w.subspan(n_vec));
    out.u += rest.u;
    out.v += rest.v;
  }
  return out;
}

__attribute__((target("avx2"))) CoxTerms cox_terms_avx2(const RiskColumns& rows,
                                                       std::span<const double> w,
                                                       double exp_beta) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_vec = n_rows & ~std::size_t{3};
  const __m256d e = _mm256_set1_pd(exp_beta);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc_s = _mm256_setzero_pd();
  __m256d acc_i = _mm256_setzero_pd();

  for (std::size_t j = 0; j < n_vec; j += 4) {
    const __m256d n0 = _mm256_loadu_pd(rows.at_risk0.data() + j);
    const __m256d r1 = _mm256_mul_pd(_mm256_loadu_pd(rows.at_risk1.data() + j), e);
    const __m256d d1 = _mm256_loadu_pd(rows.events1.data() + j);
    const __m256d d = _mm256_add_pd(_mm256_loadu_pd(rows.events0.data() + j), d1);
    const __m256d wj = _mm256_loadu_pd(w.data() + j);
    const __m256d p = _mm256_div_pd(r1, _mm256_add_pd(n0, r1));

    acc_s = _mm256_add_pd(acc_s, _mm256_mul_pd(wj, _mm256_sub_pd(d1, _mm256_mul_pd(d, p))));
    acc_i = _mm256_add_pd(
        acc_i, _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(wj, d), p), _mm256_sub_pd(one, p)));
  }

  CoxTerms out{hsum(acc_s), hsum(acc_i)};
  if (n_vec < n_rows) {
    const RiskColumns tail{rows.at_risk0.subspan(n_vec), rows.at_risk1.subspan(n_vec),
                           rows.events0.subspan(n_vec), rows.events1.subspan(n_vec)};
    const auto rest = cox_terms_scalar(tail, w.subspan(n_vec), exp_beta);
    out.score += rest.score;
    out.information += rest.information;
  }
  return out;
}

#else

bool cpu_has_avx2() noexcept { return false; }

LogrankSums logrank_avx2(const RiskColumns& rows, std::span<const double> w) {
  return logrank_scalar(rows, w);
}
CoxTerms cox_terms_avx2(const RiskColumns& rows, std::span<const double> w, double e) {
  return cox_terms_scalar(rows, w, e);
}

#endif

}  // namespace nphsurv::kernels::detail
