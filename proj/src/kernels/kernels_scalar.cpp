#include "nphsurv/kernels.hpp"

namespace nphsurv::kernels::detail {

LogrankSums logrank_scalar(const RiskColumns& rows, std::span<const double> w) {
  LogrankSums out;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double n0 = rows.at_risk0[j];
    const double n1 = rows.at_risk1[j];
    const double d0 = rows.events0[j];
    const double n = n0 + n1;
    const double d = d0 + rows.events1[j];
    out.u += w[j] * (d0 - d * n0 / n);
    if (n > 1.0) {
      out.v += w[j] * w[j] * (n0 * n1 * d * (n - d) / (n * n * (n - 1.0)));
    }
  }
  return out;
}

CoxTerms cox_terms_scalar(const RiskColumns& rows, std::span<const double> w, double e) {
  CoxTerms out;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const double r1 = rows.at_risk1[j] * e;
    const double p = r1 / (rows.at_risk0[j] + r1);
    const double d = rows.events0[j] + rows.events1[j];
    out.score += w[j] * (rows.events1[j] - d * p);
    out.information += w[j] * d * p * (1.0 - p);
  }
  return out;
}

}  // namespace nphsurv::kernels::detail
