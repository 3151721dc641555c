#pragma once

// Row reductions over a risk table. Each kernel has a scalar reference and
// vector variants (AVX2 on x86-64, NEON on AArch64); the variant is picked
// once at startup from the running CPU. Vector variants accumulate in
// separate lanes, so results agree with the scalar reference to rounding,
// not bit for bit. The choice is process-wide, which keeps every result
// independent of thread count.
//
// Set NPHSURV_ISA=scalar|avx2|neon to override the automatic choice.

#include <span>
#include <string_view>

#include "nphsurv/survival.hpp"

namespace nphsurv::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view name(Isa isa) noexcept;

// Column view of a risk table. All spans have the same length.
struct RiskColumns {
  std::span<const double> at_risk0;
  std::span<const double> at_risk1;
  std::span<const double> events0;
  std::span<const double> events1;

  static RiskColumns of(const RiskTable& t) {
    return {t.at_risk0(), t.at_risk1(), t.events0(), t.events1()};
  }
  std::size_t size() const noexcept { return at_risk0.size(); }
};

// U = sum w (d0 - d n0/n),  V = sum w^2 n0 n1 d (n - d) / (n^2 (n - 1)),
// rows with n <= 1 contributing nothing to V.
struct LogrankSums {
  double u = 0.0;
  double v = 0.0;
};

// Breslow partial-likelihood score and observed information for a single
// binary covariate (experimental = 1) at exp(beta):
//   p = n1 e / (n0 + n1 e),  score = sum w (d1 - d p),  info = sum w d p (1 - p).
struct CoxTerms {
  double score = 0.0;
  double information = 0.0;
};

struct KernelTable {
  Isa isa;
  LogrankSums (*logrank)(const RiskColumns& rows, std::span<const double> weights);
  CoxTerms (*cox_terms)(const RiskColumns& rows, std::span<const double> weights,
                        double exp_beta);
};

bool supported(Isa isa) noexcept;

// Kernels for a specific ISA. Throws std::runtime_error if the CPU lacks it.
const KernelTable& table_for(Isa isa);

// Best supported table, honouring NPHSURV_ISA.
const KernelTable& active();

namespace detail {
LogrankSums logrank_scalar(const RiskColumns&, std::span<const double>);
CoxTerms cox_terms_scalar(const RiskColumns&, std::span<const double>, double);
LogrankSums logrank_avx2(const RiskColumns&, std::span<const double>);
CoxTerms cox_terms_avx2(const RiskColumns&, std::span<const double>, double);
LogrankSums logrank_neon(const RiskColumns&, std::span<const double>);
CoxTerms cox_terms_neon(const RiskColumns&, std::span<const double>, double);
bool cpu_has_avx2() noexcept;
bool cpu_has_neon() noexcept;
}  // namespace detail

}  // namespace nphsurv::kernels
