#include <cstdlib>
#include <stdexcept>
#include <string>

#include "nphsurv/kernels.hpp"

namespace nphsurv::kernels {

std::string_view name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return detail::cpu_has_avx2();
    case Isa::neon: return detail::cpu_has_neon();
  }
  return false;
}

namespace {

constexpr KernelTable kScalar{Isa::scalar, detail::logrank_scalar, detail::cox_terms_scalar};
constexpr KernelTable kAvx2{Isa::avx2, detail::logrank_avx2, detail::cox_terms_avx2};
constexpr KernelTable kNeon{Isa::neon, detail::logrank_neon, detail::cox_terms_neon};

const KernelTable& select() {
  if (const char* env = std::getenv("NPHSURV_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == name(isa)) return table_for(isa);
    }
    throw std::runtime_error("NPHSURV_ISA: unknown instruction set '" + want + "'");
  }
  if (supported(Isa::avx2)) return kAvx2;
  if (supported(Isa::neon)) return kNeon;
  return kScalar;
}

}  // namespace

const KernelTable& table_for(Isa isa) {
  if (!supported(isa)) {
    throw std::runtime_error("instruction set not available: " + std::string(name(isa)));
  }
  switch (isa) {
    case Isa::avx2: return kAvx2;
    case Isa::neon: return kNeon;
    case Isa::scalar: break;
  }
  return kScalar;
}

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace nphsurv::kernels
