#include <cstdlib>
#include <string>

#include "rsofdm/errors.hpp"
#include "rsofdm/kernels.hpp"

namespace rsofdm::kernels {

namespace {

constexpr KernelTable kScalar{&scalar::abs2, &scalar::dot, &scalar::weighted_abs2_sum,
                              &scalar::axpy};
constexpr KernelTable kAvx2{&avx2::abs2, &avx2::dot, &avx2::weighted_abs2_sum,
                            &avx2::axpy};

Isa select_isa() {
  if (const char* forced = std::getenv("RSOFDM_ISA")) {
    if (std::string(forced) == "scalar") return Isa::scalar;
  }
  return cpu_supports(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2::compiled() && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!cpu_supports(isa)) {
    throw InvalidInput("instruction set " + std::string(name(isa)) +
                       " is not available on this CPU");
  }
  return isa == Isa::avx2 ? kAvx2 : kScalar;
}

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& t = table(active_isa());
  return t;
}

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace rsofdm::kernels
