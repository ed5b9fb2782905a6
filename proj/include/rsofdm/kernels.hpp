#pragma once

// Data-parallel inner loops shared by the power chains and the subproblem
// assembly. Every kernel has a portable scalar reference and, on x86-64, an
// AVX2/FMA variant chosen once at run time.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace rsofdm::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  /// out[i] = |in[i]|^2
  void (*abs2)(std::span<const std::complex<double>> in, std::span<double> out);
  /// sum_i a[i] * b[i]
  double (*dot)(std::span<const double> a, std::span<const double> b);
  /// sum_i |z[i]|^2 * w[i]
  double (*weighted_abs2_sum)(std::span<const std::complex<double>> z,
                              std::span<const double> w);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
};

namespace scalar {
void abs2(std::span<const std::complex<double>> in, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double weighted_abs2_sum(std::span<const std::complex<double>> z,
                         std::span<const double> w);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace scalar

namespace avx2 {
/// False when the translation unit was built without x86 support.
bool compiled();
void abs2(std::span<const std::complex<double>> in, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
double weighted_abs2_sum(std::span<const std::complex<double>> z,
                         std::span<const double> w);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace avx2

/// True if the running CPU can execute the AVX2 table.
bool cpu_supports(Isa isa);

/// Table for a specific instruction set. Throws InvalidInput if unsupported.
const KernelTable& table(Isa isa);

/// Table picked at first use: the widest supported ISA, unless the
/// RSOFDM_ISA environment variable forces "scalar".
const KernelTable& active();
Isa active_isa();

std::string_view name(Isa isa);

// Convenience forwarding to the active table.
inline void abs2(std::span<const std::complex<double>> in, std::span<double> out) {
  active().abs2(in, out);
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a, b);
}
inline double weighted_abs2_sum(std::span<const std::complex<double>> z,
                                std::span<const double> w) {
  return active().weighted_abs2_sum(z, w);
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x, y);
}

}  // namespace rsofdm::kernels
