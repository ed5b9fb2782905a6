#include <cassert>

#include "rsofdm/kernels.hpp"

namespace rsofdm::kernels::scalar {

void abs2(std::span<const std::complex<double>> in, std::span<double> out) {
  assert(in.size() == out.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i].real() * in[i].real() + in[i].imag() * in[i].imag();
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double weighted_abs2_sum(std::span<const std::complex<double>> z,
                         std::span<const double> w) {
  assert(z.size() == w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += (z[i].real() * z[i].real() + z[i].imag() * z[i].imag()) * w[i];
  }
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace rsofdm::kernels::scalar
