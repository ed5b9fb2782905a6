#include <cassert>

#include "rsofdm/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define RSOFDM_X86 1
#else
#define RSOFDM_X86 0
#endif

namespace rsofdm::kernels::avx2 {

#if RSOFDM_X86

#define RSOFDM_AVX2 __attribute__((target("avx2,fma")))

namespace {

RSOFDM_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  const __m128d sh = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

// |z0|^2, |z1|^2, |z2|^2, |z3|^2 from two registers of interleaved re/im.
RSOFDM_AVX2 inline __m256d abs2_x4(const double* p) {
  const __m256d a = _mm256_loadu_pd(p);      // r0 i0 r1 i1
  const __m256d b = _mm256_loadu_pd(p + 4);  // r2 i2 r3 i3
  const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
  // hadd gives (|z0|,|z2|,|z1|,|z3|); restore element order.
  return _mm256_permute4x64_pd(h, 0b11011000);
}

}  // namespace

bool compiled() { return true; }

RSOFDM_AVX2 void abs2(std::span<const std::complex<double>> in, std::span<double> out) {
  assert(in.size() == out.size());
  const auto* src = reinterpret_cast<const double*>(in.data());
  const std::size_t n = in.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out.data() + i, abs2_x4(src + 2 * i));
  for (; i < n; ++i) out[i] = in[i].real() * in[i].real() + in[i].imag() * in[i].imag();
}

RSOFDM_AVX2 double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i + 4),
                           _mm256_loadu_pd(b.data() + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

RSOFDM_AVX2 double weighted_abs2_sum(std::span<const std::complex<double>> z,
                                     std::span<const double> w) {
  assert(z.size() == w.size());
  const auto* src = reinterpret_cast<const double*>(z.data());
  const std::size_t n = z.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(abs2_x4(src + 2 * i), _mm256_loadu_pd(w.data() + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    total += (z[i].real() * z[i].real() + z[i].imag() * z[i].imag()) * w[i];
  }
  return total;
}

RSOFDM_AVX2 void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  const std::size_t n = x.size();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y.data() + i,
                     _mm256_fmadd_pd(a, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

#else  // !RSOFDM_X86

bool compiled() { return false; }
void abs2(std::span<const std::complex<double>> in, std::span<double> out) {
  scalar::abs2(in, out);
}
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
double weighted_abs2_sum(std::span<const std::complex<double>> z, std::span<const double> w) {
  return scalar::weighted_abs2_sum(z, w);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  scalar::axpy(alpha, x, y);
}

#endif

}  // namespace rsofdm::kernels::avx2
