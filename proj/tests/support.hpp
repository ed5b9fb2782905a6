#pragma once

// Independent oracles for the tests: everything here is rebuilt from loops
// and textbook definitions instead of the library's own operators.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rsofdm/schemes.hpp"

namespace oracle {

using rsofdm::CMatrix;
using rsofdm::CVector;
using rsofdm::RMatrix;
using rsofdm::RVector;
using cd = std::complex<double>;
using Rng = std::mt19937_64;

constexpr double kPi = std::numbers::pi;

inline CMatrix dft(int n) {
  CMatrix f(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      f(a, b) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * kPi * double(a) * b / n);
  return f;
}

/// Frame length x n: prefix then body of one symbol placed at `start`.
inline RMatrix cp_add(int frame, int n, int c, int start) {
  RMatrix a = RMatrix::Zero(frame, n);
  for (int i = 0; i < c; ++i) a(start + i, n - c + i) = 1.0;
  for (int i = 0; i < n; ++i) a(start + c + i, i) = 1.0;
  return a;
}

inline RMatrix cp_remove(int frame, int n, int c, int start) {
  RMatrix b = RMatrix::Zero(n, frame);
  for (int i = 0; i < n; ++i) b(i, start + c + i) = 1.0;
  return b;
}

/// Transmit chain A F^H and receive chain F B of slot `slot` (0 = private).
struct Chain {
  CMatrix tx;
  CMatrix rx;
};

inline Chain chain(const rsofdm::WaveformConfig& wf, int slot) {
  const int frame = wf.cp_len + wf.n_private;
  if (slot == 0) {
    const CMatrix f = dft(wf.n_private);
    return {cp_add(frame, wf.n_private, wf.cp_len, 0).cast<cd>() * f.adjoint(),
            f * cp_remove(frame, wf.n_private, wf.cp_len, 0).cast<cd>()};
  }
  const CMatrix f = dft(wf.n_common);
  const int start = (slot - 1) * (wf.cp_len + wf.n_common);
  return {cp_add(frame, wf.n_common, wf.cp_len, start).cast<cd>() * f.adjoint(),
          f * cp_remove(frame, wf.n_common, wf.cp_len, start).cast<cd>()};
}

/// sum_l alpha_l Pi^{n_l} Delta(nu_l) with Pi the forward cyclic shift
/// (ones on the sub-diagonal and in the top-right corner).
inline CMatrix time_channel(const std::vector<rsofdm::Path>& paths, int n, int c, double fs) {
  const int len = n + c;
  CMatrix pi = CMatrix::Zero(len, len);
  for (int i = 0; i < len; ++i) pi((i + 1) % len, i) = 1.0;
  CMatrix h = CMatrix::Zero(len, len);
  for (const auto& p : paths) {
    const int shift = int(std::floor(p.delay * fs + 1e-9));
    CMatrix pw = CMatrix::Identity(len, len);
    for (int s = 0; s < shift; ++s) pw = pi * pw;
    CMatrix delta = CMatrix::Zero(len, len);
    for (int i = 0; i < len; ++i) delta(i, i) = std::polar(1.0, 2.0 * kPi * p.doppler * (i + 1) / fs);
    h += p.gain * pw * delta;
  }
  return h;
}

/// G = F_rx B_rx H A_tx F_tx^H from the oracle chains.
inline CMatrix link(const CMatrix& h, const rsofdm::WaveformConfig& wf, int rx, int tx) {
  return chain(wf, rx).rx * h * chain(wf, tx).tx;
}

struct RowPowers {
  RVector total;
  RVector interference;
};

/// T and I of step `step` of `user`, summed term by term from the oracle
/// link matrices.
inline RowPowers step_powers(const rsofdm::SchemeLayout& layout, const rsofdm::WaveformConfig& wf,
                             const CMatrix& h, const rsofdm::PrecoderState& st, double noise,
                             int user, int step) {
  const auto& ds = layout.steps(user).at(step);
  const auto& s = layout.stream(ds.stream);
  const CMatrix gss = link(h, wf, s.numerology.slot, s.numerology.slot);
  RowPowers out{RVector::Zero(s.size), RVector::Zero(s.size)};
  for (int q = 0; q < s.size; ++q) {
    double self = 0.0;
    for (int j = 0; j < s.size; ++j) {
      if (j == q) continue;
      const double p = st.amplitudes(s.offset + j);
      self += std::norm(gss(q, j)) * p * p;
    }
    double cross = 0.0;
    for (int t : ds.interferers) {
      const auto& ts = layout.stream(t);
      const CMatrix gst = link(h, wf, s.numerology.slot, ts.numerology.slot);
      for (int j = 0; j < ts.size; ++j) {
        const double p = st.amplitudes(ts.offset + j);
        cross += std::norm(gst(q, j)) * p * p;
      }
    }
    const double desired = std::norm(gss(q, q) * st.amplitudes(s.offset + q));
    out.interference(q) = self + cross + noise;
    out.total(q) = desired + out.interference(q);
  }
  return out;
}

/// Random path set: `paths` taps at integer sample delays <= cp, Rayleigh
/// gains, Dopplers uniform in [-fd, fd].
inline std::vector<rsofdm::Path> random_paths(Rng& rng, int paths, int cp, double fs, double fd) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5 / paths));
  std::uniform_int_distribution<int> d(0, cp);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<rsofdm::Path> out(paths);
  for (int l = 0; l < paths; ++l) {
    out[l].gain = {g(rng), g(rng)};
    out[l].delay = l == 0 ? 0.0 : (d(rng) + 0.5) / fs;
    out[l].doppler = fd * u(rng);
  }
  return out;
}

inline std::vector<rsofdm::ChannelRealization> random_channels(Rng& rng,
                                                               const rsofdm::WaveformConfig& wf,
                                                               int users, double fd,
                                                               int paths = 4) {
  std::vector<rsofdm::ChannelRealization> out;
  for (int k = 0; k < users; ++k)
    out.push_back(rsofdm::make_realization(random_paths(rng, paths, wf.cp_len, wf.sample_rate, fd),
                                           wf, k));
  return out;
}

/// Uniform random amplitudes rescaled to total power `power`.
inline rsofdm::PrecoderState random_state(Rng& rng, const rsofdm::SchemeLayout& layout,
                                          double power) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  auto st = rsofdm::PrecoderState::zeros(layout);
  for (int i = 0; i < st.amplitudes.size(); ++i) st.amplitudes(i) = u(rng);
  st.amplitudes *= std::sqrt(power / st.power());
  return st;
}

/// Toy numerologies with M = 2 common symbols: N_p = 8, N_c = 4, C = 2.
inline rsofdm::WaveformConfig toy_waveform() {
  return rsofdm::WaveformConfig::make(8, 4, 2, 2.1e6);
}

}  // namespace oracle
