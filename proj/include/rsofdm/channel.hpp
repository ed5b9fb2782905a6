#pragma once

// Doubly-dispersive multipath channel: random path sets, the time-domain frame
// matrix sum_l alpha_l Pi^{n_l} Delta(nu_l), and channel frequency responses
// for any pair of numerologies.

#include <cstdint>
#include <random>
#include <vector>

#include "rsofdm/waveform.hpp"

namespace rsofdm {

struct Path {
  cd gain{1.0, 0.0};
  double delay = 0.0;    // seconds
  double doppler = 0.0;  // Hz
};

struct ChannelEnsembleConfig {
  int n_paths = 4;
  double max_delay_spread = 2e-6;  // seconds
  double max_doppler = 0.0;        // Hz
  double power_decay = 3.0;        // dB per path
  std::uint64_t seed = 1;

  void validate() const;
  /// Additionally checks the delay spread fits inside the prefix.
  void validate(const WaveformConfig& wf) const;
};

struct ChannelRealization {
  std::vector<Path> paths;
  CMatrix time_matrix;
  int user_index = 0;
};

using Rng = std::mt19937_64;

/// Draws L paths: path 1 at delay 0, remaining delays uniform on
/// [0, max_delay_spread], Dopplers max_doppler * U[-1, 1], Rayleigh gains with
/// an exponential power-delay profile normalized to unit total mean power.
std::vector<Path> sample_paths(const ChannelEnsembleConfig& cfg, Rng& rng);

/// floor(tau * f_s). Throws DelayExceedsCp when the result exceeds cp_len.
int delay_to_samples(double tau, double sample_rate, int cp_len);

/// (n + c) x (n + c) matrix sum_l alpha_l Pi^{n_l} Delta(nu_l) with
/// Delta(nu) = diag(exp(j 2 pi nu i / f_s)), i = 1..n+c.
CMatrix time_domain_channel(std::span<const Path> paths, int n, int c, double sample_rate);

ChannelRealization make_realization(std::vector<Path> paths, const WaveformConfig& wf,
                                    int user_index);

/// F_rx B_rx H A_tx F_tx^H. With rx == tx this is the complete CFR of that
/// numerology; off-diagonal entries are inter-carrier interference.
CMatrix link_matrix(const CMatrix& time_matrix, const OperatorSet& ops, Numerology rx,
                    Numerology tx);

/// Square CFR of one numerology.
CMatrix cfr(const CMatrix& time_matrix, const OperatorSet& ops, Numerology stream);

/// Main diagonal of a CFR.
CVector diag_cfr(const CMatrix& cfr_matrix);

/// Delta d = f_d / scs.
double normalized_doppler(double max_doppler, double scs);

/// Multiplies every path gain by 10^(offset_db / 20).
void apply_gain_offset(std::vector<Path>& paths, double offset_db);

}  // namespace rsofdm
