#include "rsofdm/channel.hpp"

#include <cmath>
#include <numbers>

#include "rsofdm/errors.hpp"

namespace rsofdm {

void ChannelEnsembleConfig::validate() const {
  if (n_paths < 1) throw InvalidInput("channel needs at least one path");
  if (max_delay_spread < 0.0) throw InvalidInput("delay spread must be non-negative");
  if (max_doppler < 0.0) throw InvalidInput("max Doppler must be non-negative");
  if (!std::isfinite(power_decay)) throw InvalidInput("power decay must be finite");
}

void ChannelEnsembleConfig::validate(const WaveformConfig& wf) const {
  validate();
  // Throws when the largest possible delay lands beyond the prefix.
  delay_to_samples(max_delay_spread, wf.sample_rate, wf.cp_len);
}

std::vector<Path> sample_paths(const ChannelEnsembleConfig& cfg, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

  std::vector<Path> paths(cfg.n_paths);
  std::vector<double> profile(cfg.n_paths);
  double total = 0.0;
  for (int l = 0; l < cfg.n_paths; ++l) {
    profile[l] = std::pow(10.0, -cfg.power_decay * l / 10.0);
    total += profile[l];
  }
  for (int l = 0; l < cfg.n_paths; ++l) {
    Path& p = paths[l];
    const double u_delay = unit(rng);
    const double u_doppler = unit(rng);
    const double re = gauss(rng);
    const double im = gauss(rng);
    p.delay = l == 0 ? 0.0 : u_delay * cfg.max_delay_spread;
    p.doppler = cfg.max_doppler * (2.0 * u_doppler - 1.0);
    p.gain = std::sqrt(profile[l] / total) * cd(re, im);
  }
  return paths;
}

int delay_to_samples(double tau, double sample_rate, int cp_len) {
  if (tau < 0.0) throw InvalidInput("delay must be non-negative");
  // The small guard keeps exact multiples of the sample period (tau = k / f_s)
  // from rounding down.
  const int n = static_cast<int>(std::floor(tau * sample_rate + 1e-9));
  if (n > cp_len) throw DelayExceedsCp(n, cp_len);
  return n;
}

CMatrix time_domain_channel(std::span<const Path> paths, int n, int c, double sample_rate) {
  if (n < 1 || c < 0) throw InvalidDimension("invalid frame dimensions");
  const int len = n + c;
  CMatrix h = CMatrix::Zero(len, len);
  for (const Path& path : paths) {
    const int shift = delay_to_samples(path.delay, sample_rate, c);
    for (int col = 0; col < len; ++col) {
      const double phase = 2.0 * std::numbers::pi * path.doppler * (col + 1) / sample_rate;
      h((col + shift) % len, col) += path.gain * std::polar(1.0, phase);
    }
  }
  return h;
}

ChannelRealization make_realization(std::vector<Path> paths, const WaveformConfig& wf,
                                    int user_index) {
  ChannelRealization r;
  r.time_matrix = time_domain_channel(paths, wf.n_private, wf.cp_len, wf.sample_rate);
  r.paths = std::move(paths);
  r.user_index = user_index;
  return r;
}

CMatrix link_matrix(const CMatrix& time_matrix, const OperatorSet& ops, Numerology rx,
                    Numerology tx) {
  const int len = ops.config().frame_len();
  if (time_matrix.rows() != len || time_matrix.cols() != len) {
    throw InvalidDimension("time-domain channel is " + std::to_string(time_matrix.rows()) +
                           "x" + std::to_string(time_matrix.cols()) + ", frame needs " +
                           std::to_string(len));
  }
  return ops.receive(rx) * time_matrix * ops.transmit(tx);
}

CMatrix cfr(const CMatrix& time_matrix, const OperatorSet& ops, Numerology stream) {
  return link_matrix(time_matrix, ops, stream, stream);
}

CVector diag_cfr(const CMatrix& cfr_matrix) {
  if (cfr_matrix.rows() != cfr_matrix.cols()) throw InvalidDimension("CFR must be square");
  return cfr_matrix.diagonal();
}

double normalized_doppler(double max_doppler, double scs) {
  if (!(scs > 0.0)) throw InvalidInput("subcarrier spacing must be positive");
  return max_doppler / scs;
}

void apply_gain_offset(std::vector<Path>& paths, double offset_db) {
  const double scale = std::pow(10.0, offset_db / 20.0);
  for (Path& p : paths) p.gain *= scale;
}

}  // namespace rsofdm
