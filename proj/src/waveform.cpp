#include "rsofdm/waveform.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rsofdm/errors.hpp"

namespace rsofdm {

namespace {

void check_cp(int n, int c) {
  if (n < 1 || c < 0 || c >= n) {
    throw InvalidDimension("cyclic prefix " + std::to_string(c) +
                           " must satisfy 0 <= c < n = " + std::to_string(n));
  }
}

void check_symbol_index(const WaveformConfig& cfg, int m) {
  if (m < 1 || m > cfg.common_symbols()) {
    throw InvalidIndex("common symbol index " + std::to_string(m) + " outside 1.." +
                       std::to_string(cfg.common_symbols()));
  }
}

int common_offset(const WaveformConfig& cfg, int m) {
  return (m - 1) * (cfg.cp_len + cfg.n_common);
}

}  // namespace

WaveformConfig WaveformConfig::make(int n_private, int n_common, int cp_len,
                                    double sample_rate) {
  if (n_private < 1 || n_common < 1) throw InvalidDimension("subcarrier counts must be >= 1");
  WaveformConfig cfg;
  cfg.n_private = n_private;
  cfg.n_common = n_common;
  cfg.cp_len = cp_len;
  cfg.sample_rate = sample_rate;
  cfg.scs_private = sample_rate / n_private;
  cfg.scs_common = sample_rate / n_common;
  cfg.validate();
  return cfg;
}

void WaveformConfig::validate() const {
  if (n_common < 1 || n_private < n_common) {
    throw InvalidDimension("need N_p >= N_c >= 1, got N_p=" + std::to_string(n_private) +
                           " N_c=" + std::to_string(n_common));
  }
  if (cp_len < 0 || cp_len >= n_common) {
    throw InvalidDimension("need 0 <= C < N_c, got C=" + std::to_string(cp_len));
  }
  if (!(sample_rate > 0.0)) throw InvalidInput("sample rate must be positive");
  const auto close = [this](double bw) {
    return std::abs(bw - sample_rate) <= 1e-9 * sample_rate;
  };
  if (!close(scs_private * n_private) || !close(scs_common * n_common)) {
    throw InvalidInput("subcarrier spacing times subcarrier count must equal the sample rate");
  }
}

CMatrix dft_matrix(int n) {
  if (n < 1) throw InvalidDimension("DFT size must be >= 1");
  CMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      // Reduce a*b mod n first so the phase argument stays small.
      const long long k = (static_cast<long long>(a) * b) % n;
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / n;
      f(a, b) = std::polar(scale, phase);
    }
  }
  return f;
}

RMatrix cp_add_matrix(int n, int c) {
  check_cp(n, c);
  RMatrix a = RMatrix::Zero(c + n, n);
  for (int i = 0; i < c; ++i) a(i, n - c + i) = 1.0;
  for (int i = 0; i < n; ++i) a(c + i, i) = 1.0;
  return a;
}

RMatrix cp_remove_matrix(int n, int c) {
  check_cp(n, c);
  RMatrix b = RMatrix::Zero(n, c + n);
  for (int i = 0; i < n; ++i) b(i, c + i) = 1.0;
  return b;
}

RMatrix cp_add_common(const WaveformConfig& cfg, int m) {
  check_symbol_index(cfg, m);
  RMatrix a = RMatrix::Zero(cfg.frame_len(), cfg.n_common);
  a.middleRows(common_offset(cfg, m), cfg.cp_len + cfg.n_common) =
      cp_add_matrix(cfg.n_common, cfg.cp_len);
  return a;
}

RMatrix cp_remove_common(const WaveformConfig& cfg, int m) {
  check_symbol_index(cfg, m);
  RMatrix b = RMatrix::Zero(cfg.n_common, cfg.frame_len());
  b.middleCols(common_offset(cfg, m), cfg.cp_len + cfg.n_common) =
      cp_remove_matrix(cfg.n_common, cfg.cp_len);
  return b;
}

CVector add_cyclic_prefix(const CVector& symbol, int c) {
  const int n = static_cast<int>(symbol.size());
  check_cp(n, c);
  CVector out(c + n);
  out.head(c) = symbol.tail(c);
  out.tail(n) = symbol;
  return out;
}

CVector remove_cyclic_prefix(const CVector& samples, int c) {
  const int n = static_cast<int>(samples.size()) - c;
  check_cp(n, c);
  return samples.tail(n);
}

CVector place_common_symbol(const WaveformConfig& cfg, int m, const CVector& symbol) {
  check_symbol_index(cfg, m);
  if (symbol.size() != cfg.n_common) throw InvalidDimension("common symbol length mismatch");
  CVector frame = CVector::Zero(cfg.frame_len());
  frame.segment(common_offset(cfg, m), cfg.cp_len + cfg.n_common) =
      add_cyclic_prefix(symbol, cfg.cp_len);
  return frame;
}

CVector extract_common_symbol(const WaveformConfig& cfg, int m, const CVector& frame) {
  check_symbol_index(cfg, m);
  if (frame.size() != cfg.frame_len()) throw InvalidDimension("frame length mismatch");
  return frame.segment(common_offset(cfg, m) + cfg.cp_len, cfg.n_common);
}

OperatorSet::OperatorSet(const WaveformConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  dft_private_ = dft_matrix(cfg_.n_private);
  dft_common_ = dft_matrix(cfg_.n_common);
  cp_add_private_ = cp_add_matrix(cfg_.n_private, cfg_.cp_len);
  cp_remove_private_ = cp_remove_matrix(cfg_.n_private, cfg_.cp_len);
  const int symbols = cfg_.common_symbols();
  for (int m = 1; m <= symbols; ++m) {
    cp_add_common_.push_back(rsofdm::cp_add_common(cfg_, m));
    cp_remove_common_.push_back(rsofdm::cp_remove_common(cfg_, m));
  }

  transmit_.push_back(cp_add_private_.cast<cd>() * dft_private_.adjoint());
  receive_.push_back(dft_private_ * cp_remove_private_.cast<cd>());
  for (int m = 0; m < symbols; ++m) {
    transmit_.push_back(cp_add_common_[m].cast<cd>() * dft_common_.adjoint());
    receive_.push_back(dft_common_ * cp_remove_common_[m].cast<cd>());
  }
}

void OperatorSet::check(Numerology nu) const {
  if (nu.slot < 0 || nu.slot > common_symbols()) {
    throw InvalidIndex("numerology slot " + std::to_string(nu.slot) + " outside 0.." +
                       std::to_string(common_symbols()));
  }
}

const RMatrix& OperatorSet::cp_add_common(int m) const {
  check_symbol_index(cfg_, m);
  return cp_add_common_[m - 1];
}

const RMatrix& OperatorSet::cp_remove_common(int m) const {
  check_symbol_index(cfg_, m);
  return cp_remove_common_[m - 1];
}

int OperatorSet::size(Numerology nu) const {
  check(nu);
  return nu.is_private() ? cfg_.n_private : cfg_.n_common;
}

const CMatrix& OperatorSet::transmit(Numerology nu) const {
  check(nu);
  return transmit_[nu.slot];
}

const CMatrix& OperatorSet::receive(Numerology nu) const {
  check(nu);
  return receive_[nu.slot];
}

std::vector<Numerology> OperatorSet::numerologies() const {
  std::vector<Numerology> out{Numerology::private_frame()};
  for (int m = 1; m <= common_symbols(); ++m) out.push_back(Numerology::common_symbol(m));
  return out;
}

}  // namespace rsofdm
