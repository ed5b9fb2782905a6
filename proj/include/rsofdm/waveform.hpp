#pragma once

// Deterministic linear operators of the CP-OFDM signal model: unitary DFT
// matrices and cyclic-prefix insertion/removal for single- and
// multi-numerology frames.
//
// A frame is C + N_p samples long. The private numerology fills it with one
// symbol of N_p subcarriers; the common numerology packs M symbols of N_c
// subcarriers, each carrying its own prefix, at the start of the frame.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rsofdm {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

struct WaveformConfig {
  int n_private = 35;
  int n_common = 35;
  int cp_len = 5;
  double sample_rate = 2.1e6;
  double scs_private = 60e3;
  double scs_common = 60e3;

  /// Builds a config whose subcarrier spacings follow from the single-band
  /// assumption scs * N = sample_rate. Throws InvalidDimension.
  static WaveformConfig make(int n_private, int n_common, int cp_len, double sample_rate);

  /// Throws InvalidDimension / InvalidInput when an invariant is violated.
  void validate() const;

  /// M = floor((C + N_p) / (C + N_c)).
  int common_symbols() const { return (cp_len + n_private) / (cp_len + n_common); }
  int frame_len() const { return cp_len + n_private; }
};

/// Which grid a stream lives on: slot 0 is the private numerology spanning the
/// whole frame, slot m >= 1 is the m-th symbol of the common numerology.
struct Numerology {
  int slot = 0;

  static constexpr Numerology private_frame() { return {0}; }
  static constexpr Numerology common_symbol(int m) { return {m}; }
  constexpr bool is_private() const { return slot == 0; }
  friend constexpr bool operator==(Numerology, Numerology) = default;
};

/// Unitary n-point DFT: entry (a, b) = exp(-j 2 pi a b / n) / sqrt(n).
CMatrix dft_matrix(int n);

/// (c + n) x n matrix prepending the last c samples of a symbol.
RMatrix cp_add_matrix(int n, int c);

/// n x (c + n) matrix dropping the first c samples.
RMatrix cp_remove_matrix(int n, int c);

/// (C + N_p) x N_c matrix placing common symbol m (1-based) with its prefix at
/// offset (m - 1)(C + N_c) inside the frame.
RMatrix cp_add_common(const WaveformConfig& cfg, int m);

/// N_c x (C + N_p) matrix selecting the body of common symbol m.
RMatrix cp_remove_common(const WaveformConfig& cfg, int m);

// Index-shuffling equivalents of the matrices above.
CVector add_cyclic_prefix(const CVector& symbol, int c);
CVector remove_cyclic_prefix(const CVector& samples, int c);
CVector place_common_symbol(const WaveformConfig& cfg, int m, const CVector& symbol);
CVector extract_common_symbol(const WaveformConfig& cfg, int m, const CVector& frame);

/// All materialized operators of a configuration. Immutable after build.
class OperatorSet {
 public:
  explicit OperatorSet(const WaveformConfig& cfg);

  const WaveformConfig& config() const { return cfg_; }
  int common_symbols() const { return static_cast<int>(cp_add_common_.size()); }

  const CMatrix& dft_private() const { return dft_private_; }
  const CMatrix& dft_common() const { return dft_common_; }
  const RMatrix& cp_add_private() const { return cp_add_private_; }
  const RMatrix& cp_remove_private() const { return cp_remove_private_; }
  const RMatrix& cp_add_common(int m) const;
  const RMatrix& cp_remove_common(int m) const;

  /// Subcarrier count of a numerology.
  int size(Numerology nu) const;

  /// Transmit chain A F^H of a numerology: (C + N_p) x N.
  const CMatrix& transmit(Numerology nu) const;
  /// Receive chain F B of a numerology: N x (C + N_p).
  const CMatrix& receive(Numerology nu) const;

  /// Every numerology of the frame: private first, then common symbols 1..M.
  std::vector<Numerology> numerologies() const;

 private:
  void check(Numerology nu) const;

  WaveformConfig cfg_;
  CMatrix dft_private_;
  CMatrix dft_common_;
  RMatrix cp_add_private_;
  RMatrix cp_remove_private_;
  std::vector<RMatrix> cp_add_common_;
  std::vector<RMatrix> cp_remove_common_;
  std::vector<CMatrix> transmit_;
  std::vector<CMatrix> receive_;
};

}  // namespace rsofdm
