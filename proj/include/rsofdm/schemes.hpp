#pragma once

// Per-subcarrier received-power, SINR and rate chains for OFDMA, OFDM-NOMA and
// OFDM-RSMA over the exact matrix signal model, plus water-filling and the
// orthogonal initial allocation.
//
// Every scheme is described by a SchemeLayout: a list of streams (each owned
// by a user or common to all, each on one numerology) and, for every user, the
// ordered decoding chain. Decoding stream s at user k sees
//
//   T = |G_ss(q,q) p_{s,q}|^2 + sum_{j != q} |G_ss(q,j)|^2 p_{s,j}^2
//       + sum_{t in interferers} sum_j |G_st(q,j)|^2 p_{t,j}^2 + sigma^2
//
// with G_st = F_s B_s H_k A_t F_t^H, and I = T - |G_ss(q,q) p_{s,q}|^2.

#include <optional>
#include <string>
#include <vector>

#include "rsofdm/channel.hpp"

namespace rsofdm {

enum class SchemeKind { ofdma, noma, rsma };

std::string to_string(SchemeKind kind);

inline constexpr int kCommonOwner = -1;

struct Stream {
  int owner = kCommonOwner;  // user index, or kCommonOwner
  Numerology numerology;
  int offset = 0;  // first amplitude variable of this stream
  int size = 0;    // subcarriers

  bool is_common() const { return owner == kCommonOwner; }
};

struct DecodeStep {
  int stream = 0;
  /// Streams still superimposed on the received signal, excluding `stream`.
  std::vector<int> interferers;
};

class SchemeLayout {
 public:
  /// Each user gets one private-numerology stream (wide = false) or one
  /// stream per common-numerology symbol (wide = true). No SIC.
  static SchemeLayout ofdma(const WaveformConfig& wf, int users, bool wide = false);

  /// Superposed user streams with a frame-wide SIC order. decode_order[0] is
  /// decoded first. The first `wide_users` entries of the order transmit on
  /// the common numerology, the rest on the private one.
  static SchemeLayout noma(const WaveformConfig& wf, std::vector<int> decode_order,
                           int wide_users = 0);

  /// One common stream per common-numerology symbol plus one private stream
  /// per user. Every user decodes all common symbols first.
  static SchemeLayout rsma(const WaveformConfig& wf, int users);

  SchemeKind kind() const { return kind_; }
  int users() const { return users_; }
  const WaveformConfig& waveform() const { return wf_; }
  const std::vector<Stream>& streams() const { return streams_; }
  const Stream& stream(int s) const { return streams_.at(s); }
  const std::vector<DecodeStep>& steps(int user) const { return steps_.at(user); }
  const std::vector<int>& decode_order() const { return decode_order_; }

  int variable_count() const { return variables_; }
  std::vector<int> own_streams(int user) const;
  std::vector<int> common_streams() const;
  /// N_k: subcarriers over all streams owned by `user`.
  int own_subcarriers(int user) const;
  /// M * N_c for RSMA, zero otherwise.
  int common_subcarriers() const;

 private:
  SchemeLayout(SchemeKind kind, const WaveformConfig& wf, int users);
  int add_stream(int owner, Numerology nu);

  SchemeKind kind_;
  WaveformConfig wf_;
  int users_;
  int variables_ = 0;
  std::vector<Stream> streams_;
  std::vector<std::vector<DecodeStep>> steps_;
  std::vector<int> decode_order_;
};

/// Effective link matrices G = F_rx B_rx H_k A_tx F_tx^H of every user for
/// every numerology pair, with their elementwise energies |G|^2.
class LinkBank {
 public:
  using EnergyMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  LinkBank(std::span<const ChannelRealization> channels, const OperatorSet& ops);

  int users() const { return static_cast<int>(gain_.size()); }
  const OperatorSet& operators() const { return *ops_; }
  const CMatrix& gain(int user, Numerology rx, Numerology tx) const;
  const EnergyMatrix& energy(int user, Numerology rx, Numerology tx) const;
  /// Diagonal CFR h_k of a numerology.
  CVector diagonal(int user, Numerology nu) const;

 private:
  int index(Numerology rx, Numerology tx) const;

  const OperatorSet* ops_;
  int slots_;
  std::vector<std::vector<CMatrix>> gain_;
  std::vector<std::vector<EnergyMatrix>> energy_;
};

/// Real non-negative amplitudes of every stream, stacked in layout order.
struct PrecoderState {
  SchemeKind scheme = SchemeKind::ofdma;
  RVector amplitudes;

  double power() const { return amplitudes.squaredNorm(); }
  auto stream_amp(const SchemeLayout& layout, int s) const {
    const Stream& st = layout.stream(s);
    return amplitudes.segment(st.offset, st.size);
  }
  /// N_p x K matrix P of private-numerology user streams (zero column for a
  /// user without one).
  RMatrix private_amp(const SchemeLayout& layout) const;
  /// M x N_c matrix P_c of common streams (empty unless RSMA).
  RMatrix common_amp(const SchemeLayout& layout) const;

  static PrecoderState zeros(const SchemeLayout& layout);
  /// Builds a state from P (N_p x K) and P_c (M x N_c). Streams on the common
  /// numerology owned by users are not addressable this way.
  static PrecoderState from_matrices(const SchemeLayout& layout, const RMatrix& p,
                                     const RMatrix& p_c);
};

struct StepPowers {
  int stream = 0;
  CVector diag_gain;  // G_ss(q,q)
  CVector signal;     // G_ss(q,q) p_{s,q}, the coefficient v_{q,q}
  RVector total;      // T
  RVector interference;  // I
};

/// powers[k][i] belongs to layout.steps(k)[i].
using PowerChain = std::vector<std::vector<StepPowers>>;

PowerChain received_powers(const SchemeLayout& layout, const LinkBank& links,
                           const PrecoderState& state, double noise);

struct PowerPair {
  double total = 0.0;
  double interference = 0.0;
};

/// T_{k,q}, I_{k,q} of user k's own stream (NOMA layout).
PowerPair noma_power(const SchemeLayout& layout, const LinkBank& links,
                     const PrecoderState& state, double noise, int user, int subcarrier);
/// T_{c,k,m,n}, I_{c,k,m,n}: user k decoding common symbol m (1-based).
PowerPair rsma_common_power(const SchemeLayout& layout, const LinkBank& links,
                            const PrecoderState& state, double noise, int user, int m,
                            int subcarrier);
/// T_{k,q}, I_{k,q} of user k's private stream after common-stream removal.
PowerPair rsma_private_power(const SchemeLayout& layout, const LinkBank& links,
                             const PrecoderState& state, double noise, int user,
                             int subcarrier);

struct RateReport {
  std::vector<RVector> private_rates;  // [k] R_{k,q} over the user's own subcarriers
  std::vector<RVector> common_rates;   // [k] R_{c,k,m,n} at index (m-1) N_c + n
  std::vector<RVector> common_shares;  // [k] C_{k,m,n}, same indexing
  RVector private_totals;              // R_k
  RVector common_decodable;            // R_{c,k}
  RVector share_totals;                // C_k
  RVector per_user_total;              // C_k + R_k
  double common_rate = 0.0;            // sum_k C_k
  double sum_rate = 0.0;
};

/// Rates of any layout. For RSMA, `share_totals` gives C_k per user; when
/// absent the decodable common rate min_k R_{c,k} is split equally. Shares are
/// spread uniformly over the common subcarriers. Throws InvalidInput when
/// explicit shares are negative or exceed min_k R_{c,k}.
RateReport evaluate_rates(const SchemeLayout& layout, const LinkBank& links,
                          const PrecoderState& state, double noise,
                          const std::optional<RVector>& share_totals = std::nullopt);

RateReport ofdma_rates(const SchemeLayout& layout, const LinkBank& links,
                       const PrecoderState& state, double noise);
RateReport noma_rates(const SchemeLayout& layout, const LinkBank& links,
                      const PrecoderState& state, double noise);
RateReport rsma_rates(const SchemeLayout& layout, const LinkBank& links,
                      const PrecoderState& state, double noise,
                      const std::optional<RVector>& share_totals = std::nullopt);

/// Classic water-filling: p_q = max(mu - 1/g_q, 0) with sum p_q = P_t, mu by
/// bisection. Non-positive gains receive zero power. Throws InvalidInput for
/// a negative budget.
RVector waterfill(const RVector& gains, double total_power);

struct InitOptions {
  /// RSMA: share of P_t spread uniformly over the common stream.
  double common_fraction = 0.1;
  /// NOMA/RSMA: share of the private budget spread uniformly over every user
  /// stream entry so the alternating optimization can leave the orthogonal
  /// starting point (a zero amplitude is a fixed point of the WMMSE update).
  double spread_fraction = 0.0;
};

/// Orthogonal subcarrier assignment to the strongest user followed by
/// water-filling. NOMA layouts mixing numerologies fall back to an equal
/// per-user budget water-filled over each user's own subcarriers.
PrecoderState initialize(const SchemeLayout& layout, const LinkBank& links,
                         double total_power, double noise, const InitOptions& opts = {});

/// Jain index (sum R)^2 / (K sum R^2). Returns 1 when every rate is zero.
double jain_fairness(const RVector& per_user_rates);

}  // namespace rsofdm
