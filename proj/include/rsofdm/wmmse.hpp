#pragma once

// MMSE equalizers, AWMSE weights and the per-row parameters of the precoder
// subproblem.
//
// For one decoded row (user k, stream s, subcarrier q) with signal coefficient
// v = G_ss(q,q) p_q and total received power T, a one-tap equalizer g gives
//
//   eps = |g|^2 T - 2 Re(g v) + 1,     zeta = u eps - log2(u).
//
// The MMSE equalizer is g = conj(v) / T, so eps = I / T, and with u = 1/eps
// the identity zeta = 1 - R holds exactly.

#include <vector>

#include "rsofdm/schemes.hpp"

namespace rsofdm {

/// g[k][i], u[k][i] belong to layout.steps(k)[i].
struct EqualizerWeightState {
  std::vector<std::vector<CVector>> g;
  std::vector<std::vector<RVector>> u;
};

/// g = conj(v) / T for every row. Throws DivisionByZero when some T is zero.
EqualizerWeightState mmse_equalizers(const PowerChain& chain);

/// Fills u = 1 / eps(g) from the equalizers already in `state`.
void mmse_weights(EqualizerWeightState& state, const PowerChain& chain);

/// Both updates at once.
EqualizerWeightState mmse_update(const SchemeLayout& layout, const LinkBank& links,
                                 const PrecoderState& precoder, double noise);

/// eps per row for arbitrary equalizers.
std::vector<std::vector<RVector>> mse(const EqualizerWeightState& state, const PowerChain& chain);

/// zeta = u eps - log2(u) per row.
std::vector<std::vector<RVector>> awmse(const EqualizerWeightState& state, const PowerChain& chain);

/// Row parameters for the precoder update. With the equalizers and weights
/// fixed, every row's AWMSE is a function of the amplitudes only:
///
///   zeta_q(p) = alpha_q (sum_t sum_j |G_st(q,j)|^2 p_{t,j}^2 + sigma^2)
///               - 2 Re(f_q) p_{s,q} + u_q - upsilon_q
///
/// with alpha = u |g|^2, f = u g G_ss(q,q). The precoder subproblem uses the
/// natural logarithm, upsilon = ln(u): that version of the AWMSE bounds
/// 1 - ln(2) R from above for every equalizer and weight, which is what makes
/// the alternating optimization monotone.
struct StepParams {
  int stream = 0;
  CVector g;
  RVector u;
  RVector alpha;
  RVector upsilon;
  CVector f;
};

struct PrecoderStepParams {
  double noise = 1.0;
  std::vector<std::vector<StepParams>> steps;  // [k][i]
};

PrecoderStepParams precoder_step_params(const SchemeLayout& layout, const LinkBank& links,
                                        const EqualizerWeightState& weights, double noise);

/// beta = diag(sqrt(alpha)) G_st for step i of user k and transmit stream t.
CMatrix beta(const PrecoderStepParams& params, const SchemeLayout& layout, const LinkBank& links,
             int user, int step, int tx_stream);

/// Row-wise composite terms at a given precoder:
///   kappa     = beta_ss(q,q) p_q            (desired, scaled by sqrt(alpha))
///   kappa_bar = sum_{j != q} |beta_ss(q,j)|^2 p_j^2   (self leakage)
///   chi       = sum_{t in interferers} sum_j |beta_st(q,j)|^2 p_{t,j}^2
struct RowTerms {
  CVector kappa;
  RVector kappa_bar;
  RVector chi;
};
std::vector<std::vector<RowTerms>> composite_terms(const PrecoderStepParams& params,
                                                   const SchemeLayout& layout,
                                                   const LinkBank& links,
                                                   const PrecoderState& precoder);

/// zeta per row (natural-log upsilon) from the parameters, evaluated directly.
std::vector<std::vector<RVector>> step_awmse(const PrecoderStepParams& params,
                                             const SchemeLayout& layout, const LinkBank& links,
                                             const PrecoderState& precoder);

}  // namespace rsofdm
