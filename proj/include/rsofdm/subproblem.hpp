#pragma once

// Precoder subproblems of the alternating optimization as convex QCQPs.
//
// Variables are the stacked amplitudes of every stream in layout order,
// followed for RSMA by one common-rate share per user. Shares are carried in
// nats (s_k = ln(2) C_k) so that every row's AWMSE, 1 - ln(2) R, and the share
// live on the same scale.

#include <optional>

#include "rsofdm/qcqp.hpp"
#include "rsofdm/wmmse.hpp"

namespace rsofdm {

struct Subproblem {
  QcqpProblem problem;
  int amplitudes = 0;    // leading variables
  int share_offset = -1; // first share variable, -1 when absent
  int shares = 0;
};

/// Sum of the AWMSE of every row of layout.steps(user)[step] as a quadratic
/// form in `dim` variables (amplitudes first).
QuadraticForm step_awmse_form(const PrecoderStepParams& params, const SchemeLayout& layout,
                              const LinkBank& links, int user, int step, int dim);

/// minimize sum_k w_k sum_q zeta_{k,q}
/// s.t.     sum of squared amplitudes <= P_t
///          sum_q zeta_{k,q} <= N_k - ln(2) R_k^min   (users with R_k^min > 0)
Subproblem assemble_noma_subproblem(const SchemeLayout& layout, const LinkBank& links,
                                    const PrecoderStepParams& params, double total_power,
                                    const RVector& r_min,
                                    const std::optional<RVector>& weights = std::nullopt);

/// minimize -sum_k w_k s_k + sum_k w_k sum_q zeta_{k,q}            (private rows)
/// s.t.     sum of squared amplitudes <= P_t
///          sum_{m,n} zeta^c_{k,m,n} <= M N_c - sum_j s_j        (every user k)
///          -s_k + sum_q zeta_{k,q} <= N_k - ln(2) R_k^min        (R_k^min > 0)
///          s_k >= 0
/// With `with_shares` false the share variables and the decodability rows are
/// dropped, which is the only consistent choice once no user can decode any
/// common rate.
Subproblem assemble_rsma_subproblem(const SchemeLayout& layout, const LinkBank& links,
                                    const PrecoderStepParams& params, double total_power,
                                    const RVector& r_min, bool with_shares = true,
                                    const std::optional<RVector>& weights = std::nullopt);

}  // namespace rsofdm
