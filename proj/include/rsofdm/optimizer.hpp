#pragma once

// Alternating optimization of equalizers/weights and precoders for the
// NOMA and RSMA layouts. OFDMA layouts return their initial allocation.

#include <cstdint>
#include <optional>
#include <vector>

#include "rsofdm/subproblem.hpp"

namespace rsofdm {

struct AoOptions {
  double tol = 1e-4;  // bit/s/Hz
  int max_iter = 200;
  int restarts = 1;   // extra starts perturb the initial amplitudes
  std::uint64_t seed = 0;
  // Initial and largest over-relaxation factor of the accelerated step;
  // 0 turns acceleration off.
  double extrapolation = 1.0;
  double max_extrapolation = 8.0;
  // Squared extrapolation (SQUAREM) every second step, with the same
  // keep-only-if-better safeguard.
  bool squarem = true;
  // Depth of the Anderson mixing history; 0 turns it off.
  int anderson = 5;
  InitOptions init;
  QcqpOptions qcqp;
};

struct AoResult {
  PrecoderState precoder;
  RateReport report;
  std::vector<double> trace;  // SR at iteration 0, 1, ...
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;  // of the last subproblem
};

/// Shares C_k for the given common decodability: deficits max(0, R_k^min - R_k)
/// first, the rest of min_k R_{c,k} split equally.
RVector allocate_shares(const RVector& common_decodable, const RVector& private_totals,
                        const RVector& r_min);

/// Throws Infeasible naming the violated constraint when a subproblem has no
/// feasible point. An empty r_min means zero for every user.
AoResult alternating_optimization(const SchemeLayout& layout, const LinkBank& links,
                                  double total_power, double noise, const RVector& r_min = {},
                                  const AoOptions& opts = {},
                                  const std::optional<PrecoderState>& start = std::nullopt);

}  // namespace rsofdm
