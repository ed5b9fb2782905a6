#include "rsofdm/optimizer.hpp"

#include <cmath>
#include <random>

#include "rsofdm/errors.hpp"

namespace rsofdm {

RVector allocate_shares(const RVector& common_decodable, const RVector& private_totals,
                        const RVector& r_min) {
  const Eigen::Index users = common_decodable.size();
  if (users == 0) return {};
  const double total = std::max(common_decodable.minCoeff(), 0.0);
  RVector deficit = RVector::Zero(users);
  if (r_min.size() == users) deficit = (r_min - private_totals).cwiseMax(0.0);
  const double need = deficit.sum();
  if (need >= total) {
    // QoS cannot be met from the common stream; scale down the deficits.
    return need > 0.0 ? RVector(deficit * (total / need)) : RVector(RVector::Zero(users));
  }
  return deficit.array() + (total - need) / static_cast<double>(users);
}

namespace {

RateReport report_for(const SchemeLayout& layout, const LinkBank& links,
                      const PrecoderState& state, double noise, const RVector& r_min) {
  RateReport r = evaluate_rates(layout, links, state, noise);
  if (layout.kind() != SchemeKind::rsma) return r;
  const RVector shares = allocate_shares(r.common_decodable, r.private_totals, r_min);
  return evaluate_rates(layout, links, state, noise, shares);
}

bool meets_qos(const RateReport& r, const RVector& r_min) {
  return (r.per_user_total.array() >= r_min.array() - 1e-9).all();
}

AoResult run_once(const SchemeLayout& layout, const LinkBank& links, double total_power,
                  double noise, const RVector& r_min, const AoOptions& opts,
                  PrecoderState state) {
  const bool rsma = layout.kind() == SchemeKind::rsma;
  const double ln2 = std::log(2.0);
  AoResult res;
  res.report = report_for(layout, links, state, noise, r_min);
  res.trace.push_back(res.report.sum_rate);
  double beta = opts.extrapolation;

  // Projects a candidate onto the power budget and keeps it only when it
  // raises the sum rate without breaking a minimum rate.
  const auto try_point = [&](const RVector& amplitudes) {
    PrecoderState cand = state;
    cand.amplitudes = amplitudes.cwiseAbs();
    const double p = cand.power();
    if (p > total_power) cand.amplitudes *= std::sqrt(total_power / p);
    RateReport rep = report_for(layout, links, cand, noise, r_min);
    if (!(rep.sum_rate > res.report.sum_rate && meets_qos(rep, r_min))) return false;
    state = std::move(cand);
    res.report = std::move(rep);
    return true;
  };
  // Squared extrapolation over pairs of steps: anchor -> mid -> current.
  RVector anchor = state.amplitudes;
  RVector mid;
  int in_cycle = 0;
  // Anderson history: images g_i = G(x_i) and residuals f_i = g_i - x_i of
  // the last few subproblem maps.
  std::vector<RVector> hist_g;
  std::vector<RVector> hist_f;

  for (int it = 1; it <= opts.max_iter; ++it) {
    const EqualizerWeightState weights = mmse_update(layout, links, state, noise);
    const PrecoderStepParams params = precoder_step_params(layout, links, weights, noise);
    const bool with_shares = rsma && res.report.common_decodable.minCoeff() > 1e-12;
    const Subproblem sub =
        rsma ? assemble_rsma_subproblem(layout, links, params, total_power, r_min, with_shares)
             : assemble_noma_subproblem(layout, links, params, total_power, r_min);

    RVector warm(sub.problem.dim());
    warm.head(sub.amplitudes) = state.amplitudes;
    if (sub.shares > 0) warm.tail(sub.shares) = ln2 * res.report.share_totals;

    const QcqpSolution sol = solve(sub.problem, warm, opts.qcqp);
    if (sol.status == QcqpStatus::infeasible) {
      throw Infeasible(sub.problem.name(static_cast<std::size_t>(std::max(sol.violated, 0))));
    }
    const RVector before = state.amplitudes;
    state.amplitudes = sol.x.head(sub.amplitudes).cwiseAbs();
    const double power = state.power();
    if (power > total_power) state.amplitudes *= std::sqrt(total_power / power);

    const double previous = res.report.sum_rate;
    res.report = report_for(layout, links, state, noise, r_min);

    bool anderson_taken = false;
    if (opts.anderson > 0) {
      hist_g.push_back(state.amplitudes);
      hist_f.push_back(state.amplitudes - before);
      if (static_cast<int>(hist_g.size()) > opts.anderson + 1) {
        hist_g.erase(hist_g.begin());
        hist_f.erase(hist_f.begin());
      }
      const int m = static_cast<int>(hist_g.size()) - 1;
      if (m >= 1) {
        RMatrix df(state.amplitudes.size(), m);
        RMatrix dg(state.amplitudes.size(), m);
        for (int j = 0; j < m; ++j) {
          df.col(j) = hist_f[j + 1] - hist_f[j];
          dg.col(j) = hist_g[j + 1] - hist_g[j];
        }
        const RMatrix gram = df.transpose() * df;
        const double ridge = 1e-10 * std::max(gram.trace(), 1e-300);
        const RVector gamma = (gram + ridge * RMatrix::Identity(m, m)).ldlt().solve(df.transpose() * hist_f.back());
        if (gamma.allFinite()) anderson_taken = try_point(hist_g.back() - dg * gamma);
      }
    }
    // Over-relaxed steps along the last update: keep doubling the factor
    // while the sum rate improves.
    if (beta > 0.0 && !anderson_taken) {
      bool accepted = false;
      const RVector base = state.amplitudes;
      const RVector step = base - before;
      for (double b = beta; b <= opts.max_extrapolation; b *= 2.0) {
        if (!try_point(base + b * step)) break;
        beta = b;
        accepted = true;
      }
      beta = accepted ? std::min(2.0 * beta, opts.max_extrapolation)
                      : std::max(0.5 * beta, 0.25 * opts.extrapolation);
    }
    if (opts.squarem) {
      if (++in_cycle == 1) {
        mid = state.amplitudes;
      } else {
        const RVector r = mid - anchor;
        const RVector v = state.amplitudes - 2.0 * mid + anchor;
        const double vn = v.norm();
        if (vn > 0.0) {
          double alpha = std::min(-1.0, -r.norm() / vn);
          for (int back = 0; back < 6 && alpha < -1.0; ++back) {
            if (try_point(anchor - 2.0 * alpha * r + alpha * alpha * v)) break;
            alpha = 0.5 * (alpha - 1.0);
          }
        }
        anchor = state.amplitudes;
        in_cycle = 0;
      }
    }
    res.trace.push_back(res.report.sum_rate);
    res.iterations = it;
    res.kkt_residual = sol.kkt_residual;
    if (std::abs(res.report.sum_rate - previous) < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.precoder = std::move(state);
  return res;
}

}  // namespace

AoResult alternating_optimization(const SchemeLayout& layout, const LinkBank& links,
                                  double total_power, double noise, const RVector& r_min_in,
                                  const AoOptions& opts, const std::optional<PrecoderState>& start) {
  if (!(total_power >= 0.0)) throw InvalidInput("total power must be non-negative");
  if (!(noise > 0.0)) throw InvalidInput("noise power must be positive");
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.restarts < 1) throw InvalidInput("bad AO options");
  const RVector r_min = r_min_in.size() == 0 ? RVector(RVector::Zero(layout.users())) : r_min_in;
  if (r_min.size() != layout.users()) throw InvalidDimension("one minimum rate per user expected");

  if (total_power == 0.0) {
    AoResult res;
    res.precoder = PrecoderState::zeros(layout);
    res.report = report_for(layout, links, res.precoder, noise, r_min);
    res.trace = {res.report.sum_rate};
    res.iterations = 1;
    res.converged = true;
    if ((r_min.array() > 0.0).any()) throw Infeasible("minimum rate with zero power");
    return res;
  }

  PrecoderState init = start ? *start : initialize(layout, links, total_power, noise, opts.init);
  if (init.amplitudes.size() != layout.variable_count()) throw InvalidDimension("start does not match layout");

  if (layout.kind() == SchemeKind::ofdma) {
    AoResult res;
    res.precoder = init;
    res.report = report_for(layout, links, init, noise, r_min);
    res.trace = {res.report.sum_rate};
    res.converged = true;
    return res;
  }

  AoResult best = run_once(layout, links, total_power, noise, r_min, opts, init);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  for (int r = 1; r < opts.restarts; ++r) {
    PrecoderState perturbed = init;
    for (Eigen::Index i = 0; i < perturbed.amplitudes.size(); ++i) {
      perturbed.amplitudes[i] = std::sqrt(perturbed.amplitudes[i] * perturbed.amplitudes[i] * jitter(rng) +
                                          0.05 * total_power / perturbed.amplitudes.size());
    }
    const double power = perturbed.power();
    if (power > 0.0) perturbed.amplitudes *= std::sqrt(total_power / power);
    AoResult candidate = run_once(layout, links, total_power, noise, r_min, opts, perturbed);
    if (candidate.report.sum_rate > best.report.sum_rate) best = std::move(candidate);
  }
  return best;
}

}  // namespace rsofdm
