#include "rsofdm/subproblem.hpp"

#include <cmath>
#include <string>

#include "rsofdm/errors.hpp"
#include "rsofdm/kernels.hpp"

namespace rsofdm {

namespace {

RVector user_weights(const std::optional<RVector>& weights, int users) {
  if (!weights) return RVector::Ones(users);
  if (weights->size() != users) throw InvalidDimension("one weight per user expected");
  if ((weights->array() < 0.0).any()) throw InvalidInput("user weights must be non-negative");
  return *weights;
}

void check_inputs(const SchemeLayout& layout, const PrecoderStepParams& params,
                  double total_power, const RVector& r_min) {
  if (!(total_power >= 0.0)) throw InvalidInput("total power must be non-negative");
  if (r_min.size() != layout.users()) throw InvalidDimension("one minimum rate per user expected");
  if ((r_min.array() < 0.0).any()) throw InvalidInput("minimum rates must be non-negative");
  if (static_cast<int>(params.steps.size()) != layout.users()) {
    throw InvalidDimension("parameters do not match the layout");
  }
}

QuadraticForm power_form(int amplitudes, int dim, double total_power) {
  RVector q = RVector::Zero(dim);
  q.head(amplitudes).setOnes();
  return QuadraticForm::diagonal(q, RVector::Zero(dim), -total_power);
}

}  // namespace

QuadraticForm step_awmse_form(const PrecoderStepParams& params, const SchemeLayout& layout,
                              const LinkBank& links, int user, int step, int dim) {
  const StepParams& sp = params.steps.at(user).at(step);
  const DecodeStep& ds = layout.steps(user).at(step);
  const Stream& s = layout.stream(ds.stream);
  if (dim < layout.variable_count()) throw InvalidDimension("form too small for the layout");

  QuadraticForm f = QuadraticForm::zero(dim);
  std::vector<int> sources{ds.stream};
  sources.insert(sources.end(), ds.interferers.begin(), ds.interferers.end());
  for (int t : sources) {
    const Stream& ts = layout.stream(t);
    const auto& e = links.energy(user, s.numerology, ts.numerology);
    std::span<double> block(f.q_diag.data() + ts.offset, ts.size);
    for (int q = 0; q < s.size; ++q) {
      kernels::axpy(sp.alpha[q], {e.data() + static_cast<std::size_t>(q) * ts.size,
                                  static_cast<std::size_t>(ts.size)},
                    block);
    }
  }
  for (int q = 0; q < s.size; ++q) {
    f.c[s.offset + q] -= 2.0 * std::real(sp.f[q]);
    f.r += sp.alpha[q] * params.noise + sp.u[q] - sp.upsilon[q];
  }
  return f;
}

Subproblem assemble_noma_subproblem(const SchemeLayout& layout, const LinkBank& links,
                                    const PrecoderStepParams& params, double total_power,
                                    const RVector& r_min, const std::optional<RVector>& weights) {
  if (layout.kind() == SchemeKind::rsma) throw InvalidInput("use the RSMA subproblem for RSMA layouts");
  check_inputs(layout, params, total_power, r_min);
  const RVector w = user_weights(weights, layout.users());
  const int n = layout.variable_count();

  QuadraticForm objective = QuadraticForm::zero(n);
  std::vector<QuadraticForm> cons{power_form(n, n, total_power)};
  std::vector<std::string> names{"total power"};
  for (int k = 0; k < layout.users(); ++k) {
    QuadraticForm user_sum = QuadraticForm::zero(n);
    for (int i = 0; i < static_cast<int>(layout.steps(k).size()); ++i) {
      if (layout.stream(layout.steps(k)[i].stream).owner != k) continue;
      user_sum += step_awmse_form(params, layout, links, k, i, n);
    }
    QuadraticForm weighted = user_sum;
    weighted.q_diag *= w[k];
    weighted.c *= w[k];
    weighted.r *= w[k];
    objective += weighted;
    if (r_min[k] > 0.0) {
      user_sum.r -= layout.own_subcarriers(k) - std::log(2.0) * r_min[k];
      cons.push_back(std::move(user_sum));
      names.push_back("minimum rate (user " + std::to_string(k + 1) + ")");
    }
  }
  return Subproblem{QcqpProblem(std::move(objective), std::move(cons), {}, std::move(names)), n, -1, 0};
}

Subproblem assemble_rsma_subproblem(const SchemeLayout& layout, const LinkBank& links,
                                    const PrecoderStepParams& params, double total_power,
                                    const RVector& r_min, bool with_shares,
                                    const std::optional<RVector>& weights) {
  if (layout.kind() != SchemeKind::rsma) throw InvalidInput("RSMA subproblem needs an RSMA layout");
  check_inputs(layout, params, total_power, r_min);
  const RVector w = user_weights(weights, layout.users());
  const int users = layout.users();
  const int amps = layout.variable_count();
  const int shares = with_shares ? users : 0;
  const int n = amps + shares;
  const double common_n = layout.common_subcarriers();

  QuadraticForm objective = QuadraticForm::zero(n);
  std::vector<QuadraticForm> cons{power_form(amps, n, total_power)};
  std::vector<std::string> names{"total power"};
  std::vector<bool> mask(n, false);
  for (int k = 0; k < shares; ++k) {
    mask[amps + k] = true;
    objective.c[amps + k] -= w[k];
  }

  for (int k = 0; k < users; ++k) {
    QuadraticForm priv = QuadraticForm::zero(n);
    QuadraticForm common = QuadraticForm::zero(n);
    for (int i = 0; i < static_cast<int>(layout.steps(k).size()); ++i) {
      const Stream& s = layout.stream(layout.steps(k)[i].stream);
      (s.is_common() ? common : priv) += step_awmse_form(params, layout, links, k, i, n);
    }
    QuadraticForm weighted = priv;
    weighted.q_diag *= w[k];
    weighted.c *= w[k];
    weighted.r *= w[k];
    objective += weighted;

    if (with_shares) {
      common.c.tail(shares).array() += 1.0;
      common.r -= common_n;
      cons.push_back(std::move(common));
      names.push_back("common rate decodability (user " + std::to_string(k + 1) + ")");
    }
    if (r_min[k] > 0.0) {
      if (with_shares) priv.c[amps + k] -= 1.0;
      priv.r -= layout.own_subcarriers(k) - std::log(2.0) * r_min[k];
      cons.push_back(std::move(priv));
      names.push_back("minimum rate (user " + std::to_string(k + 1) + ")");
    }
  }
  return Subproblem{QcqpProblem(std::move(objective), std::move(cons), std::move(mask), std::move(names)),
                    amps, with_shares ? amps : -1, shares};
}

}  // namespace rsofdm
