#include "rsofdm/wmmse.hpp"

#include <cmath>

#include "rsofdm/errors.hpp"

namespace rsofdm {

EqualizerWeightState mmse_equalizers(const PowerChain& chain) {
  EqualizerWeightState st;
  st.g.resize(chain.size());
  st.u.resize(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    for (const StepPowers& p : chain[k]) {
      CVector g(p.total.size());
      for (Eigen::Index q = 0; q < g.size(); ++q) {
        if (!(p.total[q] > 0.0) || !std::isfinite(p.total[q])) {
          throw DivisionByZero("received power is zero; MMSE equalizer undefined");
        }
        g[q] = std::conj(p.signal[q]) / p.total[q];
      }
      st.g[k].push_back(std::move(g));
      st.u[k].push_back(RVector::Ones(p.total.size()));
    }
  }
  return st;
}

std::vector<std::vector<RVector>> mse(const EqualizerWeightState& state, const PowerChain& chain) {
  std::vector<std::vector<RVector>> out(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (state.g.at(k).size() != chain[k].size()) throw InvalidDimension("equalizer shape mismatch");
    for (std::size_t i = 0; i < chain[k].size(); ++i) {
      const StepPowers& p = chain[k][i];
      const CVector& g = state.g[k][i];
      if (g.size() != p.total.size()) throw InvalidDimension("equalizer shape mismatch");
      RVector e(g.size());
      for (Eigen::Index q = 0; q < g.size(); ++q) {
        e[q] = std::norm(g[q]) * p.total[q] - 2.0 * std::real(g[q] * p.signal[q]) + 1.0;
      }
      out[k].push_back(std::move(e));
    }
  }
  return out;
}

void mmse_weights(EqualizerWeightState& state, const PowerChain& chain) {
  const auto eps = mse(state, chain);
  state.u.assign(chain.size(), {});
  for (std::size_t k = 0; k < chain.size(); ++k) {
    for (std::size_t i = 0; i < chain[k].size(); ++i) {
      // Clamp rounding below zero; eps = I/T is at least sigma^2/T > 0.
      state.u[k].push_back(eps[k][i].cwiseMax(1e-300).cwiseInverse());
    }
  }
}

EqualizerWeightState mmse_update(const SchemeLayout& layout, const LinkBank& links,
                                 const PrecoderState& precoder, double noise) {
  const PowerChain chain = received_powers(layout, links, precoder, noise);
  EqualizerWeightState st = mmse_equalizers(chain);
  mmse_weights(st, chain);
  return st;
}

std::vector<std::vector<RVector>> awmse(const EqualizerWeightState& state, const PowerChain& chain) {
  auto out = mse(state, chain);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t i = 0; i < out[k].size(); ++i) {
      const RVector& u = state.u.at(k).at(i);
      if (u.size() != out[k][i].size()) throw InvalidDimension("weight shape mismatch");
      if ((u.array() <= 0.0).any()) throw InvalidInput("AWMSE weights must be positive");
      out[k][i] = u.cwiseProduct(out[k][i]).array() - u.array().log() / std::log(2.0);
    }
  }
  return out;
}

PrecoderStepParams precoder_step_params(const SchemeLayout& layout, const LinkBank& links,
                                        const EqualizerWeightState& weights, double noise) {
  PrecoderStepParams params;
  params.noise = noise;
  params.steps.resize(layout.users());
  for (int k = 0; k < layout.users(); ++k) {
    const auto& steps = layout.steps(k);
    if (weights.g.at(k).size() != steps.size() || weights.u.at(k).size() != steps.size()) {
      throw InvalidDimension("equalizer state does not match the layout");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const Stream& s = layout.stream(steps[i].stream);
      const CVector diag = links.gain(k, s.numerology, s.numerology).diagonal();
      StepParams sp;
      sp.stream = steps[i].stream;
      sp.g = weights.g[k][i];
      sp.u = weights.u[k][i];
      if (sp.g.size() != s.size || sp.u.size() != s.size) {
        throw InvalidDimension("equalizer state does not match the layout");
      }
      sp.alpha = sp.u.cwiseProduct(sp.g.cwiseAbs2());
      sp.upsilon = sp.u.array().log();
      sp.f = sp.u.cast<cd>().cwiseProduct(sp.g).cwiseProduct(diag);
      params.steps[k].push_back(std::move(sp));
    }
  }
  return params;
}

CMatrix beta(const PrecoderStepParams& params, const SchemeLayout& layout, const LinkBank& links,
             int user, int step, int tx_stream) {
  const StepParams& sp = params.steps.at(user).at(step);
  const Stream& rx = layout.stream(sp.stream);
  const Stream& tx = layout.stream(tx_stream);
  return sp.alpha.cwiseSqrt().cast<cd>().asDiagonal() *
         links.gain(user, rx.numerology, tx.numerology);
}

std::vector<std::vector<RowTerms>> composite_terms(const PrecoderStepParams& params,
                                                   const SchemeLayout& layout,
                                                   const LinkBank& links,
                                                   const PrecoderState& precoder) {
  std::vector<std::vector<RowTerms>> out(layout.users());
  for (int k = 0; k < layout.users(); ++k) {
    const auto& steps = layout.steps(k);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const int s = steps[i].stream;
      const RVector p = precoder.stream_amp(layout, s);
      const CMatrix b = beta(params, layout, links, k, static_cast<int>(i), s);
      RowTerms rt;
      rt.kappa = b.diagonal().cwiseProduct(p.cast<cd>());
      RMatrix self = b.cwiseAbs2();
      self.diagonal().setZero();
      rt.kappa_bar = self * p.cwiseAbs2();
      rt.chi = RVector::Zero(p.size());
      for (int t : steps[i].interferers) {
        const RVector pt = precoder.stream_amp(layout, t);
        rt.chi += beta(params, layout, links, k, static_cast<int>(i), t).cwiseAbs2() * pt.cwiseAbs2();
      }
      out[k].push_back(std::move(rt));
    }
  }
  return out;
}

std::vector<std::vector<RVector>> step_awmse(const PrecoderStepParams& params,
                                             const SchemeLayout& layout, const LinkBank& links,
                                             const PrecoderState& precoder) {
  const auto terms = composite_terms(params, layout, links, precoder);
  std::vector<std::vector<RVector>> out(layout.users());
  for (int k = 0; k < layout.users(); ++k) {
    for (std::size_t i = 0; i < terms[k].size(); ++i) {
      const StepParams& sp = params.steps[k][i];
      const RowTerms& rt = terms[k][i];
      const RVector p = precoder.stream_amp(layout, sp.stream);
      RVector z(p.size());
      for (Eigen::Index q = 0; q < p.size(); ++q) {
        z[q] = std::norm(rt.kappa[q]) + rt.kappa_bar[q] + rt.chi[q] + sp.alpha[q] * params.noise -
               2.0 * std::real(sp.f[q]) * p[q] + sp.u[q] - sp.upsilon[q];
      }
      out[k].push_back(std::move(z));
    }
  }
  return out;
}

}  // namespace rsofdm
