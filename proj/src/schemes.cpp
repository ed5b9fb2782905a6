#include "rsofdm/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsofdm/errors.hpp"
#include "rsofdm/kernels.hpp"

namespace rsofdm {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::ofdma:
      return "ofdma";
    case SchemeKind::noma:
      return "noma";
    case SchemeKind::rsma:
      return "rsma";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Layouts

SchemeLayout::SchemeLayout(SchemeKind kind, const WaveformConfig& wf, int users)
    : kind_(kind), wf_(wf), users_(users), steps_(users) {
  wf_.validate();
  if (users < 1) throw InvalidInput("need at least one user");
  decode_order_.resize(users);
  std::iota(decode_order_.begin(), decode_order_.end(), 0);
}

int SchemeLayout::add_stream(int owner, Numerology nu) {
  Stream s;
  s.owner = owner;
  s.numerology = nu;
  s.offset = variables_;
  s.size = nu.is_private() ? wf_.n_private : wf_.n_common;
  variables_ += s.size;
  streams_.push_back(s);
  return static_cast<int>(streams_.size()) - 1;
}

SchemeLayout SchemeLayout::ofdma(const WaveformConfig& wf, int users, bool wide) {
  SchemeLayout layout(SchemeKind::ofdma, wf, users);
  for (int k = 0; k < users; ++k) {
    if (wide) {
      for (int m = 1; m <= wf.common_symbols(); ++m) {
        layout.add_stream(k, Numerology::common_symbol(m));
      }
    } else {
      layout.add_stream(k, Numerology::private_frame());
    }
  }
  const int n = static_cast<int>(layout.streams_.size());
  for (int s = 0; s < n; ++s) {
    DecodeStep step{s, {}};
    for (int t = 0; t < n; ++t) {
      if (t != s) step.interferers.push_back(t);
    }
    layout.steps_[layout.streams_[s].owner].push_back(std::move(step));
  }
  return layout;
}

SchemeLayout SchemeLayout::noma(const WaveformConfig& wf, std::vector<int> decode_order,
                                int wide_users) {
  const int users = static_cast<int>(decode_order.size());
  SchemeLayout layout(SchemeKind::noma, wf, users);
  std::vector<int> sorted = decode_order;
  std::sort(sorted.begin(), sorted.end());
  for (int k = 0; k < users; ++k) {
    if (sorted[k] != k) throw InvalidInput("decode order must be a permutation of users");
  }
  if (wide_users < 0 || wide_users > users) throw InvalidInput("wide user count out of range");
  layout.decode_order_ = decode_order;

  std::vector<int> position(users);
  for (int pos = 0; pos < users; ++pos) position[decode_order[pos]] = pos;

  for (int k = 0; k < users; ++k) {
    if (position[k] < wide_users) {
      for (int m = 1; m <= wf.common_symbols(); ++m) {
        layout.add_stream(k, Numerology::common_symbol(m));
      }
    } else {
      layout.add_stream(k, Numerology::private_frame());
    }
  }
  const int n = static_cast<int>(layout.streams_.size());
  for (int s = 0; s < n; ++s) {
    const int owner = layout.streams_[s].owner;
    DecodeStep step{s, {}};
    for (int t = 0; t < n; ++t) {
      if (t == s) continue;
      // Streams of users decoded earlier have been cancelled.
      if (position[layout.streams_[t].owner] >= position[owner]) step.interferers.push_back(t);
    }
    layout.steps_[owner].push_back(std::move(step));
  }
  return layout;
}

SchemeLayout SchemeLayout::rsma(const WaveformConfig& wf, int users) {
  SchemeLayout layout(SchemeKind::rsma, wf, users);
  std::vector<int> privates;
  std::vector<int> commons;
  for (int k = 0; k < users; ++k) privates.push_back(layout.add_stream(k, Numerology::private_frame()));
  for (int m = 1; m <= wf.common_symbols(); ++m) {
    commons.push_back(layout.add_stream(kCommonOwner, Numerology::common_symbol(m)));
  }
  for (int k = 0; k < users; ++k) {
    for (int c : commons) {
      DecodeStep step{c, privates};
      for (int other : commons) {
        if (other != c) step.interferers.push_back(other);
      }
      layout.steps_[k].push_back(std::move(step));
    }
    DecodeStep own{privates[k], {}};
    for (int other : privates) {
      if (other != privates[k]) own.interferers.push_back(other);
    }
    layout.steps_[k].push_back(std::move(own));
  }
  return layout;
}

std::vector<int> SchemeLayout::own_streams(int user) const {
  std::vector<int> out;
  for (int s = 0; s < static_cast<int>(streams_.size()); ++s) {
    if (streams_[s].owner == user) out.push_back(s);
  }
  return out;
}

std::vector<int> SchemeLayout::common_streams() const { return own_streams(kCommonOwner); }

int SchemeLayout::own_subcarriers(int user) const {
  int n = 0;
  for (int s : own_streams(user)) n += streams_[s].size;
  return n;
}

int SchemeLayout::common_subcarriers() const {
  int n = 0;
  for (int s : common_streams()) n += streams_[s].size;
  return n;
}

// ---------------------------------------------------------------------------
// Links

LinkBank::LinkBank(std::span<const ChannelRealization> channels, const OperatorSet& ops)
    : ops_(&ops), slots_(ops.common_symbols() + 1) {
  const auto numerologies = ops.numerologies();
  for (const ChannelRealization& ch : channels) {
    std::vector<CMatrix> gains(slots_ * slots_);
    std::vector<EnergyMatrix> energies(slots_ * slots_);
    for (Numerology tx : numerologies) {
      const CMatrix through = ch.time_matrix * ops.transmit(tx);
      for (Numerology rx : numerologies) {
        const int idx = index(rx, tx);
        gains[idx] = ops.receive(rx) * through;
        RMatrix e(gains[idx].rows(), gains[idx].cols());
        kernels::abs2({gains[idx].data(), static_cast<std::size_t>(gains[idx].size())},
                      {e.data(), static_cast<std::size_t>(e.size())});
        energies[idx] = e;
      }
    }
    gain_.push_back(std::move(gains));
    energy_.push_back(std::move(energies));
  }
}

int LinkBank::index(Numerology rx, Numerology tx) const {
  if (rx.slot < 0 || rx.slot >= slots_ || tx.slot < 0 || tx.slot >= slots_) {
    throw InvalidIndex("numerology slot out of range");
  }
  return rx.slot * slots_ + tx.slot;
}

const CMatrix& LinkBank::gain(int user, Numerology rx, Numerology tx) const {
  return gain_.at(user)[index(rx, tx)];
}

const LinkBank::EnergyMatrix& LinkBank::energy(int user, Numerology rx, Numerology tx) const {
  return energy_.at(user)[index(rx, tx)];
}

CVector LinkBank::diagonal(int user, Numerology nu) const { return gain(user, nu, nu).diagonal(); }

// ---------------------------------------------------------------------------
// Precoders

RMatrix PrecoderState::private_amp(const SchemeLayout& layout) const {
  RMatrix p = RMatrix::Zero(layout.waveform().n_private, layout.users());
  for (const Stream& s : layout.streams()) {
    if (!s.is_common() && s.numerology.is_private()) {
      p.col(s.owner) = amplitudes.segment(s.offset, s.size);
    }
  }
  return p;
}

RMatrix PrecoderState::common_amp(const SchemeLayout& layout) const {
  const auto commons = layout.common_streams();
  RMatrix pc(static_cast<int>(commons.size()), layout.waveform().n_common);
  for (int i = 0; i < static_cast<int>(commons.size()); ++i) {
    const Stream& s = layout.stream(commons[i]);
    pc.row(s.numerology.slot - 1) = amplitudes.segment(s.offset, s.size).transpose();
  }
  return pc;
}

PrecoderState PrecoderState::zeros(const SchemeLayout& layout) {
  return {layout.kind(), RVector::Zero(layout.variable_count())};
}

PrecoderState PrecoderState::from_matrices(const SchemeLayout& layout, const RMatrix& p,
                                           const RMatrix& p_c) {
  PrecoderState st = zeros(layout);
  for (const Stream& s : layout.streams()) {
    if (s.is_common()) {
      if (p_c.rows() < s.numerology.slot || p_c.cols() != s.size) {
        throw InvalidDimension("common amplitude matrix has the wrong shape");
      }
      st.amplitudes.segment(s.offset, s.size) = p_c.row(s.numerology.slot - 1).transpose();
    } else if (s.numerology.is_private()) {
      if (p.rows() != s.size || p.cols() <= s.owner) {
        throw InvalidDimension("private amplitude matrix has the wrong shape");
      }
      st.amplitudes.segment(s.offset, s.size) = p.col(s.owner);
    } else {
      throw InvalidInput("layout has user streams on the common numerology");
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Power chains

PowerChain received_powers(const SchemeLayout& layout, const LinkBank& links,
                           const PrecoderState& state, double noise) {
  if (state.amplitudes.size() != layout.variable_count()) {
    throw InvalidDimension("precoder does not match the layout");
  }
  if (links.users() != layout.users()) throw InvalidDimension("link bank user count mismatch");
  const RVector power = state.amplitudes.array().square();
  const auto block = [&](int t) {
    const Stream& st = layout.stream(t);
    return std::span<const double>(power.data() + st.offset, st.size);
  };

  PowerChain chain(layout.users());
  for (int k = 0; k < layout.users(); ++k) {
    for (const DecodeStep& step : layout.steps(k)) {
      const Stream& s = layout.stream(step.stream);
      const auto& self = links.energy(k, s.numerology, s.numerology);
      const CMatrix& g = links.gain(k, s.numerology, s.numerology);
      const auto own = block(step.stream);

      StepPowers out;
      out.stream = step.stream;
      out.diag_gain = g.diagonal();
      out.signal = out.diag_gain.cwiseProduct(state.amplitudes.segment(s.offset, s.size).cast<cd>());
      out.interference.resize(s.size);
      out.total.resize(s.size);
      for (int q = 0; q < s.size; ++q) {
        const std::span<const double> row(self.data() + static_cast<std::size_t>(q) * s.size, s.size);
        // Self-leakage from every other subcarrier of the same stream.
        double acc = noise + kernels::dot(row.first(q), own.first(q)) +
                     kernels::dot(row.subspan(q + 1), own.subspan(q + 1));
        for (int t : step.interferers) {
          const Stream& ts = layout.stream(t);
          const auto& e = links.energy(k, s.numerology, ts.numerology);
          acc += kernels::dot({e.data() + static_cast<std::size_t>(q) * ts.size, static_cast<std::size_t>(ts.size)},
                              block(t));
        }
        out.interference[q] = acc;
        out.total[q] = acc + std::norm(out.signal[q]);
      }
      chain[k].push_back(std::move(out));
    }
  }
  return chain;
}

namespace {

const StepPowers& find_step(const SchemeLayout& layout, const PowerChain& chain, int user,
                            int stream) {
  const auto& steps = layout.steps(user);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].stream == stream) return chain[user][i];
  }
  throw InvalidIndex("stream is not decoded by this user");
}

PowerPair own_stream_power(const SchemeLayout& layout, const LinkBank& links,
                           const PrecoderState& state, double noise, int user, int subcarrier) {
  if (user < 0 || user >= layout.users()) throw InvalidIndex("user index out of range");
  const PowerChain chain = received_powers(layout, links, state, noise);
  int q = subcarrier;
  for (int s : layout.own_streams(user)) {
    const int size = layout.stream(s).size;
    if (q >= 0 && q < size) {
      const StepPowers& p = find_step(layout, chain, user, s);
      return {p.total[q], p.interference[q]};
    }
    q -= size;
  }
  throw InvalidIndex("subcarrier index out of range");
}

}  // namespace

PowerPair noma_power(const SchemeLayout& layout, const LinkBank& links,
                     const PrecoderState& state, double noise, int user, int subcarrier) {
  if (layout.kind() != SchemeKind::noma) throw InvalidInput("noma_power needs a NOMA layout");
  return own_stream_power(layout, links, state, noise, user, subcarrier);
}

PowerPair rsma_common_power(const SchemeLayout& layout, const LinkBank& links,
                            const PrecoderState& state, double noise, int user, int m,
                            int subcarrier) {
  if (layout.kind() != SchemeKind::rsma) throw InvalidInput("rsma_common_power needs an RSMA layout");
  if (user < 0 || user >= layout.users()) throw InvalidIndex("user index out of range");
  for (int s : layout.common_streams()) {
    const Stream& st = layout.stream(s);
    if (st.numerology.slot != m) continue;
    if (subcarrier < 0 || subcarrier >= st.size) throw InvalidIndex("subcarrier index out of range");
    const PowerChain chain = received_powers(layout, links, state, noise);
    const StepPowers& p = find_step(layout, chain, user, s);
    return {p.total[subcarrier], p.interference[subcarrier]};
  }
  throw InvalidIndex("common symbol index out of range");
}

PowerPair rsma_private_power(const SchemeLayout& layout, const LinkBank& links,
                             const PrecoderState& state, double noise, int user,
                             int subcarrier) {
  if (layout.kind() != SchemeKind::rsma) throw InvalidInput("rsma_private_power needs an RSMA layout");
  return own_stream_power(layout, links, state, noise, user, subcarrier);
}

// ---------------------------------------------------------------------------
// Rates

RateReport evaluate_rates(const SchemeLayout& layout, const LinkBank& links,
                          const PrecoderState& state, double noise,
                          const std::optional<RVector>& share_totals) {
  const PowerChain chain = received_powers(layout, links, state, noise);
  const int users = layout.users();
  const int common_n = layout.common_subcarriers();
  const int n_common = layout.waveform().n_common;

  RateReport r;
  r.private_rates.resize(users);
  r.common_rates.assign(users, RVector::Zero(common_n));
  r.common_shares.assign(users, RVector::Zero(common_n));
  r.private_totals = RVector::Zero(users);
  r.common_decodable = RVector::Zero(users);
  r.share_totals = RVector::Zero(users);

  for (int k = 0; k < users; ++k) {
    r.private_rates[k] = RVector::Zero(layout.own_subcarriers(k));
    int own_offset = 0;
    const auto& steps = layout.steps(k);
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const StepPowers& p = chain[k][i];
      const Stream& s = layout.stream(steps[i].stream);
      RVector rates(s.size);
      for (int q = 0; q < s.size; ++q) {
        const double sinr = std::norm(p.signal[q]) / p.interference[q];
        rates[q] = std::log1p(sinr) / std::log(2.0);
      }
      if (s.is_common()) {
        r.common_rates[k].segment((s.numerology.slot - 1) * n_common, s.size) = rates;
      } else if (s.owner == k) {
        r.private_rates[k].segment(own_offset, s.size) = rates;
        own_offset += s.size;
      }
    }
    r.private_totals[k] = r.private_rates[k].sum();
    r.common_decodable[k] = r.common_rates[k].sum();
  }

  if (common_n > 0) {
    const double decodable = r.common_decodable.minCoeff();
    if (share_totals) {
      if (share_totals->size() != users) throw InvalidDimension("one share per user expected");
      if (share_totals->minCoeff() < -1e-12) throw InvalidInput("common-rate shares must be >= 0");
      if (share_totals->sum() > decodable + 1e-9) {
        throw InvalidInput("common-rate shares exceed the rate every user can decode");
      }
      r.share_totals = share_totals->cwiseMax(0.0);
    } else {
      r.share_totals.setConstant(decodable / users);
    }
    for (int k = 0; k < users; ++k) {
      r.common_shares[k].setConstant(r.share_totals[k] / common_n);
    }
  } else if (share_totals && share_totals->size() > 0 && share_totals->cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidInput("layout has no common stream to share");
  }

  r.common_rate = r.share_totals.sum();
  r.per_user_total = r.share_totals + r.private_totals;
  r.sum_rate = r.per_user_total.sum();
  return r;
}

RateReport ofdma_rates(const SchemeLayout& layout, const LinkBank& links,
                       const PrecoderState& state, double noise) {
  if (layout.kind() != SchemeKind::ofdma) throw InvalidInput("ofdma_rates needs an OFDMA layout");
  return evaluate_rates(layout, links, state, noise);
}

RateReport noma_rates(const SchemeLayout& layout, const LinkBank& links,
                      const PrecoderState& state, double noise) {
  if (layout.kind() != SchemeKind::noma) throw InvalidInput("noma_rates needs a NOMA layout");
  return evaluate_rates(layout, links, state, noise);
}

RateReport rsma_rates(const SchemeLayout& layout, const LinkBank& links,
                      const PrecoderState& state, double noise,
                      const std::optional<RVector>& share_totals) {
  if (layout.kind() != SchemeKind::rsma) throw InvalidInput("rsma_rates needs an RSMA layout");
  return evaluate_rates(layout, links, state, noise, share_totals);
}

// ---------------------------------------------------------------------------
// Water-filling and initialization

RVector waterfill(const RVector& gains, double total_power) {
  if (!(total_power >= 0.0)) throw InvalidInput("total power must be non-negative");
  RVector p = RVector::Zero(gains.size());
  if (total_power == 0.0 || gains.size() == 0 || !(gains.maxCoeff() > 0.0)) return p;

  const auto filled = [&](double level) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < gains.size(); ++i) {
      if (gains[i] > 0.0) sum += std::max(level - 1.0 / gains[i], 0.0);
    }
    return sum;
  };
  double lo = 0.0;
  double hi = total_power;
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (gains[i] > 0.0) hi = std::max(hi, total_power + 1.0 / gains[i]);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (filled(mid) < total_power ? lo : hi) = mid;
  }
  // Recompute the level exactly on the active set the bisection settled on.
  double inv_sum = 0.0;
  int active = 0;
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (gains[i] > 0.0 && hi - 1.0 / gains[i] > 0.0) {
      inv_sum += 1.0 / gains[i];
      ++active;
    }
  }
  const double level = (total_power + inv_sum) / active;
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    if (gains[i] > 0.0) p[i] = std::max(level - 1.0 / gains[i], 0.0);
  }
  return p;
}

PrecoderState initialize(const SchemeLayout& layout, const LinkBank& links,
                         double total_power, double noise, const InitOptions& opts) {
  if (!(total_power >= 0.0)) throw InvalidInput("total power must be non-negative");
  if (!(noise > 0.0)) throw InvalidInput("noise power must be positive");
  const int users = layout.users();
  PrecoderState st = PrecoderState::zeros(layout);
  RVector power = RVector::Zero(layout.variable_count());

  const bool rsma = layout.kind() == SchemeKind::rsma;
  const bool spread = layout.kind() != SchemeKind::ofdma;
  const double common_budget = rsma ? opts.common_fraction * total_power : 0.0;
  const double user_budget = total_power - common_budget;
  const double spread_budget = spread ? opts.spread_fraction * user_budget : 0.0;
  const double assigned_budget = user_budget - spread_budget;

  std::vector<std::vector<int>> own(users);
  for (int k = 0; k < users; ++k) own[k] = layout.own_streams(k);
  bool aligned = true;
  for (int k = 1; k < users; ++k) {
    if (own[k].size() != own[0].size()) {
      aligned = false;
      break;
    }
    for (std::size_t i = 0; i < own[k].size(); ++i) {
      aligned &= layout.stream(own[k][i]).numerology == layout.stream(own[0][i]).numerology;
    }
  }

  if (aligned) {
    std::vector<int> vars;
    std::vector<double> gains;
    for (std::size_t i = 0; i < own[0].size(); ++i) {
      const Numerology nu = layout.stream(own[0][i]).numerology;
      std::vector<CVector> h(users);
      for (int k = 0; k < users; ++k) h[k] = links.diagonal(k, nu);
      for (int q = 0; q < layout.stream(own[0][i]).size; ++q) {
        int best = 0;
        for (int k = 1; k < users; ++k) {
          if (std::norm(h[k][q]) > std::norm(h[best][q])) best = k;
        }
        vars.push_back(layout.stream(own[best][i]).offset + q);
        gains.push_back(std::norm(h[best][q]) / noise);
      }
    }
    const RVector wf = waterfill(Eigen::Map<const RVector>(gains.data(), gains.size()),
                                 assigned_budget);
    for (std::size_t i = 0; i < vars.size(); ++i) power[vars[i]] = wf[i];
  } else {
    for (int k = 0; k < users; ++k) {
      std::vector<int> vars;
      std::vector<double> gains;
      for (int s : own[k]) {
        const Stream& st_k = layout.stream(s);
        const CVector h = links.diagonal(k, st_k.numerology);
        for (int q = 0; q < st_k.size; ++q) {
          vars.push_back(st_k.offset + q);
          gains.push_back(std::norm(h[q]) / noise);
        }
      }
      const RVector wf = waterfill(Eigen::Map<const RVector>(gains.data(), gains.size()),
                                   assigned_budget / users);
      for (std::size_t i = 0; i < vars.size(); ++i) power[vars[i]] = wf[i];
    }
  }

  if (spread) {
    int user_vars = 0;
    for (int k = 0; k < users; ++k) user_vars += layout.own_subcarriers(k);
    for (int k = 0; k < users; ++k) {
      for (int s : own[k]) {
        const Stream& st_k = layout.stream(s);
        power.segment(st_k.offset, st_k.size).array() += spread_budget / user_vars;
      }
    }
  }
  if (rsma) {
    const int common_vars = layout.common_subcarriers();
    for (int s : layout.common_streams()) {
      const Stream& c = layout.stream(s);
      power.segment(c.offset, c.size).setConstant(common_budget / common_vars);
    }
  }
  st.amplitudes = power.cwiseMax(0.0).cwiseSqrt();
  return st;
}

double jain_fairness(const RVector& per_user_rates) {
  if (per_user_rates.size() == 0) throw InvalidInput("no rates given");
  const double sum = per_user_rates.sum();
  const double sq = per_user_rates.squaredNorm();
  if (sq == 0.0) return 1.0;
  return sum * sum / (static_cast<double>(per_user_rates.size()) * sq);
}

}  // namespace rsofdm
