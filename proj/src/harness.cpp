#include "rsofdm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rsofdm/errors.hpp"

namespace rsofdm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Presets

namespace {

constexpr int kPrivate = 35;
constexpr int kWideCommon = 15;
constexpr int kCp = 5;
constexpr double kSampleRate = 2.1e6;

WaveformConfig grid(bool wide_common) {
  return WaveformConfig::make(kPrivate, wide_common ? kWideCommon : kPrivate, kCp, kSampleRate);
}

}  // namespace

Preset preset(const std::string& name) {
  static const std::map<std::string, std::string> aliases{
      {"ofdma", "ofdma-60"}, {"noma", "noma-60-60"}, {"rsma", "rsma-60-60"}};
  const auto alias = aliases.find(name);
  const std::string full = alias == aliases.end() ? name : alias->second;

  Preset p;
  p.name = full;
  if (full == "ofdma-60") {
    p.kind = SchemeKind::ofdma;
    p.waveform = grid(false);
  } else if (full == "ofdma-140") {
    p.kind = SchemeKind::ofdma;
    p.waveform = grid(true);
    p.wide = true;
  } else if (full == "noma-60-60") {
    p.kind = SchemeKind::noma;
    p.waveform = grid(false);
  } else if (full == "noma-140-60") {
    p.kind = SchemeKind::noma;
    p.waveform = grid(true);
    p.wide = true;
  } else if (full == "rsma-60-60") {
    p.kind = SchemeKind::rsma;
    p.waveform = grid(false);
  } else if (full == "rsma-140-60") {
    p.kind = SchemeKind::rsma;
    p.waveform = grid(true);
  } else {
    throw InvalidInput("unknown scheme preset '" + name + "'");
  }
  return p;
}

std::vector<std::string> preset_names() {
  return {"ofdma-60", "ofdma-140", "noma-60-60", "noma-140-60", "rsma-60-60", "rsma-140-60"};
}

SchemeLayout make_layout(const Preset& p, int users, const std::vector<int>& decode_order) {
  switch (p.kind) {
    case SchemeKind::ofdma:
      return SchemeLayout::ofdma(p.waveform, users, p.wide);
    case SchemeKind::noma:
      return SchemeLayout::noma(p.waveform, decode_order, p.wide ? 1 : 0);
    case SchemeKind::rsma:
      return SchemeLayout::rsma(p.waveform, users);
  }
  throw InvalidInput("unknown scheme kind");
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (schemes.empty()) throw InvalidInput("at least one scheme is required");
  std::set<std::string> seen;
  for (const std::string& s : schemes) {
    if (!seen.insert(preset(s).name).second) throw InvalidInput("scheme '" + s + "' listed twice");
  }
  if (snr_grid_db.empty()) throw InvalidInput("snr_grid_db must not be empty");
  if (delta_d_grid.empty()) throw InvalidInput("delta_d_grid must not be empty");
  for (double s : snr_grid_db) {
    if (!std::isfinite(s)) throw InvalidInput("SNR values must be finite");
  }
  for (double d : delta_d_grid) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidInput("delta_d values must be finite and >= 0");
  }
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  if (users < 1) throw InvalidInput("users must be >= 1");
  if (static_cast<int>(gain_offsets_db.size()) != users) {
    throw InvalidInput("gain_offsets_db needs one entry per user");
  }
  for (double g : gain_offsets_db) {
    if (!std::isfinite(g)) throw InvalidInput("gain offsets must be finite");
  }
  if (!r_min.empty()) {
    if (static_cast<int>(r_min.size()) != users) throw InvalidInput("r_min needs one entry per user");
    for (double r : r_min) {
      if (!(r >= 0.0)) throw InvalidInput("r_min entries must be >= 0");
    }
  }
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
  if (max_iter < 1) throw InvalidInput("max_iter must be >= 1");
  if (!(noise > 0.0)) throw InvalidInput("noise must be positive");
  if (!(reference_scs > 0.0)) throw InvalidInput("reference_scs must be positive");
  ChannelEnsembleConfig ch = channel;
  ch.max_doppler = 0.0;
  ch.validate(grid(false));
}

std::vector<int> ExperimentConfig::decode_order() const {
  std::vector<int> order(users);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gain_offsets_db[a] < gain_offsets_db[b]; });
  return order;
}

double ExperimentConfig::total_power(double snr_db) const {
  return kPrivate * noise * std::pow(10.0, snr_db / 10.0);
}

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InvalidInput("config key '" + key + "' has the wrong type");
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw InvalidInput("unknown config key '" + where + item.key() + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"schemes", "snr_grid_db", "delta_d_grid", "trials", "seed", "users", "channel",
              "gain_offsets_db", "r_min", "restarts", "tol", "max_iter", "noise",
              "reference_scs"},
             "");
  ExperimentConfig cfg;
  if (j.contains("schemes")) cfg.schemes = get_as<std::vector<std::string>>(j["schemes"], "schemes");
  if (j.contains("snr_grid_db")) cfg.snr_grid_db = get_as<std::vector<double>>(j["snr_grid_db"], "snr_grid_db");
  if (j.contains("delta_d_grid")) cfg.delta_d_grid = get_as<std::vector<double>>(j["delta_d_grid"], "delta_d_grid");
  if (j.contains("trials")) cfg.trials = get_as<int>(j["trials"], "trials");
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("users")) {
    cfg.users = get_as<int>(j["users"], "users");
    if (!j.contains("gain_offsets_db") && cfg.users >= 0 &&
        static_cast<std::size_t>(cfg.users) != cfg.gain_offsets_db.size()) {
      cfg.gain_offsets_db.assign(cfg.users, 0.0);
    }
  }
  if (j.contains("channel")) {
    const json& c = j["channel"];
    check_keys(c, {"n_paths", "max_delay_spread", "power_decay"}, "channel.");
    if (c.contains("n_paths")) cfg.channel.n_paths = get_as<int>(c["n_paths"], "channel.n_paths");
    if (c.contains("max_delay_spread")) {
      cfg.channel.max_delay_spread = get_as<double>(c["max_delay_spread"], "channel.max_delay_spread");
    }
    if (c.contains("power_decay")) cfg.channel.power_decay = get_as<double>(c["power_decay"], "channel.power_decay");
  }
  if (j.contains("gain_offsets_db")) {
    cfg.gain_offsets_db = get_as<std::vector<double>>(j["gain_offsets_db"], "gain_offsets_db");
  }
  if (j.contains("r_min")) cfg.r_min = get_as<std::vector<double>>(j["r_min"], "r_min");
  if (j.contains("restarts")) cfg.restarts = get_as<int>(j["restarts"], "restarts");
  if (j.contains("tol")) cfg.tol = get_as<double>(j["tol"], "tol");
  if (j.contains("max_iter")) cfg.max_iter = get_as<int>(j["max_iter"], "max_iter");
  if (j.contains("noise")) cfg.noise = get_as<double>(j["noise"], "noise");
  if (j.contains("reference_scs")) cfg.reference_scs = get_as<double>(j["reference_scs"], "reference_scs");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

json config_json(const ExperimentConfig& cfg) {
  return json{{"schemes", cfg.schemes},
              {"snr_grid_db", cfg.snr_grid_db},
              {"delta_d_grid", cfg.delta_d_grid},
              {"trials", cfg.trials},
              {"seed", cfg.seed},
              {"users", cfg.users},
              {"channel",
               {{"n_paths", cfg.channel.n_paths},
                {"max_delay_spread", cfg.channel.max_delay_spread},
                {"power_decay", cfg.channel.power_decay}}},
              {"gain_offsets_db", cfg.gain_offsets_db},
              {"r_min", cfg.r_min},
              {"restarts", cfg.restarts},
              {"tol", cfg.tol},
              {"max_iter", cfg.max_iter},
              {"noise", cfg.noise},
              {"reference_scs", cfg.reference_scs}};
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

// ---------------------------------------------------------------------------
// Channels

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, int trial, int user) {
  return seed ^ splitmix(splitmix(static_cast<std::uint64_t>(trial)) +
                         static_cast<std::uint64_t>(static_cast<std::int64_t>(user)));
}

std::vector<ChannelRealization> trial_channels(const ExperimentConfig& cfg,
                                               const WaveformConfig& wf, int trial,
                                               double delta_d) {
  std::vector<ChannelRealization> out;
  for (int k = 0; k < cfg.users; ++k) {
    ChannelEnsembleConfig ch = cfg.channel;
    ch.max_doppler = delta_d * cfg.reference_scs;
    ch.seed = trial_seed(cfg.seed, trial, k);
    ch.validate(wf);
    Rng rng(ch.seed);
    std::vector<Path> paths = sample_paths(ch, rng);
    apply_gain_offset(paths, cfg.gain_offsets_db[k]);
    out.push_back(make_realization(std::move(paths), wf, k));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

TrialOutcome run_cell(const SchemeLayout& layout, const LinkBank& links,
                      const ExperimentConfig& cfg, double snr_db, std::uint64_t seed,
                      bool keep_trace) {
  TrialOutcome out;
  AoOptions ao;
  ao.tol = cfg.tol;
  ao.max_iter = cfg.max_iter;
  ao.restarts = cfg.restarts;
  ao.seed = seed;
  RVector r_min = RVector::Zero(cfg.users);
  for (std::size_t k = 0; k < cfg.r_min.size(); ++k) r_min[static_cast<Eigen::Index>(k)] = cfg.r_min[k];
  try {
    AoResult res =
        alternating_optimization(layout, links, cfg.total_power(snr_db), cfg.noise, r_min, ao);
    out.ok = true;
    out.sum_rate = res.report.sum_rate;
    out.user_rates = res.report.per_user_total;
    out.power = res.precoder.amplitudes.array().square().matrix();
    out.user_power = RVector::Zero(cfg.users);
    for (const Stream& st : layout.streams()) {
      const double p = out.power.segment(st.offset, st.size).sum();
      if (st.is_common()) {
        out.common_power += p;
      } else {
        out.user_power[st.owner] += p;
      }
    }
    out.iterations = res.iterations;
    out.converged = res.converged;
    out.kkt_residual = res.kkt_residual;
    if (keep_trace) out.trace = std::move(res.trace);
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

double jain_of_means(const RVector& sums, double n) {
  if (n <= 0.0) return kNaN;
  return jain_fairness(sums / n);
}

void summarize(CellSummary& c, const SchemeLayout& layout) {
  std::vector<double> srs;
  RVector rate_sum;
  RVector power_sum;
  RVector user_power_sum;
  double common_sum = 0.0;
  double frac_sum = 0.0;
  double trial_jain_sum = 0.0;
  for (const TrialOutcome& t : c.trials) {
    if (!t.ok) {
      ++c.failures;
      continue;
    }
    if (!t.converged) ++c.not_converged;
    srs.push_back(t.sum_rate);
    if (rate_sum.size() == 0) {
      rate_sum = RVector::Zero(t.user_rates.size());
      power_sum = RVector::Zero(t.power.size());
      user_power_sum = RVector::Zero(t.user_power.size());
    }
    rate_sum += t.user_rates;
    power_sum += t.power;
    user_power_sum += t.user_power;
    common_sum += t.common_power;
    const double total = t.common_power + t.user_power.sum();
    frac_sum += total > 0.0 ? t.common_power / total : 0.0;
    trial_jain_sum += jain_fairness(t.user_rates);
  }
  const double n = static_cast<double>(srs.size());
  if (srs.empty()) return;

  c.mean_sr = std::accumulate(srs.begin(), srs.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : srs) ss += (s - c.mean_sr) * (s - c.mean_sr);
  c.stderr_sr = srs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  c.mean_trial_jain = trial_jain_sum / n;
  c.common_power_frac = frac_sum / n;
  c.mean_power = power_sum / n;

  c.jain = jain_of_means(rate_sum, n);
  if (srs.size() > 1) {
    std::vector<double> loo;
    for (const TrialOutcome& t : c.trials) {
      if (t.ok) loo.push_back(jain_of_means(rate_sum - t.user_rates, n - 1.0));
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
    double acc = 0.0;
    for (double v : loo) acc += (v - mean) * (v - mean);
    c.jain_stderr = std::sqrt((n - 1.0) / n * acc);
  } else {
    c.jain_stderr = 0.0;
  }

  if (layout.kind() == SchemeKind::rsma && common_sum > 0.0 && user_power_sum.sum() > 0.0) {
    c.common_private_db = 10.0 * std::log10(common_sum / user_power_sum.sum());
  }
  if (layout.kind() == SchemeKind::noma && user_power_sum.size() >= 2 && user_power_sum[0] > 0.0 &&
      user_power_sum[1] > 0.0) {
    c.user_power_db = 10.0 * std::log10(user_power_sum[0] / user_power_sum[1]);
  }
}

struct Plan {
  std::vector<Preset> presets;
  std::vector<int> ops_index;  // preset -> operator set
  std::vector<std::unique_ptr<OperatorSet>> ops;
  std::vector<SchemeLayout> layouts;
};

Plan make_plan(const ExperimentConfig& cfg) {
  Plan plan;
  const std::vector<int> order = cfg.decode_order();
  for (const std::string& name : cfg.schemes) {
    Preset p = preset(name);
    int idx = -1;
    for (std::size_t i = 0; i < plan.ops.size(); ++i) {
      if (plan.ops[i]->config().n_common == p.waveform.n_common) idx = static_cast<int>(i);
    }
    if (idx < 0) {
      idx = static_cast<int>(plan.ops.size());
      plan.ops.push_back(std::make_unique<OperatorSet>(p.waveform));
    }
    plan.ops_index.push_back(idx);
    plan.layouts.push_back(make_layout(p, cfg.users, order));
    plan.presets.push_back(std::move(p));
  }
  return plan;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts) {
  cfg.validate();
  const Plan plan = make_plan(cfg);
  const int n_schemes = static_cast<int>(cfg.schemes.size());
  const int n_snr = static_cast<int>(cfg.snr_grid_db.size());
  const int n_dd = static_cast<int>(cfg.delta_d_grid.size());

  SweepResult result;
  result.config = cfg;
  for (int s = 0; s < n_schemes; ++s) {
    for (int i = 0; i < n_snr; ++i) {
      for (int d = 0; d < n_dd; ++d) {
        CellSummary c;
        c.scheme = plan.presets[s].name;
        c.snr_db = cfg.snr_grid_db[i];
        c.delta_d = cfg.delta_d_grid[d];
        c.trials.resize(cfg.trials);
        result.cells.push_back(std::move(c));
      }
    }
  }
  const auto cell_index = [&](int s, int i, int d) { return (s * n_snr + i) * n_dd + d; };

  const int items = cfg.trials * n_dd;
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (int item = next++; item < items; item = next++) {
      const int trial = item / n_dd;
      const int d = item % n_dd;
      const std::vector<ChannelRealization> channels =
          trial_channels(cfg, plan.presets.front().waveform, trial, cfg.delta_d_grid[d]);
      std::vector<std::unique_ptr<LinkBank>> banks;
      for (const auto& ops : plan.ops) banks.push_back(std::make_unique<LinkBank>(channels, *ops));
      for (int s = 0; s < n_schemes; ++s) {
        for (int i = 0; i < n_snr; ++i) {
          result.cells[cell_index(s, i, d)].trials[trial] =
              run_cell(plan.layouts[s], *banks[plan.ops_index[s]], cfg, cfg.snr_grid_db[i],
                       trial_seed(cfg.seed, trial, -1 - s), opts.keep_traces);
        }
      }
      const int finished = ++done;
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        opts.progress(finished, items);
      }
    }
  };

  const int threads = std::clamp(opts.threads, 1, std::max(1, items));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (int s = 0; s < n_schemes; ++s) {
    for (int i = 0; i < n_snr; ++i) {
      for (int d = 0; d < n_dd; ++d) summarize(result.cells[cell_index(s, i, d)], plan.layouts[s]);
    }
  }
  return result;
}

const CellSummary& SweepResult::cell(const std::string& scheme, double snr_db,
                                     double delta_d) const {
  const std::string name = preset(scheme).name;
  for (const CellSummary& c : cells) {
    if (c.scheme == name && c.snr_db == snr_db && c.delta_d == delta_d) return c;
  }
  throw InvalidIndex("no cell for " + name);
}

int SweepResult::failures() const {
  int n = 0;
  for (const CellSummary& c : cells) n += c.failures;
  return n;
}

PairedDifference paired_sr_difference(const CellSummary& a, const CellSummary& b) {
  if (a.trials.size() != b.trials.size()) throw InvalidDimension("cells have different trial counts");
  std::vector<double> diff;
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    if (a.trials[t].ok && b.trials[t].ok) diff.push_back(a.trials[t].sum_rate - b.trials[t].sum_rate);
  }
  PairedDifference out;
  out.pairs = static_cast<int>(diff.size());
  if (diff.empty()) return out;
  const double n = static_cast<double>(diff.size());
  out.mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diff) ss += (d - out.mean) * (d - out.mean);
  out.stderr_ = diff.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

PairedDifference paired_jain_difference(const CellSummary& a, const CellSummary& b) {
  if (a.trials.size() != b.trials.size()) throw InvalidDimension("cells have different trial counts");
  std::vector<std::size_t> common;
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    if (a.trials[t].ok && b.trials[t].ok) common.push_back(t);
  }
  PairedDifference out;
  out.pairs = static_cast<int>(common.size());
  if (common.empty()) return out;
  RVector sa = RVector::Zero(a.trials[common[0]].user_rates.size());
  RVector sb = RVector::Zero(b.trials[common[0]].user_rates.size());
  for (std::size_t t : common) {
    sa += a.trials[t].user_rates;
    sb += b.trials[t].user_rates;
  }
  const double n = static_cast<double>(common.size());
  out.mean = jain_of_means(sa, n) - jain_of_means(sb, n);
  if (common.size() < 2) {
    out.stderr_ = 0.0;
    return out;
  }
  std::vector<double> loo;
  for (std::size_t t : common) {
    loo.push_back(jain_of_means(sa - a.trials[t].user_rates, n - 1.0) -
                  jain_of_means(sb - b.trials[t].user_rates, n - 1.0));
  }
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : loo) acc += (v - mean) * (v - mean);
  out.stderr_ = std::sqrt((n - 1.0) / n * acc);
  return out;
}

std::vector<PowerRatioRow> power_ratio_report(const SweepResult& r) {
  std::vector<PowerRatioRow> rows;
  for (const CellSummary& c : r.cells) {
    rows.push_back({c.scheme, c.snr_db, c.delta_d, c.common_private_db, c.user_power_db,
                    c.common_power_frac});
  }
  return rows;
}

std::vector<FairnessRow> fairness_report(const SweepResult& r) {
  std::vector<FairnessRow> rows;
  for (const CellSummary& c : r.cells) {
    rows.push_back({c.scheme, c.snr_db, c.delta_d, c.jain, c.jain_stderr, c.mean_trial_jain});
  }
  return rows;
}

std::vector<SubcarrierRow> subcarrier_power_report(const ExperimentConfig& cfg,
                                                   const std::vector<double>& snr_list) {
  cfg.validate();
  if (snr_list.empty()) throw InvalidInput("at least one SNR is required");
  const Plan plan = make_plan(cfg);
  const std::vector<ChannelRealization> channels =
      trial_channels(cfg, plan.presets.front().waveform, 0, cfg.delta_d_grid.front());
  std::vector<std::unique_ptr<LinkBank>> banks;
  for (const auto& ops : plan.ops) banks.push_back(std::make_unique<LinkBank>(channels, *ops));

  std::vector<SubcarrierRow> rows;
  for (std::size_t s = 0; s < plan.presets.size(); ++s) {
    const SchemeLayout& layout = plan.layouts[s];
    const LinkBank& links = *banks[plan.ops_index[s]];
    for (double snr : snr_list) {
      const TrialOutcome out = run_cell(layout, links, cfg, snr, trial_seed(cfg.seed, 0, -1 - static_cast<int>(s)), false);
      if (!out.ok) throw Infeasible(out.error);
      for (const Stream& st : layout.streams()) {
        int same_owner = 0;
        for (const Stream& other : layout.streams()) same_owner += other.owner == st.owner;
        std::string label = st.is_common() ? "common" : "user" + std::to_string(st.owner + 1);
        if (same_owner > 1) label += "-m" + std::to_string(st.numerology.slot);

        RVector gain;
        if (st.is_common()) {
          gain = RVector::Constant(st.size, std::numeric_limits<double>::infinity());
          for (int k = 0; k < layout.users(); ++k) {
            gain = gain.cwiseMin(links.diagonal(k, st.numerology).cwiseAbs2());
          }
        } else {
          gain = links.diagonal(st.owner, st.numerology).cwiseAbs2();
        }
        for (int q = 0; q < st.size; ++q) {
          rows.push_back({plan.presets[s].name, snr, q, label, out.power[st.offset + q], gain[q]});
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "scheme,snr_db,delta_d,mean_sr,stderr_sr,mean_jain,common_power_frac\n";
  for (const CellSummary& c : r.cells) {
    os << c.scheme << ',' << num(c.snr_db) << ',' << num(c.delta_d) << ',' << num(c.mean_sr) << ','
       << num(c.stderr_sr) << ',' << num(c.jain) << ',' << num(c.common_power_frac) << '\n';
  }
}

void write_power_ratio_csv(std::ostream& os, const std::vector<PowerRatioRow>& rows) {
  os << "scheme,snr_db,delta_d,common_private_db,user1_user2_db,common_power_frac\n";
  for (const PowerRatioRow& r : rows) {
    os << r.scheme << ',' << num(r.snr_db) << ',' << num(r.delta_d) << ',' << num(r.common_private_db)
       << ',' << num(r.user_power_db) << ',' << num(r.common_power_frac) << '\n';
  }
}

void write_fairness_csv(std::ostream& os, const std::vector<FairnessRow>& rows) {
  os << "scheme,snr_db,delta_d,jain,jain_stderr,mean_trial_jain\n";
  for (const FairnessRow& r : rows) {
    os << r.scheme << ',' << num(r.snr_db) << ',' << num(r.delta_d) << ',' << num(r.jain) << ','
       << num(r.jain_stderr) << ',' << num(r.mean_trial_jain) << '\n';
  }
}

void write_subcarrier_csv(std::ostream& os, const std::vector<SubcarrierRow>& rows) {
  os << "scheme,snr_db,subcarrier,stream,power,channel_gain\n";
  for (const SubcarrierRow& r : rows) {
    os << r.scheme << ',' << num(r.snr_db) << ',' << r.subcarrier << ',' << r.stream << ','
       << num(r.power) << ',' << num(r.channel_gain) << '\n';
  }
}

void write_convergence_csv(std::ostream& os, const SweepResult& r) {
  os << "scheme,snr_db,delta_d,trial,iter,sr\n";
  for (const CellSummary& c : r.cells) {
    for (std::size_t t = 0; t < c.trials.size(); ++t) {
      const TrialOutcome& o = c.trials[t];
      for (std::size_t it = 0; it < o.trace.size(); ++it) {
        os << c.scheme << ',' << num(c.snr_db) << ',' << num(c.delta_d) << ',' << t << ',' << it
           << ',' << num(o.trace[it]) << '\n';
      }
    }
  }
}

std::string sweep_to_json(const SweepResult& r) {
  json cells = json::array();
  for (const CellSummary& c : r.cells) {
    json trials = json::array();
    for (const TrialOutcome& t : c.trials) {
      json jt{{"ok", t.ok}};
      if (t.ok) {
        jt["sum_rate"] = t.sum_rate;
        jt["user_rates"] = std::vector<double>(t.user_rates.begin(), t.user_rates.end());
        jt["user_power"] = std::vector<double>(t.user_power.begin(), t.user_power.end());
        jt["common_power"] = t.common_power;
        jt["iterations"] = t.iterations;
        jt["converged"] = t.converged;
      } else {
        jt["error"] = t.error;
      }
      trials.push_back(std::move(jt));
    }
    cells.push_back({{"scheme", c.scheme},
                     {"snr_db", c.snr_db},
                     {"delta_d", c.delta_d},
                     {"mean_sr", nullable(c.mean_sr)},
                     {"stderr_sr", nullable(c.stderr_sr)},
                     {"jain", nullable(c.jain)},
                     {"jain_stderr", nullable(c.jain_stderr)},
                     {"mean_trial_jain", nullable(c.mean_trial_jain)},
                     {"common_power_frac", nullable(c.common_power_frac)},
                     {"common_private_db", nullable(c.common_private_db)},
                     {"user1_user2_db", nullable(c.user_power_db)},
                     {"mean_power", std::vector<double>(c.mean_power.begin(), c.mean_power.end())},
                     {"failures", c.failures},
                     {"not_converged", c.not_converged},
                     {"trials", std::move(trials)}});
  }
  return json{{"config", config_json(r.config)}, {"cells", std::move(cells)}}.dump(2);
}

}  // namespace rsofdm
