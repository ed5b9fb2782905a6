#pragma once

// Monte-Carlo experiment driver: SNR and Doppler sweeps over named scheme
// presets, with power-allocation, fairness and convergence reports and their
// CSV/JSON writers.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rsofdm/optimizer.hpp"

namespace rsofdm {

/// A scheme together with its numerology, e.g. "rsma-140-60" (common SCS
/// first).
struct Preset {
  std::string name;
  SchemeKind kind = SchemeKind::ofdma;
  WaveformConfig waveform;
  bool wide = false;  // OFDMA on the 140 kHz grid, or the first NOMA user on it
};

/// Known names: ofdma-60, ofdma-140, noma-60-60, noma-140-60, rsma-60-60,
/// rsma-140-60. The bare names ofdma, noma and rsma alias the 60 kHz ones.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

/// Layout of a preset for `users` users. `decode_order` is only used by NOMA.
SchemeLayout make_layout(const Preset& p, int users, const std::vector<int>& decode_order);

struct ExperimentConfig {
  std::vector<std::string> schemes{"ofdma-60", "noma-60-60", "rsma-60-60"};
  std::vector<double> snr_grid_db{10.0, 20.0, 30.0};
  std::vector<double> delta_d_grid{0.0, 0.2};
  int trials = 100;
  std::uint64_t seed = 1;
  int users = 2;
  /// max_doppler and seed are ignored: Doppler comes from delta_d_grid and
  /// seeds from `seed`.
  ChannelEnsembleConfig channel;
  /// Mean channel gain of each user in dB. Also fixes the NOMA decoding
  /// order: weakest first, ties by user index.
  std::vector<double> gain_offsets_db{-6.0, 0.0};
  std::vector<double> r_min;  // empty means zero for every user
  int restarts = 1;
  double tol = 1e-4;
  int max_iter = 200;
  double noise = 1.0;
  /// Delta d is measured against this spacing: f_d = delta_d * reference_scs.
  double reference_scs = 60e3;

  void validate() const;
  std::vector<int> decode_order() const;
  /// P_t = N_p * noise * 10^(snr / 10) with N_p of the 60 kHz grid.
  double total_power(double snr_db) const;
};

/// Parses a JSON config. Keys mirror the field names; nested `channel` holds
/// n_paths, max_delay_spread and power_decay. Unknown keys are errors.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Seed of one user's channel in one trial. Independent of the Doppler grid
/// so each trial keeps its path set across delta_d.
std::uint64_t trial_seed(std::uint64_t seed, int trial, int user);

/// Draws the channels of one trial at one normalized Doppler.
std::vector<ChannelRealization> trial_channels(const ExperimentConfig& cfg,
                                               const WaveformConfig& wf, int trial,
                                               double delta_d);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Outcome of one (scheme, snr, delta_d, trial) cell.
struct TrialOutcome {
  bool ok = false;
  std::string error;
  double sum_rate = kNaN;
  RVector user_rates;    // C_k + R_k
  RVector user_power;    // power on each user's own streams
  double common_power = 0.0;
  RVector power;         // amplitude^2 in layout order
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

struct CellSummary {
  std::string scheme;
  double snr_db = 0.0;
  double delta_d = 0.0;
  std::vector<TrialOutcome> trials;

  int failures = 0;
  int not_converged = 0;
  double mean_sr = kNaN;
  double stderr_sr = kNaN;
  /// Jain index of the trial-averaged per-user rates.
  double jain = kNaN;
  double jain_stderr = kNaN;  // jackknife
  /// Average of the per-trial Jain indices.
  double mean_trial_jain = kNaN;
  /// Mean of P_c / (P_c + P) over trials; zero without a common stream.
  double common_power_frac = 0.0;
  /// 10 log10(mean P_c / mean P); NaN (reported as null) when P_c is zero or
  /// the scheme has none.
  double common_private_db = kNaN;
  /// NOMA: 10 log10(mean power of user 1 / mean power of user 2).
  double user_power_db = kNaN;
  RVector mean_power;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<CellSummary> cells;  // scheme-major, then snr, then delta_d

  const CellSummary& cell(const std::string& scheme, double snr_db, double delta_d) const;
  int failures() const;
};

struct SweepOptions {
  int threads = 1;
  bool keep_traces = false;
  /// Called after each finished work item with (done, total).
  std::function<void(int, int)> progress;
};

/// Runs every (trial, delta_d) work item; each solves all schemes and SNRs on
/// that trial's channels. Deterministic for a given config.
SweepResult run_sweep(const ExperimentConfig& cfg, const SweepOptions& opts = {});

struct PairedDifference {
  double mean = kNaN;
  double stderr_ = kNaN;
  int pairs = 0;
};

/// Mean and standard error of a_i - b_i over trials where both succeeded.
PairedDifference paired_sr_difference(const CellSummary& a, const CellSummary& b);
/// Jackknife estimate of Jain(a) - Jain(b) over the common successful trials.
PairedDifference paired_jain_difference(const CellSummary& a, const CellSummary& b);

struct PowerRatioRow {
  std::string scheme;
  double snr_db;
  double delta_d;
  double common_private_db;
  double user_power_db;
  double common_power_frac;
};
std::vector<PowerRatioRow> power_ratio_report(const SweepResult& r);

struct FairnessRow {
  std::string scheme;
  double snr_db;
  double delta_d;
  double jain;
  double jain_stderr;
  double mean_trial_jain;
};
std::vector<FairnessRow> fairness_report(const SweepResult& r);

struct SubcarrierRow {
  std::string scheme;
  double snr_db;
  int subcarrier;
  std::string stream;
  double power;
  double channel_gain;
};
/// Per-subcarrier allocation of every configured scheme on trial 0 at the
/// first delta_d, for each SNR in `snr_list`. The gain of a user stream is
/// |h_{k,q}|^2 on its numerology; a common stream shows the weakest user.
std::vector<SubcarrierRow> subcarrier_power_report(const ExperimentConfig& cfg,
                                                   const std::vector<double>& snr_list);

void write_sweep_csv(std::ostream& os, const SweepResult& r);
void write_power_ratio_csv(std::ostream& os, const std::vector<PowerRatioRow>& rows);
void write_fairness_csv(std::ostream& os, const std::vector<FairnessRow>& rows);
void write_subcarrier_csv(std::ostream& os, const std::vector<SubcarrierRow>& rows);
/// Rows scheme,snr_db,delta_d,trial,iter,sr. Needs keep_traces.
void write_convergence_csv(std::ostream& os, const SweepResult& r);
/// Full result including per-trial sum-rates and user rates.
std::string sweep_to_json(const SweepResult& r);

}  // namespace rsofdm
