#include <doctest.h>

#include <sstream>

#include "rsofdm/errors.hpp"
#include "rsofdm/harness.hpp"

using namespace rsofdm;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.schemes = {"ofdma-60", "noma-60-60", "rsma-140-60"};
  cfg.snr_grid_db = {10.0, 20.0};
  cfg.delta_d_grid = {0.0, 0.2};
  cfg.trials = 2;
  cfg.max_iter = 15;
  cfg.tol = 1e-3;
  return cfg;
}

std::string csv(const SweepResult& r) {
  std::ostringstream os;
  write_sweep_csv(os, r);
  return os.str();
}

int lines(const std::string& s) { return int(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("presets") {
  CHECK(preset_names().size() == 6);
  for (const auto& n : preset_names()) CHECK(preset(n).name == n);
  CHECK(preset("rsma").name == "rsma-60-60");
  const Preset p = preset("rsma-140-60");
  CHECK(p.kind == SchemeKind::rsma);
  CHECK(p.waveform.n_common == 15);
  CHECK(make_layout(p, 2, {0, 1}).common_streams().size() == 2);
  const auto noma = make_layout(preset("noma-140-60"), 2, {1, 0});
  CHECK(noma.stream(noma.own_streams(1)[0]).numerology.slot == 1);
  CHECK_THROWS_AS(preset("ofdm"), InvalidInput);
}

TEST_CASE("config parsing") {
  const ExperimentConfig d = parse_config("{}");
  CHECK(d.trials == 100);
  CHECK(d.decode_order() == std::vector<int>{0, 1});
  CHECK(d.total_power(20.0) == doctest::Approx(3500.0));

  const auto cfg = parse_config(R"({"schemes":["rsma"],"trials":7,"seed":9,
      "channel":{"n_paths":3,"power_decay":1.5},"gain_offsets_db":[0,-3]})");
  CHECK(cfg.trials == 7);
  CHECK(cfg.channel.n_paths == 3);
  CHECK(cfg.decode_order() == std::vector<int>{1, 0});
  const auto back = parse_config(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));

  CHECK_THROWS_AS(parse_config(R"({"trails":3})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"channel":{"doppler":1}})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"trials":"many"})"), InvalidInput);
  CHECK_THROWS_AS(parse_config("{"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"schemes":["rsma","rsma-60-60"]})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"channel":{"max_delay_spread":5e-6}})").validate(), DelayExceedsCp);
  CHECK_THROWS_AS(parse_config(R"({"users":3,"r_min":[1]})"), InvalidInput);
  CHECK(parse_config(R"({"users":3})").gain_offsets_db.size() == 3);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InvalidInput);
}

TEST_CASE("trial channels are keyed by seed, trial and user only") {
  ExperimentConfig cfg;
  const WaveformConfig wf = preset("ofdma").waveform;
  const auto a = trial_channels(cfg, wf, 3, 0.0);
  const auto b = trial_channels(cfg, wf, 3, 0.2);
  for (int k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < a[k].paths.size(); ++l) {
      CHECK(a[k].paths[l].gain == b[k].paths[l].gain);
      CHECK(a[k].paths[l].delay == b[k].paths[l].delay);
      CHECK(std::abs(b[k].paths[l].doppler) <= 0.2 * 60e3);
    }
  }
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 0, 1));
  CHECK(trial_seed(1, 0, 0) != trial_seed(1, 1, 0));
  CHECK(trial_seed(1, 0, 0) != trial_seed(2, 0, 0));
  // User 0 carries the -6 dB offset.
  double p0 = 0, p1 = 0;
  for (int t = 0; t < 400; ++t) {
    const auto ch = trial_channels(cfg, wf, t, 0.0);
    for (const auto& p : ch[0].paths) p0 += std::norm(p.gain);
    for (const auto& p : ch[1].paths) p1 += std::norm(p.gain);
  }
  CHECK(10 * std::log10(p0 / p1) == doctest::Approx(-6.0).epsilon(0.1));
}

TEST_CASE("sweeps are deterministic, thread-independent and prefix-stable") {
  const ExperimentConfig cfg = small_config();
  const SweepResult r1 = run_sweep(cfg);
  SweepOptions two;
  two.threads = 2;
  const SweepResult r2 = run_sweep(cfg, two);
  CHECK(csv(r1) == csv(r2));
  CHECK(sweep_to_json(r1) == sweep_to_json(r2));
  CHECK(lines(csv(r1)) == 1 + 3 * 2 * 2);
  CHECK(csv(r1).rfind("scheme,snr_db,delta_d,mean_sr,stderr_sr,mean_jain,common_power_frac\n", 0) == 0);
  CHECK(r1.failures() == 0);

  ExperimentConfig more = cfg;
  more.trials = 3;
  const SweepResult r3 = run_sweep(more);
  for (std::size_t c = 0; c < r1.cells.size(); ++c)
    for (int t = 0; t < 2; ++t) CHECK(r3.cells[c].trials[t].sum_rate == r1.cells[c].trials[t].sum_rate);

  int done = 0;
  SweepOptions prog;
  prog.progress = [&](int d, int total) {
    done = d;
    CHECK(total == 2 * 2);
  };
  prog.keep_traces = true;
  const SweepResult rt = run_sweep(cfg, prog);
  CHECK(done == 4);
  std::ostringstream conv;
  write_convergence_csv(conv, rt);
  int rows = 0;
  for (const auto& c : rt.cells)
    for (const auto& t : c.trials) rows += int(t.trace.size());
  CHECK(lines(conv.str()) == 1 + rows);
}

TEST_CASE("the OFDMA cell equals water-filling on the trial channels") {
  ExperimentConfig cfg = small_config();
  cfg.schemes = {"ofdma-60"};
  const SweepResult r = run_sweep(cfg);
  const Preset p = preset("ofdma-60");
  const OperatorSet ops(p.waveform);
  for (double snr : cfg.snr_grid_db)
    for (double dd : cfg.delta_d_grid)
      for (int t = 0; t < cfg.trials; ++t) {
        const auto ch = trial_channels(cfg, p.waveform, t, dd);
        const LinkBank links(ch, ops);
        const auto layout = SchemeLayout::ofdma(p.waveform, 2);
        const auto st = initialize(layout, links, cfg.total_power(snr), 1.0);
        CHECK(r.cell("ofdma-60", snr, dd).trials[t].sum_rate ==
              evaluate_rates(layout, links, st, 1.0).sum_rate);
      }
}

TEST_CASE("summaries and reports") {
  const SweepResult r = run_sweep(small_config());
  const auto& rs = r.cell("rsma-140-60", 20.0, 0.2);
  CHECK(rs.common_power_frac > 0.0);
  CHECK(rs.common_power_frac < 1.0);
  double mean = 0.0;
  for (const auto& t : rs.trials) mean += t.sum_rate / 2;
  CHECK(rs.mean_sr == doctest::Approx(mean));
  RVector avg = RVector::Zero(2);
  for (const auto& t : rs.trials) avg += t.user_rates / 2;
  CHECK(rs.jain == doctest::Approx(jain_fairness(avg)));
  CHECK(std::isnan(r.cell("ofdma-60", 10.0, 0.0).common_private_db));
  CHECK_THROWS_AS(r.cell("rsma-60-60", 10.0, 0.0), InvalidIndex);

  const auto d = paired_sr_difference(rs, r.cell("ofdma-60", 20.0, 0.2));
  CHECK(d.pairs == 2);
  CHECK(power_ratio_report(r).size() == r.cells.size());
  CHECK(fairness_report(r).size() == r.cells.size());

  std::ostringstream os;
  write_subcarrier_csv(os, subcarrier_power_report(small_config(), {20.0}));
  // ofdma: 2 streams x 35; noma: 2 x 35; rsma-140-60: 2 x 35 + 2 x 15.
  CHECK(lines(os.str()) == 1 + 70 + 70 + 100);
}
