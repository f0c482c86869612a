// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [path-to-cuescope-cli]

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cuescope/error.hpp"
#include "cuescope/gmm.hpp"
#include "cuescope/pipeline.hpp"
#include "cuescope/report.hpp"
#include "cuescope/scoring.hpp"
#include "cuescope/synth.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "streams.hpp"

using namespace cuescope;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kMarginalRelTol = 1e-3;
constexpr double kMarginalBudgetS = 30.0;
constexpr double kOnlineBatchTol = 0.1;
constexpr double kOnlineBatchBudgetS = 60.0;
constexpr double kRecallAt10Min = 0.8;
constexpr double kAttributionMin = 0.7;
constexpr double kBenchmarkBudgetS = 600.0;
constexpr double kImportanceSumTol = 1e-6;
constexpr double kReorderTol = 1e-6;
constexpr double kDuplicateTolPct = 5.0;
constexpr double kFixtureTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  std::ostringstream o;
  o.setf(std::ios::scientific);
  o.precision(2);
  o << v;
  return o.str();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(prec);
  o << v;
  return o.str();
}

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.pass) ++failures;
  std::cout << (out.pass ? "PASS " : "FAIL ") << name << ": " << out.detail << " [" << fmt(secs, 2) << " s]"
            << std::endl;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome marginalization() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = oracle::random_state(rng, 2, trial % 2 ? CovarianceType::full : CovarianceType::diagonal);
    const std::vector<std::size_t> keep{0};
    const auto m = s.marginalize(keep);
    for (int p = 0; p < 3; ++p) {
      const auto comp = rng() % s.components();
      const double x0 = s.mean(comp)[0] + std::sqrt(s.covariance(comp)(0, 0)) * z(rng);
      const double expected = oracle::trapezoid_marginal(s, x0);
      const double got = std::exp(m.log_density(Eigen::VectorXd::Constant(1, x0)));
      worst = std::max(worst, std::abs(got - expected) / expected);
      ++checks;
    }
  }
  const double secs = elapsed_since(t0);
  return {worst <= kMarginalRelTol && secs < kMarginalBudgetS,
          "100 mixtures, " + std::to_string(checks) + " points, max relative error " + sci(worst) + " (limit 1e-3), " + fmt(secs, 2) + " s (limit 30)"};
}

Outcome online_vs_batch() {
  const auto t0 = std::chrono::steady_clock::now();
  int passed = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = fixtures::online_vs_batch_trial(seed);
    worst = std::max(worst, r.max_mean_gap);
    if (r.max_mean_gap < kOnlineBatchTol) ++passed;
  }
  const double secs = elapsed_since(t0);
  double smoothed = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
    smoothed = std::max(smoothed, fixtures::online_vs_batch_trial(seed, GmmConfig{}.smoothing_alpha).max_mean_gap);
  std::cout << "INFO with the default smoothing alpha the max gap is " << fmt(smoothed) << std::endl;
  return {passed == 10 && secs < kOnlineBatchBudgetS,
          std::to_string(passed) + "/10 seeds within 0.1 of batch EM, max gap " + fmt(worst) + ", " + fmt(secs, 2) +
              " s (limit 60)"};
}

Outcome score_then_update() {
  const ModalityLayout layout({{"a", 2}, {"b", 3}, {"c", 1}}, 30.0);
  const auto stream = streams::gaussian(layout, 1000, 11);
  ScoringOptions opts;
  opts.window_s = 5.0;
  opts.gmm.seed = 11;
  std::vector<FrameScore> recorded;
  score_stream(stream, opts, [&](std::size_t, const FrameScore& s) { recorded.push_back(s); });
  const std::size_t warm_n = 150;
  std::vector<Eigen::VectorXd> warm;
  for (std::size_t i = 0; i < warm_n; ++i) warm.push_back(stream.frames[i].values);
  auto state = GmmState::init(opts.gmm, warm);
  std::size_t equal = 0, differs_after = 0;
  for (const auto& s : recorded) {
    const auto& x = stream.frames[s.frame].values;
    const auto replay = score_frame(state, x, layout);
    if (replay.score == s.score && replay.marginal == s.marginal) ++equal;
    state.update(x);
    if (-state.log_density(x) != s.score) ++differs_after;
  }
  const bool ok = recorded.size() == 1000 - warm_n && equal == recorded.size() && differs_after == recorded.size();
  return {ok, std::to_string(equal) + "/" + std::to_string(recorded.size()) +
                  " frames replay bit-exactly against the pre-update model; " + std::to_string(differs_after) +
                  " differ against the post-update model"};
}

Outcome window_geometry() {
  const ModalityLayout layout({{"a", 2}, {"b", 2}}, 30.0);
  const auto stream = streams::gaussian(layout, 600 * 30, 4);
  const auto series = score_stream(stream, ScoringOptions{});
  check_tiling(series);
  std::size_t scored = 0;
  for (const auto& w : series.windows) scored += w.unscored ? 0 : 1;
  const bool ok = series.windows.size() == 40 && series.windows[0].unscored && scored == 39 &&
                  series.windows.back().end_s == 600.0;
  return {ok, std::to_string(series.windows.size()) + " windows, window 0 " +
                  (series.windows[0].unscored ? "unscored" : "scored") + ", " + std::to_string(scored) + " scored"};
}

Outcome synthetic_benchmark() {
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkCell cell;
  cell.name = "standard";
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  const auto table = benchmark(std::span(&cell, 1), seeds);
  const double secs = elapsed_since(t0);
  const auto& sum = table.summary.at(0);
  std::size_t monotone = 0;
  for (const auto& r : table.rows) monotone += r.recall_at_15 >= r.recall_at_10 ? 1 : 0;
  const double attribution = sum.attribution_accuracy.value_or(0.0);
  const bool ok = table.rows.size() == 20 && sum.recall_at_10_mean >= kRecallAt10Min && monotone == 20 &&
                  attribution >= kAttributionMin && secs < kBenchmarkBudgetS;
  return {ok, "recall@10 " + fmt(sum.recall_at_10_mean, 3) + " +- " + fmt(sum.recall_at_10_sd, 3) +
                  " (min 0.8), recall@15 " + fmt(sum.recall_at_15_mean, 3) + ", recall@15 >= recall@10 on " +
                  std::to_string(monotone) + "/20 trials, attribution " + fmt(attribution, 3) + " (min 0.7), " +
                  fmt(secs, 1) + " s (limit 600)"};
}

Outcome attribution_invariants() {
  double worst_sum = 0.0, worst_reorder = 0.0, worst_dup = 0.0;
  bool negative = false;
  std::size_t windows = 0;

  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4), count(1, 4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<std::string, std::size_t>> dims;
    const int n = count(rng);
    for (int m = 0; m < n; ++m) dims.emplace_back("m" + std::to_string(m), static_cast<std::size_t>(dim(rng)));
    const ModalityLayout layout(dims, 10.0);
    const auto s = streams::gaussian(layout, 300, 100 + static_cast<std::uint64_t>(trial),
                                     streams::shift_modality(layout, static_cast<std::size_t>(trial % n), 12.0, 18.0,
                                                             2.0 + trial % 3));
    ScoringOptions o;
    o.window_s = 6.0;
    o.gmm.seed = static_cast<std::uint64_t>(trial);
    o.gmm.k = 1 + static_cast<std::size_t>(trial % 3);
    for (const auto& w : score_stream(s, o).windows) {
      if (w.unscored) continue;
      ++windows;
      double total = 0.0;
      for (double p : w.importances) {
        negative = negative || p < 0.0;
        total += p;
      }
      worst_sum = std::max(worst_sum, std::abs(total - 100.0));
    }
  }

  const ModalityLayout three({{"a", 2}, {"b", 3}, {"c", 1}}, 30.0);
  const std::vector<std::vector<std::size_t>> orders = {{2, 0, 1}, {1, 2, 0}, {0, 2, 1}};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = streams::gaussian(three, 900, 40 + seed, streams::shift_modality(three, seed % 3, 10.0, 15.0, 3.0));
    ScoringOptions o;
    o.window_s = 5.0;
    o.gmm.seed = seed;
    const auto base = score_stream(s, o);
    for (const auto& order : orders) {
      const auto alt = score_stream(streams::reorder(s, order), o);
      for (std::size_t w = 0; w < base.windows.size(); ++w) {
        if (base.windows[w].unscored) continue;
        for (std::size_t j = 0; j < order.size(); ++j)
          worst_reorder =
              std::max(worst_reorder, std::abs(alt.windows[w].importances[j] - base.windows[w].importances[order[j]]));
      }
    }
  }

  const ModalityLayout dup({{"a", 2}, {"b", 2}, {"b2", 2}}, 30.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto shape = [](FeatureFrame& f) {
      if (f.timestamp_s >= 20.0 && f.timestamp_s < 25.0) f.values.segment(2, 2).array() += 3.0;
      f.values.segment(4, 2) = f.values.segment(2, 2);
    };
    ScoringOptions o;
    o.window_s = 5.0;
    o.gmm.seed = seed;
    for (const auto& w : score_stream(streams::gaussian(dup, 900, 70 + seed, shape), o).windows) {
      if (w.unscored) continue;
      worst_dup = std::max(worst_dup, std::abs(w.importances[1] - w.importances[2]));
    }
  }

  const bool ok = !negative && worst_sum <= kImportanceSumTol && worst_reorder <= kReorderTol &&
                  worst_dup <= kDuplicateTolPct;
  std::ostringstream d;
  d << windows << " windows, " << (negative ? "some" : "no") << " negative importances, max |sum - 100| "
    << worst_sum << "; reorder max diff " << worst_reorder << " pp; duplicate max diff " << fmt(worst_dup, 3)
    << " pp (limit 5)";
  return {ok, d.str()};
}

std::string shell_arg(const fs::path& p) { return "'" + p.string() + "'"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const auto dir = fs::temp_directory_path() / ("cuescope-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto run = [&](const std::string& args) {
    return std::system((shell_arg(cli) + " " + args + " 2>>" + shell_arg(dir / "stderr.txt")).c_str());
  };
  Outcome out;
  if (run("synth --seed 5 --out " + shell_arg(dir / "session")) != 0) {
    out = {false, "synth failed: " + slurp(dir / "stderr.txt")};
  } else {
    const auto analyze = [&](const std::string& name) {
      return run("analyze --manifest " + shell_arg(dir / "session" / "manifest.json") + " --frames " +
                 shell_arg(dir / "session" / "frames.ndjson") + " --out " + shell_arg(dir / name));
    };
    if (analyze("a.json") != 0 || analyze("b.json") != 0) {
      out = {false, "analyze failed: " + slurp(dir / "stderr.txt")};
    } else {
      const auto a = slurp(dir / "a.json");
      const auto b = slurp(dir / "b.json");
      out = {!a.empty() && a == b,
             "two analyze runs wrote " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " bytes, " +
                 (a == b ? "identical" : "different")};
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return out;
}

Scene scene(std::size_t rank, double start, double end, std::string top = "face") {
  Scene s;
  s.rank = rank;
  s.start_s = start;
  s.end_s = end;
  s.top_modality = std::move(top);
  return s;
}

Outcome metric_fixtures() {
  AnnotationSet ann;
  ann.duration_s = 600.0;
  for (int i = 0; i < 10; ++i) ann.intervals.push_back({30.0 * i + 15.0, 30.0 * i + 30.0, "gaze"});
  SceneReport exact, disjoint, partial;
  for (std::size_t i = 0; i < 10; ++i) {
    exact.scenes.push_back(scene(i + 1, ann.intervals[i].start_s, ann.intervals[i].end_s, "gaze"));
    disjoint.scenes.push_back(scene(i + 1, 30.0 * static_cast<double>(i), 30.0 * static_cast<double>(i) + 15.0));
  }
  const auto& a = ann.intervals;
  partial.scenes = {scene(1, a[1].start_s + 5.0, a[1].end_s + 5.0), scene(2, a[4].start_s, a[4].end_s),
                    scene(3, a[6].start_s - 10.0, a[6].start_s + 1.0), scene(4, a[9].start_s, a[9].end_s),
                    scene(5, 0.0, 15.0), scene(6, a[2].end_s, a[2].end_s + 15.0)};
  const double r1 = recall_at_k(exact, ann).recall_at_k.value_or(-1.0);
  const double r0 = recall_at_k(disjoint, ann).recall_at_k.value_or(-1.0);
  const double r4 = recall_at_k(partial, ann).recall_at_k.value_or(-1.0);
  const bool ok = std::abs(r1 - 1.0) <= kFixtureTol && std::abs(r0) <= kFixtureTol && std::abs(r4 - 0.4) <= kFixtureTol;
  return {ok, "exact " + fmt(r1, 3) + " (1.0), disjoint " + fmt(r0, 3) + " (0.0), four of ten " + fmt(r4, 3) +
                  " (0.4)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  criterion("marginalization matches numerical integration", marginalization);
  criterion("online EM under 1/t tracks batch EM", online_vs_batch);
  criterion("scores use the pre-update model", score_then_update);
  criterion("window geometry for 600 s at 30 fps", window_geometry);
  criterion("synthetic benchmark, standard suite, 20 seeds", synthetic_benchmark);
  criterion("attribution invariants", attribution_invariants);
  criterion("analyze is byte-deterministic", [&] { return determinism(cli); });
  criterion("recall metric fixtures", metric_fixtures);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
