#pragma once
// Shared experiment drivers for the unit and acceptance suites.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cuescope/gmm.hpp"
#include "oracles.hpp"

namespace fixtures {

struct OnlineVsBatch {
  std::array<double, 2> online_means{};
  std::array<double, 2> batch_means{};
  double max_mean_gap = 0.0;
};

// 5,000 draws from 0.5 N(-3,1) + 0.5 N(3,1); the online model is seeded on
// the first `warmup` draws and then updated once per remaining draw under the
// 1/t schedule, so every sample carries equal weight. Batch EM runs on all
// 5,000 draws from the same seeding. Responsibility smoothing pulls both
// means toward the centre, so a fair comparison with plain EM turns it off.
inline OnlineVsBatch online_vs_batch_trial(std::uint64_t seed, double smoothing_alpha = 0.0,
                                           std::size_t samples = 5000, std::size_t warmup = 20) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> xs(samples);
  for (auto& x : xs) x = (coin(rng) ? 3.0 : -3.0) + z(rng);

  cuescope::GmmConfig config;
  config.k = 2;
  config.schedule = cuescope::DiscountSchedule::inverse_time;
  config.seed = seed;
  config.smoothing_alpha = smoothing_alpha;
  std::vector<Eigen::VectorXd> warm;
  for (std::size_t i = 0; i < warmup; ++i) warm.push_back(Eigen::VectorXd::Constant(1, xs[i]));
  auto state = cuescope::GmmState::init(config, warm);

  oracle::BatchFit start;
  for (std::size_t k = 0; k < 2; ++k) {
    start.means.push_back(state.mean(k)[0]);
    start.variances.push_back(1.0);
    start.weights.push_back(0.5);
  }
  Eigen::VectorXd x(1);
  for (std::size_t i = warmup; i < samples; ++i) {
    x[0] = xs[i];
    state.update(x);
  }
  const auto batch = oracle::batch_em_1d(xs, start);

  OnlineVsBatch out;
  std::array<double, 2> online{state.mean(0)[0], state.mean(1)[0]};
  std::array<double, 2> offline{batch.means[0], batch.means[1]};
  std::sort(online.begin(), online.end());
  std::sort(offline.begin(), offline.end());
  out.online_means = online;
  out.batch_means = offline;
  out.max_mean_gap = std::max(std::abs(online[0] - offline[0]), std::abs(online[1] - offline[1]));
  return out;
}

}  // namespace fixtures
