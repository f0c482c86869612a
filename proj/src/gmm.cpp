#include "cuescope/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "cuescope/error.hpp"

namespace cuescope {

using nlohmann::ordered_json;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& x, const char* what) {
  if (!x.allFinite()) fail(ErrorKind::data, std::string(what) + ": non-finite value");
}

template <typename Json>
Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].template get<double>();
  return v;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  auto out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

std::string_view to_string(CovarianceType c) noexcept {
  return c == CovarianceType::diagonal ? "diagonal" : "full";
}

std::string_view to_string(DiscountSchedule s) noexcept {
  return s == DiscountSchedule::constant ? "constant" : "inverse_time";
}

CovarianceType parse_covariance_type(std::string_view s) {
  if (s == "diagonal") return CovarianceType::diagonal;
  if (s == "full") return CovarianceType::full;
  fail(ErrorKind::parameter, "unknown covariance type '" + std::string(s) + "'");
}

DiscountSchedule parse_discount_schedule(std::string_view s) {
  if (s == "constant") return DiscountSchedule::constant;
  if (s == "inverse_time") return DiscountSchedule::inverse_time;
  fail(ErrorKind::parameter, "unknown discount schedule '" + std::string(s) + "'");
}

void GmmConfig::validate() const {
  if (k < 1) fail(ErrorKind::parameter, "k must be at least 1");
  if (!(discount_r > 0.0 && discount_r < 1.0)) fail(ErrorKind::parameter, "discount_r must lie in (0,1)");
  if (!(reg_eps > 0.0)) fail(ErrorKind::parameter, "reg_eps must be positive");
  if (!(smoothing_alpha >= 0.0)) fail(ErrorKind::parameter, "smoothing_alpha must be non-negative");
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

GmmState GmmState::init(const GmmConfig& config, std::span<const Eigen::VectorXd> warmup) {
  config.validate();
  if (warmup.size() < config.k) {
    fail(ErrorKind::insufficient_data, "warm-up has " + std::to_string(warmup.size()) +
                                           " vectors, need at least k=" + std::to_string(config.k));
  }
  const Eigen::Index d = warmup[0].size();
  if (d < 1) fail(ErrorKind::dimension, "warm-up vectors must have length >= 1");
  for (const auto& x : warmup) {
    if (x.size() != d) fail(ErrorKind::dimension, "warm-up vectors differ in length");
    check_finite(x, "warm-up");
  }

  const auto n = warmup.size();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  // Farthest-point seeding: each new centre maximizes the squared distance to
  // the nearest centre chosen so far; ties go to the earliest vector.
  std::vector<std::size_t> centres{pick(rng)};
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centres.size() < config.k) {
    const auto& last = warmup[centres.back()];
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (warmup[i] - last).squaredNorm());
      if (nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    centres.push_back(best);
  }

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& x : warmup) mu += x;
  mu /= static_cast<double>(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (config.covariance == CovarianceType::full) {
    for (const auto& x : warmup) cov.noalias() += (x - mu) * (x - mu).transpose();
  } else {
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& x : warmup) var += (x - mu).array().square().matrix();
    cov.diagonal() = var;
  }
  cov /= static_cast<double>(n);

  // One assignment pass: each seed moves to the centroid of the warm-up
  // vectors nearest to it (ties to the earlier seed).
  std::vector<Eigen::VectorXd> means(config.k, Eigen::VectorXd::Zero(d));
  std::vector<std::size_t> members(config.k, 0);
  for (const auto& x : warmup) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < config.k; ++c) {
      const double dist = (x - warmup[centres[c]]).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    means[best] += x;
    ++members[best];
  }
  for (std::size_t c = 0; c < config.k; ++c) {
    means[c] = members[c] ? Eigen::VectorXd(means[c] / static_cast<double>(members[c])) : warmup[centres[c]];
  }
  const Eigen::VectorXd weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(config.k),
                                                            1.0 / static_cast<double>(config.k));
  return from_parameters(config, weights, means, std::vector<Eigen::MatrixXd>(config.k, cov), {}, n);
}

GmmState GmmState::from_parameters(const GmmConfig& config, const Eigen::VectorXd& weights,
                                   const std::vector<Eigen::VectorXd>& means,
                                   const std::vector<Eigen::MatrixXd>& covariances,
                                   std::vector<std::size_t> dim_index, std::uint64_t frames_seen) {
  config.validate();
  const auto k = means.size();
  if (k == 0 || static_cast<std::size_t>(weights.size()) != k || covariances.size() != k)
    fail(ErrorKind::dimension, "weights, means and covariances must agree on component count");
  if (k != config.k) fail(ErrorKind::dimension, "component count differs from config.k");
  const Eigen::Index d = means[0].size();
  if (d < 1) fail(ErrorKind::dimension, "component dimension must be >= 1");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9)
    fail(ErrorKind::validation, "weights must be non-negative and sum to 1");

  GmmState s;
  s.config_ = config;
  s.weights_ = weights;
  s.frames_seen_ = frames_seen;
  if (dim_index.empty()) {
    dim_index.resize(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < dim_index.size(); ++j) dim_index[j] = j;
  }
  if (dim_index.size() != static_cast<std::size_t>(d)) fail(ErrorKind::dimension, "dim_index length differs from d");
  s.dim_index_ = std::move(dim_index);

  for (std::size_t c = 0; c < k; ++c) {
    if (means[c].size() != d) fail(ErrorKind::dimension, "component means differ in length");
    if (covariances[c].rows() != d || covariances[c].cols() != d)
      fail(ErrorKind::dimension, "covariance shape differs from d x d");
    check_finite(means[c], "mean");
    s.means_.push_back(means[c]);
    if (config.covariance == CovarianceType::diagonal) {
      Eigen::VectorXd var = covariances[c].diagonal();
      if ((var.array() < 0.0).any()) fail(ErrorKind::validation, "variances must be non-negative");
      s.raw_variances_.push_back(std::move(var));
    } else {
      s.raw_covs_.push_back(0.5 * (covariances[c] + covariances[c].transpose()));
    }
  }
  s.refresh_cache();
  return s;
}

void GmmState::refresh_cache() {
  const auto k = means_.size();
  log_norm_.assign(k, 0.0);
  if (config_.covariance == CovarianceType::diagonal) {
    inv_variances_.assign(k, Eigen::VectorXd());
  } else {
    cholesky_.assign(k, Eigen::LLT<Eigen::MatrixXd>());
  }
  for (std::size_t c = 0; c < k; ++c) refresh_component(c);
}

void GmmState::refresh_component(std::size_t c) {
  const auto d = static_cast<double>(dim());
  if (config_.covariance == CovarianceType::diagonal) {
    const Eigen::ArrayXd var = raw_variances_[c].array() + config_.reg_eps;
    inv_variances_[c] = var.inverse().matrix();
    log_norm_[c] = -0.5 * (d * kLog2Pi + var.log().sum());
  } else {
    Eigen::MatrixXd cov = raw_covs_[c];
    cov.diagonal().array() += config_.reg_eps;
    cholesky_[c].compute(cov);
    if (cholesky_[c].info() != Eigen::Success) fail(ErrorKind::data, "covariance lost positive definiteness");
    const double log_det = 2.0 * cholesky_[c].matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_norm_[c] = -0.5 * (d * kLog2Pi + log_det);
  }
}

Eigen::MatrixXd GmmState::covariance(std::size_t k) const {
  if (config_.covariance == CovarianceType::diagonal) {
    return (raw_variances_.at(k).array() + config_.reg_eps).matrix().asDiagonal();
  }
  Eigen::MatrixXd cov = raw_covs_.at(k);
  cov.diagonal().array() += config_.reg_eps;
  return cov;
}

Eigen::VectorXd GmmState::variances(std::size_t k) const {
  if (config_.covariance != CovarianceType::diagonal) return covariance(k).diagonal();
  return (raw_variances_.at(k).array() + config_.reg_eps).matrix();
}

Eigen::VectorXd GmmState::weighted_component_log_densities(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    fail(ErrorKind::dimension, "vector of length " + std::to_string(x.size()) + " against model dimension " +
                                   std::to_string(dim()));
  }
  const auto k = components();
  Eigen::VectorXd out(static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd diff = x - means_[c];
    double maha = 0.0;
    if (config_.covariance == CovarianceType::diagonal) {
      maha = (diff.array().square() * inv_variances_[c].array()).sum();
    } else {
      maha = cholesky_[c].matrixL().solve(diff).squaredNorm();
    }
    out[static_cast<Eigen::Index>(c)] = std::log(weights_[static_cast<Eigen::Index>(c)]) + log_norm_[c] - 0.5 * maha;
  }
  return out;
}

double GmmState::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return log_sum_exp(weighted_component_log_densities(x));
}

Eigen::MatrixXd GmmState::diagonal_log_terms(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (config_.covariance != CovarianceType::diagonal)
    fail(ErrorKind::contract, "per-dimension log terms require a diagonal covariance model");
  if (static_cast<std::size_t>(x.size()) != dim()) fail(ErrorKind::dimension, "vector length differs from model dimension");
  const auto k = static_cast<Eigen::Index>(components());
  const auto d = x.size();
  Eigen::MatrixXd terms(k, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const Eigen::ArrayXd inv = inv_variances_[cc].array();
    terms.row(c) = (-0.5 * (kLog2Pi - inv.log() + (x - means_[cc]).array().square() * inv)).matrix().transpose();
  }
  return terms;
}

double GmmState::current_rate() const {
  if (config_.schedule == DiscountSchedule::inverse_time) return 1.0 / (static_cast<double>(frames_seen_) + 1.0);
  return config_.discount_r;
}

// Sequential discounting EM. With gamma the smoothed responsibilities and r the
// discount rate, the sufficient statistics evolve as
//   w_k  <- (1-r) w_k  + r gamma_k
//   m1_k <- (1-r) m1_k + r gamma_k x
//   m2_k <- (1-r) m2_k + r gamma_k x x^T
// with mu_k = m1_k / w_k and Sigma_k = m2_k / w_k - mu_k mu_k^T. The code applies
// the algebraically equal centred form with eta = r gamma_k / w_k(new):
//   mu_k <- mu_k + eta (x - mu_k),  Sigma_k <- (1-eta) (Sigma_k + eta (x-mu_k)(x-mu_k)^T)
// which keeps Sigma_k positive semi-definite without cancellation.
void GmmState::update(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != dim()) fail(ErrorKind::dimension, "vector length differs from model dimension");
  check_finite(x, "update");

  const auto k = components();
  const Eigen::VectorXd log_joint = weighted_component_log_densities(x);
  Eigen::VectorXd gamma = (log_joint.array() - log_sum_exp(log_joint)).exp().matrix();
  const double alpha = config_.smoothing_alpha;
  gamma = ((gamma.array() + alpha / static_cast<double>(k)) / (1.0 + alpha)).matrix();

  const double r = current_rate();
  for (std::size_t c = 0; c < k; ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double w_new = (1.0 - r) * weights_[ci] + r * gamma[ci];
    const double eta = w_new > 0.0 ? r * gamma[ci] / w_new : 0.0;
    weights_[ci] = w_new;
    if (eta == 0.0) continue;
    const Eigen::VectorXd diff = x - means_[c];
    means_[c] += eta * diff;
    if (config_.covariance == CovarianceType::diagonal) {
      raw_variances_[c] = ((1.0 - eta) * (raw_variances_[c].array() + eta * diff.array().square())).matrix();
    } else {
      raw_covs_[c] = (1.0 - eta) * (raw_covs_[c] + eta * diff * diff.transpose());
      raw_covs_[c] = 0.5 * (raw_covs_[c] + raw_covs_[c].transpose()).eval();
    }
  }
  weights_ /= weights_.sum();
  ++frames_seen_;
  refresh_cache();
}

GmmState GmmState::marginalize(std::span<const std::size_t> keep_dims) const {
  if (keep_dims.empty()) fail(ErrorKind::index, "marginalize needs at least one dimension to keep");
  // Positions within this state's dimension list, in dim_index order.
  std::vector<bool> keep(dim_index_.size(), false);
  for (auto want : keep_dims) {
    auto it = std::find(dim_index_.begin(), dim_index_.end(), want);
    if (it == dim_index_.end()) fail(ErrorKind::index, "dimension " + std::to_string(want) + " is not in this model");
    const auto pos = static_cast<std::size_t>(it - dim_index_.begin());
    if (keep[pos]) fail(ErrorKind::index, "dimension " + std::to_string(want) + " listed twice");
    keep[pos] = true;
  }
  std::vector<Eigen::Index> pos;
  std::vector<std::size_t> new_index;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) {
      pos.push_back(static_cast<Eigen::Index>(j));
      new_index.push_back(dim_index_[j]);
    }
  }

  GmmState out;
  out.config_ = config_;
  out.weights_ = weights_;
  out.frames_seen_ = frames_seen_;
  out.dim_index_ = std::move(new_index);
  for (std::size_t c = 0; c < components(); ++c) {
    out.means_.push_back(means_[c](pos));
    if (config_.covariance == CovarianceType::diagonal) {
      out.raw_variances_.push_back(raw_variances_[c](pos));
    } else {
      out.raw_covs_.push_back(raw_covs_[c](pos, pos));
    }
  }
  out.refresh_cache();
  return out;
}

std::string GmmState::render() const {
  ordered_json doc;
  doc["config"] = {
      {"k", config_.k},
      {"discount_r", config_.discount_r},
      {"schedule", std::string(to_string(config_.schedule))},
      {"covariance", std::string(to_string(config_.covariance))},
      {"reg_eps", config_.reg_eps},
      {"smoothing_alpha", config_.smoothing_alpha},
      {"seed", config_.seed},
      {"init_frames", config_.init_frames},
  };
  doc["dim_index"] = dim_index_;
  doc["frames_seen"] = frames_seen_;
  doc["weights"] = vector_to_json(weights_);
  doc["means"] = ordered_json::array();
  for (const auto& m : means_) doc["means"].push_back(vector_to_json(m));
  doc["covariances"] = ordered_json::array();
  for (std::size_t c = 0; c < components(); ++c) {
    if (config_.covariance == CovarianceType::diagonal) {
      doc["covariances"].push_back(vector_to_json(raw_variances_[c]));
    } else {
      auto rows = ordered_json::array();
      for (Eigen::Index r = 0; r < raw_covs_[c].rows(); ++r) rows.push_back(vector_to_json(raw_covs_[c].row(r).transpose()));
      doc["covariances"].push_back(std::move(rows));
    }
  }
  return doc.dump(2) + "\n";
}

GmmState GmmState::parse(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
    const auto& cfg = doc.at("config");
    GmmConfig config;
    config.k = cfg.at("k").get<std::size_t>();
    config.discount_r = cfg.at("discount_r").get<double>();
    config.schedule = parse_discount_schedule(cfg.at("schedule").get<std::string>());
    config.covariance = parse_covariance_type(cfg.at("covariance").get<std::string>());
    config.reg_eps = cfg.at("reg_eps").get<double>();
    config.smoothing_alpha = cfg.at("smoothing_alpha").get<double>();
    config.seed = cfg.at("seed").get<std::uint64_t>();
    config.init_frames = cfg.at("init_frames").get<std::size_t>();

    std::vector<Eigen::VectorXd> means;
    for (const auto& m : doc.at("means")) means.push_back(vector_from_json(m));
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& c : doc.at("covariances")) {
      if (config.covariance == CovarianceType::diagonal) {
        covs.emplace_back(vector_from_json(c).asDiagonal());
      } else {
        const auto d = static_cast<Eigen::Index>(c.size());
        Eigen::MatrixXd m(d, d);
        for (Eigen::Index r = 0; r < d; ++r) m.row(r) = vector_from_json(c.at(static_cast<std::size_t>(r))).transpose();
        covs.push_back(std::move(m));
      }
    }
    // from_parameters symmetrizes full matrices, which is the identity on
    // already-symmetric input, so the round trip stays bit-exact.
    GmmState s = from_parameters(config, vector_from_json(doc.at("weights")), means, covs,
                                 doc.at("dim_index").get<std::vector<std::size_t>>(),
                                 doc.at("frames_seen").get<std::uint64_t>());
    return s;
  } catch (const ordered_json::exception& e) {
    fail(ErrorKind::schema, std::string("model state: ") + e.what());
  }
}

}  // namespace cuescope
