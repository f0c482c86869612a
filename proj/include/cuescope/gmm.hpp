#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cuescope {

enum class CovarianceType { diagonal, full };

// constant: every update uses discount_r.
// inverse_time: update t uses 1 / (frames_seen + 1), the stochastic-approximation
// schedule under which the online estimate tracks batch EM on a stationary source.
enum class DiscountSchedule { constant, inverse_time };

struct GmmConfig {
  std::size_t k = 3;
  double discount_r = 0.0003;
  DiscountSchedule schedule = DiscountSchedule::constant;
  CovarianceType covariance = CovarianceType::diagonal;
  double reg_eps = 1e-6;
  double smoothing_alpha = 1e-2;
  std::uint64_t seed = 0;
  // Warm-up frame count; 0 means "all valid frames of the first window".
  std::size_t init_frames = 0;

  void validate() const;
  bool operator==(const GmmConfig&) const = default;
};

std::string_view to_string(CovarianceType c) noexcept;
std::string_view to_string(DiscountSchedule s) noexcept;
CovarianceType parse_covariance_type(std::string_view s);
DiscountSchedule parse_discount_schedule(std::string_view s);

// Online Gaussian mixture with sequential discounting EM updates.
//
// Covariances are held unregularized; every density evaluation uses
// raw + reg_eps * I, so regularization never compounds across updates and
// marginalizing the raw statistics is exact for the regularized model too.
class GmmState {
 public:
  // Seeds means by farthest-point selection over `warmup` (first pick drawn
  // from config.seed) followed by one nearest-seed centroid pass, sets every
  // covariance to the warm-up sample covariance and weights to 1/k.
  // frames_seen starts at warmup.size().
  static GmmState init(const GmmConfig& config, std::span<const Eigen::VectorXd> warmup);

  // Builds a state from explicit parameters. `covariances` holds raw
  // (pre-regularization) matrices; only their diagonals are kept in diagonal mode.
  static GmmState from_parameters(const GmmConfig& config, const Eigen::VectorXd& weights,
                                  const std::vector<Eigen::VectorXd>& means,
                                  const std::vector<Eigen::MatrixXd>& covariances,
                                  std::vector<std::size_t> dim_index = {},
                                  std::uint64_t frames_seen = 0);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(means_.empty() ? 0 : means_[0].size()); }
  std::size_t components() const noexcept { return means_.size(); }
  const GmmConfig& config() const noexcept { return config_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& mean(std::size_t k) const { return means_.at(k); }
  // Regularized covariance of component k as a dense matrix.
  Eigen::MatrixXd covariance(std::size_t k) const;
  // Diagonal mode only: regularized per-dimension variances of component k.
  Eigen::VectorXd variances(std::size_t k) const;
  const std::vector<std::size_t>& dim_index() const noexcept { return dim_index_; }
  std::uint64_t frames_seen() const noexcept { return frames_seen_; }

  // ln sum_k w_k N(x; mu_k, Sigma_k), evaluated with log-sum-exp.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // ln w_k + ln N(x; mu_k, Sigma_k) per component.
  Eigen::VectorXd weighted_component_log_densities(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Diagonal mode only: k x d matrix of per-dimension log-density terms, so
  // that ln N(x; mu_k, Sigma_k) restricted to any dimension subset is the
  // row sum over that subset.
  Eigen::MatrixXd diagonal_log_terms(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // One discounted EM step on x. Throws Error(data) on non-finite x and
  // Error(dimension) on a length mismatch, leaving the state unchanged.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x);

  // Exact Gaussian marginal over `keep_dims` (original-space indices, a subset
  // of dim_index()). The result keeps dim_index order.
  GmmState marginalize(std::span<const std::size_t> keep_dims) const;

  // Structured-text snapshot; parse(s.render()) reproduces s bit-exactly.
  std::string render() const;
  static GmmState parse(std::string_view document);

 private:
  GmmState() = default;
  void refresh_cache();
  void refresh_component(std::size_t k);
  double current_rate() const;

  GmmConfig config_;
  Eigen::VectorXd weights_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::VectorXd> raw_variances_;  // diagonal mode
  std::vector<Eigen::MatrixXd> raw_covs_;       // full mode
  std::vector<std::size_t> dim_index_;
  std::uint64_t frames_seen_ = 0;

  // Derived from the above; rebuilt whenever a component changes.
  std::vector<Eigen::VectorXd> inv_variances_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> cholesky_;
  std::vector<double> log_norm_;  // -0.5 (d ln 2pi + ln det Sigma_k)
};

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace cuescope
