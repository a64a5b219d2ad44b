#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rmrp {

enum class Task : std::uint8_t { kClassification = 0, kRegression = 1 };

/// Linear head on projected features: eta for classification, beta for
/// regression. Length equals the projection's row count k.
struct LinearHead {
  Eigen::VectorXd weights;
  Task task = Task::kRegression;

  double score(const Eigen::Ref<const Eigen::VectorXd>& features) const;
};

struct RidgeConfig {
  double alpha = 0.01;
};

/// AdamW hyperparameters. rate1/rate2 are the moment decay rates.
struct AdamWConfig {
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
  double rate1 = 0.9;
  double rate2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamWState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;
  AdamWConfig config;

  static AdamWState zeros(int k, const AdamWConfig& config = {});
};

/// Minimizes ||eta^T F - T||^2 + alpha ||eta||^2 for features F (k x L)
/// through the k x k normal equations and a Cholesky factorization.
LinearHead ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       const Eigen::Ref<const Eigen::VectorXd>& targets,
                       const RidgeConfig& config, Task task = Task::kRegression);

/// Solves (gram + alpha I) w = rhs. Shared by the batched trainers, which
/// accumulate gram = F F^T and rhs = F T block by block.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                       double alpha);

/// -(t - eta . s) s, the gradient of 0.5 (t - eta . s)^2 in eta.
Eigen::VectorXd streaming_gradient(const LinearHead& head,
                                   const Eigen::Ref<const Eigen::VectorXd>& feature,
                                   double target);

/// One AdamW update. Decay is applied to the pre-update weights. Rejects a
/// non-finite gradient before touching head or state.
void adamw_step(LinearHead& head, AdamWState& state,
                const Eigen::Ref<const Eigen::VectorXd>& gradient);

}  // namespace rmrp
