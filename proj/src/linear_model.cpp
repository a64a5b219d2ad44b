#include "rmrp/linear_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rmrp {

double LinearHead::score(const Eigen::Ref<const Eigen::VectorXd>& features) const {
  if (features.size() != weights.size()) {
    throw std::invalid_argument("head: feature length " + std::to_string(features.size()) +
                                " != k=" + std::to_string(weights.size()));
  }
  return weights.dot(features);
}

void AdamWConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("AdamW learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("AdamW weight decay must be >= 0");
  if (!(rate1 > 0.0 && rate1 < 1.0) || !(rate2 > 0.0 && rate2 < 1.0)) {
    throw std::invalid_argument("AdamW decay rates must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("AdamW epsilon must be > 0");
}

AdamWState AdamWState::zeros(int k, const AdamWConfig& config) {
  config.validate();
  AdamWState s;
  s.first_moment = Eigen::VectorXd::Zero(k);
  s.second_moment = Eigen::VectorXd::Zero(k);
  s.config = config;
  return s;
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                                       double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("ridge alpha must be >= 0");
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    const double largest = system.diagonal().cwiseAbs().maxCoeff();
    singular = diag.minCoeff() * diag.minCoeff() <= 1e-13 * std::max(largest, 1e-300);
  }
  if (singular) {
    throw std::runtime_error(
        "ridge normal equations are singular; use a regularization alpha > 0");
  }
  return llt.solve(rhs);
}

LinearHead ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       const Eigen::Ref<const Eigen::VectorXd>& targets,
                       const RidgeConfig& config, Task task) {
  if (features.cols() < 1) throw std::invalid_argument("ridge_solve needs L >= 1 samples");
  if (features.cols() != targets.size()) {
    throw std::invalid_argument("ridge_solve: features/targets sample count mismatch");
  }
  if (!features.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("ridge_solve: non-finite input");
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(features.rows(), features.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(features);
  gram = gram.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd rhs = features * targets;
  return LinearHead{solve_normal_equations(gram, rhs, config.alpha), task};
}

Eigen::VectorXd streaming_gradient(const LinearHead& head,
                                   const Eigen::Ref<const Eigen::VectorXd>& feature,
                                   double target) {
  const double residual = target - head.score(feature);
  return -residual * feature;
}

void adamw_step(LinearHead& head, AdamWState& state,
                const Eigen::Ref<const Eigen::VectorXd>& gradient) {
  if (!gradient.allFinite()) throw std::invalid_argument("adamw_step: non-finite gradient");
  const Eigen::Index k = head.weights.size();
  if (gradient.size() != k || state.first_moment.size() != k || state.second_moment.size() != k) {
    throw std::invalid_argument("adamw_step: state/gradient length does not match head");
  }
  const AdamWConfig& c = state.config;
  state.step += 1;
  state.first_moment = c.rate1 * state.first_moment + (1.0 - c.rate1) * gradient;
  state.second_moment =
      c.rate2 * state.second_moment + (1.0 - c.rate2) * gradient.cwiseProduct(gradient);
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.rate1, t);
  const double correction2 = 1.0 - std::pow(c.rate2, t);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double m_hat = state.first_moment(i) / correction1;
    const double v_hat = state.second_moment(i) / correction2;
    const double previous = head.weights(i);
    head.weights(i) =
        previous - c.learning_rate * (m_hat / (std::sqrt(v_hat) + c.epsilon) +
                                      c.weight_decay * previous);
  }
}

}  // namespace rmrp
