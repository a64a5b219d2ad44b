#include "rmrp/random_features.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

#include "rmrp/rng.hpp"

namespace rmrp {

RandomFeatureMap RandomFeatureMap::build(int input_dim, int feature_dim,
                                         std::uint64_t seed, double scale) {
  if (input_dim != 2 && input_dim != 3) {
    throw std::invalid_argument("feature map input_dim must be 2 or 3, got " +
                                std::to_string(input_dim));
  }
  if (feature_dim < 1) {
    throw std::invalid_argument("feature map dimension M must be >= 1");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("feature map scale must be positive");
  }
  Rng rng(seed);
  Eigen::MatrixXd weights(feature_dim, input_dim);
  for (int i = 0; i < feature_dim; ++i) {
    for (int j = 0; j < input_dim; ++j) weights(i, j) = rng.uniform(-scale, scale);
  }
  Eigen::VectorXd biases(feature_dim);
  for (int i = 0; i < feature_dim; ++i) {
    biases(i) = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return RandomFeatureMap(std::move(weights), std::move(biases), seed, scale);
}

RandomFeatureMap::RandomFeatureMap(Eigen::MatrixXd weights, Eigen::VectorXd biases,
                                   std::uint64_t seed, double scale,
                                   Activation activation)
    : weights_(std::move(weights)),
      biases_(std::move(biases)),
      seed_(seed),
      scale_(scale),
      activation_(activation) {
  if (weights_.rows() != biases_.size()) {
    throw std::invalid_argument("feature map: weights rows != biases length");
  }
  if (weights_.rows() < 1) {
    throw std::invalid_argument("feature map dimension M must be >= 1");
  }
}

void RandomFeatureMap::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights_.cols()) {
    throw std::invalid_argument("feature map: input has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(weights_.cols()));
  }
}

namespace {

// Fixed accumulation order shared by every query so that value, gradient and
// batch kernels see bit-identical phases.
inline double phase_of(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                       Eigen::Index i, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double phase = b(i);
  for (Eigen::Index j = 0; j < w.cols(); ++j) phase += w(i, j) * x(j);
  return phase;
}

}  // namespace

Eigen::VectorXd RandomFeatureMap::phases(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::VectorXd out(weights_.rows());
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) out(i) = phase_of(weights_, biases_, i, x);
  return out;
}

Eigen::VectorXd RandomFeatureMap::lift(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(feature_dim());
  lift_into(x, out);
  return out;
}

void RandomFeatureMap::lift_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 Eigen::Ref<Eigen::VectorXd> out) const {
  check_input(x);
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    out(i) = std::sin(phase_of(weights_, biases_, i, x));
  }
}

Eigen::MatrixXd RandomFeatureMap::lift_jacobian(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::MatrixXd jac(weights_.rows(), weights_.cols());
  for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
    jac.row(i) = std::cos(phase_of(weights_, biases_, i, x)) * weights_.row(i);
  }
  return jac;
}

}  // namespace rmrp
