#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rmrp {

enum class Activation : std::uint8_t { kSine = 0 };

/// Fixed random lift x -> g(W x + b) into an M-dimensional feature space.
///
/// W is M x input_dim with entries uniform on [-scale, scale]; b is uniform
/// on [0, 2*pi). Both are drawn from a single seeded stream (W row-major,
/// then b), so (seed, input_dim, M, scale) reproduce the map bit-exactly.
/// Immutable after construction; all queries are const and thread-safe.
class RandomFeatureMap {
 public:
  static RandomFeatureMap build(int input_dim, int feature_dim,
                                std::uint64_t seed, double scale = 1.0);

  /// Adopts explicit parameters (checkpoint loading, hand-built test maps).
  RandomFeatureMap(Eigen::MatrixXd weights, Eigen::VectorXd biases,
                   std::uint64_t seed = 0, double scale = 1.0,
                   Activation activation = Activation::kSine);

  int input_dim() const { return static_cast<int>(weights_.cols()); }
  int feature_dim() const { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& biases() const { return biases_; }
  std::uint64_t seed() const { return seed_; }
  double scale() const { return scale_; }
  Activation activation() const { return activation_; }

  /// Phase vector W x + b.
  Eigen::VectorXd phases(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// sin(W x + b).
  Eigen::VectorXd lift(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void lift_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) const;

  /// Row i is cos(W_i x + b_i) W_i.
  Eigen::MatrixXd lift_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  Eigen::MatrixXd weights_;
  Eigen::VectorXd biases_;
  std::uint64_t seed_;
  double scale_;
  Activation activation_;
};

}  // namespace rmrp
