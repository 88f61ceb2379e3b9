#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace moodspace {

inline constexpr std::size_t kHiddenUnits = 512;
inline constexpr std::size_t kMlpLayers = 4;
inline constexpr double kLeakySlope = 0.01;

/// Affine layer acting on row vectors: y = x * weight + bias.
struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::RowVectorXd bias;  // out
};

/// Token-wise 4-layer perceptron with leaky-ReLU between layers and a
/// linear output. The same struct holds gradients and optimizer moments.
struct MlpParams {
  std::array<DenseLayer, kMlpLayers> layers;

  Eigen::Index in_dim() const { return layers.front().weight.rows(); }
  Eigen::Index out_dim() const { return layers.back().weight.cols(); }
  Eigen::Index hidden_dim() const { return layers.front().weight.cols(); }

  /// Checks shape chaining and finiteness; throws InvalidInput.
  void validate() const;

  static MlpParams zeros_like(const MlpParams& other);
  double squared_norm() const;
  void scale(double factor);
  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Glorot-uniform weights, zero biases.
MlpParams mlp_init(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed,
                   std::size_t hidden = kHiddenUnits);

/// Activations kept by the forward pass for backpropagation.
struct MlpCache {
  std::array<Eigen::MatrixXd, kMlpLayers> inputs;           // input to each layer
  std::array<Eigen::MatrixXd, kMlpLayers - 1> pre_activation;  // hidden pre-activations
};

struct MlpForward {
  Eigen::MatrixXd output;
  MlpCache cache;
};

/// Forward pass over the rows of x. Throws NumericalError naming the layer
/// if an intermediate becomes non-finite.
MlpForward mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);
/// Forward pass without keeping a cache.
Eigen::MatrixXd mlp_apply(const MlpParams& params, const Eigen::MatrixXd& x);

struct MlpBackward {
  MlpParams grads;
  Eigen::MatrixXd input_grad;
};

MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache, const Eigen::MatrixXd& output_grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  MlpParams first_moment;
  MlpParams second_moment;

  static AdamState for_params(const MlpParams& params);
};

/// One bias-corrected Adam update. A non-finite gradient throws
/// NumericalError and leaves params and state untouched.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, const AdamConfig& config);

}  // namespace moodspace
