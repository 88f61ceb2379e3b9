#include "moodspace/mlp.hpp"

#include <cmath>

#include "moodspace/errors.hpp"
#include "moodspace/random.hpp"

namespace moodspace {

namespace {

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Eigen::MatrixXd leaky_relu_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& upstream) {
  return upstream.binaryExpr(z, [](double g, double v) { return v > 0.0 ? g : kLeakySlope * g; });
}

}  // namespace

void MlpParams::validate() const {
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    const auto& layer = layers[l];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0) throw InvalidInput("mlp: empty layer");
    if (layer.bias.size() != layer.weight.cols()) throw InvalidInput("mlp: bias size mismatch");
    if (l > 0 && layers[l - 1].weight.cols() != layer.weight.rows()) {
      throw InvalidInput("mlp: layer " + std::to_string(l) + " does not chain with its predecessor");
    }
  }
  if (!all_finite()) throw InvalidInput("mlp: non-finite parameters");
}

MlpParams MlpParams::zeros_like(const MlpParams& other) {
  MlpParams out;
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    out.layers[l].weight = Eigen::MatrixXd::Zero(other.layers[l].weight.rows(), other.layers[l].weight.cols());
    out.layers[l].bias = Eigen::RowVectorXd::Zero(other.layers[l].bias.size());
  }
  return out;
}

double MlpParams::squared_norm() const {
  double s = 0.0;
  for (const auto& layer : layers) s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return s;
}

void MlpParams::scale(double factor) {
  for (auto& layer : layers) {
    layer.weight *= factor;
    layer.bias *= factor;
  }
}

bool MlpParams::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += std::size_t(layer.weight.size() + layer.bias.size());
  return n;
}

MlpParams mlp_init(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed, std::size_t hidden) {
  if (in_dim == 0 || out_dim == 0 || hidden == 0) throw InvalidInput("mlp_init: dimensions must be positive");
  const std::array<std::size_t, kMlpLayers + 1> widths{in_dim, hidden, hidden, hidden, out_dim};
  Rng rng(seed);
  MlpParams p;
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    const auto fan_in = Eigen::Index(widths[l]);
    const auto fan_out = Eigen::Index(widths[l + 1]);
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    p.layers[l].weight.resize(fan_in, fan_out);
    // Row-major fill order keeps draws independent of Eigen's storage order.
    for (Eigen::Index r = 0; r < fan_in; ++r) {
      for (Eigen::Index c = 0; c < fan_out; ++c) p.layers[l].weight(r, c) = rng.uniform(-limit, limit);
    }
    p.layers[l].bias = Eigen::RowVectorXd::Zero(fan_out);
  }
  return p;
}

MlpForward mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.in_dim()) throw InvalidInput("mlp_forward: input dimension mismatch");
  if (!x.allFinite()) throw InvalidInput("mlp_forward: non-finite input");
  MlpForward f;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = h * layer.weight;
    z.rowwise() += layer.bias;
    if (!z.allFinite()) throw NumericalError("mlp_forward: non-finite value at layer " + std::to_string(l));
    f.cache.inputs[l] = std::move(h);
    if (l + 1 < kMlpLayers) {
      h = leaky_relu(z);
      f.cache.pre_activation[l] = std::move(z);
    } else {
      f.output = std::move(z);
    }
  }
  return f;
}

Eigen::MatrixXd mlp_apply(const MlpParams& params, const Eigen::MatrixXd& x) {
  return mlp_forward(params, x).output;
}

MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache, const Eigen::MatrixXd& output_grad) {
  if (output_grad.cols() != params.out_dim() || output_grad.rows() != cache.inputs[0].rows()) {
    throw InvalidInput("mlp_backward: gradient shape does not match the cached forward pass");
  }
  MlpBackward b;
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t l = kMlpLayers; l-- > 0;) {
    const auto& layer = params.layers[l];
    b.grads.layers[l].weight = cache.inputs[l].transpose() * delta;
    b.grads.layers[l].bias = delta.colwise().sum();
    Eigen::MatrixXd upstream = delta * layer.weight.transpose();
    if (l > 0) {
      delta = leaky_relu_grad(cache.pre_activation[l - 1], upstream);
    } else {
      b.input_grad = std::move(upstream);
    }
  }
  return b;
}

AdamState AdamState::for_params(const MlpParams& params) {
  return AdamState{0, MlpParams::zeros_like(params), MlpParams::zeros_like(params)};
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state, const AdamConfig& config) {
  if (!grads.all_finite()) throw NumericalError("adam_step: non-finite gradient");
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    if (grads.layers[l].weight.rows() != params.layers[l].weight.rows() ||
        grads.layers[l].weight.cols() != params.layers[l].weight.cols() ||
        grads.layers[l].bias.size() != params.layers[l].bias.size()) {
      throw InvalidInput("adam_step: gradient shape mismatch");
    }
  }
  state.step += 1;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    param.array() -= config.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config.eps);
  };
  for (std::size_t l = 0; l < kMlpLayers; ++l) {
    update(params.layers[l].weight, grads.layers[l].weight, state.first_moment.layers[l].weight,
           state.second_moment.layers[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias);
  }
}

}  // namespace moodspace
