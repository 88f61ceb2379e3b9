#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "moodspace/mlp.hpp"
#include "moodspace/spectral.hpp"

namespace moodspace {

/// A scalar loss and its gradient with respect to the argument it was
/// evaluated on (Mood-Space points or decoder outputs).
struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

struct SpectralLoss : LossValue {
  std::vector<double> per_prefix;
  /// Prefixes whose eigengap fell below kDegenerateGap; their value is kept
  /// but they contribute no gradient.
  std::vector<std::size_t> degenerate_prefixes;
};

/**
 * Sum over prefixes i of || P_i(target) - P_i(points) ||_F^2, where P_i is the
 * projector onto the top-i eigenvectors of the symmetrically normalized RBF
 * affinity of `points`.
 *
 * The gradient is exact: first-order eigenvector perturbation between the
 * top-i block and its complement, then back through the degree
 * normalization, the kernel, and (when the bandwidth is not fixed) the
 * median-heuristic bandwidth.
 */
SpectralLoss spectral_loss(const SpectralEmbedding& target, const Eigen::MatrixXd& points,
                           const AffinityParams& params, std::span<const std::size_t> prefixes);

inline constexpr std::size_t kCurvatureNeighbors = 8;

/// Mean squared Menger curvature over seeded triples (i, j, k), with j and k
/// drawn from the 8 nearest neighbors of i. Triples with coincident points
/// contribute zero.
LossValue curvature_loss(const Eigen::MatrixXd& points, std::size_t triples_per_point, std::uint64_t seed);

/// Squared Menger curvature 4 * Area^2 * 4 / (|ab|^2 |ac|^2 |bc|^2).
double menger_curvature_sq(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, const Eigen::RowVectorXd& c);

/// sum over ordered pairs i != j of 1 / (|m_i - m_j|^2 + eps).
LossValue repulsion_loss(const Eigen::MatrixXd& points, double eps = 1e-4);

/// Mean squared error over all entries; gradient is with respect to `predicted`.
LossValue recon_loss(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted);

/// || (1/n) M^T M - I ||_F^2.
LossValue variance_loss(const Eigen::MatrixXd& points);

struct LossWeights {
  double curvature = 1e-5;
  double repulsion = 1e-5;
  double reconstruction = 1.0;
  double variance = 1e-5;
};

struct LossBreakdown {
  double spec = 0.0;
  double curv = 0.0;
  double rep = 0.0;
  double recon = 0.0;
  double var = 0.0;
  double total = 0.0;
  LossWeights weights;
  std::vector<std::size_t> degenerate_prefixes;

  double weighted_sum() const {
    return spec + weights.curvature * curv + weights.repulsion * rep + weights.reconstruction * recon +
           weights.variance * var;
  }
};

struct LossSettings {
  LossWeights weights;
  AffinityParams mood_affinity;  // bandwidth unset: median heuristic every call
  std::vector<std::size_t> prefixes;
  std::size_t curvature_triples = 4;
  double repulsion_eps = 1e-4;
};

struct TotalLoss {
  LossBreakdown breakdown;
  MlpParams encoder_grad;
  MlpParams decoder_grad;
};

/**
 * The full training objective for one step.
 *
 * `v` and `w` are the standardized context tokens (row-aligned). The
 * spectral, curvature, repulsion and variance terms see only the rows listed
 * in `subset` (the fixed sampled subset that `target` was computed on);
 * reconstruction covers every row.
 */
TotalLoss total_loss(const MlpParams& encoder, const MlpParams& decoder, const Eigen::MatrixXd& v,
                     const Eigen::MatrixXd& w, std::span<const std::size_t> subset,
                     const SpectralEmbedding& target, const LossSettings& settings,
                     std::uint64_t curvature_seed);

}  // namespace moodspace
