#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace moodspace {

struct DimEstimate {
  double g_hat = 0.0;
  std::size_t g_rounded = 1;  // round(g_hat) clamped to [1, ambient dim]
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::vector<double> per_point;  // mean over k of each point's estimate
};

/**
 * Levina-Bickel maximum-likelihood intrinsic dimension.
 *
 * For each point x and neighbor count k the local estimate is
 *   m_k(x) = [ 1/(k-1) * sum_{j<k} ln(T_k(x) / T_j(x)) ]^{-1}
 * where T_j is the distance to the j-th nearest distinct neighbor. The
 * result averages m_k over all points and all k in [k_min, k_max].
 *
 * Coincident neighbors (T_j = 0) are skipped. Throws InvalidInput when
 * n <= k_max, k_min < 3, or a point has fewer than k_max distinct neighbors.
 */
DimEstimate estimate_dim(const Eigen::MatrixXd& points, std::size_t k_min = 10, std::size_t k_max = 20);

/// Mood Space size from an estimate: nearest integer, at least 2.
std::size_t mood_dimension(const DimEstimate& estimate);

}  // namespace moodspace
