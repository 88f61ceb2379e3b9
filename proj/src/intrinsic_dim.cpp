#include "moodspace/intrinsic_dim.hpp"

#include <algorithm>
#include <cmath>

#include "moodspace/errors.hpp"

namespace moodspace {

DimEstimate estimate_dim(const Eigen::MatrixXd& points, std::size_t k_min, std::size_t k_max) {
  const std::size_t n = std::size_t(points.rows());
  if (k_min < 3 || k_max < k_min) throw InvalidInput("estimate_dim: require 3 <= k_min <= k_max");
  if (n <= k_max) throw InvalidInput("estimate_dim: need more points than k_max");
  if (!points.allFinite()) throw InvalidInput("estimate_dim: non-finite input");

  DimEstimate est;
  est.k_min = k_min;
  est.k_max = k_max;
  est.per_point.assign(n, 0.0);

  const std::size_t k_count = k_max - k_min + 1;
  std::vector<double> sum_over_points(k_count, 0.0);
  std::vector<double> dist(n);
  std::vector<double> log_t(k_max);

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::RowVectorXd x = points.row(Eigen::Index(i));
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d2 = (points.row(Eigen::Index(j)) - x).squaredNorm();
      if (d2 > 0.0) dist[m++] = d2;
    }
    if (m < k_max) {
      throw InvalidInput("estimate_dim: point " + std::to_string(i) + " has fewer than k_max distinct neighbors");
    }
    std::partial_sort(dist.begin(), dist.begin() + std::ptrdiff_t(k_max), dist.begin() + std::ptrdiff_t(m));
    for (std::size_t j = 0; j < k_max; ++j) log_t[j] = 0.5 * std::log(dist[j]);

    // Prefix sums of log T_j let every k share one pass.
    double prefix = 0.0;
    double point_sum = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) {
      if (k >= k_min) {
        const double mean_log_ratio = (double(k - 1) * log_t[k - 1] - prefix) / double(k - 1);
        const double m_k = mean_log_ratio > 0.0 ? 1.0 / mean_log_ratio : 0.0;
        sum_over_points[k - k_min] += m_k;
        point_sum += m_k;
      }
      prefix += log_t[k - 1];
    }
    est.per_point[i] = point_sum / double(k_count);
  }

  double total = 0.0;
  for (double s : sum_over_points) total += s / double(n);
  est.g_hat = total / double(k_count);
  const double ambient = double(points.cols());
  est.g_rounded = std::size_t(std::clamp(std::round(est.g_hat), 1.0, ambient));
  return est;
}

std::size_t mood_dimension(const DimEstimate& estimate) {
  return std::max<std::size_t>(2, estimate.g_rounded);
}

}  // namespace moodspace
