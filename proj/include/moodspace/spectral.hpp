#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace moodspace {

/// Kernel parameters for RBF affinities. An unset bandwidth means "median
/// heuristic on the points at hand".
struct AffinityParams {
  double kappa = 1.0;
  std::optional<double> bandwidth;
};

/// RBF affinity over n points: raw(i,j) = kappa * exp(-|p_i - p_j|^2 / h).
struct AffinityMatrix {
  double kappa = 1.0;
  double bandwidth = 1.0;
  Eigen::MatrixXd raw;
  Eigen::MatrixXd row_normalized;
  Eigen::VectorXd degree;

  Eigen::Index n() const { return raw.rows(); }
  /// D^{-1/2} raw D^{-1/2}; same spectrum as row_normalized.
  Eigen::MatrixXd symmetric_normalized() const;
};

AffinityMatrix rbf_affinity(const Eigen::MatrixXd& points, double kappa, double bandwidth);

/// Pairwise squared distances, n x n, exactly symmetric with a zero diagonal.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points);

/// kappa * exp(-sq_dist / bandwidth), computed once per pair so the result is
/// exactly symmetric.
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& sq_dist, double kappa, double bandwidth);
/// Median of the pairwise squared distances. Point sets larger than
/// kMedianSubsetSize are first reduced to a seeded uniform subsample.
inline constexpr std::size_t kMedianSubsetSize = 512;
double median_bandwidth(const Eigen::MatrixXd& points);

/// The pair(s) of indices whose squared distance defines the median
/// (one pair for an odd pair count, two for an even count).
struct MedianPairs {
  double value = 0.0;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
};
MedianPairs median_pair_distance(const Eigen::MatrixXd& sq_dist);

/// Eigenpairs sorted by non-increasing eigenvalue.
struct SpectralEmbedding {
  Eigen::MatrixXd vectors;  // n x k, orthonormal columns
  Eigen::VectorXd values;   // k values, non-increasing
  /// values[k-1] - (k+1)-th eigenvalue, when k < n.
  std::optional<double> eigengap_at_cut;

  Eigen::Index n() const { return vectors.rows(); }
  Eigen::Index k() const { return vectors.cols(); }
  /// Gap between eigenvalue `prefix` and `prefix + 1` (1-based); nullopt when
  /// the following eigenvalue was not retained.
  std::optional<double> gap_after(std::size_t prefix) const;
};

/// Eigen pairs whose gap below this threshold make a prefix projector non-differentiable.
inline constexpr double kDegenerateGap = 1e-10;

/// Full decomposition of a symmetric matrix, eigenvalues non-increasing.
SpectralEmbedding full_eigs(const Eigen::MatrixXd& symmetric);

/// The k largest eigenpairs of a symmetric matrix.
SpectralEmbedding top_k_eigs(const Eigen::MatrixXd& symmetric, std::size_t k);

/// Top-k spectral embedding of a point set: RBF affinity followed by
/// symmetric normalization.
SpectralEmbedding affinity_embedding(const Eigen::MatrixXd& points, std::size_t k,
                                     const AffinityParams& params = {});

struct Projector {
  Eigen::MatrixXd matrix;
  bool degenerate = false;  // eigengap after the prefix below kDegenerateGap
};

/// E[:, :i] * E[:, :i]^T.
Projector projector(const SpectralEmbedding& embedding, std::size_t prefix);

/// Farthest point sampling; the first index is drawn uniformly from `seed`.
std::vector<std::size_t> fps(const Eigen::MatrixXd& points, std::size_t m, std::uint64_t seed);
/// Farthest point sampling from an explicit start index.
std::vector<std::size_t> fps_from(const Eigen::MatrixXd& points, std::size_t m, std::size_t start);

/// Per-image token clusters.
struct TokenClusterMap {
  std::size_t clusters = 0;                        // H
  std::vector<std::vector<std::size_t>> labels;    // [image][token] in [0, H)
  std::vector<Eigen::MatrixXd> centroids;          // [image] H x d, original feature space
};

/// Clusters each image's tokens separately: k-means on the row-normalized
/// top-H eigenvectors of the image's token affinity.
TokenClusterMap spectral_cluster(std::span<const Eigen::MatrixXd> images, std::size_t clusters,
                                 std::uint64_t seed);

/// P(i) = argmax_j affinity(src_i, dst_j), ties to the lowest j. An unset
/// bandwidth uses the median heuristic over both centroid sets.
std::vector<std::size_t> match_clusters(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst,
                                        const AffinityParams& params = {});

/// Prefix sizes 4, 8, 16, ... capped by and always including k.
std::vector<std::size_t> default_prefixes(std::size_t k);

}  // namespace moodspace
