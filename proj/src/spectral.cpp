#include "moodspace/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "moodspace/errors.hpp"
#include "moodspace/random.hpp"

namespace moodspace {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite input");
}

struct PairDistance {
  double value;
  Eigen::Index i;
  Eigen::Index j;
  bool operator<(const PairDistance& o) const {
    if (value != o.value) return value < o.value;
    if (i != o.i) return i < o.i;
    return j < o.j;
  }
};

// Flip each column so its largest-magnitude entry is positive.
void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0) vectors.col(c) *= -1.0;
  }
}

}  // namespace

Eigen::MatrixXd AffinityMatrix::symmetric_normalized() const {
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  return inv_sqrt.asDiagonal() * raw * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (points.row(i) - points.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& sq_dist, double kappa, double bandwidth) {
  const Eigen::Index n = sq_dist.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = kappa * std::exp(-sq_dist(j, j) / bandwidth);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = kappa * std::exp(-sq_dist(i, j) / bandwidth);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

AffinityMatrix rbf_affinity(const Eigen::MatrixXd& points, double kappa, double bandwidth) {
  if (points.rows() < 2) throw InvalidInput("rbf_affinity: need at least two points");
  require_finite(points, "rbf_affinity");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidInput("rbf_affinity: kappa must be positive");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidInput("rbf_affinity: bandwidth must be positive");
  }
  AffinityMatrix a;
  a.kappa = kappa;
  a.bandwidth = bandwidth;
  a.raw = rbf_kernel(squared_distances(points), kappa, bandwidth);
  a.degree = a.raw.rowwise().sum();
  a.row_normalized = a.degree.cwiseInverse().asDiagonal() * a.raw;
  return a;
}

MedianPairs median_pair_distance(const Eigen::MatrixXd& sq_dist) {
  const Eigen::Index n = sq_dist.rows();
  if (n < 2) throw InvalidInput("median bandwidth: need at least two points");
  std::vector<PairDistance> pairs;
  pairs.reserve(std::size_t(n) * std::size_t(n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.push_back({sq_dist(i, j), i, j});
  }
  // Coincident pairs carry no scale; fall back to nonzero distances when they dominate.
  const std::size_t zeros = std::size_t(std::count_if(pairs.begin(), pairs.end(),
                                                      [](const PairDistance& p) { return p.value <= 0.0; }));
  if (zeros == pairs.size()) throw InvalidInput("degenerate bandwidth: all points coincide");
  if (2 * zeros >= pairs.size()) {
    std::erase_if(pairs, [](const PairDistance& p) { return p.value <= 0.0; });
  }

  MedianPairs out;
  const std::size_t mid = pairs.size() / 2;
  std::nth_element(pairs.begin(), pairs.begin() + std::ptrdiff_t(mid), pairs.end());
  const PairDistance upper = pairs[mid];
  if (pairs.size() % 2 == 1) {
    out.value = upper.value;
    out.pairs = {{upper.i, upper.j}};
  } else {
    const PairDistance lower = *std::max_element(pairs.begin(), pairs.begin() + std::ptrdiff_t(mid));
    out.value = 0.5 * (lower.value + upper.value);
    out.pairs = {{lower.i, lower.j}, {upper.i, upper.j}};
  }
  return out;
}

double median_bandwidth(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw InvalidInput("median bandwidth: need at least two points");
  require_finite(points, "median_bandwidth");
  if (std::size_t(points.rows()) > kMedianSubsetSize) {
    // Seeded uniform subsample: partial Fisher-Yates over the row indices.
    std::vector<Eigen::Index> idx(std::size_t(points.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index(0));
    Rng rng(0);
    for (std::size_t r = 0; r < kMedianSubsetSize; ++r) {
      std::swap(idx[r], idx[r + std::size_t(rng.index(idx.size() - r))]);
    }
    Eigen::MatrixXd sub(Eigen::Index(kMedianSubsetSize), points.cols());
    for (std::size_t r = 0; r < kMedianSubsetSize; ++r) sub.row(Eigen::Index(r)) = points.row(idx[r]);
    return median_pair_distance(squared_distances(sub)).value;
  }
  return median_pair_distance(squared_distances(points)).value;
}

std::optional<double> SpectralEmbedding::gap_after(std::size_t prefix) const {
  if (prefix == 0 || prefix > std::size_t(k())) return std::nullopt;
  if (prefix < std::size_t(k())) return values(Eigen::Index(prefix) - 1) - values(Eigen::Index(prefix));
  return eigengap_at_cut;
}

SpectralEmbedding full_eigs(const Eigen::MatrixXd& symmetric) {
  return top_k_eigs(symmetric, std::size_t(symmetric.rows()));
}

SpectralEmbedding top_k_eigs(const Eigen::MatrixXd& symmetric, std::size_t k) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n || n == 0) throw InvalidInput("top_k_eigs: matrix must be square and non-empty");
  require_finite(symmetric, "top_k_eigs");
  if (k < 1 || k > std::size_t(n)) throw InvalidInput("top_k_eigs: k must satisfy 1 <= k <= n");
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw InvalidInput("top_k_eigs: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) throw NumericalError("top_k_eigs: eigensolver did not converge");

  // Eigen returns ascending order.
  SpectralEmbedding e;
  const Eigen::Index kk = Eigen::Index(k);
  e.values = solver.eigenvalues().reverse().head(kk);
  e.vectors = solver.eigenvectors().rowwise().reverse().leftCols(kk);
  canonicalize_signs(e.vectors);
  if (kk < n) e.eigengap_at_cut = e.values(kk - 1) - solver.eigenvalues()(n - 1 - kk);
  return e;
}

SpectralEmbedding affinity_embedding(const Eigen::MatrixXd& points, std::size_t k,
                                     const AffinityParams& params) {
  const double h = params.bandwidth ? *params.bandwidth : median_bandwidth(points);
  return top_k_eigs(rbf_affinity(points, params.kappa, h).symmetric_normalized(), k);
}

Projector projector(const SpectralEmbedding& embedding, std::size_t prefix) {
  if (prefix > std::size_t(embedding.k())) throw InvalidInput("projector: prefix exceeds k");
  const auto block = embedding.vectors.leftCols(Eigen::Index(prefix));
  Projector p;
  p.matrix = block * block.transpose();
  const auto gap = embedding.gap_after(prefix);
  p.degenerate = gap.has_value() && *gap < kDegenerateGap;
  return p;
}

std::vector<std::size_t> fps(const Eigen::MatrixXd& points, std::size_t m, std::uint64_t seed) {
  if (points.rows() == 0) throw InvalidInput("fps: empty point set");
  Rng rng(seed);
  return fps_from(points, m, std::size_t(rng.index(std::uint64_t(points.rows()))));
}

std::vector<std::size_t> fps_from(const Eigen::MatrixXd& points, std::size_t m, std::size_t start) {
  const std::size_t n = std::size_t(points.rows());
  if (m < 1 || m > n) throw InvalidInput("fps: sample count must satisfy 1 <= m <= n");
  if (start >= n) throw InvalidInput("fps: start index out of range");

  std::vector<std::size_t> chosen{start};
  chosen.reserve(m);
  Eigen::VectorXd min_dist = (points.rowwise() - points.row(Eigen::Index(start))).rowwise().squaredNorm();
  min_dist(Eigen::Index(start)) = -std::numeric_limits<double>::infinity();
  while (chosen.size() < m) {
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_dist(Eigen::Index(i)) > best_dist) {
        best_dist = min_dist(Eigen::Index(i));
        best = i;
      }
    }
    chosen.push_back(best);
    const Eigen::VectorXd d = (points.rowwise() - points.row(Eigen::Index(best))).rowwise().squaredNorm();
    min_dist = min_dist.cwiseMin(d);
    min_dist(Eigen::Index(best)) = -std::numeric_limits<double>::infinity();
  }
  return chosen;
}

namespace {

constexpr int kKMeansMaxIterations = 100;
constexpr int kKMeansAttempts = 5;

std::vector<std::size_t> assign(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers) {
  std::vector<std::size_t> labels(std::size_t(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    labels[std::size_t(i)] = std::size_t(best);
  }
  return labels;
}

Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& x, std::size_t h, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(Eigen::Index(h), x.cols());
  centers.row(0) = x.row(Eigen::Index(rng.index(std::uint64_t(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < h; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2(pick);
        if (target < 0.0) break;
      }
    } else {
      pick = Eigen::Index(rng.index(std::uint64_t(n)));
    }
    centers.row(Eigen::Index(c)) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(Eigen::Index(c))).rowwise().squaredNorm());
  }
  return centers;
}

// Lloyd iterations; returns labels, or nullopt when a cluster ends up empty.
std::optional<std::vector<std::size_t>> kmeans(const Eigen::MatrixXd& x, std::size_t h, Rng& rng) {
  Eigen::MatrixXd centers = kmeans_pp_init(x, h, rng);
  std::vector<std::size_t> labels = assign(x, centers);
  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(Eigen::Index(h), x.cols());
    std::vector<std::size_t> counts(h, 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      sums.row(Eigen::Index(labels[std::size_t(i)])) += x.row(i);
      ++counts[labels[std::size_t(i)]];
    }
    for (std::size_t c = 0; c < h; ++c) {
      if (counts[c] > 0) centers.row(Eigen::Index(c)) = sums.row(Eigen::Index(c)) / double(counts[c]);
    }
    auto next = assign(x, centers);
    const bool converged = next == labels;
    labels = std::move(next);
    if (converged) break;
  }
  std::vector<std::size_t> counts(h, 0);
  for (auto l : labels) ++counts[l];
  if (std::find(counts.begin(), counts.end(), 0u) != counts.end()) return std::nullopt;
  return labels;
}

Eigen::MatrixXd cluster_centroids(const Eigen::MatrixXd& features, const std::vector<std::size_t>& labels,
                                  std::size_t h) {
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(Eigen::Index(h), features.cols());
  std::vector<std::size_t> counts(h, 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    centroids.row(Eigen::Index(labels[std::size_t(i)])) += features.row(i);
    ++counts[labels[std::size_t(i)]];
  }
  for (std::size_t c = 0; c < h; ++c) centroids.row(Eigen::Index(c)) /= double(counts[c]);
  return centroids;
}

}  // namespace

TokenClusterMap spectral_cluster(std::span<const Eigen::MatrixXd> images, std::size_t clusters,
                                 std::uint64_t seed) {
  if (clusters < 1) throw InvalidInput("spectral_cluster: cluster count must be positive");
  TokenClusterMap map;
  map.clusters = clusters;
  for (std::size_t img = 0; img < images.size(); ++img) {
    const Eigen::MatrixXd& features = images[img];
    if (std::size_t(features.rows()) < clusters) {
      std::ostringstream msg;
      msg << "spectral_cluster: " << clusters << " clusters requested but image " << img << " has only "
          << features.rows() << " tokens";
      throw InvalidInput(msg.str());
    }
    std::vector<std::size_t> labels(std::size_t(features.rows()), 0);
    if (clusters > 1) {
      Eigen::MatrixXd rows = affinity_embedding(features, clusters).vectors;
      for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const double norm = rows.row(r).norm();
        if (norm > 0.0) rows.row(r) /= norm;
      }
      std::optional<std::vector<std::size_t>> result;
      for (int attempt = 0; attempt < kKMeansAttempts && !result; ++attempt) {
        Rng rng(seed + std::uint64_t(attempt) * 0x9E3779B97F4A7C15ull);
        result = kmeans(rows, clusters, rng);
      }
      if (!result) {
        throw NumericalError("spectral_cluster: empty cluster after " + std::to_string(kKMeansAttempts) +
                             " k-means restarts (image " + std::to_string(img) + ")");
      }
      labels = std::move(*result);
    }
    map.centroids.push_back(cluster_centroids(features, labels, clusters));
    map.labels.push_back(std::move(labels));
  }
  return map;
}

std::vector<std::size_t> match_clusters(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst,
                                        const AffinityParams& params) {
  if (src.cols() != dst.cols() || src.rows() != dst.rows() || src.rows() == 0) {
    throw InvalidInput("match_clusters: centroid sets must have identical shapes");
  }
  double h = 1.0;
  if (params.bandwidth) {
    h = *params.bandwidth;
  } else {
    Eigen::MatrixXd both(src.rows() + dst.rows(), src.cols());
    both << src, dst;
    try {
      h = median_bandwidth(both);
    } catch (const InvalidInput&) {
      h = 1.0;  // all centroids coincide; every affinity ties
    }
  }
  std::vector<std::size_t> p(std::size_t(src.rows()));
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    double best = -1.0;
    for (Eigen::Index j = 0; j < dst.rows(); ++j) {
      const double a = params.kappa * std::exp(-(src.row(i) - dst.row(j)).squaredNorm() / h);
      if (a > best) {
        best = a;
        p[std::size_t(i)] = std::size_t(j);
      }
    }
  }
  return p;
}

std::vector<std::size_t> default_prefixes(std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 4; i < k; i *= 2) out.push_back(i);
  if (k > 0) out.push_back(k);
  return out;
}

}  // namespace moodspace
