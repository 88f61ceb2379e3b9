#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "moodspace/errors.hpp"
#include "moodspace/spectral.hpp"
#include "oracles.hpp"

using namespace moodspace;
using namespace moodspace::testing;

TEST_CASE("rbf affinity closed forms") {
  Eigen::MatrixXd p(3, 2);
  p << 0, 0, 1, 1, 0, 0;
  const AffinityMatrix a = rbf_affinity(p, 2.5, 2.0);
  CHECK(a.raw(0, 2) == 2.5);
  CHECK(a.raw(0, 0) == 2.5);
  CHECK(a.raw(0, 1) == doctest::Approx(2.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(a.row_normalized.rowwise().sum().isOnes(1e-12));

  Eigen::MatrixXd two(2, 1);
  two << 0.0, std::sqrt(0.7);
  CHECK(rbf_affinity(two, 1.0, 0.7).raw(0, 1) == doctest::Approx(0.367879441171).epsilon(1e-9));

  CHECK_THROWS_AS(rbf_affinity(p, 1.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(rbf_affinity(p, 0.0, 1.0), InvalidInput);
  p(1, 1) = std::nan("");
  CHECK_THROWS_AS(rbf_affinity(p, 1.0, 1.0), InvalidInput);
}

TEST_CASE("row-normalized affinity does not depend on kappa") {
  const Eigen::MatrixXd p = gaussian_matrix(30, 4, 5);
  const AffinityMatrix base = rbf_affinity(p, 1.0, 3.0);
  for (double kappa : {0.5, 3.0, 7.0}) {
    const AffinityMatrix a = rbf_affinity(p, kappa, 3.0);
    CHECK((a.row_normalized - base.row_normalized).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((a.symmetric_normalized() - base.symmetric_normalized()).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(a.raw.maxCoeff() <= kappa);
    CHECK(a.raw.minCoeff() > 0.0);
    CHECK(a.raw.isApprox(a.raw.transpose(), 0.0));
  }
}

TEST_CASE("median bandwidth") {
  Eigen::MatrixXd line(3, 1);
  line << 0, 1, 2;
  CHECK(median_bandwidth(line) == 1.0);

  CHECK_THROWS_WITH_AS(median_bandwidth(Eigen::MatrixXd::Ones(5, 3)), doctest::Contains("degenerate bandwidth"),
                       InvalidInput);

  const Eigen::MatrixXd small = gaussian_matrix(41, 3, 2);
  CHECK(median_bandwidth(small) == brute_median(squared_distances(small)));
  const Eigen::MatrixXd even = gaussian_matrix(32, 3, 3);
  CHECK(median_bandwidth(even) == doctest::Approx(brute_median(squared_distances(even))).epsilon(1e-15));

  const Eigen::MatrixXd big = gaussian_matrix(1000, 10, 11);
  const double oracle = brute_median(squared_distances(big));
  CHECK(std::abs(median_bandwidth(big) - oracle) <= 0.1 * oracle);
}

TEST_CASE("median pairs point at the entries defining the median") {
  const Eigen::MatrixXd p = gaussian_matrix(9, 2, 8);  // 36 pairs, even count
  const Eigen::MatrixXd sq = squared_distances(p);
  const MedianPairs m = median_pair_distance(sq);
  REQUIRE(m.pairs.size() == 2);
  CHECK(0.5 * (sq(m.pairs[0].first, m.pairs[0].second) + sq(m.pairs[1].first, m.pairs[1].second)) == m.value);
}

TEST_CASE("top_k_eigs on a diagonal matrix") {
  const Eigen::MatrixXd d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const SpectralEmbedding e = top_k_eigs(d, 2);
  CHECK(e.values(0) == doctest::Approx(3.0));
  CHECK(e.values(1) == doctest::Approx(2.0));
  CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(1, 1)) == doctest::Approx(1.0));
  REQUIRE(e.eigengap_at_cut);
  CHECK(*e.eigengap_at_cut == doctest::Approx(1.0));
  CHECK(*e.gap_after(1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(top_k_eigs(d, 4), InvalidInput);
  Eigen::MatrixXd asym = d;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(top_k_eigs(asym, 1), InvalidInput);
}

TEST_CASE("top_k_eigs matches a Jacobi oracle on random symmetric matrices") {
  for (Eigen::Index n : {5, 17, 64}) {
    const Eigen::MatrixXd s = random_symmetric(n, std::uint64_t(n));
    const std::size_t k = std::size_t(n) / 3 + 1;
    const SpectralEmbedding e = top_k_eigs(s, k);
    const JacobiResult oracle = jacobi_eigen(s);
    CHECK((e.values - oracle.values.head(Eigen::Index(k))).cwiseAbs().maxCoeff() <= 1e-7);
    const Eigen::MatrixXd v = oracle.vectors.leftCols(Eigen::Index(k));
    CHECK((projector(e, k).matrix - v * v.transpose()).norm() <= 1e-7);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(Eigen::Index(k), Eigen::Index(k)))
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
    for (Eigen::Index c = 0; c < e.k(); ++c) {
      CHECK((s * e.vectors.col(c) - e.values(c) * e.vectors.col(c)).norm() <= 1e-8 * std::max(1.0, s.norm()));
      if (c > 0) CHECK(e.values(c) <= e.values(c - 1));
    }
  }
}

TEST_CASE("two communities give a block-constant top-2 projector") {
  Eigen::MatrixXd pts(8, 2);
  for (int i = 0; i < 4; ++i) pts.row(i) << 0.0, 0.0;
  for (int i = 4; i < 8; ++i) pts.row(i) << 100.0, 0.0;
  // Exact zero cross edges: build the clique affinity directly.
  AffinityMatrix a = rbf_affinity(pts, 1.0, 1.0);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if ((i < 4) != (j < 4)) a.raw(i, j) = 0.0;
  a.degree = a.raw.rowwise().sum();
  const Eigen::MatrixXd s = a.symmetric_normalized();
  const Eigen::MatrixXd p = projector(top_k_eigs(s, 2), 2).matrix;
  const JacobiResult oracle = jacobi_eigen(s);
  const Eigen::MatrixXd v = oracle.vectors.leftCols(2);
  CHECK((p - v * v.transpose()).norm() < 1e-10);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) CHECK(p(i, j) == doctest::Approx((i < 4) == (j < 4) ? 0.25 : 0.0));
}

TEST_CASE("projector properties") {
  const Eigen::MatrixXd s = random_symmetric(12, 4);
  const SpectralEmbedding full = full_eigs(s);
  CHECK(projector(full, 12).matrix.isApprox(Eigen::MatrixXd::Identity(12, 12), 1e-10));
  const Projector p = projector(full, 5);
  CHECK((p.matrix * p.matrix - p.matrix).norm() < 1e-12);
  CHECK((p.matrix - p.matrix.transpose()).norm() < 1e-14);
  CHECK(p.matrix.trace() == doctest::Approx(5.0));
  CHECK_FALSE(p.degenerate);

  SpectralEmbedding rotated = full;
  rotated.vectors.leftCols(5) = full.vectors.leftCols(5) * random_orthonormal(5, 5, 6);
  CHECK((projector(rotated, 5).matrix - p.matrix).norm() < 1e-12);
  CHECK_THROWS_AS(projector(top_k_eigs(s, 3), 4), InvalidInput);

  const SpectralEmbedding tied = top_k_eigs(Eigen::MatrixXd::Identity(4, 4), 3);
  CHECK(projector(tied, 2).degenerate);
}

TEST_CASE("farthest point sampling") {
  const Eigen::MatrixXd p = gaussian_matrix(25, 3, 1);
  std::vector<std::size_t> all = fps(p, 25, 7);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(25);
  std::iota(expect.begin(), expect.end(), std::size_t(0));
  CHECK(all == expect);

  const auto one = fps(p, 1, 7);
  REQUIRE(one.size() == 1);
  CHECK(one.front() == fps(p, 5, 7).front());
  CHECK(fps(p, 6, 7) == fps(p, 6, 7));
  CHECK_THROWS_AS(fps(p, 26, 0), InvalidInput);

  Eigen::MatrixXd grid(100, 2);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) grid.row(i * 10 + j) << i / 9.0, j / 9.0;
  const auto corners = fps_from(grid, 4, 0);
  CHECK(std::set<std::size_t>(corners.begin(), corners.end()) == std::set<std::size_t>{0, 9, 90, 99});
}

TEST_CASE("fps spreads points at least as well as random subsets") {
  auto min_pair = [](const Eigen::MatrixXd& p, const std::vector<std::size_t>& idx) {
    double best = INFINITY;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        best = std::min(best, (p.row(Eigen::Index(idx[a])) - p.row(Eigen::Index(idx[b]))).squaredNorm());
    return best;
  };
  const Eigen::MatrixXd p = gaussian_matrix(300, 3, 12);
  std::vector<double> fps_min, rnd_min;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    fps_min.push_back(min_pair(p, fps(p, 30, seed)));
    std::vector<std::size_t> idx(300);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(seed));
    idx.resize(30);
    rnd_min.push_back(min_pair(p, idx));
  }
  std::nth_element(fps_min.begin(), fps_min.begin() + 10, fps_min.end());
  std::nth_element(rnd_min.begin(), rnd_min.begin() + 10, rnd_min.end());
  CHECK(fps_min[10] >= rnd_min[10]);
}

namespace {

Eigen::MatrixXd blobs(std::size_t count, std::size_t per, std::uint64_t seed, std::vector<std::size_t>& truth) {
  const Eigen::MatrixXd centers = gaussian_matrix(Eigen::Index(count), 6, seed, 20.0);
  const Eigen::MatrixXd noise = gaussian_matrix(Eigen::Index(count * per), 6, seed + 1, 0.1);
  Eigen::MatrixXd x(noise.rows(), 6);
  truth.clear();
  for (std::size_t i = 0; i < count * per; ++i) {
    const std::size_t b = (i * 7) % count;  // interleave blob ids
    x.row(Eigen::Index(i)) = centers.row(Eigen::Index(b)) + noise.row(Eigen::Index(i));
    truth.push_back(b);
  }
  return x;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

}  // namespace

TEST_CASE("spectral clustering recovers separated blobs") {
  std::vector<std::size_t> truth;
  const Eigen::MatrixXd x = blobs(4, 15, 21, truth);
  const std::vector<Eigen::MatrixXd> images{x, x};
  const TokenClusterMap map = spectral_cluster(images, 4, 3);
  CHECK(same_partition(map.labels[0], truth));
  CHECK(map.labels[0] == map.labels[1]);
  CHECK(map.centroids[0] == map.centroids[1]);
  const TokenClusterMap again = spectral_cluster(images, 4, 3);
  CHECK(again.labels == map.labels);

  const TokenClusterMap single = spectral_cluster(images, 1, 0);
  CHECK(std::all_of(single.labels[0].begin(), single.labels[0].end(), [](std::size_t l) { return l == 0; }));
  CHECK((single.centroids[0].row(0) - x.colwise().mean()).norm() < 1e-12);

  CHECK_THROWS_AS(spectral_cluster(images, 61, 0), InvalidInput);
}

TEST_CASE("cluster matching") {
  const Eigen::MatrixXd src = gaussian_matrix(6, 4, 31);
  const auto id = match_clusters(src, src);
  for (std::size_t i = 0; i < 6; ++i) CHECK(id[i] == i);

  const Eigen::MatrixXd reversed = src.colwise().reverse();
  const auto rev = match_clusters(src, reversed);
  for (std::size_t i = 0; i < 6; ++i) CHECK(rev[i] == 5 - i);

  const Eigen::MatrixXd dst = gaussian_matrix(6, 4, 32);
  const AffinityParams params{1.0, 2.5};
  const auto p = match_clusters(src, dst, params);
  for (Eigen::Index i = 0; i < 6; ++i) {
    Eigen::Index best = 0;
    double best_a = -1.0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double a = std::exp(-(src.row(i) - dst.row(j)).squaredNorm() / 2.5);
      if (a > best_a) best_a = a, best = j;
    }
    CHECK(p[std::size_t(i)] == std::size_t(best));
  }
  CHECK_THROWS_AS(match_clusters(src, dst.topRows(3)), InvalidInput);
}

TEST_CASE("default prefixes") {
  CHECK(default_prefixes(32) == std::vector<std::size_t>{4, 8, 16, 32});
  CHECK(default_prefixes(20) == std::vector<std::size_t>{4, 8, 16, 20});
  CHECK(default_prefixes(3) == std::vector<std::size_t>{3});
}
