#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "moodspace/embedding_io.hpp"

// Synthetic data sets shared by the unit and acceptance tests.
namespace moodspace::testing {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

/// Random orthonormal columns (rows x cols, rows >= cols) via QR.
inline Eigen::MatrixXd random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  const Eigen::MatrixXd g = gaussian_matrix(rows, rows, seed);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return Eigen::MatrixXd(qr.householderQ()).leftCols(cols);
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index n, std::uint64_t seed) {
  const Eigen::MatrixXd g = gaussian_matrix(n, n, seed);
  return 0.5 * (g + g.transpose());
}

/// n points uniform in [0,1]^d, embedded isometrically in `ambient` dims.
inline Eigen::MatrixXd rotated_cube(Eigen::Index n, Eigen::Index d, Eigen::Index ambient, std::uint64_t seed) {
  const Eigen::MatrixXd cube = uniform_matrix(n, d, seed);
  return cube * random_orthonormal(ambient, d, seed ^ 0x5bd1e995ULL).transpose();
}

/// Arc-length-ish parameter of the planar spiral r = 1 + theta / pi.
struct Spiral {
  Eigen::MatrixXd rotation;  // ambient x 2
  double theta_max = 3.0 * std::numbers::pi;

  Eigen::RowVectorXd at(double s) const {
    const double theta = s * theta_max;
    const double r = 1.0 + theta / std::numbers::pi;
    Eigen::RowVector2d p(r * std::cos(theta), r * std::sin(theta));
    return p * rotation.transpose();
  }

  Eigen::MatrixXd sample(const std::vector<double>& s) const {
    Eigen::MatrixXd out(Eigen::Index(s.size()), rotation.rows());
    for (std::size_t i = 0; i < s.size(); ++i) out.row(Eigen::Index(i)) = at(s[i]);
    return out;
  }

  Eigen::MatrixXd dense(std::size_t count) const {
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = double(i) / double(count - 1);
    return sample(s);
  }
};

inline Spiral make_spiral(Eigen::Index ambient, std::uint64_t seed) {
  return Spiral{random_orthonormal(ambient, 2, seed), 3.0 * std::numbers::pi};
}

/// Min distance from each row of `points` to the rows of `reference`; returns the max.
inline double max_distance_to(const Eigen::MatrixXd& points, const Eigen::MatrixXd& reference) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = (reference.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff();
    worst = std::max(worst, std::sqrt(d));
  }
  return worst;
}

/// Gaussian with standard deviations decaying geometrically by `ratio`.
inline Eigen::MatrixXd anisotropic_gaussian(Eigen::Index n, Eigen::Index d, double ratio, std::uint64_t seed) {
  Eigen::MatrixXd x = gaussian_matrix(n, d, seed);
  double sd = 1.0;
  for (Eigen::Index j = 0; j < d; ++j, sd *= ratio) x.col(j) *= sd;
  return x * random_orthonormal(d, d, seed + 17).transpose();
}

/// A small two-space mood board: each image is a grid of patch tokens whose
/// latent state is (row, col, image style). V and W are different smooth
/// nonlinear maps of that latent plus noise.
struct Board {
  TokenEmbeddingSet v;
  TokenEmbeddingSet w;
};

inline Board make_board(std::uint64_t seed, std::uint32_t n_images = 2, std::uint32_t grid = 16,
                        Eigen::Index dim_v = 48, Eigen::Index dim_w = 64, double noise = 0.05) {
  constexpr Eigen::Index kLatent = 4;
  const Eigen::MatrixXd av = gaussian_matrix(kLatent, dim_v, seed + 1);
  const Eigen::MatrixXd aw = gaussian_matrix(kLatent, dim_w, seed + 2);
  const Eigen::MatrixXd bv = gaussian_matrix(1, dim_v, seed + 3);
  const Eigen::MatrixXd bw = gaussian_matrix(1, dim_w, seed + 4);
  std::mt19937_64 rng(seed + 5);
  std::normal_distribution<double> n(0.0, noise);

  std::vector<Eigen::MatrixXd> vs, ws;
  for (std::uint32_t img = 0; img < n_images; ++img) {
    const double style = n_images > 1 ? double(img) / double(n_images - 1) : 0.0;
    Eigen::MatrixXd v(grid * grid, dim_v), w(grid * grid, dim_w);
    for (std::uint32_t r = 0; r < grid; ++r) {
      for (std::uint32_t c = 0; c < grid; ++c) {
        const double y = double(r) / (grid - 1), x = double(c) / (grid - 1);
        // Two regions with a curved boundary give the affinity a block structure.
        const double region = std::tanh(6.0 * (y - 0.35 - 0.3 * std::sin(std::numbers::pi * x)));
        Eigen::RowVectorXd z(kLatent);
        z << x, y, region, style;
        const Eigen::Index row = r * grid + c;
        v.row(row) = (z * av + bv).array().tanh();
        w.row(row) = (z * aw + bw).array().sin();
        for (Eigen::Index j = 0; j < dim_v; ++j) v(row, j) += n(rng);
        for (Eigen::Index j = 0; j < dim_w; ++j) w(row, j) += n(rng);
      }
    }
    vs.push_back(std::move(v));
    ws.push_back(std::move(w));
  }
  return {TokenEmbeddingSet::from_images(vs, grid, grid, false, SpaceTag::V, "source=synthetic-board-v\n"),
          TokenEmbeddingSet::from_images(ws, grid, grid, false, SpaceTag::W, "source=synthetic-board-w\n")};
}

}  // namespace moodspace::testing
