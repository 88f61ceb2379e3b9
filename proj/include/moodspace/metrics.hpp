#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "moodspace/spectral.hpp"

namespace moodspace {

/// Entropy-based uniformity of an embedding, each value in [0, 1].
///
/// entropy_raw and entropy_pca average a per-dimension histogram entropy
/// (`bins` uniform bins over the observed range, normalized by ln(bins)).
/// entropy_eigvals is the entropy of the retained PCA eigenvalue
/// distribution normalized by ln(r).
struct UniformityReport {
  double entropy_raw = 0.0;
  double entropy_pca = 0.0;
  double entropy_eigvals = 0.0;
  std::size_t dim = 0;
  std::size_t pca_dims = 0;  // r
  std::size_t bins = 0;
};

inline constexpr std::size_t kUniformityPcaDims = 250;
inline constexpr std::size_t kUniformityBins = 64;

UniformityReport uniformity(const Eigen::MatrixXd& points, std::size_t pca_dims = kUniformityPcaDims,
                            std::size_t bins = kUniformityBins);

/// -sum p ln p / ln(r) with p proportional to the values; 0 for a zero sum or r < 2.
double eigenvalue_entropy(std::span<const double> values);

/// Histogram entropy of one coordinate, normalized by ln(bins).
double histogram_entropy(const Eigen::VectorXd& values, std::size_t bins);

struct GridLayout {
  std::size_t n_images = 0;
  std::size_t tokens_per_image = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  bool has_class_token = false;  // class token is last and is not drawn
};

/// Writes eigvec<c>_image<i>.pgm (binary P5, 8-bit) and .csv for every
/// eigenvector column c and image i. Values are mapped affinely from the
/// column's [min, max] over all drawn tokens to [0, 255]; a constant column
/// maps to 128. Returns the written PGM paths.
std::vector<std::filesystem::path> export_eigvec_grids(const SpectralEmbedding& embedding, const GridLayout& layout,
                                                       const std::filesystem::path& out_dir);

/// Reads a grid CSV written by export_eigvec_grids.
Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path);

}  // namespace moodspace
