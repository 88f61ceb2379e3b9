#include "moodspace/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "moodspace/errors.hpp"

namespace moodspace {

double eigenvalue_entropy(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double total = 0.0;
  for (double v : values) total += std::max(v, 0.0);
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : values) {
    const double p = std::max(v, 0.0) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::clamp(h / std::log(double(values.size())), 0.0, 1.0);
}

double histogram_entropy(const Eigen::VectorXd& values, std::size_t bins) {
  if (bins < 2 || values.size() == 0) return 0.0;
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto b = std::size_t((values(i) - lo) / (hi - lo) * double(bins));
    ++counts[std::min(b, bins - 1)];
  }
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = double(c) / double(values.size());
    h -= p * std::log(p);
  }
  return h / std::log(double(bins));
}

UniformityReport uniformity(const Eigen::MatrixXd& points, std::size_t pca_dims, std::size_t bins) {
  if (points.rows() < 2 || points.cols() < 1) throw InvalidInput("uniformity: need at least two points");
  if (!points.allFinite()) throw InvalidInput("uniformity: non-finite input");
  UniformityReport report;
  report.dim = std::size_t(points.cols());
  report.bins = bins;

  auto mean_entropy = [&](const Eigen::MatrixXd& x) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < x.cols(); ++d) s += histogram_entropy(x.col(d), bins);
    return x.cols() > 0 ? s / double(x.cols()) : 0.0;
  };
  report.entropy_raw = mean_entropy(points);

  const Eigen::MatrixXd centered = points.rowwise() - points.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(points.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericalError("uniformity: PCA failed");
  const Eigen::VectorXd eigvals = solver.eigenvalues().reverse();
  const Eigen::MatrixXd eigvecs = solver.eigenvectors().rowwise().reverse();

  // Rank is bounded by both the ambient dimension and n - 1 samples.
  const std::size_t rank = std::min<std::size_t>(report.dim, std::size_t(points.rows() - 1));
  const std::size_t r = std::min(pca_dims, rank);
  report.pca_dims = r;
  std::vector<double> retained(eigvals.data(), eigvals.data() + r);
  report.entropy_eigvals = eigenvalue_entropy(retained);
  report.entropy_pca = mean_entropy(centered * eigvecs.leftCols(Eigen::Index(r)));
  return report;
}

std::vector<std::filesystem::path> export_eigvec_grids(const SpectralEmbedding& embedding, const GridLayout& layout,
                                                       const std::filesystem::path& out_dir) {
  const std::size_t patches = layout.grid_h * layout.grid_w;
  if (patches == 0 || layout.tokens_per_image != patches + (layout.has_class_token ? 1 : 0)) {
    throw InvalidInput("export_eigvec_grids: token count does not match the grid");
  }
  if (std::size_t(embedding.n()) != layout.n_images * layout.tokens_per_image) {
    throw InvalidInput("export_eigvec_grids: eigenvector length does not match the image layout");
  }
  std::filesystem::create_directories(out_dir);

  std::vector<std::filesystem::path> written;
  for (Eigen::Index c = 0; c < embedding.k(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t img = 0; img < layout.n_images; ++img) {
      for (std::size_t p = 0; p < patches; ++p) {
        const double v = embedding.vectors(Eigen::Index(img * layout.tokens_per_image + p), c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    for (std::size_t img = 0; img < layout.n_images; ++img) {
      const std::string stem = "eigvec" + std::to_string(c) + "_image" + std::to_string(img);
      std::string pixels(patches, '\0');
      std::ofstream csv(out_dir / (stem + ".csv"));
      if (!csv) throw IoError("cannot write " + (out_dir / (stem + ".csv")).string());
      csv << std::setprecision(17);
      for (std::size_t y = 0; y < layout.grid_h; ++y) {
        for (std::size_t x = 0; x < layout.grid_w; ++x) {
          const std::size_t p = y * layout.grid_w + x;
          const double v = embedding.vectors(Eigen::Index(img * layout.tokens_per_image + p), c);
          const double level = hi > lo ? std::round((v - lo) / (hi - lo) * 255.0) : 128.0;
          pixels[p] = static_cast<char>(static_cast<unsigned char>(level));
          csv << (x ? "," : "") << v;
        }
        csv << '\n';
      }
      const auto pgm_path = out_dir / (stem + ".pgm");
      std::ofstream pgm(pgm_path, std::ios::binary);
      if (!pgm) throw IoError("cannot write " + pgm_path.string());
      pgm << "P5\n" << layout.grid_w << ' ' << layout.grid_h << "\n255\n";
      pgm.write(pixels.data(), std::streamsize(pixels.size()));
      written.push_back(pgm_path);
    }
  }
  return written;
}

Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw FormatError("grid CSV: cannot parse '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged grid CSV");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(Eigen::Index(rows.size()), rows.empty() ? 0 : Eigen::Index(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return out;
}

}  // namespace moodspace
