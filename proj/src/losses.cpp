#include "moodspace/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "moodspace/errors.hpp"
#include "moodspace/random.hpp"

namespace moodspace {

namespace {

// Gradient of sum_{p,q} coeff(p,q) * |m_p - m_q|^2 with respect to the points,
// for an arbitrary (not necessarily symmetric) coefficient matrix.
Eigen::MatrixXd pairwise_sq_dist_grad(const Eigen::MatrixXd& coeff, const Eigen::MatrixXd& points) {
  Eigen::MatrixXd sym = coeff + coeff.transpose();
  sym.diagonal().setZero();
  const Eigen::VectorXd row_sums = sym.rowwise().sum();
  return 2.0 * (row_sums.asDiagonal() * points - sym * points);
}

}  // namespace

SpectralLoss spectral_loss(const SpectralEmbedding& target, const Eigen::MatrixXd& points,
                           const AffinityParams& params, std::span<const std::size_t> prefixes) {
  const Eigen::Index n = points.rows();
  if (target.n() != n) throw InvalidInput("spectral_loss: target and points have different node counts");
  if (prefixes.empty()) throw InvalidInput("spectral_loss: no prefixes");
  const std::size_t max_prefix = *std::max_element(prefixes.begin(), prefixes.end());
  if (max_prefix > std::size_t(n)) throw InvalidInput("spectral_loss: n is smaller than the largest prefix");
  if (max_prefix > std::size_t(target.k())) throw InvalidInput("spectral_loss: prefix exceeds target k");
  if (!points.allFinite()) throw InvalidInput("spectral_loss: non-finite points");

  const Eigen::MatrixXd sq_dist = squared_distances(points);
  MedianPairs median;
  double h = 0.0;
  if (params.bandwidth) {
    h = *params.bandwidth;
    if (!(h > 0.0)) throw InvalidInput("spectral_loss: bandwidth must be positive");
  } else {
    median = median_pair_distance(sq_dist);
    h = median.value;
  }

  const Eigen::MatrixXd kernel = rbf_kernel(sq_dist, params.kappa, h);
  const Eigen::VectorXd degree = kernel.rowwise().sum();
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd normalized = inv_sqrt.asDiagonal() * kernel * inv_sqrt.asDiagonal();
  normalized = 0.5 * (normalized + normalized.transpose()).eval();

  const SpectralEmbedding eig = full_eigs(normalized);
  const Eigen::MatrixXd& basis = eig.vectors;
  const Eigen::VectorXd& lambda = eig.values;

  SpectralLoss out;
  Eigen::MatrixXd grad_normalized = Eigen::MatrixXd::Zero(n, n);
  bool any_grad = false;
  for (std::size_t prefix : prefixes) {
    const Eigen::Index i = Eigen::Index(prefix);
    const auto target_block = target.vectors.leftCols(i);
    const Eigen::MatrixXd overlap = target_block.transpose() * basis.leftCols(i);
    // |P_a - P_b|^2 = |P_a|^2 + |P_b|^2 - 2 <P_a, P_b> with both of rank i.
    const double value = 2.0 * double(i) - 2.0 * overlap.squaredNorm();
    out.per_prefix.push_back(value);
    out.value += value;

    if (i == n) continue;  // the full projector is the identity
    const double gap = lambda(i - 1) - lambda(i);
    if (gap < kDegenerateGap) {
      out.degenerate_prefixes.push_back(prefix);
      continue;
    }
    // Target projector in the current eigenbasis: X = basis^T * target_block.
    const Eigen::MatrixXd x = basis.transpose() * target_block;
    const Eigen::Index rest = n - i;
    // coeff(a, b) = -4 <x_a, x_b> / (lambda_a - lambda_b), a in top block, b in complement.
    Eigen::MatrixXd coeff = -4.0 * (x.topRows(i) * x.bottomRows(rest).transpose());
    for (Eigen::Index b = 0; b < rest; ++b) {
      for (Eigen::Index a = 0; a < i; ++a) coeff(a, b) /= (lambda(a) - lambda(i + b));
    }
    grad_normalized.noalias() += basis.leftCols(i) * (coeff * basis.rightCols(rest).transpose());
    any_grad = true;
  }

  out.grad = Eigen::MatrixXd::Zero(n, points.cols());
  if (!any_grad) return out;

  const Eigen::MatrixXd g_norm = 0.5 * (grad_normalized + grad_normalized.transpose());
  // normalized = r_i K_ij r_j with r = degree^{-1/2}.
  const Eigen::VectorXd grad_degree =
      -(g_norm.cwiseProduct(normalized)).rowwise().sum().cwiseQuotient(degree);
  Eigen::MatrixXd grad_kernel = inv_sqrt.asDiagonal() * g_norm * inv_sqrt.asDiagonal();
  grad_kernel.colwise() += grad_degree;

  const Eigen::MatrixXd grad_kernel_times_k = grad_kernel.cwiseProduct(kernel);
  const Eigen::MatrixXd grad_sq_dist = -grad_kernel_times_k / h;
  out.grad = pairwise_sq_dist_grad(grad_sq_dist, points);

  if (!params.bandwidth) {
    const double grad_h = grad_kernel_times_k.cwiseProduct(sq_dist).sum() / (h * h);
    const double weight = 1.0 / double(median.pairs.size());
    for (const auto& [p, q] : median.pairs) {
      const Eigen::RowVectorXd diff = points.row(p) - points.row(q);
      out.grad.row(p) += grad_h * weight * 2.0 * diff;
      out.grad.row(q) -= grad_h * weight * 2.0 * diff;
    }
  }
  return out;
}

double menger_curvature_sq(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, const Eigen::RowVectorXd& c) {
  const Eigen::RowVectorXd u = b - a;
  const Eigen::RowVectorXd v = c - a;
  const double p = u.squaredNorm();
  const double q = v.squaredNorm();
  const double s = (c - b).squaredNorm();
  if (p <= 0.0 || q <= 0.0 || s <= 0.0) return 0.0;
  // |u ^ v|^2 via 2x2 minors; exactly zero for points on a coordinate line.
  double wedge = 0.0;
  for (Eigen::Index x = 0; x < u.size(); ++x) {
    for (Eigen::Index y = x + 1; y < u.size(); ++y) {
      const double m = u(x) * v(y) - u(y) * v(x);
      wedge += m * m;
    }
  }
  return 4.0 * wedge / (p * q * s);
}

LossValue curvature_loss(const Eigen::MatrixXd& points, std::size_t triples_per_point, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n < 3) throw InvalidInput("curvature_loss: need at least three points");
  if (triples_per_point == 0) throw InvalidInput("curvature_loss: triples_per_point must be positive");
  const Eigen::MatrixXd sq_dist = squared_distances(points);
  const std::size_t neighbors = std::min<std::size_t>(kCurvatureNeighbors, std::size_t(n - 1));

  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(n, points.cols());
  Rng rng(seed);
  std::vector<Eigen::Index> order;
  std::size_t count = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    order.resize(std::size_t(n));
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::erase(order, i);
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(neighbors), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        const double da = sq_dist(i, a), db = sq_dist(i, b);
                        return da != db ? da < db : a < b;
                      });
    for (std::size_t t = 0; t < triples_per_point; ++t) {
      const std::size_t first = std::size_t(rng.index(neighbors));
      std::size_t second = std::size_t(rng.index(neighbors - 1));
      if (second >= first) ++second;
      const Eigen::Index j = order[first];
      const Eigen::Index k = order[second];
      ++count;

      const Eigen::RowVectorXd u = points.row(j) - points.row(i);
      const Eigen::RowVectorXd v = points.row(k) - points.row(i);
      const Eigen::RowVectorXd w = points.row(k) - points.row(j);
      const double p = u.squaredNorm();
      const double q = v.squaredNorm();
      const double s = w.squaredNorm();
      if (p <= 0.0 || q <= 0.0 || s <= 0.0) continue;
      const double r = u.dot(v);
      const double denom = p * q * s;
      out.value += menger_curvature_sq(points.row(i), points.row(j), points.row(k));

      // f = 4 (pq - r^2) / (pqs)
      const double df_dp = 4.0 * r * r / (p * p * q * s);
      const double df_dq = 4.0 * r * r / (p * q * q * s);
      const double df_dr = -8.0 * r / denom;
      const double df_ds = -4.0 * (p * q - r * r) / (p * q * s * s);
      const Eigen::RowVectorXd du = 2.0 * df_dp * u + df_dr * v;
      const Eigen::RowVectorXd dv = 2.0 * df_dq * v + df_dr * u;
      const Eigen::RowVectorXd dw = 2.0 * df_ds * w;
      out.grad.row(i) -= du + dv;
      out.grad.row(j) += du - dw;
      out.grad.row(k) += dv + dw;
    }
  }
  out.value /= double(count);
  out.grad /= double(count);
  return out;
}

LossValue repulsion_loss(const Eigen::MatrixXd& points, double eps) {
  if (points.rows() < 2) throw InvalidInput("repulsion_loss: need at least two points");
  if (!(eps > 0.0)) throw InvalidInput("repulsion_loss: eps must be positive");
  const Eigen::MatrixXd sq_dist = squared_distances(points);
  Eigen::MatrixXd inv = (sq_dist.array() + eps).inverse().matrix();
  inv.diagonal().setZero();
  LossValue out;
  out.value = inv.sum();
  // d/dd of 1/(d + eps) is -1/(d + eps)^2; each ordered pair has its own term.
  const Eigen::MatrixXd coeff = -inv.cwiseProduct(inv);
  out.grad = pairwise_sq_dist_grad(coeff, points);
  return out;
}

LossValue recon_loss(const Eigen::MatrixXd& target, const Eigen::MatrixXd& predicted) {
  if (target.rows() != predicted.rows() || target.cols() != predicted.cols()) {
    throw InvalidInput("recon_loss: shape mismatch");
  }
  const double count = double(target.size());
  const Eigen::MatrixXd diff = predicted - target;
  return {diff.squaredNorm() / count, 2.0 * diff / count};
}

LossValue variance_loss(const Eigen::MatrixXd& points) {
  const double n = double(points.rows());
  if (points.rows() == 0) throw InvalidInput("variance_loss: empty input");
  const Eigen::MatrixXd dev =
      points.transpose() * points / n - Eigen::MatrixXd::Identity(points.cols(), points.cols());
  return {dev.squaredNorm(), 4.0 / n * points * dev};
}

TotalLoss total_loss(const MlpParams& encoder, const MlpParams& decoder, const Eigen::MatrixXd& v,
                     const Eigen::MatrixXd& w, std::span<const std::size_t> subset,
                     const SpectralEmbedding& target, const LossSettings& settings,
                     std::uint64_t curvature_seed) {
  if (v.rows() != w.rows()) throw InvalidInput("total_loss: V and W token counts differ");
  if (subset.empty()) throw InvalidInput("total_loss: empty subset");

  const MlpForward enc = mlp_forward(encoder, v);
  const MlpForward dec = mlp_forward(decoder, enc.output);

  Eigen::MatrixXd sub(Eigen::Index(subset.size()), enc.output.cols());
  for (std::size_t r = 0; r < subset.size(); ++r) {
    if (subset[r] >= std::size_t(v.rows())) throw InvalidInput("total_loss: subset index out of range");
    sub.row(Eigen::Index(r)) = enc.output.row(Eigen::Index(subset[r]));
  }

  const LossWeights& lw = settings.weights;
  const SpectralLoss spec = spectral_loss(target, sub, settings.mood_affinity, settings.prefixes);
  const LossValue curv = curvature_loss(sub, settings.curvature_triples, curvature_seed);
  const LossValue rep = repulsion_loss(sub, settings.repulsion_eps);
  const LossValue var = variance_loss(sub);
  const LossValue recon = recon_loss(w, dec.output);

  TotalLoss out;
  LossBreakdown& b = out.breakdown;
  b.spec = spec.value;
  b.curv = curv.value;
  b.rep = rep.value;
  b.recon = recon.value;
  b.var = var.value;
  b.weights = lw;
  b.degenerate_prefixes = spec.degenerate_prefixes;
  b.total = b.weighted_sum();

  const Eigen::MatrixXd sub_grad =
      spec.grad + lw.curvature * curv.grad + lw.repulsion * rep.grad + lw.variance * var.grad;
  MlpBackward dec_back = mlp_backward(decoder, dec.cache, lw.reconstruction * recon.grad);
  Eigen::MatrixXd code_grad = std::move(dec_back.input_grad);
  for (std::size_t r = 0; r < subset.size(); ++r) {
    code_grad.row(Eigen::Index(subset[r])) += sub_grad.row(Eigen::Index(r));
  }
  out.encoder_grad = mlp_backward(encoder, enc.cache, code_grad).grads;
  out.decoder_grad = std::move(dec_back.grads);
  return out;
}

}  // namespace moodspace
