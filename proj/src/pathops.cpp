#include "moodspace/pathops.hpp"

#include "moodspace/errors.hpp"
#include "moodspace/trainer.hpp"

namespace moodspace {

namespace {

void check_codes(const MoodSpaceModel& model, const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  if (a.size() != model.mood_dim() || b.size() != model.mood_dim()) {
    throw InvalidInput("path: Mood code dimension does not match G");
  }
}

void check_anchor(const MoodSpaceModel& model, const Eigen::RowVectorXd& w) {
  if (w.size() != model.output_dim()) throw InvalidInput("path: anchor dimension does not match W");
}

LiftedPath affine_path(const Eigen::RowVectorXd& anchor, const Eigen::RowVectorXd& slope,
                       const Eigen::RowVectorXd& m_a1, const Eigen::RowVectorXd& m_a2, std::span<const double> t) {
  LiftedPath path;
  path.t.assign(t.begin(), t.end());
  path.anchor_w = anchor;
  const Eigen::RowVectorXd m_step = m_a2 - m_a1;
  path.m_path.resize(Eigen::Index(t.size()), m_a1.size());
  path.w_path.resize(Eigen::Index(t.size()), anchor.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    path.m_path.row(Eigen::Index(s)) = m_a1 + t[s] * m_step;
    path.w_path.row(Eigen::Index(s)) = anchor + t[s] * slope;
    if (t[s] < 0.0 || t[s] > 1.0) path.extrapolated = true;
  }
  return path;
}

}  // namespace

std::vector<double> uniform_samples(std::size_t count) {
  if (count == 0) throw InvalidInput("uniform_samples: need at least one sample");
  if (count == 1) return {0.0};
  std::vector<double> t(count);
  for (std::size_t s = 0; s < count; ++s) t[s] = double(s) / double(count - 1);
  return t;
}

Eigen::RowVectorXd lift_slope(const MoodSpaceModel& model, const Eigen::RowVectorXd& m_a1,
                              const Eigen::RowVectorXd& m_a2) {
  check_codes(model, m_a1, m_a2);
  return decode_delta(model, Eigen::MatrixXd(m_a2 - m_a1)).row(0);
}

LiftedPath connect(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_a1, const Eigen::RowVectorXd& m_a1,
                   const Eigen::RowVectorXd& m_a2, std::span<const double> t, LiftRule rule) {
  check_anchor(model, w_a1);
  check_codes(model, m_a1, m_a2);
  if (rule == LiftRule::Literal) {
    LiftedPath path = affine_path(w_a1, lift_slope(model, m_a1, m_a2), m_a1, m_a2, t);
    path.mode = PathMode::Connect;
    return path;
  }
  LiftedPath path = affine_path(w_a1, Eigen::RowVectorXd::Zero(w_a1.size()), m_a1, m_a2, t);
  path.rule = LiftRule::DecodeAlongPath;
  path.w_path = decode(model, path.m_path);
  return path;
}

LiftedPath analogy(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_b1, const Eigen::RowVectorXd& m_a1,
                   const Eigen::RowVectorXd& m_a2, std::span<const double> t) {
  check_anchor(model, w_b1);
  LiftedPath path = affine_path(w_b1, lift_slope(model, m_a1, m_a2), m_a1, m_a2, t);
  path.mode = PathMode::Analogy;
  return path;
}

LiftedPath segmented_connect(const MoodSpaceModel& model, const Eigen::RowVectorXd& m_a1,
                             const Eigen::RowVectorXd& m_a2, const Eigen::RowVectorXd& w_a1, std::size_t segments) {
  if (segments < 1) throw InvalidInput("segmented_connect: need at least one segment");
  check_anchor(model, w_a1);
  check_codes(model, m_a1, m_a2);
  const std::vector<double> t = uniform_samples(segments + 1);
  const Eigen::RowVectorXd m_step = m_a2 - m_a1;

  LiftedPath path;
  path.t = t;
  path.anchor_w = w_a1;
  path.mode = PathMode::Connect;
  path.m_path.resize(Eigen::Index(t.size()), m_a1.size());
  path.w_path.resize(Eigen::Index(t.size()), w_a1.size());
  path.m_path.row(0) = m_a1;
  path.w_path.row(0) = w_a1;
  for (std::size_t q = 0; q < segments; ++q) {
    const auto next = Eigen::Index(q + 1);
    path.m_path.row(next) = m_a1 + t[q + 1] * m_step;
    const Eigen::RowVectorXd segment = (t[q + 1] - t[q]) * m_step;
    path.w_path.row(next) = path.w_path.row(next - 1) + decode_delta(model, Eigen::MatrixXd(segment)).row(0);
  }
  return path;
}

Eigen::MatrixXd ImagePathResult::frame(std::size_t index) const {
  if (token_paths.empty()) return {};
  if (index >= t.size()) throw InvalidInput("image_path: frame index out of range");
  Eigen::MatrixXd out(Eigen::Index(token_paths.size()), token_paths.front().w_path.cols());
  for (std::size_t p = 0; p < token_paths.size(); ++p) {
    out.row(Eigen::Index(p)) = token_paths[p].w_path.row(Eigen::Index(index));
  }
  return out;
}

ImagePathResult image_path(const MoodSpaceModel& model, const Eigen::MatrixXd& v_a1, const Eigen::MatrixXd& v_a2,
                           const Eigen::MatrixXd& v_b1, std::size_t clusters, std::span<const double> t,
                           std::uint64_t seed, const std::optional<Eigen::MatrixXd>& w_b1) {
  if (v_a1.rows() != v_a2.rows() || v_a1.rows() != v_b1.rows() || v_a1.cols() != v_a2.cols() ||
      v_a1.cols() != v_b1.cols()) {
    throw InvalidInput("image_path: images must be tokenized identically");
  }
  if (v_a1.cols() != model.input_dim()) throw InvalidInput("image_path: token dimension does not match model");
  if (clusters > std::size_t(v_a1.rows())) throw InvalidInput("image_path: H exceeds tokens per image");

  ImagePathResult result;
  result.t.assign(t.begin(), t.end());
  const std::vector<Eigen::MatrixXd> images{v_a1, v_a2, v_b1};
  result.clusters = spectral_cluster(images, clusters, seed);
  const auto& centroids = result.clusters.centroids;
  result.a1_to_a2 = match_clusters(centroids[0], centroids[1]);
  result.b1_to_a1 = match_clusters(centroids[2], centroids[0]);

  const Eigen::MatrixXd codes_a1 = encode(model, centroids[0]);
  const Eigen::MatrixXd codes_a2 = encode(model, centroids[1]);
  Eigen::MatrixXd matched_a2(codes_a1.rows(), codes_a1.cols());
  for (std::size_t i = 0; i < clusters; ++i) {
    matched_a2.row(Eigen::Index(i)) = codes_a2.row(Eigen::Index(result.a1_to_a2[i]));
  }
  result.slopes = decode_delta(model, matched_a2 - codes_a1);

  Eigen::MatrixXd anchors;
  if (w_b1) {
    if (w_b1->rows() != v_b1.rows() || w_b1->cols() != model.output_dim()) {
      throw InvalidInput("image_path: W anchors do not match B1 tokens");
    }
    anchors = *w_b1;
  } else {
    anchors = decode(model, encode(model, v_b1));
  }

  const auto& b1_labels = result.clusters.labels[2];
  result.token_paths.reserve(b1_labels.size());
  for (std::size_t p = 0; p < b1_labels.size(); ++p) {
    const auto i = Eigen::Index(result.b1_to_a1[b1_labels[p]]);
    LiftedPath path = affine_path(anchors.row(Eigen::Index(p)), result.slopes.row(i), codes_a1.row(i),
                                  matched_a2.row(i), t);
    path.mode = PathMode::ImagePath;
    result.token_paths.push_back(std::move(path));
  }
  return result;
}

double analogy_consistency(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_a2,
                           const Eigen::RowVectorXd& w_b1, const Eigen::RowVectorXd& m_a1,
                           const Eigen::RowVectorXd& m_a2, const Eigen::RowVectorXd& m_b1) {
  check_anchor(model, w_a2);
  check_anchor(model, w_b1);
  const Eigen::RowVectorXd b2 = w_b1 + lift_slope(model, m_a1, m_a2);
  const Eigen::RowVectorXd b2_swapped = w_a2 + lift_slope(model, m_a1, m_b1);
  return (b2 - b2_swapped).norm();
}

}  // namespace moodspace
