#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "moodspace/model.hpp"
#include "moodspace/spectral.hpp"

namespace moodspace {

enum class PathMode { Connect, Analogy, ImagePath };

/// How a straight Mood-Space path is carried into W.
enum class LiftRule {
  Literal,          // w(t) = anchor + t * decode_delta(m_A2 - m_A1)
  DecodeAlongPath,  // w(t) = decode(m_A1 + t (m_A2 - m_A1))
};

struct LiftedPath {
  std::vector<double> t;
  Eigen::MatrixXd m_path;  // one row per t
  Eigen::MatrixXd w_path;  // one row per t
  Eigen::RowVectorXd anchor_w;
  PathMode mode = PathMode::Connect;
  LiftRule rule = LiftRule::Literal;
  bool extrapolated = false;  // some t outside [0, 1]
};

/// t = 0, 1/(count-1), ..., 1; a single sample is t = 0.
std::vector<double> uniform_samples(std::size_t count);

/// W-space displacement of the straight path m_a1 -> m_a2.
Eigen::RowVectorXd lift_slope(const MoodSpaceModel& model, const Eigen::RowVectorXd& m_a1,
                              const Eigen::RowVectorXd& m_a2);

LiftedPath connect(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_a1, const Eigen::RowVectorXd& m_a1,
                   const Eigen::RowVectorXd& m_a2, std::span<const double> t, LiftRule rule = LiftRule::Literal);

/// The connect slope of m_a1 -> m_a2 re-anchored at w_b1.
LiftedPath analogy(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_b1, const Eigen::RowVectorXd& m_a1,
                   const Eigen::RowVectorXd& m_a2, std::span<const double> t);

/// Piecewise lift over `segments` equal steps: each segment's Mood-Space step
/// is decoded separately and accumulated from w_a1. One segment is connect().
LiftedPath segmented_connect(const MoodSpaceModel& model, const Eigen::RowVectorXd& m_a1,
                             const Eigen::RowVectorXd& m_a2, const Eigen::RowVectorXd& w_a1, std::size_t segments);

/// Cluster-correspondence lifting of a whole image.
struct ImagePathResult {
  TokenClusterMap clusters;            // images in order A1, A2, B1
  std::vector<std::size_t> a1_to_a2;   // P: A1 cluster -> A2 cluster
  std::vector<std::size_t> b1_to_a1;   // B1 cluster -> A1 cluster
  Eigen::MatrixXd slopes;              // per A1 cluster, W-space drift
  std::vector<double> t;
  std::vector<LiftedPath> token_paths;  // one per B1 token

  /// All B1 tokens at sample index `index` (tokens x D_w).
  Eigen::MatrixXd frame(std::size_t index) const;
};

/**
 * Lifts image B1 along the A1 -> A2 change. Each image is clustered into H
 * token groups; A1 groups are matched to A2 groups and B1 groups to A1
 * groups by centroid affinity. A B1 token in group j moves along the drift
 * of A1 group i = b1_to_a1[j], starting from its own W embedding. When
 * `w_b1` is not given the anchors are decode(encode(v_b1)).
 */
ImagePathResult image_path(const MoodSpaceModel& model, const Eigen::MatrixXd& v_a1, const Eigen::MatrixXd& v_a2,
                           const Eigen::MatrixXd& v_b1, std::size_t clusters, std::span<const double> t,
                           std::uint64_t seed, const std::optional<Eigen::MatrixXd>& w_b1 = std::nullopt);

/// |B2 - B2'| with B2 = w_b1 + lift(m_a1 -> m_a2) and B2' = w_a2 + lift(m_a1 -> m_b1).
double analogy_consistency(const MoodSpaceModel& model, const Eigen::RowVectorXd& w_a2,
                           const Eigen::RowVectorXd& w_b1, const Eigen::RowVectorXd& m_a1,
                           const Eigen::RowVectorXd& m_a2, const Eigen::RowVectorXd& m_b1);

}  // namespace moodspace
