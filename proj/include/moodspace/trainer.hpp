#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "moodspace/embedding_io.hpp"
#include "moodspace/model.hpp"

namespace moodspace {

struct TrainConfig {
  std::uint32_t steps = 1000;  // 10000 is typical for ~100-image boards
  double lr = 1e-3;
  std::uint32_t k = 32;
  std::uint32_t fps_count = 512;
  LossWeights weights;
  std::optional<std::size_t> mood_dim;  // unset: intrinsic-dimension estimate of V
  std::uint64_t seed = 0;
  double kappa = 1.0;
  std::optional<double> bandwidth_v;  // unset: median heuristic on the sampled subset
  std::optional<double> bandwidth_m;  // unset: median heuristic every step
  bool include_class_tokens = true;
  std::uint32_t log_every = 1;
  std::uint32_t curvature_triples = 4;
  double repulsion_eps = 1e-4;
  std::uint32_t k_min = 10;
  std::uint32_t k_max = 20;
  double clip_norm = 10.0;
  std::size_t hidden = kHiddenUnits;
};

/// Optional hooks for progress reporting; both may be empty.
struct TrainObserver {
  std::function<void(const LossRecord&)> on_record;
  std::function<void(std::string_view)> on_warning;
};

/// Learns the encoder/decoder pair from aligned V and W token sets.
/// Deterministic in (inputs, config).
MoodSpaceModel fit(const TokenEmbeddingSet& v_set, const TokenEmbeddingSet& w_set, const TrainConfig& config,
                   const TrainObserver& observer = {});

/// Same as fit() on raw token matrices (rows aligned).
MoodSpaceModel fit_tokens(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const TrainConfig& config,
                          const TrainObserver& observer = {});

/// V tokens to Mood-Space codes.
Eigen::MatrixXd encode(const MoodSpaceModel& model, const Eigen::MatrixXd& tokens);
/// Mood-Space codes to W tokens (de-standardized).
Eigen::MatrixXd decode(const MoodSpaceModel& model, const Eigen::MatrixXd& codes);
/// Decoder applied to code differences, read as W-space displacements:
/// rescaled by the W scale but without the W mean offset.
Eigen::MatrixXd decode_delta(const MoodSpaceModel& model, const Eigen::MatrixXd& code_deltas);

/// CSV with header step,spec,curv,rep,recon,var,total.
void write_loss_csv(const MoodSpaceModel& model, std::ostream& out);

}  // namespace moodspace
