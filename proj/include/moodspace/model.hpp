#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "moodspace/losses.hpp"
#include "moodspace/mlp.hpp"

namespace moodspace {

/// Per-dimension standardization: z = (x - mean) / scale.
struct FeatureStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  /// Column means and standard deviations; zero-variance columns get scale 1.
  static FeatureStats fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd destandardize(const Eigen::MatrixXd& z) const;
};

/// Everything that, together with the inputs, determines a trained model.
struct Hyperparams {
  std::uint32_t k = 32;
  std::uint32_t fps_count = 512;
  double kappa = 1.0;
  double bandwidth_v = 0.0;          // value actually used for the target affinity
  bool bandwidth_v_median = true;    // whether it came from the median heuristic
  bool bandwidth_m_fixed = false;
  double bandwidth_m = 0.0;          // used only when bandwidth_m_fixed
  LossWeights weights;
  double lr = 1e-3;
  std::uint32_t steps = 1000;
  std::uint64_t seed = 0;
  std::uint32_t curvature_triples = 4;
  double repulsion_eps = 1e-4;
  double clip_norm = 10.0;
  bool include_class_tokens = true;
  std::uint32_t log_every = 1;
  std::uint32_t k_min = 10;
  std::uint32_t k_max = 20;
  double g_hat = 0.0;                // intrinsic-dimension estimate, 0 when G was given
};

struct LossRecord {
  std::uint64_t step = 0;
  double spec = 0.0;
  double curv = 0.0;
  double rep = 0.0;
  double recon = 0.0;
  double var = 0.0;
  double total = 0.0;
};

/// Trained encoder V -> M and decoder M -> W with their provenance.
struct MoodSpaceModel {
  MlpParams encoder;
  MlpParams decoder;
  FeatureStats v_stats;
  FeatureStats w_stats;
  Hyperparams hyper;
  std::vector<LossRecord> loss_history;
  std::vector<std::uint32_t> subset;  // sampled context-token rows used by the spectral terms
  std::string provenance;             // key=value lines

  Eigen::Index mood_dim() const { return encoder.out_dim(); }
  Eigen::Index input_dim() const { return encoder.in_dim(); }
  Eigen::Index output_dim() const { return decoder.out_dim(); }

  /// Shape chain D_v -> H -> H -> H -> G -> H -> H -> H -> D_w and stats sizes.
  void validate() const;
};

void save_model(const MoodSpaceModel& model, const std::filesystem::path& path);
MoodSpaceModel load_model(const std::filesystem::path& path);

std::vector<std::byte> encode_model(const MoodSpaceModel& model);
MoodSpaceModel decode_model(std::vector<std::byte> bytes);

}  // namespace moodspace
