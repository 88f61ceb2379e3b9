#include "moodspace/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "moodspace/errors.hpp"
#include "moodspace/intrinsic_dim.hpp"
#include "moodspace/random.hpp"
#include "moodspace/spectral.hpp"

namespace moodspace {

namespace {

void warn(const TrainObserver& observer, const std::string& message) {
  if (observer.on_warning) observer.on_warning(message);
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(Eigen::Index(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(Eigen::Index(r)) = x.row(Eigen::Index(idx[r]));
  return out;
}

std::string provenance_text(const TrainConfig& c, Eigen::Index n_tokens, std::size_t g) {
  std::ostringstream p;
  p << std::setprecision(17);
  p << "tokens=" << n_tokens << "\n"
    << "G=" << g << "\n"
    << "G_source=" << (c.mood_dim ? "explicit" : "intrinsic_dim") << "\n"
    << "hidden=" << c.hidden << "\n"
    << "optimizer=adam(beta1=0.9,beta2=0.999,eps=1e-8)\n"
    << "activation=leaky_relu(0.01)\n";
  return p.str();
}

}  // namespace

MoodSpaceModel fit(const TokenEmbeddingSet& v_set, const TokenEmbeddingSet& w_set, const TrainConfig& config,
                   const TrainObserver& observer) {
  v_set.validate();
  w_set.validate();
  if (v_set.n_images != w_set.n_images || v_set.tokens_per_image != w_set.tokens_per_image ||
      v_set.has_class_token != w_set.has_class_token) {
    throw InvalidInput("fit: V and W sets are not aligned token-for-token");
  }
  return fit_tokens(v_set.tokens(config.include_class_tokens), w_set.tokens(config.include_class_tokens), config,
                    observer);
}

MoodSpaceModel fit_tokens(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const TrainConfig& config,
                          const TrainObserver& observer) {
  if (v.rows() != w.rows()) throw InvalidInput("fit: V and W token counts differ");
  if (v.rows() < 2) throw InvalidInput("fit: need at least two tokens");
  if (!v.allFinite() || !w.allFinite()) throw InvalidInput("fit: non-finite token data");
  if (config.log_every == 0) throw InvalidInput("fit: log_every must be positive");
  const auto n = std::size_t(v.rows());

  MoodSpaceModel model;
  Hyperparams& h = model.hyper;
  model.v_stats = FeatureStats::fit(v);
  model.w_stats = FeatureStats::fit(w);
  const Eigen::MatrixXd vs = model.v_stats.standardize(v);
  const Eigen::MatrixXd ws = model.w_stats.standardize(w);

  std::size_t g = 0;
  if (config.mood_dim) {
    g = *config.mood_dim;
  } else {
    const DimEstimate est = estimate_dim(v, config.k_min, config.k_max);
    h.g_hat = est.g_hat;
    g = mood_dimension(est);
  }
  if (g < 1) throw InvalidInput("fit: Mood Space dimension must be positive");
  if (g > std::size_t(v.cols())) {
    throw InvalidInput("fit: Mood Space dimension " + std::to_string(g) + " exceeds V dimension " +
                       std::to_string(v.cols()));
  }

  std::uint32_t fps_count = config.fps_count;
  if (fps_count > n) {
    warn(observer, "fps_count " + std::to_string(fps_count) + " exceeds token count; clamped to " + std::to_string(n));
    fps_count = std::uint32_t(n);
  }
  std::uint32_t k = config.k;
  if (k > fps_count) {
    warn(observer, "k " + std::to_string(k) + " exceeds fps_count; clamped to " + std::to_string(fps_count));
    k = fps_count;
  }
  if (k < 1) throw InvalidInput("fit: k must be positive");

  const std::vector<std::size_t> subset = fps(vs, fps_count, mix_seed(config.seed, 0));
  const Eigen::MatrixXd v_sub = rows_of(vs, subset);
  const double bandwidth_v = config.bandwidth_v ? *config.bandwidth_v : median_bandwidth(v_sub);
  const SpectralEmbedding target = top_k_eigs(rbf_affinity(v_sub, config.kappa, bandwidth_v).symmetric_normalized(), k);

  h.k = k;
  h.fps_count = fps_count;
  h.kappa = config.kappa;
  h.bandwidth_v = bandwidth_v;
  h.bandwidth_v_median = !config.bandwidth_v.has_value();
  h.bandwidth_m_fixed = config.bandwidth_m.has_value();
  h.bandwidth_m = config.bandwidth_m.value_or(0.0);
  h.weights = config.weights;
  h.lr = config.lr;
  h.steps = config.steps;
  h.seed = config.seed;
  h.curvature_triples = config.curvature_triples;
  h.repulsion_eps = config.repulsion_eps;
  h.clip_norm = config.clip_norm;
  h.include_class_tokens = config.include_class_tokens;
  h.log_every = config.log_every;
  h.k_min = config.k_min;
  h.k_max = config.k_max;
  model.subset.assign(subset.begin(), subset.end());
  model.provenance = provenance_text(config, v.rows(), g);

  model.encoder = mlp_init(std::size_t(v.cols()), g, mix_seed(config.seed, 1), config.hidden);
  model.decoder = mlp_init(g, std::size_t(w.cols()), mix_seed(config.seed, 2), config.hidden);
  AdamState enc_state = AdamState::for_params(model.encoder);
  AdamState dec_state = AdamState::for_params(model.decoder);
  const AdamConfig adam{config.lr};

  LossSettings settings;
  settings.weights = config.weights;
  settings.mood_affinity = AffinityParams{config.kappa, config.bandwidth_m};
  settings.prefixes = default_prefixes(k);
  settings.curvature_triples = config.curvature_triples;
  settings.repulsion_eps = config.repulsion_eps;

  for (std::uint32_t step = 0;; ++step) {
    TotalLoss loss = total_loss(model.encoder, model.decoder, vs, ws, subset, target, settings,
                                mix_seed(config.seed, 1000 + step));
    const LossBreakdown& b = loss.breakdown;
    if (!std::isfinite(b.total)) {
      throw NumericalError("fit: non-finite loss at step " + std::to_string(step));
    }
    if (step % config.log_every == 0 || step == config.steps) {
      model.loss_history.push_back({step, b.spec, b.curv, b.rep, b.recon, b.var, b.total});
      if (observer.on_record) observer.on_record(model.loss_history.back());
    }
    if (step == config.steps) break;

    const double norm = std::sqrt(loss.encoder_grad.squared_norm() + loss.decoder_grad.squared_norm());
    if (!std::isfinite(norm)) throw NumericalError("fit: non-finite gradient at step " + std::to_string(step));
    if (norm > config.clip_norm) {
      loss.encoder_grad.scale(config.clip_norm / norm);
      loss.decoder_grad.scale(config.clip_norm / norm);
    }
    adam_step(model.encoder, loss.encoder_grad, enc_state, adam);
    adam_step(model.decoder, loss.decoder_grad, dec_state, adam);
  }
  return model;
}

Eigen::MatrixXd encode(const MoodSpaceModel& model, const Eigen::MatrixXd& tokens) {
  if (tokens.cols() != model.input_dim()) {
    throw InvalidInput("encode: token dimension " + std::to_string(tokens.cols()) + " does not match model input " +
                       std::to_string(model.input_dim()));
  }
  return mlp_apply(model.encoder, model.v_stats.standardize(tokens));
}

Eigen::MatrixXd decode(const MoodSpaceModel& model, const Eigen::MatrixXd& codes) {
  if (codes.cols() != model.mood_dim()) throw InvalidInput("decode: code dimension does not match G");
  return model.w_stats.destandardize(mlp_apply(model.decoder, codes));
}

Eigen::MatrixXd decode_delta(const MoodSpaceModel& model, const Eigen::MatrixXd& code_deltas) {
  if (code_deltas.cols() != model.mood_dim()) throw InvalidInput("decode_delta: code dimension does not match G");
  return mlp_apply(model.decoder, code_deltas).array().rowwise() * model.w_stats.scale.array();
}

void write_loss_csv(const MoodSpaceModel& model, std::ostream& out) {
  out << "step,spec,curv,rep,recon,var,total\n";
  out << std::setprecision(17);
  for (const auto& r : model.loss_history) {
    out << r.step << ',' << r.spec << ',' << r.curv << ',' << r.rep << ',' << r.recon << ',' << r.var << ','
        << r.total << '\n';
  }
}

}  // namespace moodspace
