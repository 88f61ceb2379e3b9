#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "moodspace/embedding_io.hpp"
#include "moodspace/errors.hpp"
#include "moodspace/intrinsic_dim.hpp"
#include "moodspace/metrics.hpp"
#include "moodspace/model.hpp"
#include "moodspace/pathops.hpp"
#include "moodspace/spectral.hpp"
#include "moodspace/trainer.hpp"

namespace moodspace::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Largest token count handed to the dense eigensolver by `eigvecs`.
constexpr std::size_t kMaxDenseTokens = 4096;

json to_json(const LossRecord& r) {
  return {{"step", r.step}, {"spec", r.spec}, {"curv", r.curv}, {"rep", r.rep},
          {"recon", r.recon}, {"var", r.var}, {"total", r.total}};
}

json to_json(const Hyperparams& h) {
  json j = {{"k", h.k},
            {"fps_count", h.fps_count},
            {"kappa", h.kappa},
            {"h_v", h.bandwidth_v},
            {"h_v_policy", h.bandwidth_v_median ? "median" : "fixed"},
            {"h_mood_policy", h.bandwidth_m_fixed ? "fixed" : "median"},
            {"lambda1", h.weights.curvature},
            {"lambda2", h.weights.repulsion},
            {"lambda3", h.weights.reconstruction},
            {"lambda4", h.weights.variance},
            {"lr", h.lr},
            {"steps", h.steps},
            {"seed", h.seed},
            {"curvature_triples", h.curvature_triples},
            {"repulsion_eps", h.repulsion_eps},
            {"clip_norm", h.clip_norm},
            {"include_class_tokens", h.include_class_tokens},
            {"log_every", h.log_every},
            {"k_min", h.k_min},
            {"k_max", h.k_max}};
  if (h.bandwidth_m_fixed) j["h_mood"] = h.bandwidth_m;
  if (h.g_hat > 0.0) j["g_hat"] = h.g_hat;
  return j;
}

json to_json(const UniformityReport& r) {
  return {{"entropy_raw", r.entropy_raw}, {"entropy_pca", r.entropy_pca}, {"entropy_eigvals", r.entropy_eigvals},
          {"dim", r.dim}, {"pca_dims", r.pca_dims}, {"histogram_bins", r.bins},
          {"estimator", "per-dimension histogram over observed range; PCA eigenvalue entropy"}};
}

void require_image(const TokenEmbeddingSet& set, std::size_t index, const char* flag) {
  if (index >= set.n_images) {
    throw InvalidInput(std::string(flag) + " " + std::to_string(index) + " is out of range (set has " +
                       std::to_string(set.n_images) + " images)");
  }
}

TokenEmbeddingSet frames_to_set(const std::vector<Eigen::MatrixXd>& frames, const TokenEmbeddingSet& layout,
                                std::string metadata) {
  return TokenEmbeddingSet::from_images(frames, layout.grid_h, layout.grid_w, layout.has_class_token, SpaceTag::W,
                                        std::move(metadata));
}

/// Per-token anchors for image `index`: true W tokens when given, else the
/// model's reconstruction.
Eigen::MatrixXd anchors_for(const MoodSpaceModel& model, const TokenEmbeddingSet& v,
                            const std::optional<TokenEmbeddingSet>& w, std::size_t index) {
  if (w) {
    if (w->n_images != v.n_images || w->tokens_per_image != v.tokens_per_image) {
      throw InvalidInput("--w set is not aligned with --v");
    }
    return w->image_tokens(index);
  }
  return decode(model, encode(model, v.image_tokens(index)));
}

std::optional<TokenEmbeddingSet> read_optional(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_embeddings(path);
}

struct EstimateDimArgs {
  std::string emb;
  std::size_t k_min = 10;
  std::size_t k_max = 20;
};

struct FitArgs {
  std::string v, w, out, csv, g = "auto";
  TrainConfig config;
  std::optional<double> h, h_mood;
  bool no_class_tokens = false;
};

struct InterpArgs {
  std::string model, v, w, out, mode = "literal";
  std::size_t src = 0, dst = 0, steps = 2;
};

struct AnalogyArgs {
  std::string model, v, w, out;
  std::size_t a1 = 0, a2 = 0, b1 = 0, clusters = 10;
  std::uint64_t seed = 0;
  double t = 1.0;
  bool image_path = false;
};

struct InspectArgs {
  std::string model, emb;
};

struct EigvecsArgs {
  std::string emb, out;
  std::size_t k = 5;
  double kappa = 1.0;
  std::optional<double> h;
};

int cmd_estimate_dim(const EstimateDimArgs& a, std::ostream& out) {
  const TokenEmbeddingSet set = read_embeddings(a.emb);
  const DimEstimate est = estimate_dim(set.tokens(), a.k_min, a.k_max);
  out << json{{"g_hat", est.g_hat}, {"g_rounded", est.g_rounded}, {"k_min", est.k_min}, {"k_max", est.k_max},
              {"n_points", set.token_count()}}.dump(2)
      << '\n';
  return kExitOk;
}

int cmd_fit(FitArgs a, std::ostream& out, std::ostream& err) {
  const TokenEmbeddingSet v = read_embeddings(a.v);
  const TokenEmbeddingSet w = read_embeddings(a.w);
  TrainConfig& c = a.config;
  if (a.g != "auto") {
    std::size_t pos = 0;
    long g = -1;
    try {
      g = std::stol(a.g, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != a.g.size() || g < 1) throw InvalidInput("--g must be a positive integer or 'auto'");
    c.mood_dim = std::size_t(g);
  }
  c.bandwidth_v = a.h;
  c.bandwidth_m = a.h_mood;
  c.include_class_tokens = !a.no_class_tokens;

  TrainObserver observer;
  observer.on_warning = [&err](std::string_view msg) { err << "warning: " << msg << '\n'; };
  const std::uint32_t report_every = std::max<std::uint32_t>(1, c.steps / 10);
  observer.on_record = [&err, report_every, &c](const LossRecord& r) {
    if (r.step % report_every == 0 || r.step == c.steps) {
      err << "step " << r.step << " total " << r.total << " spec " << r.spec << " recon " << r.recon << '\n';
    }
  };

  MoodSpaceModel model = fit(v, w, c, observer);
  const std::string csv_path = a.csv.empty() ? a.out + ".loss.csv" : a.csv;
  std::ostringstream extra;
  extra << "v_source=" << v.source_tag() << "\nw_source=" << w.source_tag() << '\n';
  model.provenance += extra.str();
  save_model(model, a.out);
  {
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write '" + csv_path + "'");
    write_loss_csv(model, csv);
  }
  const json config = to_json(model.hyper);
  err << "effective config: " << config.dump() << '\n';
  out << json{{"model", a.out}, {"loss_csv", csv_path}, {"G", model.mood_dim()}, {"config", config},
              {"final", to_json(model.loss_history.back())}}.dump(2)
      << '\n';
  return kExitOk;
}

int cmd_interp(const InterpArgs& a, std::ostream& out) {
  const MoodSpaceModel model = load_model(a.model);
  const TokenEmbeddingSet v = read_embeddings(a.v);
  const std::optional<TokenEmbeddingSet> w = read_optional(a.w);
  require_image(v, a.src, "--src-image");
  require_image(v, a.dst, "--dst-image");
  if (a.steps < 1) throw InvalidInput("--steps must be at least 1");
  if (a.mode != "literal" && a.mode != "decode-along-path") {
    throw InvalidInput("--mode must be 'literal' or 'decode-along-path'");
  }

  const Eigen::MatrixXd m_src = encode(model, v.image_tokens(a.src));
  const Eigen::MatrixXd m_dst = encode(model, v.image_tokens(a.dst));
  const Eigen::MatrixXd anchors = anchors_for(model, v, w, a.src);
  const std::vector<double> t = uniform_samples(a.steps);

  std::vector<Eigen::MatrixXd> frames;
  if (a.mode == "literal") {
    const Eigen::MatrixXd slopes = decode_delta(model, m_dst - m_src);
    for (double ts : t) frames.push_back(anchors + ts * slopes);
  } else {
    for (double ts : t) frames.push_back(decode(model, m_src + ts * (m_dst - m_src)));
  }

  std::ostringstream meta;
  meta << "source=moodspace interp\nmode=" << a.mode << "\nsrc_image=" << a.src << "\ndst_image=" << a.dst
       << "\nanchors=" << (w ? "w" : "reconstructed") << '\n';
  write_embeddings(frames_to_set(frames, v, meta.str()), a.out);
  out << json{{"out", a.out}, {"frames", frames.size()}, {"t", t}, {"mode", a.mode}}.dump(2) << '\n';
  return kExitOk;
}

int cmd_analogy(const AnalogyArgs& a, std::ostream& out) {
  const MoodSpaceModel model = load_model(a.model);
  const TokenEmbeddingSet v = read_embeddings(a.v);
  const std::optional<TokenEmbeddingSet> w = read_optional(a.w);
  require_image(v, a.a1, "--a1");
  require_image(v, a.a2, "--a2");
  require_image(v, a.b1, "--b1");

  const Eigen::MatrixXd anchors = anchors_for(model, v, w, a.b1);
  Eigen::MatrixXd b2;
  json info = {{"out", a.out}, {"t", a.t}, {"image_path", a.image_path}};
  if (a.image_path) {
    if (a.clusters < 1 || a.clusters > v.tokens_per_image) {
      throw InvalidInput("--H must be between 1 and the tokens per image (" + std::to_string(v.tokens_per_image) + ")");
    }
    const std::vector<double> t{a.t};
    const ImagePathResult r = image_path(model, v.image_tokens(a.a1), v.image_tokens(a.a2), v.image_tokens(a.b1),
                                         a.clusters, t, a.seed, anchors);
    b2 = r.frame(0);
    info["H"] = a.clusters;
    info["a1_to_a2"] = r.a1_to_a2;
    info["b1_to_a1"] = r.b1_to_a1;
  } else {
    const Eigen::MatrixXd slopes =
        decode_delta(model, encode(model, v.image_tokens(a.a2)) - encode(model, v.image_tokens(a.a1)));
    b2 = anchors + a.t * slopes;
  }

  std::ostringstream meta;
  meta << "source=moodspace analogy\na1=" << a.a1 << "\na2=" << a.a2 << "\nb1=" << a.b1 << "\nt=" << a.t
       << "\nimage_path=" << (a.image_path ? 1 : 0) << '\n';
  write_embeddings(frames_to_set({b2}, v, meta.str()), a.out);
  out << info.dump(2) << '\n';
  return kExitOk;
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const MoodSpaceModel model = load_model(a.model);
  json j = {{"G", model.mood_dim()},
            {"input_dim", model.input_dim()},
            {"output_dim", model.output_dim()},
            {"hidden", model.encoder.hidden_dim()},
            {"hyperparams", to_json(model.hyper)},
            {"loss_records", model.loss_history.size()},
            {"provenance", model.provenance}};
  if (!model.loss_history.empty()) {
    j["initial_losses"] = to_json(model.loss_history.front());
    j["final_losses"] = to_json(model.loss_history.back());
  }
  if (!a.emb.empty()) {
    const TokenEmbeddingSet set = read_embeddings(a.emb);
    const Eigen::MatrixXd tokens = set.tokens();
    j["uniformity"] = {{"source", to_json(uniformity(tokens))}, {"mood", to_json(uniformity(encode(model, tokens)))}};
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_eigvecs(const EigvecsArgs& a, std::ostream& out) {
  const TokenEmbeddingSet set = read_embeddings(a.emb);
  if (set.grid_h < 2 || set.grid_w < 2) throw InvalidInput("embedding set has no 2-D token grid");
  if (set.token_count() > kMaxDenseTokens) {
    throw InvalidInput("too many tokens for the dense eigensolver (" + std::to_string(set.token_count()) + " > " +
                       std::to_string(kMaxDenseTokens) + ")");
  }
  if (a.k < 1 || a.k > set.token_count()) throw InvalidInput("--k must be between 1 and the token count");
  const SpectralEmbedding e = affinity_embedding(set.tokens(), a.k, AffinityParams{a.kappa, a.h});
  const GridLayout layout{set.n_images, set.tokens_per_image, set.grid_h, set.grid_w, set.has_class_token};
  const auto files = export_eigvec_grids(e, layout, a.out);
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.string());
  std::vector<double> values(e.values.data(), e.values.data() + e.values.size());
  out << json{{"eigenvalues", values}, {"pgm_files", names}}.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mood Space learning and embedding operations"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");

  EstimateDimArgs est;
  auto* est_cmd = app.add_subcommand("estimate-dim", "Estimate the intrinsic dimension of an embedding set");
  est_cmd->add_option("--emb", est.emb, "MOODEMB1 file")->required();
  est_cmd->add_option("--kmin", est.k_min, "Smallest neighbor count")->capture_default_str();
  est_cmd->add_option("--kmax", est.k_max, "Largest neighbor count")->capture_default_str();

  FitArgs fit_args;
  TrainConfig& c = fit_args.config;
  auto* fit_cmd = app.add_subcommand("fit", "Learn a Mood Space from aligned V and W token sets");
  fit_cmd->add_option("--v", fit_args.v, "V-space MOODEMB1 file")->required();
  fit_cmd->add_option("--w", fit_args.w, "W-space MOODEMB1 file")->required();
  fit_cmd->add_option("--out", fit_args.out, "Output model file")->required();
  fit_cmd->add_option("--csv", fit_args.csv, "Loss CSV path (default: <out>.loss.csv)");
  fit_cmd->add_option("--steps", c.steps)->capture_default_str();
  fit_cmd->add_option("--k", c.k, "Eigenvectors in the spectral loss")->capture_default_str();
  fit_cmd->add_option("--fps", c.fps_count, "Farthest-point subset size")->capture_default_str();
  fit_cmd->add_option("--g", fit_args.g, "Mood Space dimension or 'auto'")->capture_default_str();
  fit_cmd->add_option("--seed", c.seed)->capture_default_str();
  fit_cmd->add_option("--lr", c.lr)->capture_default_str();
  fit_cmd->add_option("--lambda1", c.weights.curvature, "Curvature weight")->capture_default_str();
  fit_cmd->add_option("--lambda2", c.weights.repulsion, "Repulsion weight")->capture_default_str();
  fit_cmd->add_option("--lambda3", c.weights.reconstruction, "Reconstruction weight")->capture_default_str();
  fit_cmd->add_option("--lambda4", c.weights.variance, "Covariance weight")->capture_default_str();
  fit_cmd->add_option("--kappa", c.kappa)->capture_default_str();
  fit_cmd->add_option("--h", fit_args.h, "Fixed V-space bandwidth (default: median heuristic)");
  fit_cmd->add_option("--h-mood", fit_args.h_mood, "Fixed Mood-Space bandwidth (default: median every step)");
  fit_cmd->add_option("--log-every", c.log_every)->capture_default_str();
  fit_cmd->add_option("--curv-triples", c.curvature_triples)->capture_default_str();
  fit_cmd->add_option("--rep-eps", c.repulsion_eps)->capture_default_str();
  fit_cmd->add_option("--kmin", c.k_min)->capture_default_str();
  fit_cmd->add_option("--kmax", c.k_max)->capture_default_str();
  fit_cmd->add_flag("--no-class-tokens", fit_args.no_class_tokens, "Train on patch tokens only");

  InterpArgs interp;
  auto* interp_cmd = app.add_subcommand("interp", "Interpolate between two images in Mood Space");
  interp_cmd->add_option("--model", interp.model)->required();
  interp_cmd->add_option("--v", interp.v)->required();
  interp_cmd->add_option("--w", interp.w, "W-space anchors (default: reconstructed)");
  interp_cmd->add_option("--src-image", interp.src)->required();
  interp_cmd->add_option("--dst-image", interp.dst)->required();
  interp_cmd->add_option("--steps", interp.steps, "Number of frames")->capture_default_str();
  interp_cmd->add_option("--mode", interp.mode, "literal | decode-along-path")->capture_default_str();
  interp_cmd->add_option("--out", interp.out)->required();

  AnalogyArgs analogy_args;
  auto* analogy_cmd = app.add_subcommand("analogy", "Complete A1 : A2 :: B1 : B2");
  analogy_cmd->add_option("--model", analogy_args.model)->required();
  analogy_cmd->add_option("--v", analogy_args.v)->required();
  analogy_cmd->add_option("--w", analogy_args.w, "W-space anchors (default: reconstructed)");
  analogy_cmd->add_option("--a1", analogy_args.a1)->required();
  analogy_cmd->add_option("--a2", analogy_args.a2)->required();
  analogy_cmd->add_option("--b1", analogy_args.b1)->required();
  analogy_cmd->add_option("--t", analogy_args.t, "Path parameter")->capture_default_str();
  analogy_cmd->add_flag("--image-path", analogy_args.image_path, "Lift per token cluster");
  analogy_cmd->add_option("--H", analogy_args.clusters, "Token clusters per image")->capture_default_str();
  analogy_cmd->add_option("--seed", analogy_args.seed, "Clustering seed")->capture_default_str();
  analogy_cmd->add_option("--out", analogy_args.out)->required();

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print model provenance, losses and uniformity");
  inspect_cmd->add_option("--model", inspect.model)->required();
  inspect_cmd->add_option("--emb", inspect.emb, "V-space set for the uniformity report");

  EigvecsArgs eig;
  auto* eig_cmd = app.add_subcommand("eigvecs", "Export affinity eigenvectors as per-image grids");
  eig_cmd->add_option("--emb", eig.emb)->required();
  eig_cmd->add_option("--k", eig.k)->capture_default_str();
  eig_cmd->add_option("--kappa", eig.kappa)->capture_default_str();
  eig_cmd->add_option("--h", eig.h, "Fixed bandwidth (default: median heuristic)");
  eig_cmd->add_option("--out", eig.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help, error;
    const int code = app.exit(e, help, error);
    if (code == 0) {
      out << help.str();
      return kExitOk;
    }
    err << error.str();
    return kExitUserError;
  }

  try {
    if (*est_cmd) return cmd_estimate_dim(est, out);
    if (*fit_cmd) return cmd_fit(fit_args, out, err);
    if (*interp_cmd) return cmd_interp(interp, out);
    if (*analogy_cmd) return cmd_analogy(analogy_args, out);
    if (*inspect_cmd) return cmd_inspect(inspect, out);
    if (*eig_cmd) return cmd_eigvecs(eig, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace moodspace::cli
