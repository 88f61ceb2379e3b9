#include "moodspace/model.hpp"

#include <cmath>

#include "moodspace/binary_io.hpp"
#include "moodspace/errors.hpp"

namespace moodspace {

namespace {

constexpr std::string_view kMagic = "MOODMDL1";
constexpr std::uint32_t kFlagVMedian = 1u << 0;
constexpr std::uint32_t kFlagMFixed = 1u << 1;
constexpr std::uint32_t kFlagClassTokens = 1u << 2;
// Guards allocation against corrupt headers.
constexpr std::uint64_t kMaxDim = 1u << 20;

void write_row(binary::ByteWriter& w, const Eigen::RowVectorXd& row) {
  w.u32(std::uint32_t(row.size()));
  w.f64_array(std::span<const double>(row.data(), std::size_t(row.size())));
}

Eigen::RowVectorXd read_row(binary::ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (n > kMaxDim) throw FormatError("vector length out of range");
  Eigen::RowVectorXd row(n);
  r.f64_array(std::span<double>(row.data(), n));
  return row;
}

void write_mlp(binary::ByteWriter& w, const MlpParams& p) {
  w.u32(std::uint32_t(kMlpLayers));
  for (const auto& layer : p.layers) {
    w.u32(std::uint32_t(layer.weight.rows()));
    w.u32(std::uint32_t(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f64(layer.weight(r, c));
    }
    write_row(w, layer.bias);
  }
}

MlpParams read_mlp(binary::ByteReader& r) {
  if (r.u32() != kMlpLayers) throw FormatError("unexpected layer count");
  MlpParams p;
  for (auto& layer : p.layers) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) throw FormatError("layer shape out of range");
    if (r.remaining() < std::uint64_t(rows) * cols * 8) throw FormatError("truncated payload");
    layer.weight.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) layer.weight(i, j) = r.f64();
    }
    layer.bias = read_row(r);
  }
  return p;
}

}  // namespace

FeatureStats FeatureStats::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw InvalidInput("FeatureStats::fit: empty input");
  FeatureStats s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / double(x.rows())).cwiseSqrt();
  for (Eigen::Index d = 0; d < s.scale.size(); ++d) {
    if (!(s.scale(d) > 1e-12)) s.scale(d) = 1.0;
  }
  return s;
}

Eigen::MatrixXd FeatureStats::standardize(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw InvalidInput("standardize: dimension mismatch");
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd FeatureStats::destandardize(const Eigen::MatrixXd& z) const {
  if (z.cols() != mean.size()) throw InvalidInput("destandardize: dimension mismatch");
  return (z.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

void MoodSpaceModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (decoder.in_dim() != encoder.out_dim()) throw InvalidInput("model: decoder input does not match G");
  if (v_stats.mean.size() != encoder.in_dim() || v_stats.scale.size() != encoder.in_dim()) {
    throw InvalidInput("model: V statistics do not match encoder input");
  }
  if (w_stats.mean.size() != decoder.out_dim() || w_stats.scale.size() != decoder.out_dim()) {
    throw InvalidInput("model: W statistics do not match decoder output");
  }
}

std::vector<std::byte> encode_model(const MoodSpaceModel& model) {
  model.validate();
  const Hyperparams& h = model.hyper;
  binary::ByteWriter w;
  w.bytes(kMagic);
  w.u32(std::uint32_t(model.input_dim()));
  w.u32(std::uint32_t(model.mood_dim()));
  w.u32(std::uint32_t(model.output_dim()));
  w.u32(std::uint32_t(model.encoder.hidden_dim()));

  std::uint32_t flags = 0;
  if (h.bandwidth_v_median) flags |= kFlagVMedian;
  if (h.bandwidth_m_fixed) flags |= kFlagMFixed;
  if (h.include_class_tokens) flags |= kFlagClassTokens;
  w.u32(flags);
  w.u32(h.k);
  w.u32(h.fps_count);
  w.u32(h.steps);
  w.u32(h.log_every);
  w.u32(h.curvature_triples);
  w.u32(h.k_min);
  w.u32(h.k_max);
  w.u64(h.seed);
  for (double v : {h.kappa, h.bandwidth_v, h.bandwidth_m, h.weights.curvature, h.weights.repulsion,
                   h.weights.reconstruction, h.weights.variance, h.lr, h.repulsion_eps, h.clip_norm, h.g_hat}) {
    w.f64(v);
  }
  w.string(model.provenance);

  write_row(w, model.v_stats.mean);
  write_row(w, model.v_stats.scale);
  write_row(w, model.w_stats.mean);
  write_row(w, model.w_stats.scale);
  write_mlp(w, model.encoder);
  write_mlp(w, model.decoder);

  w.u32(std::uint32_t(model.subset.size()));
  for (auto idx : model.subset) w.u32(idx);

  w.u32(std::uint32_t(model.loss_history.size()));
  for (const auto& rec : model.loss_history) {
    w.u64(rec.step);
    for (double v : {rec.spec, rec.curv, rec.rep, rec.recon, rec.var, rec.total}) w.f64(v);
  }
  return w.buffer();
}

MoodSpaceModel decode_model(std::vector<std::byte> bytes) {
  binary::ByteReader r(std::move(bytes));
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) throw FormatError("unrecognized format");
  MoodSpaceModel m;
  Hyperparams& h = m.hyper;
  const std::uint32_t input_dim = r.u32();
  const std::uint32_t mood_dim = r.u32();
  const std::uint32_t output_dim = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t flags = r.u32();
  h.bandwidth_v_median = flags & kFlagVMedian;
  h.bandwidth_m_fixed = flags & kFlagMFixed;
  h.include_class_tokens = flags & kFlagClassTokens;
  h.k = r.u32();
  h.fps_count = r.u32();
  h.steps = r.u32();
  h.log_every = r.u32();
  h.curvature_triples = r.u32();
  h.k_min = r.u32();
  h.k_max = r.u32();
  h.seed = r.u64();
  for (double* v : {&h.kappa, &h.bandwidth_v, &h.bandwidth_m, &h.weights.curvature, &h.weights.repulsion,
                    &h.weights.reconstruction, &h.weights.variance, &h.lr, &h.repulsion_eps, &h.clip_norm,
                    &h.g_hat}) {
    *v = r.f64();
  }
  m.provenance = r.string();

  m.v_stats.mean = read_row(r);
  m.v_stats.scale = read_row(r);
  m.w_stats.mean = read_row(r);
  m.w_stats.scale = read_row(r);
  m.encoder = read_mlp(r);
  m.decoder = read_mlp(r);

  const std::uint32_t subset_size = r.u32();
  if (r.remaining() < std::uint64_t(subset_size) * 4) throw FormatError("truncated payload");
  m.subset.resize(subset_size);
  for (auto& idx : m.subset) idx = r.u32();

  const std::uint32_t records = r.u32();
  if (r.remaining() < std::uint64_t(records) * 56) throw FormatError("truncated payload");
  m.loss_history.resize(records);
  for (auto& rec : m.loss_history) {
    rec.step = r.u64();
    for (double* v : {&rec.spec, &rec.curv, &rec.rep, &rec.recon, &rec.var, &rec.total}) *v = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("size mismatch: trailing bytes after model");

  try {
    m.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  if (m.input_dim() != input_dim || m.mood_dim() != mood_dim || m.output_dim() != output_dim ||
      m.encoder.hidden_dim() != hidden) {
    throw FormatError("model header does not match layer shapes");
  }
  return m;
}

void save_model(const MoodSpaceModel& model, const std::filesystem::path& path) {
  binary::write_file(path, encode_model(model));
}

MoodSpaceModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: '" + path.string() + "'");
  return decode_model(binary::read_file(path));
}

}  // namespace moodspace
