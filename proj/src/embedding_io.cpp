#include "moodspace/embedding_io.hpp"

#include <cmath>
#include <sstream>

#include "moodspace/binary_io.hpp"
#include "moodspace/errors.hpp"

namespace moodspace {

namespace {

constexpr std::string_view kMagic = "MOODEMB1";

}  // namespace

std::string_view to_string(SpaceTag tag) {
  switch (tag) {
    case SpaceTag::V: return "V";
    case SpaceTag::W: return "W";
    case SpaceTag::Other: return "other";
  }
  return "other";
}

void TokenEmbeddingSet::validate() const {
  if (n_images < 1) throw InvalidInput("embedding set must contain at least one image");
  if (dim < 1) throw InvalidInput("embedding dimension must be positive");
  const std::size_t expected = patch_tokens_per_image() + (has_class_token ? 1 : 0);
  if (tokens_per_image != expected) {
    std::ostringstream msg;
    msg << "tokens_per_image (" << tokens_per_image << ") does not match grid " << grid_h << "x"
        << grid_w << (has_class_token ? " + class token" : "");
    throw InvalidInput(msg.str());
  }
  if (data.size() != token_count() * dim) throw InvalidInput("data size does not match shape");
  for (float v : data) {
    if (!std::isfinite(v)) throw InvalidInput("non-finite data");
  }
}

Eigen::MatrixXd TokenEmbeddingSet::tokens() const { return tokens(true); }

Eigen::MatrixXd TokenEmbeddingSet::tokens(bool include_class_token) const {
  const bool drop = has_class_token && !include_class_token;
  const std::size_t per_image = tokens_per_image - (drop ? 1 : 0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_images * per_image), dim);
  Eigen::Index row = 0;
  for (std::size_t img = 0; img < n_images; ++img) {
    for (std::size_t t = 0; t < per_image; ++t, ++row) {
      const float* src = data.data() + (img * tokens_per_image + t) * dim;
      for (std::size_t d = 0; d < dim; ++d) out(row, Eigen::Index(d)) = src[d];
    }
  }
  return out;
}

Eigen::MatrixXd TokenEmbeddingSet::image_tokens(std::size_t image, bool include_class_token) const {
  if (image >= n_images) throw InvalidInput("image index out of range");
  const std::size_t count = tokens_per_image - ((has_class_token && !include_class_token) ? 1 : 0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), dim);
  for (std::size_t t = 0; t < count; ++t) {
    const float* src = data.data() + (image * tokens_per_image + t) * dim;
    for (std::size_t d = 0; d < dim; ++d) out(Eigen::Index(t), Eigen::Index(d)) = src[d];
  }
  return out;
}

std::optional<std::string> TokenEmbeddingSet::metadata_value(std::string_view key) const {
  std::istringstream lines(metadata);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos && std::string_view(line).substr(0, eq) == key) {
      return line.substr(eq + 1);
    }
  }
  return std::nullopt;
}

TokenEmbeddingSet TokenEmbeddingSet::from_images(const std::vector<Eigen::MatrixXd>& images,
                                                 std::uint32_t grid_h, std::uint32_t grid_w,
                                                 bool has_class_token, SpaceTag space,
                                                 std::string metadata) {
  if (images.empty()) throw InvalidInput("embedding set must contain at least one image");
  TokenEmbeddingSet set;
  set.n_images = static_cast<std::uint32_t>(images.size());
  set.tokens_per_image = static_cast<std::uint32_t>(images.front().rows());
  set.dim = static_cast<std::uint32_t>(images.front().cols());
  set.grid_h = grid_h;
  set.grid_w = grid_w;
  set.space = space;
  set.has_class_token = has_class_token;
  set.metadata = std::move(metadata);
  set.data.reserve(set.token_count() * set.dim);
  for (const auto& img : images) {
    if (img.rows() != images.front().rows() || img.cols() != images.front().cols()) {
      throw InvalidInput("all images must have the same token shape");
    }
    for (Eigen::Index t = 0; t < img.rows(); ++t) {
      for (Eigen::Index d = 0; d < img.cols(); ++d) set.data.push_back(static_cast<float>(img(t, d)));
    }
  }
  set.validate();
  return set;
}

std::vector<std::byte> encode_embeddings(const TokenEmbeddingSet& set) {
  set.validate();
  binary::ByteWriter w;
  w.bytes(kMagic);
  w.u32(set.n_images);
  w.u32(set.tokens_per_image);
  w.u32(set.dim);
  w.u32(set.grid_h);
  w.u32(set.grid_w);
  w.u32(static_cast<std::uint32_t>(set.space));
  w.u32(set.has_class_token ? kFlagClassToken : 0u);
  w.string(set.metadata);
  for (float v : set.data) w.f32(v);
  return w.buffer();
}

TokenEmbeddingSet decode_embeddings(std::vector<std::byte> bytes) {
  binary::ByteReader r(std::move(bytes));
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw FormatError("unrecognized format");
  }
  TokenEmbeddingSet set;
  set.n_images = r.u32();
  set.tokens_per_image = r.u32();
  set.dim = r.u32();
  set.grid_h = r.u32();
  set.grid_w = r.u32();
  const std::uint32_t space = r.u32();
  if (space > static_cast<std::uint32_t>(SpaceTag::Other)) throw FormatError("unknown space tag");
  set.space = static_cast<SpaceTag>(space);
  const std::uint32_t flags = r.u32();
  if (flags & ~kFlagClassToken) throw FormatError("unknown header flags");
  set.has_class_token = (flags & kFlagClassToken) != 0;
  set.metadata = r.string();

  const std::uint64_t count = std::uint64_t(set.n_images) * set.tokens_per_image * set.dim;
  const std::uint64_t needed = count * 4;
  if (r.remaining() < needed) throw FormatError("truncated payload");
  if (r.remaining() > needed) throw FormatError("size mismatch: trailing bytes after payload");
  set.data.resize(count);
  for (float& v : set.data) v = r.f32();
  try {
    set.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(e.what());
  }
  return set;
}

void write_embeddings(const TokenEmbeddingSet& set, const std::filesystem::path& path) {
  binary::write_file(path, encode_embeddings(set));
}

TokenEmbeddingSet read_embeddings(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: '" + path.string() + "'");
  return decode_embeddings(binary::read_file(path));
}

}  // namespace moodspace
