#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace moodspace {

enum class SpaceTag : std::uint32_t { V = 0, W = 1, Other = 2 };

std::string_view to_string(SpaceTag tag);

/// Header flag bits of the MOODEMB1 format.
inline constexpr std::uint32_t kFlagClassToken = 1u << 0;

/**
 * Token features for a set of images: n_images x tokens_per_image x dim,
 * stored row-major as 32-bit floats.
 *
 * Patch tokens are in raster order over a grid_h x grid_w grid. When
 * has_class_token is set, the class token is the last token of each image.
 * `metadata` holds free-form key=value lines; the `source` key names the
 * backbone and preprocessing that produced the features.
 */
struct TokenEmbeddingSet {
  std::uint32_t n_images = 0;
  std::uint32_t tokens_per_image = 0;
  std::uint32_t dim = 0;
  std::uint32_t grid_h = 0;
  std::uint32_t grid_w = 0;
  SpaceTag space = SpaceTag::Other;
  bool has_class_token = false;
  std::string metadata;
  std::vector<float> data;

  /// Throws InvalidInput describing the first violated invariant.
  void validate() const;

  std::size_t token_count() const { return std::size_t(n_images) * tokens_per_image; }
  std::size_t patch_tokens_per_image() const { return std::size_t(grid_h) * grid_w; }

  /// All tokens as a (n_images * tokens_per_image) x dim matrix.
  Eigen::MatrixXd tokens() const;
  /// Tokens of one image; optionally without its class token.
  Eigen::MatrixXd image_tokens(std::size_t image, bool include_class_token = true) const;
  /// All tokens, dropping class tokens when `include_class_token` is false.
  Eigen::MatrixXd tokens(bool include_class_token) const;

  std::optional<std::string> metadata_value(std::string_view key) const;
  std::string source_tag() const { return metadata_value("source").value_or(""); }

  /// Builds a set from per-image token rows; each block must have the same shape.
  static TokenEmbeddingSet from_images(const std::vector<Eigen::MatrixXd>& images,
                                       std::uint32_t grid_h, std::uint32_t grid_w,
                                       bool has_class_token, SpaceTag space,
                                       std::string metadata = {});
};

void write_embeddings(const TokenEmbeddingSet& set, const std::filesystem::path& path);
TokenEmbeddingSet read_embeddings(const std::filesystem::path& path);

/// In-memory encoding used by write_embeddings; exposed for byte-level tests.
std::vector<std::byte> encode_embeddings(const TokenEmbeddingSet& set);
TokenEmbeddingSet decode_embeddings(std::vector<std::byte> bytes);

}  // namespace moodspace
