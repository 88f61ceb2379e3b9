#pragma once

// Little-endian byte encoding shared by the embedding and model formats.
// Values are always written least-significant byte first, independent of the
// host byte order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moodspace::binary {

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

class ByteWriter {
 public:
  void bytes(std::string_view raw);
  void u32(std::uint32_t value);
  void u64(std::uint64_t value);
  void f32(float value);
  void f64(double value);
  /// u32 length prefix followed by the raw bytes.
  void string(std::string_view text);
  void f64_array(std::span<const double> values);

  const std::vector<std::byte>& buffer() const { return buffer_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::byte> buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::byte> data) : data_(std::move(data)) {}

  static ByteReader from_file(const std::filesystem::path& path);

  std::string bytes(std::size_t count);
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string string();
  void f64_array(std::span<double> out);

  std::size_t remaining() const { return data_.size() - offset_; }
  std::size_t offset() const { return offset_; }

 private:
  void require(std::size_t count) const;

  std::vector<std::byte> data_;
  std::size_t offset_ = 0;
};

}  // namespace moodspace::binary
