#include "moodspace/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "moodspace/errors.hpp"

namespace moodspace::binary {

namespace {

template <typename U>
void put_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFFu));
  }
}

}  // namespace

void ByteWriter::bytes(std::string_view raw) {
  for (char c : raw) buffer_.push_back(static_cast<std::byte>(c));
}

void ByteWriter::u32(std::uint32_t value) { put_le(buffer_, value); }
void ByteWriter::u64(std::uint64_t value) { put_le(buffer_, value); }
void ByteWriter::f32(float value) { put_le(buffer_, std::bit_cast<std::uint32_t>(value)); }
void ByteWriter::f64(double value) { put_le(buffer_, std::bit_cast<std::uint64_t>(value)); }

void ByteWriter::string(std::string_view text) {
  u32(static_cast<std::uint32_t>(text.size()));
  bytes(text);
}

void ByteWriter::f64_array(std::span<const double> values) {
  for (double v : values) f64(v);
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = static_cast<std::byte>(raw[i]);
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ByteWriter::write_file(const std::filesystem::path& path) const {
  binary::write_file(path, buffer_);
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  return ByteReader(read_file(path));
}

void ByteReader::require(std::size_t count) const {
  if (remaining() < count) throw FormatError("unexpected end of file");
}

std::string ByteReader::bytes(std::size_t count) {
  require(count);
  std::string out(count, '\0');
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<char>(data_[offset_ + i]);
  offset_ += count;
  return out;
}

std::uint32_t ByteReader::u32() {
  require(4);
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= std::uint32_t(std::to_integer<std::uint8_t>(data_[offset_ + i])) << (8 * i);
  offset_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  require(8);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(data_[offset_ + i])) << (8 * i);
  offset_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::string() {
  const std::uint32_t len = u32();
  return bytes(len);
}

void ByteReader::f64_array(std::span<double> out) {
  require(out.size() * 8);
  for (double& v : out) v = f64();
}

}  // namespace moodspace::binary
