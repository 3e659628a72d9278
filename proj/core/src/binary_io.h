#ifndef LOGITDYN_SRC_BINARY_IO_H_
#define LOGITDYN_SRC_BINARY_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logitdyn::internal {

// Little-endian encoder into an in-memory buffer.
class ByteWriter {
 public:
  void Bytes(std::string_view bytes) { buffer_.append(bytes); }
  void U32(std::uint32_t value);
  void F32(float value);
  void F32s(std::span<const float> values);
  const std::string& buffer() const { return buffer_; }

 private:
  std::string buffer_;
};

// Little-endian decoder with offset tracking; every short read raises a
// DataError naming the byte offset where the payload ended.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::string_view Bytes(std::size_t n, std::string_view what);
  std::uint32_t U32(std::string_view what);
  void F32s(std::span<float> out, std::string_view what);
  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }
  const std::string& source() const { return source_; }

 private:
  void Require(std::size_t n, std::string_view what) const;

  std::string_view bytes_;
  std::size_t offset_ = 0;
  std::string source_;
};

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

// Checks the 6-byte magic "<tag>1\0" and distinguishes a foreign file from
// an unsupported version of the right format.
void CheckMagic(ByteReader& reader, std::string_view tag);
std::string Magic(std::string_view tag);

}  // namespace logitdyn::internal

#endif  // LOGITDYN_SRC_BINARY_IO_H_
