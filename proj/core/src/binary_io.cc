#include "binary_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "logitdyn/errors.h"

namespace logitdyn::internal {
namespace {

constexpr char kVersion = '1';

std::uint32_t ToLittle(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
}

}  // namespace

void ByteWriter::U32(std::uint32_t value) {
  const std::uint32_t le = ToLittle(value);
  char raw[4];
  std::memcpy(raw, &le, 4);
  buffer_.append(raw, 4);
}

void ByteWriter::F32(float value) { U32(std::bit_cast<std::uint32_t>(value)); }

void ByteWriter::F32s(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    buffer_.append(reinterpret_cast<const char*>(values.data()),
                   values.size_bytes());
  } else {
    for (float v : values) F32(v);
  }
}

void ByteReader::Require(std::size_t n, std::string_view what) const {
  if (remaining() < n) {
    std::ostringstream msg;
    msg << source_ << ": truncated payload at byte offset " << bytes_.size()
        << " while reading " << what << " (needed " << n << " bytes at offset "
        << offset_ << ")";
    throw DataError(msg.str());
  }
}

std::string_view ByteReader::Bytes(std::size_t n, std::string_view what) {
  Require(n, what);
  std::string_view out = bytes_.substr(offset_, n);
  offset_ += n;
  return out;
}

std::uint32_t ByteReader::U32(std::string_view what) {
  Require(4, what);
  std::uint32_t v;
  std::memcpy(&v, bytes_.data() + offset_, 4);
  offset_ += 4;
  return ToLittle(v);
}

void ByteReader::F32s(std::span<float> out, std::string_view what) {
  Require(out.size_bytes(), what);
  std::memcpy(out.data(), bytes_.data() + offset_, out.size_bytes());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : out) {
      f = std::bit_cast<float>(ToLittle(std::bit_cast<std::uint32_t>(f)));
    }
  }
  offset_ += out.size_bytes();
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string Magic(std::string_view tag) {
  std::string magic(tag);
  magic.push_back(kVersion);
  magic.push_back('\0');
  return magic;
}

void CheckMagic(ByteReader& reader, std::string_view tag) {
  const std::string expected = Magic(tag);
  const std::string_view got = reader.Bytes(expected.size(), "magic");
  if (got.substr(0, tag.size()) != tag) {
    throw DataError(reader.source() + ": bad magic, not a " +
                    std::string(tag) + " file");
  }
  if (got != expected) {
    throw DataError(reader.source() + ": unsupported " + std::string(tag) +
                    " version '" + std::string(1, got[tag.size()]) + "'");
  }
}

}  // namespace logitdyn::internal
