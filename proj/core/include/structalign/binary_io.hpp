#pragma once

// Little-endian readers/writers shared by the FSEQ1, CSM1 and DCNN1 formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "structalign/error.hpp"

namespace structalign::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

class ByteWriter {
 public:
  void bytes(std::span<const std::uint8_t> data) {
    out_.insert(out_.end(), data.begin(), data.end());
  }
  void text(std::string_view s) {
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  Bytes out_;
};

// Bounds-checked cursor; every failure throws ParseError with the offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  void expect_magic(std::string_view magic) {
    need(magic.size(), "magic");
    if (std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw ParseError(pos_, "expected magic \"" + std::string(magic) + "\"");
    }
    pos_ += magic.size();
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() {
    need(1, "u8");
    return data_[pos_++];
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(pos_, std::string("truncated input reading ") + what);
    }
  }
  template <typename U>
  U get_le() {
    need(sizeof(U), "integer");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace structalign::io
