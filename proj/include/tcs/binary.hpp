#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <streambuf>
#include <string>
#include <string_view>
#include <type_traits>

#include "tcs/error.hpp"

namespace tcs {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written little-endian with raw copies");

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);
std::uint64_t parse_hex64(const std::string& text);

/// Output stream buffer that only hashes what is written to it.
class HashingStreambuf : public std::streambuf {
 public:
  std::uint64_t digest() const { return hash_.digest(); }
  std::uint64_t bytes() const { return bytes_; }

 protected:
  int_type overflow(int_type ch) override {
    if (ch != traits_type::eof()) {
      const char c = static_cast<char>(ch);
      hash_.update(&c, 1);
      ++bytes_;
    }
    return ch;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    hash_.update(s, std::size_t(n));
    bytes_ += std::uint64_t(n);
    return n;
  }

 private:
  Fnv1a hash_;
  std::uint64_t bytes_ = 0;
};

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_array(std::span<const T> values) {
    out_.write(reinterpret_cast<const char*>(values.data()),
               std::streamsize(values.size_bytes()));
  }

  void put_magic(std::string_view magic) { out_.write(magic.data(), std::streamsize(magic.size())); }

  void put_string(const std::string& s) {
    put<std::uint32_t>(std::uint32_t(s.size()));
    out_.write(s.data(), std::streamsize(s.size()));
  }

  void check() const {
    if (!out_) throw IoError("write failed");
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw FormatError("unexpected end of file");
    return value;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void get_array(std::span<T> values) {
    in_.read(reinterpret_cast<char*>(values.data()), std::streamsize(values.size_bytes()));
    if (!in_) throw FormatError("unexpected end of file");
  }

  void expect_magic(std::string_view magic) {
    std::array<char, 8> buf{};
    in_.read(buf.data(), std::streamsize(magic.size()));
    if (!in_ || std::string_view(buf.data(), magic.size()) != magic)
      throw FormatError("bad magic, expected '" + std::string(magic) + "'");
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw FormatError("string field too long");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw FormatError("unexpected end of file");
    return s;
  }

 private:
  std::istream& in_;
};

/// Reads the 4-byte magic at the start of a file without consuming it.
std::string peek_magic(const std::string& path);

}  // namespace tcs
