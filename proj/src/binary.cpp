#include "tcs/binary.hpp"

#include <cstdio>
#include <fstream>

namespace tcs {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t parse_hex64(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw FormatError("bad hash string '" + text + "'");
  return value;
}

std::string peek_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, std::size_t(in.gcount()));
}

}  // namespace tcs
