#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "imgchain/error.hpp"

namespace imgchain::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  template <typename T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }
  std::size_t size() const noexcept { return buf_.size(); }
  const std::vector<char>& buffer() const noexcept { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  T get_at(std::size_t offset) const {
    if (offset + sizeof(T) > data_.size()) throw Error("truncated file");
    T v;
    std::memcpy(&v, data_.data() + offset, sizeof(T));
    return v;
  }
  void seek(std::size_t p) {
    if (p > data_.size()) throw Error("seek beyond end of file");
    pos_ = p;
  }
  std::size_t position() const noexcept { return pos_; }
  std::size_t size() const noexcept { return data_.size(); }
  const std::vector<char>& data() const noexcept { return data_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error("truncated file");
  }
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  thread_local std::mt19937_64 salt{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(salt());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  write_file_atomic(path, bytes.data(), bytes.size());
}

inline void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, text.data(), text.size());
}

}  // namespace imgchain::io
