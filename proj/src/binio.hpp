#pragma once

#include "smn/types.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

// Little helpers for the versioned binary containers (hop cache, checkpoints).
namespace smn::binio {

class Writer {
public:
  void bytes(const void* p, std::size_t n) {
    if (n) buf_.append(static_cast<const char*>(p), n);
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  // rows, cols, then row-major doubles
  void matrix(const Matrix& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
    bytes(rm.data(), sizeof(Scalar) * static_cast<std::size_t>(rm.size()));
  }
  const std::string& data() const { return buf_; }

  /// Writes to a sibling temp file and renames over `path`.
  void commit(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw FormatError("cannot write " + tmp.string());
      out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!out) throw FormatError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

private:
  std::string buf_;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path_);
    buf_.assign(std::istreambuf_iterator<char>(in), {});
  }
  void bytes(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError(path_ + ": truncated");
    if (n == 0) return;
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > buf_.size() - pos_) throw FormatError(path_ + ": truncated");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Matrix matrix() {
    const auto r = pod<std::int64_t>();
    const auto c = pod<std::int64_t>();
    if (r < 0 || c < 0 || (c > 0 && static_cast<std::size_t>(r) > (buf_.size() - pos_) / sizeof(Scalar) / static_cast<std::size_t>(c)))
      throw FormatError(path_ + ": truncated matrix");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(r, c);
    bytes(rm.data(), sizeof(Scalar) * static_cast<std::size_t>(rm.size()));
    return rm;
  }
  bool at_end() const { return pos_ == buf_.size(); }
  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace smn::binio
