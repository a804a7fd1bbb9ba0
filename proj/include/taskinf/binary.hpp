// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary encoding shared by every artifact file. Integers are
// unsigned 64-bit, reals are IEEE-754 float64; byte order is fixed
// regardless of the host.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "taskinf/core.hpp"

namespace taskinf {

class BinaryWriter {
 public:
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::string_view s);
  /// Length-prefixed string.
  void str(std::string_view s);
  void vec(const Vec& v);
  /// Column count then rows, row-major payload.
  void mat_rows(const Mat& m);

  const std::string& buffer() const { return buf_; }
  /// Writes the buffer atomically enough for our purposes (truncate + write).
  void save(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  /// Reads a whole file; throws IoError when it cannot be opened.
  static BinaryReader open(const std::filesystem::path& path);
  explicit BinaryReader(std::string data, std::string origin = "buffer");

  std::uint64_t u64();
  double f64();
  std::string bytes(std::size_t n);
  std::string str();
  Vec vec();
  Mat mat_rows();

  /// Throws IoError unless the next bytes equal `magic`.
  void expect_magic(std::string_view magic);
  /// Throws IoError unless the whole input has been consumed.
  void expect_end() const;
  const std::string& origin() const { return origin_; }

 private:
  void need(std::size_t n) const;

  std::string data_;
  std::size_t pos_ = 0;
  std::string origin_;
};

/// Reads / writes a whole text file, mapping failures to IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace taskinf
