// Copyright 2026 The taskinf Authors
// SPDX-License-Identifier: Apache-2.0

#include "taskinf/binary.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace taskinf {

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::bytes(std::string_view s) { buf_.append(s); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  bytes(s);
}

void BinaryWriter::vec(const Vec& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) f64(v(i));
}

void BinaryWriter::mat_rows(const Mat& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
}

void BinaryWriter::save(const std::filesystem::path& path) const { write_text_file(path, buf_); }

BinaryReader BinaryReader::open(const std::filesystem::path& path) {
  return BinaryReader(read_text_file(path), path.string());
}

BinaryReader::BinaryReader(std::string data, std::string origin)
    : data_(std::move(data)), origin_(std::move(origin)) {}

void BinaryReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) throw IoError(origin_ + ": truncated file");
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::bytes(std::size_t n) {
  need(n);
  std::string s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::string BinaryReader::str() { return bytes(static_cast<std::size_t>(u64())); }

Vec BinaryReader::vec() {
  const std::uint64_t n = u64();
  need(n > (data_.size() - pos_) / 8 ? std::numeric_limits<std::size_t>::max() : n * 8);
  Vec v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v(i) = f64();
  return v;
}

Mat BinaryReader::mat_rows() {
  const std::uint64_t r = u64();
  const std::uint64_t c = u64();
  const std::size_t left = (data_.size() - pos_) / 8;
  if (c != 0 && r > left / c) throw IoError(origin_ + ": truncated file");
  Mat m(static_cast<Index>(r), static_cast<Index>(c));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
  return m;
}

void BinaryReader::expect_magic(std::string_view magic) {
  if (data_.size() - pos_ < magic.size() || std::string_view(data_).substr(pos_, magic.size()) != magic)
    throw IoError(origin_ + ": bad magic, expected " + std::string(magic));
  pos_ += magic.size();
}

void BinaryReader::expect_end() const {
  if (pos_ != data_.size()) throw IoError(origin_ + ": trailing bytes after payload");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace taskinf
