#include "koopcbf/io/text_format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "koopcbf/errors.hpp"

namespace koopcbf::io {

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("format_real: conversion failed");
  return std::string(buf.data(), end);
}

double parse_real(std::string_view token, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": expected a finite real, got '" +
                     std::string(token) + "'");
  }
  return v;
}

long long parse_int(std::string_view token, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError("line " + std::to_string(line) + ": expected an integer, got '" +
                     std::string(token) + "'");
  }
  return v;
}

void TextWriter::line(std::string_view key, const std::vector<std::string>& tokens) {
  out_ << key;
  for (const auto& t : tokens) out_ << ' ' << t;
  out_ << '\n';
}

void TextWriter::reals(std::string_view key, const std::vector<double>& values) {
  out_ << key;
  for (double v : values) out_ << ' ' << format_real(v);
  out_ << '\n';
}

void TextWriter::real(std::string_view key, double value) { reals(key, {value}); }

void TextWriter::integer(std::string_view key, long long value) {
  out_ << key << ' ' << value << '\n';
}

void TextWriter::vector(std::string_view key, const RealVector& v) {
  out_ << key << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out_ << ' ' << format_real(v[i]);
  out_ << '\n';
}

void TextWriter::matrix(std::string_view key, const RealMatrix& m) {
  out_ << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out_ << "row";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out_ << ' ' << format_real(m(r, c));
    out_ << '\n';
  }
}

TextReader::TextReader(std::istream& in) {
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    std::istringstream ss(text);
    Line l{number, {}};
    std::string tok;
    while (ss >> tok) l.tokens.push_back(tok);
    if (!l.tokens.empty()) lines_.push_back(std::move(l));
  }
}

std::size_t TextReader::line_number() const {
  return at_end() ? (lines_.empty() ? 0 : lines_.back().number + 1) : lines_[pos_].number;
}

std::string TextReader::peek_key() const { return at_end() ? std::string{} : lines_[pos_].tokens[0]; }

const TextReader::Line& TextReader::current(std::string_view key) const {
  if (at_end()) {
    throw ParseError("unexpected end of input while looking for '" + std::string(key) + "'");
  }
  const Line& l = lines_[pos_];
  if (l.tokens[0] != key) {
    throw ParseError("line " + std::to_string(l.number) + ": expected '" + std::string(key) +
                     "', got '" + l.tokens[0] + "'");
  }
  return l;
}

std::vector<std::string> TextReader::expect(std::string_view key) {
  const Line& l = current(key);
  ++pos_;
  return {l.tokens.begin() + 1, l.tokens.end()};
}

std::vector<std::string> TextReader::expect(std::string_view key, std::size_t token_count) {
  const Line& l = current(key);
  if (l.tokens.size() != token_count + 1) {
    throw ParseError("line " + std::to_string(l.number) + ": '" + std::string(key) + "' expects " +
                     std::to_string(token_count) + " value(s), got " +
                     std::to_string(l.tokens.size() - 1));
  }
  ++pos_;
  return {l.tokens.begin() + 1, l.tokens.end()};
}

double TextReader::real(std::string_view key) {
  const std::size_t n = line_number();
  return parse_real(expect(key, 1)[0], n);
}

long long TextReader::integer(std::string_view key) {
  const std::size_t n = line_number();
  return parse_int(expect(key, 1)[0], n);
}

std::string TextReader::word(std::string_view key) { return expect(key, 1)[0]; }

RealVector TextReader::vector(std::string_view key) {
  const std::size_t n = line_number();
  auto toks = expect(key);
  if (toks.empty()) throw ParseError("line " + std::to_string(n) + ": missing vector size");
  const long long size = parse_int(toks[0], n);
  if (size < 0 || static_cast<std::size_t>(size) + 1 != toks.size()) {
    throw ParseError("line " + std::to_string(n) + ": vector size does not match entry count");
  }
  RealVector v(size);
  for (long long i = 0; i < size; ++i) v[i] = parse_real(toks[i + 1], n);
  return v;
}

RealMatrix TextReader::matrix(std::string_view key) {
  const std::size_t n = line_number();
  auto dims = expect(key, 2);
  const long long rows = parse_int(dims[0], n);
  const long long cols = parse_int(dims[1], n);
  if (rows < 0 || cols < 0) throw ParseError("line " + std::to_string(n) + ": negative matrix size");
  RealMatrix m(rows, cols);
  for (long long r = 0; r < rows; ++r) {
    const std::size_t rn = line_number();
    auto toks = expect("row", static_cast<std::size_t>(cols));
    for (long long c = 0; c < cols; ++c) m(r, c) = parse_real(toks[c], rn);
  }
  return m;
}

}  // namespace koopcbf::io
