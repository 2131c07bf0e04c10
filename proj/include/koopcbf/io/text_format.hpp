#pragma once

// Line-oriented text serialization shared by every checkpoint in the
// project. Each line is a keyword followed by whitespace-separated tokens;
// reals are written with 17 significant digits so that a write/read cycle
// reproduces every double bit-exactly.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "koopcbf/linalg.hpp"

namespace koopcbf::io {

std::string format_real(double v);

// Throws ParseError mentioning `line` on malformed or non-finite input.
double parse_real(std::string_view token, std::size_t line);
long long parse_int(std::string_view token, std::size_t line);

class TextWriter {
 public:
  explicit TextWriter(std::ostream& out) : out_(out) {}

  // Writes `key` followed by the given tokens on one line.
  void line(std::string_view key, const std::vector<std::string>& tokens = {});
  void reals(std::string_view key, const std::vector<double>& values);
  void real(std::string_view key, double value);
  void integer(std::string_view key, long long value);
  void vector(std::string_view key, const RealVector& v);
  // "key rows cols" followed by one line per row.
  void matrix(std::string_view key, const RealMatrix& m);

 private:
  std::ostream& out_;
};

class TextReader {
 public:
  explicit TextReader(std::istream& in);

  bool at_end() const { return pos_ >= lines_.size(); }
  std::size_t line_number() const;

  // Key of the next line without consuming it; empty at end of input.
  std::string peek_key() const;

  // Consumes the next line, which must start with `key`; returns the
  // remaining tokens.
  std::vector<std::string> expect(std::string_view key);
  std::vector<std::string> expect(std::string_view key, std::size_t token_count);

  double real(std::string_view key);
  long long integer(std::string_view key);
  std::string word(std::string_view key);
  RealVector vector(std::string_view key);
  RealMatrix matrix(std::string_view key);

 private:
  struct Line {
    std::size_t number;
    std::vector<std::string> tokens;
  };
  const Line& current(std::string_view key) const;

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

}  // namespace koopcbf::io
