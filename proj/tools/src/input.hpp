#pragma once

// CLI input format:
//   dim=<d>
//   one point per line, d whitespace-separated scalars
//   blank line
//   points of the second sequence
// Exact-integer mode accepts integer literals only; rational mode also
// accepts decimals and p/q fractions; double mode anything strtod takes.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "warpbox/core.hpp"

namespace warpbox::cli {

template <class S>
S parse_scalar(const std::string& tok, int line_no);

template <>
inline std::int64_t parse_scalar<std::int64_t>(const std::string& tok, int line_no) {
  std::int64_t v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw InputError("line " + std::to_string(line_no) + ": '" + tok +
                     "' is not an integer (exact-integer arithmetic requires integer literals)");
  return v;
}

template <>
inline double parse_scalar<double>(const std::string& tok, int line_no) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError("line " + std::to_string(line_no) + ": '" + tok + "' is not a number");
  }
}

template <>
inline Rational parse_scalar<Rational>(const std::string& tok, int line_no) {
  auto fail = [&]() -> Rational {
    throw InputError("line " + std::to_string(line_no) + ": '" + tok +
                     "' is not an integer, decimal, or p/q fraction");
  };
  if (tok.empty()) return fail();
  try {
    auto slash = tok.find('/');
    if (slash != std::string::npos) return Rational(tok);
    auto dot = tok.find('.');
    if (dot == std::string::npos) return Rational(tok);
    std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
    std::size_t frac_len = tok.size() - dot - 1;
    if (frac_len == 0) return fail();
    Rational den = 1;
    for (std::size_t k = 0; k < frac_len; ++k) den *= 10;
    return Rational(digits) / den;
  } catch (const std::exception&) {
    return fail();
  }
}

namespace detail {

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

template <class S>
std::pair<PointSeq<S>, PointSeq<S>> parse_input_stream(std::istream& is) {
  std::string line;
  int line_no = 0;

  if (!std::getline(is, line)) throw InputError("empty input");
  ++line_no;
  std::string header = line;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.rfind("dim=", 0) != 0)
    throw InputError("line 1: expected header 'dim=<d>', got '" + header + "'");
  int dim = 0;
  {
    const char* first = header.data() + 4;
    const char* last = header.data() + header.size();
    auto [ptr, ec] = std::from_chars(first, last, dim);
    if (ec != std::errc{} || ptr != last || dim < 1)
      throw InputError("line 1: invalid dimension in header '" + header + "'");
  }

  std::vector<S> flat_a, flat_b;
  bool seen_separator = false;
  bool in_b = false;
  int last_point_line = 1;
  auto parse_point = [&](const std::string& text, std::vector<S>& into) {
    std::istringstream ss(text);
    std::string tok;
    int count = 0;
    while (ss >> tok) {
      into.push_back(parse_scalar<S>(tok, line_no));
      ++count;
    }
    if (count != dim)
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                       " coordinates, got " + std::to_string(count));
    last_point_line = line_no;
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (detail::blank(line)) {
      if (!in_b && !flat_a.empty()) {
        seen_separator = true;
        in_b = true;
      }
      continue;
    }
    if (in_b) {
      parse_point(line, flat_b);
    } else {
      parse_point(line, flat_a);
    }
  }
  if (flat_a.empty()) throw InputError("input contains no points for sequence A");
  if (!seen_separator)
    throw InputError("line " + std::to_string(last_point_line) +
                     ": missing blank separator line between the two sequences");
  if (flat_b.empty()) throw InputError("input contains no points for sequence B");
  return {PointSeq<S>(dim, std::move(flat_a), "A"), PointSeq<S>(dim, std::move(flat_b), "B")};
}

template <class S>
std::pair<PointSeq<S>, PointSeq<S>> parse_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open input file: " + path);
  return parse_input_stream<S>(is);
}

}  // namespace warpbox::cli
