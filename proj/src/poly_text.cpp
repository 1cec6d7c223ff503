#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "ccm/poly.hpp"

namespace ccm {

std::vector<std::string> default_variable_names(std::size_t nvars) {
  std::vector<std::string> names;
  names.reserve(nvars);
  for (std::size_t i = 0; i < nvars; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::string to_string(const Polynomial& p, std::span<const std::string> names) {
  if (names.size() != p.nvars()) throw std::invalid_argument("to_string: variable name count mismatch");
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  // highest degree first reads more naturally
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [m, c] = *it;
    double mag = c;
    if (first) {
      if (c < 0) {
        out += "-";
        mag = -c;
      }
    } else {
      out += c < 0 ? " - " : " + ";
      mag = std::abs(c);
    }
    first = false;
    std::string factors;
    for (std::size_t i = 0; i < p.nvars(); ++i) {
      if (m[i] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += names[i];
      if (m[i] > 1) factors += "^" + std::to_string(m[i]);
    }
    if (factors.empty()) {
      out += format_double(mag);
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += format_double(mag) + "*" + factors;
    }
  }
  return out;
}

std::string to_string(const Polynomial& p) {
  const auto names = default_variable_names(p.nvars());
  return to_string(p, names);
}

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

  Polynomial parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    Polynomial p = expr();
    skip_ws();
    if (pos_ < text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_ + 1); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc(names_.size());
    bool negate = false;
    if (accept('-')) {
      negate = true;
    } else {
      accept('+');
    }
    Polynomial t = term();
    acc += negate ? -t : t;
    while (true) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        break;
      }
    }
    return acc;
  }

  Polynomial term() {
    Polynomial acc = factor();
    while (true) {
      if (accept('*')) {
        acc = acc * factor();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        Polynomial d = factor();
        if (d.degree() != 0 || d.is_zero()) {
          pos_ = at;
          fail("division only by a nonzero constant");
        }
        acc *= 1.0 / d.terms().begin()->second;
      } else {
        break;
      }
    }
    return acc;
  }

  Polynomial factor() {
    Polynomial base = primary();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      int k = 0;
      std::from_chars(text_.data() + start, text_.data() + pos_, k);
      base = base.pow(k);
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (ec != std::errc()) fail("malformed number");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      return Polynomial::constant(names_.size(), v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view ident = text_.substr(start, pos_ - start);
      for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == ident) return Polynomial::variable(names_.size(), i);
      }
      pos_ = start;
      fail("unknown variable '" + std::string(ident) + "'");
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, std::span<const std::string> names) {
  return Parser(text, names).parse();
}

}  // namespace ccm
