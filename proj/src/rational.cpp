#include "nullwave/rational.hpp"

#include <cctype>
#include <cstddef>

namespace nullwave {

namespace {

bool is_integer_token(const std::string& s, std::size_t from, std::size_t to) {
  if (from >= to) return false;
  std::size_t i = from;
  if (s[i] == '+' || s[i] == '-') ++i;
  if (i >= to) return false;
  for (; i < to; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    if (!is_integer_token(text, 0, slash) ||
        !is_integer_token(text, slash + 1, text.size())) {
      return std::nullopt;
    }
    BigInt den(text.substr(slash + 1));
    if (den == 0) return std::nullopt;
    return Rational(BigInt(text.substr(0, slash)), den);
  }
  const auto dot = text.find('.');
  if (dot != std::string::npos) {
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const std::size_t frac_len = text.size() - dot - 1;
    if (frac_len == 0 || !is_integer_token(digits, 0, digits.size())) {
      return std::nullopt;
    }
    BigInt den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rational(BigInt(digits), den);
  }
  if (!is_integer_token(text, 0, text.size())) return std::nullopt;
  return Rational(BigInt(text));
}

std::string format_rational(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace nullwave
