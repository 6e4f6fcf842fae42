#include "carpetslice/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace carpetslice {

Integer floor(const Rational& q) {
  Integer num = numerator(q);
  Integer den = denominator(q);
  Integer quot = num / den;
  if (num < 0 && quot * den != num) quot -= 1;
  return quot;
}

Integer ceil(const Rational& q) {
  return -floor(-q);
}

Rational frac(const Rational& q) {
  return q - Rational(floor(q));
}

Integer ipow(std::int64_t base, unsigned exponent) {
  return boost::multiprecision::pow(Integer(base), exponent);
}

Rational rpow(const Rational& base, int exponent) {
  if (exponent >= 0) {
    return Rational(boost::multiprecision::pow(numerator(base), static_cast<unsigned>(exponent)),
                    boost::multiprecision::pow(denominator(base), static_cast<unsigned>(exponent)));
  }
  if (base == 0) throw std::domain_error("rpow: zero to a negative power");
  const auto e = static_cast<unsigned>(-exponent);
  return Rational(boost::multiprecision::pow(denominator(base), e),
                  boost::multiprecision::pow(numerator(base), e));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Integer parse_integer(std::string_view s, std::string_view whole) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) throw std::invalid_argument("malformed rational '" + std::string(whole) + "'");
  Integer value = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw std::invalid_argument("malformed rational '" + std::string(whole) + "'");
    value = value * 10 + (c - '0');
  }
  return negative ? Integer(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view s = trim(text);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return Rational(parse_integer(s, text));
  Integer num = parse_integer(s.substr(0, slash), text);
  Integer den = parse_integer(s.substr(slash + 1), text);
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

std::string to_string(const Integer& z) {
  return z.str();
}

std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

double to_double(const Rational& q) {
  return q.convert_to<double>();
}

}  // namespace carpetslice
