#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace carpetslice {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Integer numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

/// Largest integer not exceeding q.
Integer floor(const Rational& q);
Integer ceil(const Rational& q);
/// q - floor(q), in [0,1).
Rational frac(const Rational& q);

Integer ipow(std::int64_t base, unsigned exponent);
Rational rpow(const Rational& base, int exponent);

/// Parses "p", "-p", "p/q" (whitespace tolerant). Throws std::invalid_argument.
Rational parse_rational(std::string_view text);
/// "p" when the denominator is 1, else "p/q".
std::string to_string(const Rational& q);
std::string to_string(const Integer& z);

double to_double(const Rational& q);

}  // namespace carpetslice
