#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carpetslice/certified.hpp"
#include "carpetslice/rational.hpp"

namespace carpetslice {

/// Prime factorization by trial division; n >= 1.
std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n);

/// Decomposes n >= 2 as root^exponent with root not a perfect power.
std::pair<std::int64_t, int> primitive_root(std::int64_t n);

/// log a / log b as an exact rational when a and b are multiplicatively
/// dependent (a = r^i, b = r^j), otherwise nullopt. a >= 1, b >= 2.
std::optional<Rational> rational_log_ratio(std::int64_t a, std::int64_t b);

inline bool multiplicatively_dependent(std::int64_t a, std::int64_t b) {
  return rational_log_ratio(a, b).has_value();
}

/// Exact finite combinations  c0 + sum c * log(p)/log(r)  over rationals.
///
/// Terms are kept in a canonical basis: r is a primitive base (not a perfect
/// power), p is a prime, and p is never the smallest prime factor of r. Two
/// expressions with equal canonical forms are equal; a nonzero difference whose
/// terms share one denominator is provably nonzero. Other differences are
/// separated by enclosures.
class LogExpr {
 public:
  LogExpr() = default;
  LogExpr(const Rational& c) : constant_(c) {}  // NOLINT(google-explicit-constructor)
  LogExpr(int c) : constant_(c) {}              // NOLINT(google-explicit-constructor)

  /// log a / log b for a >= 1, b >= 2.
  static LogExpr log_ratio(std::int64_t a, std::int64_t b);

  LogExpr operator+(const LogExpr& o) const;
  LogExpr operator-(const LogExpr& o) const;
  LogExpr operator-() const;
  LogExpr operator*(const Rational& c) const;
  LogExpr& operator+=(const LogExpr& o) { return *this = *this + o; }

  bool operator==(const LogExpr& o) const { return constant_ == o.constant_ && terms_ == o.terms_; }
  bool operator!=(const LogExpr& o) const { return !(*this == o); }

  bool is_rational() const { return terms_.empty(); }
  const Rational& constant() const { return constant_; }
  const std::map<std::pair<std::int64_t, std::int64_t>, Rational>& terms() const { return terms_; }

  Enclosure enclosure(unsigned prec = 128) const;
  double approx() const { return enclosure(64).midpoint(); }
  std::string to_string() const;

 private:
  void add_term(std::int64_t r, std::int64_t p, const Rational& c);

  Rational constant_;
  // (r, p) -> coefficient of log p / log r
  std::map<std::pair<std::int64_t, std::int64_t>, Rational> terms_;
};

/// Sign of e: exact when e is rational or its terms share one denominator,
/// otherwise decided by enclosures refined up to the precision cap.
/// Throws PrecisionExhausted when still undecided at the cap.
int sign(const LogExpr& e);
int compare(const LogExpr& a, const LogExpr& b);

LogExpr max_of(const std::vector<LogExpr>& values);
inline LogExpr clamp_nonneg(const LogExpr& e) { return sign(e) < 0 ? LogExpr(0) : e; }

/// A dimension-like quantity: an exact expression when one exists, and a
/// certified enclosure in every case.
struct DimValue {
  std::optional<LogExpr> exact;
  Enclosure enclosure;

  static DimValue of(const LogExpr& e, unsigned prec = 128) { return {e, e.enclosure(prec)}; }
  double approx() const { return enclosure.midpoint(); }
  std::string text() const;
};

}  // namespace carpetslice
