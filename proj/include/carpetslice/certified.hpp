#pragma once

#include <mpfr.h>

#include <string>

#include "carpetslice/rational.hpp"

namespace carpetslice {

/// Starting and maximal working precision (bits) for certified comparisons.
/// The cap is process-wide; the CLI sets it from --precision.
unsigned default_precision();
unsigned precision_cap();
void set_precision_cap(unsigned bits);

/// Owning wrapper around mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec);
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  ~Mpfr();

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }

 private:
  mpfr_t value_;
};

/// Exact value of a finite MPFR number.
Rational to_rational(mpfr_srcptr x);
/// Rounds q in the given direction.
void set_rational(mpfr_ptr out, const Rational& q, mpfr_rnd_t rnd);

/// Closed interval [lo, hi] with exact rational endpoints.
struct Enclosure {
  Rational lo;
  Rational hi;

  static Enclosure exact(const Rational& q) { return {q, q}; }

  bool is_exact() const { return lo == hi; }
  Rational width() const { return hi - lo; }
  bool contains(const Rational& q) const { return lo <= q && q <= hi; }
  double midpoint() const;

  Enclosure operator+(const Enclosure& o) const { return {lo + o.lo, hi + o.hi}; }
  Enclosure operator-(const Enclosure& o) const { return {lo - o.hi, hi - o.lo}; }
  Enclosure operator-() const { return {-hi, -lo}; }
  Enclosure scaled(const Rational& c) const;
  Enclosure operator*(const Enclosure& o) const;
};

bool certainly_less(const Enclosure& a, const Enclosure& b);
bool certainly_greater(const Enclosure& a, const Enclosure& b);

/// log(a) for integer a >= 1.
Enclosure log_enclosure(const Integer& a, unsigned prec);
/// log(a) / log(b) for a >= 1, b >= 2.
Enclosure log_ratio_enclosure(const Integer& a, const Integer& b, unsigned prec);
/// base^exponent for integer base >= 1 and rational exponent.
Enclosure pow_enclosure(const Integer& base, const Rational& exponent, unsigned prec);
/// base^exponent for a positive base enclosure and an exponent enclosure.
Enclosure pow_enclosure(const Enclosure& base, const Enclosure& exponent, unsigned prec);
/// log(x) for a positive enclosure.
Enclosure log_enclosure(const Enclosure& x, unsigned prec);

std::string to_decimal(const Rational& q, int digits = 17);

}  // namespace carpetslice
