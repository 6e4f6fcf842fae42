#include "carpetslice/certified.hpp"

#include <gmp.h>

#include <algorithm>
#include <atomic>
#include <memory>
#include <stdexcept>

namespace carpetslice {

namespace {

std::atomic<unsigned> g_precision_cap{4096};

Integer from_mpz(const mpz_t z) {
  const int sign = mpz_sgn(z);
  if (sign == 0) return 0;
  std::unique_ptr<char, void (*)(void*)> text(mpz_get_str(nullptr, 16, z), std::free);
  const char* digits = text.get();
  if (*digits == '-') ++digits;
  Integer value(std::string("0x") + digits);
  return sign < 0 ? Integer(-value) : value;
}

class Mpq {
 public:
  explicit Mpq(const Rational& q) {
    mpq_init(value_);
    const std::string text = numerator(q).str() + "/" + denominator(q).str();
    mpq_set_str(value_, text.c_str(), 10);
  }
  ~Mpq() { mpq_clear(value_); }
  Mpq(const Mpq&) = delete;
  Mpq& operator=(const Mpq&) = delete;
  mpq_srcptr get() const { return value_; }

 private:
  mpq_t value_;
};

void set_integer(mpfr_ptr out, const Integer& a, mpfr_rnd_t rnd) {
  mpz_t z;
  mpz_init_set_str(z, a.str().c_str(), 10);
  mpfr_set_z(out, z, rnd);
  mpz_clear(z);
}

}  // namespace

unsigned default_precision() { return 128; }
unsigned precision_cap() { return g_precision_cap.load(); }
void set_precision_cap(unsigned bits) {
  if (bits < 64) throw std::invalid_argument("precision cap must be at least 64 bits");
  g_precision_cap.store(bits);
}

Mpfr::Mpfr(mpfr_prec_t prec) { mpfr_init2(value_, prec); }
Mpfr::~Mpfr() { mpfr_clear(value_); }

Rational to_rational(mpfr_srcptr x) {
  if (!mpfr_number_p(x)) throw std::domain_error("non-finite MPFR value");
  if (mpfr_zero_p(x)) return 0;
  mpz_t z;
  mpz_init(z);
  const mpfr_exp_t e = mpfr_get_z_2exp(z, x);
  Integer mant = from_mpz(z);
  mpz_clear(z);
  if (e >= 0) return Rational(mant << static_cast<unsigned>(e));
  return Rational(mant, Integer(1) << static_cast<unsigned>(-e));
}

void set_rational(mpfr_ptr out, const Rational& q, mpfr_rnd_t rnd) {
  if (denominator(q) == 1) {
    set_integer(out, numerator(q), rnd);
    return;
  }
  Mpq mq(q);
  mpfr_set_q(out, mq.get(), rnd);
}

double Enclosure::midpoint() const {
  return to_double((lo + hi) / 2);
}

Enclosure Enclosure::scaled(const Rational& c) const {
  if (c >= 0) return {lo * c, hi * c};
  return {hi * c, lo * c};
}

Enclosure Enclosure::operator*(const Enclosure& o) const {
  const Rational a = lo * o.lo, b = lo * o.hi, c = hi * o.lo, d = hi * o.hi;
  return {std::min({a, b, c, d}), std::max({a, b, c, d})};
}

bool certainly_less(const Enclosure& a, const Enclosure& b) { return a.hi < b.lo; }
bool certainly_greater(const Enclosure& a, const Enclosure& b) { return a.lo > b.hi; }

Enclosure log_enclosure(const Integer& a, unsigned prec) {
  if (a < 1) throw std::domain_error("log of a non-positive integer");
  if (a == 1) return Enclosure::exact(0);
  Mpfr x(prec), lo(prec), hi(prec);
  set_integer(x.get(), a, MPFR_RNDD);
  mpfr_log(lo.get(), x.get(), MPFR_RNDD);
  set_integer(x.get(), a, MPFR_RNDU);
  mpfr_log(hi.get(), x.get(), MPFR_RNDU);
  return {to_rational(lo.get()), to_rational(hi.get())};
}

Enclosure log_enclosure(const Enclosure& x, unsigned prec) {
  if (x.lo <= 0) throw std::domain_error("log of a non-positive enclosure");
  Mpfr v(prec), lo(prec), hi(prec);
  set_rational(v.get(), x.lo, MPFR_RNDD);
  mpfr_log(lo.get(), v.get(), MPFR_RNDD);
  set_rational(v.get(), x.hi, MPFR_RNDU);
  mpfr_log(hi.get(), v.get(), MPFR_RNDU);
  return {to_rational(lo.get()), to_rational(hi.get())};
}

Enclosure log_ratio_enclosure(const Integer& a, const Integer& b, unsigned prec) {
  if (b < 2) throw std::domain_error("log ratio with base below 2");
  const Enclosure num = log_enclosure(a, prec);
  const Enclosure den = log_enclosure(b, prec);
  // num >= 0, den > 0.
  return {num.lo / den.hi, num.hi / den.lo};
}

Enclosure pow_enclosure(const Enclosure& base, const Enclosure& exponent, unsigned prec) {
  if (base.lo <= 0) throw std::domain_error("pow of a non-positive base");
  if (exponent.is_exact() && exponent.lo == 0) return Enclosure::exact(1);
  const Enclosure product = exponent * log_enclosure(base, prec);
  Mpfr v(prec), lo(prec), hi(prec);
  set_rational(v.get(), product.lo, MPFR_RNDD);
  mpfr_exp(lo.get(), v.get(), MPFR_RNDD);
  set_rational(v.get(), product.hi, MPFR_RNDU);
  mpfr_exp(hi.get(), v.get(), MPFR_RNDU);
  return {to_rational(lo.get()), to_rational(hi.get())};
}

Enclosure pow_enclosure(const Integer& base, const Rational& exponent, unsigned prec) {
  if (base < 1) throw std::domain_error("pow of a non-positive base");
  if (denominator(exponent) == 1) {
    const Integer e = numerator(exponent);
    if (boost::multiprecision::abs(e) <= 4096) {
      return Enclosure::exact(rpow(Rational(base), e.convert_to<int>()));
    }
  }
  return pow_enclosure(Enclosure::exact(Rational(base)), Enclosure::exact(exponent), prec);
}

std::string to_decimal(const Rational& q, int digits) {
  Mpfr v(std::max(64, digits * 4 + 16));
  set_rational(v.get(), q, MPFR_RNDN);
  std::string fmt = "%." + std::to_string(digits) + "Rg";
  char buf[256];
  mpfr_snprintf(buf, sizeof buf, fmt.c_str(), v.get());
  return buf;
}

}  // namespace carpetslice
