#include "carpetslice/logexpr.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

#include "carpetslice/errors.hpp"

namespace carpetslice {

std::vector<std::pair<std::int64_t, int>> factorize(std::int64_t n) {
  if (n < 1) throw std::domain_error("factorize: n must be positive");
  std::vector<std::pair<std::int64_t, int>> out;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    if (n % p != 0) continue;
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

std::pair<std::int64_t, int> primitive_root(std::int64_t n) {
  if (n < 2) throw std::domain_error("primitive_root: n must be at least 2");
  const auto f = factorize(n);
  int g = 0;
  for (const auto& [p, e] : f) g = std::gcd(g, e);
  std::int64_t root = 1;
  for (const auto& [p, e] : f) {
    for (int i = 0; i < e / g; ++i) root *= p;
  }
  return {root, g};
}

std::optional<Rational> rational_log_ratio(std::int64_t a, std::int64_t b) {
  if (a < 1 || b < 2) throw std::domain_error("rational_log_ratio: need a >= 1, b >= 2");
  if (a == 1) return Rational(0);
  const auto [ra, ea] = primitive_root(a);
  const auto [rb, eb] = primitive_root(b);
  if (ra != rb) return std::nullopt;
  return Rational(ea, eb);
}

void LogExpr::add_term(std::int64_t r, std::int64_t p, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace({r, p}, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

LogExpr LogExpr::log_ratio(std::int64_t a, std::int64_t b) {
  if (a < 1 || b < 2) throw std::domain_error("log_ratio: need a >= 1, b >= 2");
  LogExpr out;
  if (a == 1) return out;
  const auto [r, e] = primitive_root(b);
  const auto rf = factorize(r);
  const std::int64_t q0 = rf.front().first;
  const int v_q0 = rf.front().second;
  for (const auto& [p, vp] : factorize(a)) {
    const Rational c(vp, e);
    if (p != q0) {
      out.add_term(r, p, c);
      continue;
    }
    // log q0 / log r = (1 - sum_{q != q0} v_q(r) log q / log r) / v_q0(r)
    out.constant_ += c / v_q0;
    for (std::size_t i = 1; i < rf.size(); ++i) {
      out.add_term(r, rf[i].first, -c * Rational(rf[i].second, v_q0));
    }
  }
  return out;
}

LogExpr LogExpr::operator+(const LogExpr& o) const {
  LogExpr out = *this;
  out.constant_ += o.constant_;
  for (const auto& [key, c] : o.terms_) out.add_term(key.first, key.second, c);
  return out;
}

LogExpr LogExpr::operator-() const { return *this * Rational(-1); }

LogExpr LogExpr::operator-(const LogExpr& o) const { return *this + (-o); }

LogExpr LogExpr::operator*(const Rational& c) const {
  LogExpr out;
  if (c == 0) return out;
  out.constant_ = constant_ * c;
  for (const auto& [key, v] : terms_) out.terms_.emplace(key, v * c);
  return out;
}

Enclosure LogExpr::enclosure(unsigned prec) const {
  Enclosure acc = Enclosure::exact(constant_);
  for (const auto& [key, c] : terms_) {
    acc = acc + log_ratio_enclosure(key.second, key.first, prec).scaled(c);
  }
  return acc;
}

std::string LogExpr::to_string() const {
  std::ostringstream os;
  bool first = true;
  if (constant_ != 0 || terms_.empty()) {
    os << carpetslice::to_string(constant_);
    first = false;
  }
  for (const auto& [key, c] : terms_) {
    Rational mag = c;
    if (first) {
      if (c < 0) {
        os << "-";
        mag = -c;
      }
    } else {
      os << (c < 0 ? " - " : " + ");
      if (c < 0) mag = -c;
    }
    if (mag != 1) os << carpetslice::to_string(mag) << "*";
    os << "log(" << key.second << ")/log(" << key.first << ")";
    first = false;
  }
  return os.str();
}

int sign(const LogExpr& e) {
  if (e.is_rational()) return e.constant() > 0 ? 1 : (e.constant() < 0 ? -1 : 0);
  // A nonzero canonical form is nonzero in value when all terms share one
  // denominator; otherwise nonvanishing is only expected, and a precision cap
  // bounds the search.
  bool single_base = true;
  const std::int64_t r0 = e.terms().begin()->first.first;
  for (const auto& [key, c] : e.terms()) single_base = single_base && key.first == r0;
  for (unsigned prec = default_precision();; prec *= 2) {
    const Enclosure enc = e.enclosure(prec);
    if (enc.lo > 0) return 1;
    if (enc.hi < 0) return -1;
    if (prec >= precision_cap()) {
      if (single_base) continue;  // provably nonzero; keep refining
      throw PrecisionExhausted("sign of " + e.to_string() + " undecided at " +
                               std::to_string(prec) + " bits");
    }
  }
}

int compare(const LogExpr& a, const LogExpr& b) {
  if (a == b) return 0;
  return sign(a - b);
}

LogExpr max_of(const std::vector<LogExpr>& values) {
  if (values.empty()) throw std::invalid_argument("max_of: empty list");
  LogExpr best = values.front();
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (compare(values[i], best) > 0) best = values[i];
  }
  return best;
}

std::string DimValue::text() const {
  if (exact) return exact->to_string();
  return "[" + to_decimal(enclosure.lo) + ", " + to_decimal(enclosure.hi) + "]";
}

}  // namespace carpetslice
