#include "carpetslice/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "carpetslice/errors.hpp"
#include "carpetslice/logexpr.hpp"

namespace carpetslice {

namespace {

using i128 = __int128;

constexpr i128 kOne64 = static_cast<i128>(1) << 64;

bool fits_i62(const Integer& z) {
  static const Integer bound = Integer(1) << 62;
  return z < bound && z > -bound;
}

i128 floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// floor(t + k theta) for t = tn/td in [0,1) from the fixed-point enclosure, or
// nullopt when the enclosure straddles an integer.
std::optional<std::int64_t> fast_floor(const LogRatioAngle& a, i128 t_lo, i128 t_hi, std::uint64_t k) {
  const i128 lo = t_lo + static_cast<i128>(k) * static_cast<i128>(a.fixed_lo);
  const i128 hi = t_hi + static_cast<i128>(k) * static_cast<i128>(a.fixed_hi);
  const i128 fl = lo >> 64;
  const i128 fh = hi >> 64;
  if (fl != fh) return std::nullopt;
  return static_cast<std::int64_t>(fl);
}

}  // namespace

Enclosure LogRatioAngle::enclosure(unsigned prec) const {
  if (rational_value) return Enclosure::exact(*rational_value);
  return log_ratio_enclosure(m2, m1, prec);
}

double LogRatioAngle::approx() const { return std::log(static_cast<double>(m2)) / std::log(static_cast<double>(m1)); }

LogRatioAngle theta_of(std::int64_t m1, std::int64_t m2) {
  if (m1 < 2 || m2 < 2) throw std::invalid_argument("bases must be at least 2");
  if (m1 <= m2) throw std::invalid_argument("theta_of needs m1 > m2");
  LogRatioAngle a;
  a.m1 = m1;
  a.m2 = m2;
  a.rational_value = rational_log_ratio(m2, m1);
  const Enclosure e = a.enclosure(128);
  const Rational scale(Integer(1) << 64);
  a.fixed_lo = floor(e.lo * scale).convert_to<std::uint64_t>();
  const Integer hi = ceil(e.hi * scale);
  a.fixed_hi = hi >= (Integer(1) << 64) ? ~std::uint64_t{0} : hi.convert_to<std::uint64_t>();
  return a;
}

std::string RotationPoint::to_string() const {
  if (b == 0) return carpetslice::to_string(q);
  std::string out = q == 0 ? "" : carpetslice::to_string(q) + (b < 0 ? " - " : " + ");
  const Integer mag = (q != 0 && b < 0) ? Integer(-b) : b;
  if (mag == -1) return out + "-theta";
  if (mag != 1) out += mag.str() + "*";
  return out + "theta";
}

int sign_affine(const LogRatioAngle& angle, const Rational& a, const Integer& c) {
  if (c == 0 || angle.rational_value) {
    const Rational v = a + (angle.rational_value ? *angle.rational_value * c : Rational(0));
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  }
  const Integer an = numerator(a), ad = denominator(a);
  if (fits_i62(an) && fits_i62(ad) && fits_i62(c)) {
    const i128 n = static_cast<i128>(an.convert_to<std::int64_t>());
    const i128 d = static_cast<i128>(ad.convert_to<std::int64_t>());
    const i128 cc = static_cast<i128>(c.convert_to<std::int64_t>());
    const i128 a_lo = floor_div(n * kOne64, d);
    const i128 a_hi = a_lo + 1;
    const i128 t_lo = static_cast<i128>(angle.fixed_lo), t_hi = static_cast<i128>(angle.fixed_hi);
    const i128 lo = a_lo + (cc >= 0 ? cc * t_lo : cc * t_hi);
    const i128 hi = a_hi + (cc >= 0 ? cc * t_hi : cc * t_lo);
    if (lo > 0) return 1;
    if (hi < 0) return -1;
  }
  // theta is irrational and c != 0, so a + c theta != 0.
  for (unsigned prec = 2 * default_precision(); prec <= precision_cap(); prec *= 2) {
    const Enclosure v = Enclosure::exact(a) + angle.enclosure(prec).scaled(Rational(c));
    if (v.lo > 0) return 1;
    if (v.hi < 0) return -1;
  }
  throw PrecisionExhausted("sign of " + to_string(a) + " + " + c.str() + "*theta undecided at " +
                           std::to_string(precision_cap()) + " bits");
}

int compare(const LogRatioAngle& angle, const RotationPoint& s, const RotationPoint& t) {
  return sign_affine(angle, s.q - t.q, s.b - t.b);
}

double approx(const LogRatioAngle& angle, const RotationPoint& t) {
  return to_double(t.q) + t.b.convert_to<double>() * angle.approx();
}

Integer floor_of(const LogRatioAngle& angle, const RotationPoint& t) {
  Integer n(static_cast<long long>(std::floor(approx(angle, t))));
  while (sign_affine(angle, t.q - Rational(n), t.b) < 0) n -= 1;
  while (sign_affine(angle, t.q - Rational(n + 1), t.b) >= 0) n += 1;
  return n;
}

void require_unit(const LogRatioAngle& angle, const RotationPoint& t) {
  if (sign_affine(angle, t.q, t.b) < 0 || sign_affine(angle, t.q - 1, t.b) >= 0) {
    throw std::invalid_argument("rotation point " + t.to_string() + " is not in [0,1)");
  }
}

bool in_shift_interval(const LogRatioAngle& angle, const RotationPoint& t) {
  // t >= 1 - theta  <=>  (t.q - 1) + (t.b + 1) theta >= 0
  return sign_affine(angle, t.q - 1, t.b + 1) >= 0;
}

RotationPoint rotate(const LogRatioAngle& angle, const RotationPoint& t) {
  const bool wrap = in_shift_interval(angle, t);
  return {wrap ? t.q - 1 : t.q, t.b + 1};
}

std::vector<int> rotation_code_prefix(const RotationPoint& t, const LogRatioAngle& angle, std::size_t k) {
  require_unit(angle, t);
  std::vector<int> out;
  out.reserve(k);
  RotationPoint x = t;
  for (std::size_t n = 0; n < k; ++n) {
    const bool v = in_shift_interval(angle, x);
    out.push_back(v ? 1 : 0);
    x = {v ? x.q - 1 : x.q, x.b + 1};
  }
  return out;
}

SymbolSequence coding_sequence(const RotationPoint& t, const LogRatioAngle& angle, std::size_t cached) {
  auto prefix = std::make_shared<const std::vector<int>>(rotation_code_prefix(t, angle, cached));
  return SymbolSequence::generated(
      2,
      [prefix, t, angle](std::uint64_t n) -> int {
        if (n < prefix->size()) return (*prefix)[n];
        const Integer a = floor_of(angle, {t.q, t.b + Integer(n)});
        const Integer b = floor_of(angle, {t.q, t.b + Integer(n) + 1});
        return static_cast<int>((b - a).convert_to<long long>());
      },
      "coding(t=" + t.to_string() + ")");
}

Integer carry_count(const RotationPoint& t, const LogRatioAngle& angle, std::uint64_t k) {
  return floor_of(angle, {t.q, t.b + Integer(k)}) - floor_of(angle, t);
}

std::size_t r_k(const RotationPoint& t, const LogRatioAngle& angle, std::size_t k) {
  const auto v = rotation_code_prefix(t, angle, k);
  const auto r = static_cast<std::size_t>(std::count(v.begin(), v.end(), 1));
  if (Integer(r) != carry_count(t, angle, k)) {
    throw std::logic_error("rotation coding disagrees with the carry identity at k=" + std::to_string(k));
  }
  return r;
}

RemainderScan remainder_bound_scan(const LogRatioAngle& angle, std::uint64_t K,
                                   const std::vector<Rational>& t_grid, unsigned workers) {
  if (K < 1) throw std::invalid_argument("remainder_bound_scan: K must be at least 1");
  for (const auto& t : t_grid) {
    if (t < 0 || t >= 1) throw std::invalid_argument("grid point " + to_string(t) + " outside [0,1)");
  }
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, t_grid.size()))));
  std::vector<RemainderScan> partial(workers);
  const double theta = angle.approx();
  const i128 th_lo = static_cast<i128>(angle.fixed_lo), th_hi = static_cast<i128>(angle.fixed_hi);

  auto scan_one = [&](std::size_t gi, RemainderScan& acc) {
    const Rational& t = t_grid[gi];
    const Integer tn = numerator(t), td = denominator(t);
    const bool fast = fits_i62(tn) && fits_i62(td);
    i128 t_lo = 0, t_hi = 0;
    if (fast) {
      t_lo = floor_div(static_cast<i128>(tn.convert_to<std::int64_t>()) * kOne64,
                       static_cast<i128>(td.convert_to<std::int64_t>()));
      t_hi = t_lo + 1;
    }
    // Coding path: iterate x_n = t + n theta - F_n with F_n the running carry.
    // v(n) = 1 iff t + (n+1) theta - F_n - 1 >= 0.
    std::int64_t carries = 0;
    i128 s_lo = t_lo + th_lo, s_hi = t_hi + th_hi;  // fixed-point t + (n+1) theta
    for (std::uint64_t n = 0; n < K; ++n) {
      int v;
      const i128 thr = static_cast<i128>(carries + 1) << 64;
      if (fast && s_lo >= thr) {
        v = 1;
      } else if (fast && s_hi < thr) {
        v = 0;
      } else {
        v = sign_affine(angle, t - Rational(carries + 1), Integer(n + 1)) >= 0 ? 1 : 0;
      }
      carries += v;
      s_lo += th_lo;
      s_hi += th_hi;
      const std::uint64_t k = n + 1;
      // Carry path: floor(t + k theta) - floor(t), floor(t) = 0.
      std::optional<std::int64_t> fl;
      if (fast) fl = fast_floor(angle, t_lo, t_hi, k);
      const std::int64_t carry = fl ? *fl : floor_of(angle, {t, Integer(k)}).convert_to<std::int64_t>();
      ++acc.points;
      if (carry != carries) {
        acc.carry_identity_holds = false;
        ++acc.mismatches;
      }
      const double dev = std::fabs(static_cast<double>(carries) - static_cast<double>(k) * theta);
      // |r - k theta| <= max(|r 2^64 - k lo|, |r 2^64 - k hi|) / 2^64
      const i128 r64 = static_cast<i128>(carries) << 64;
      i128 e1 = r64 - static_cast<i128>(k) * th_lo;
      i128 e2 = r64 - static_cast<i128>(k) * th_hi;
      if (e1 < 0) e1 = -e1;
      if (e2 < 0) e2 = -e2;
      const double upper = std::ldexp(static_cast<double>(std::max(e1, e2) + 1), -64) * (1 + 1e-15);
      if (dev > acc.max_deviation) {
        acc.max_deviation = dev;
        acc.argmax_k = k;
        acc.argmax_t_index = gi;
      }
      acc.certified_upper = std::max(acc.certified_upper, upper);
    }
  };

  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t gi = w; gi < t_grid.size(); gi += workers) scan_one(gi, partial[w]);
    });
  }
  for (auto& th : pool) th.join();

  RemainderScan out;
  for (const auto& p : partial) {
    out.points += p.points;
    out.mismatches += p.mismatches;
    out.carry_identity_holds = out.carry_identity_holds && p.carry_identity_holds;
    out.certified_upper = std::max(out.certified_upper, p.certified_upper);
    if (p.max_deviation > out.max_deviation) {
      out.max_deviation = p.max_deviation;
      out.argmax_k = p.argmax_k;
      out.argmax_t_index = p.argmax_t_index;
    }
  }
  return out;
}

AdaptivePartitionShape adaptive_partition_shape(const RotationPoint& t, const LogRatioAngle& angle,
                                                std::size_t k) {
  AdaptivePartitionShape s;
  s.k = k;
  s.r = r_k(t, angle, k);
  s.width = rpow(Rational(angle.m1), -static_cast<int>(s.r));
  s.height = rpow(Rational(angle.m2), -static_cast<int>(k));
  return s;
}

std::vector<RotationInterval> c_k_intervals(const LogRatioAngle& angle, std::size_t k) {
  if (k < 1) throw std::invalid_argument("c_k_intervals: k must be at least 1");
  // Endpoints are the preimages of 0 under R_theta^j, j = 0..k: frac(-j theta).
  std::vector<RotationPoint> pts;
  for (std::size_t j = 0; j <= k; ++j) {
    RotationPoint p{0, -Integer(j)};
    p.q = -Rational(floor_of(angle, p));
    pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end(),
            [&](const RotationPoint& a, const RotationPoint& b) { return compare(angle, a, b) < 0; });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [&](const RotationPoint& a, const RotationPoint& b) { return compare(angle, a, b) == 0; }),
            pts.end());
  std::vector<RotationInterval> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.push_back({pts[i], i + 1 < pts.size() ? pts[i + 1] : RotationPoint{1, 0}});
  }
  return out;
}

SymbolSequence sigma_t(const RotationPoint& t, const LogRatioAngle& angle, const SymbolSequence& omega) {
  return in_shift_interval(angle, t) ? shift(omega, 1) : omega;
}

}  // namespace carpetslice
