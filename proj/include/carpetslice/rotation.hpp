#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carpetslice/certified.hpp"
#include "carpetslice/rational.hpp"
#include "carpetslice/symbolic.hpp"

namespace carpetslice {

/// theta = log m2 / log m1 for m1 > m2 >= 2, carried symbolically.
struct LogRatioAngle {
  std::int64_t m1 = 3;
  std::int64_t m2 = 2;
  /// Set exactly when m1 and m2 are multiplicatively dependent.
  std::optional<Rational> rational_value;
  /// theta * 2^64 lies in [fixed_lo, fixed_hi].
  std::uint64_t fixed_lo = 0;
  std::uint64_t fixed_hi = 0;

  bool is_rational() const { return rational_value.has_value(); }
  Enclosure enclosure(unsigned prec = 128) const;
  double approx() const;
};

LogRatioAngle theta_of(std::int64_t m1, std::int64_t m2);

/// The circle point q + b * theta (taken as a real number, not reduced mod 1).
struct RotationPoint {
  Rational q;
  Integer b;

  static RotationPoint rational(const Rational& t) { return {t, 0}; }
  std::string to_string() const;
  bool operator==(const RotationPoint& o) const { return q == o.q && b == o.b; }
};

/// Exact sign of a + c * theta.
int sign_affine(const LogRatioAngle& angle, const Rational& a, const Integer& c);
int compare(const LogRatioAngle& angle, const RotationPoint& s, const RotationPoint& t);
Integer floor_of(const LogRatioAngle& angle, const RotationPoint& t);
double approx(const LogRatioAngle& angle, const RotationPoint& t);

/// Throws std::invalid_argument unless 0 <= t < 1.
void require_unit(const LogRatioAngle& angle, const RotationPoint& t);
/// t in [1 - theta, 1).
bool in_shift_interval(const LogRatioAngle& angle, const RotationPoint& t);
/// R_theta(t) = t + theta mod 1, for t in [0,1).
RotationPoint rotate(const LogRatioAngle& angle, const RotationPoint& t);

/// (v_t(0), ..., v_t(k-1)) by iterating R_theta.
std::vector<int> rotation_code_prefix(const RotationPoint& t, const LogRatioAngle& angle, std::size_t k);
/// The coding v_t as a binary sequence; the first `cached` symbols are precomputed.
SymbolSequence coding_sequence(const RotationPoint& t, const LogRatioAngle& angle, std::size_t cached = 256);

/// floor(t + k theta) - floor(t).
Integer carry_count(const RotationPoint& t, const LogRatioAngle& angle, std::uint64_t k);
/// Number of 1s in the length-k coding; throws std::logic_error if it disagrees
/// with the carry count.
std::size_t r_k(const RotationPoint& t, const LogRatioAngle& angle, std::size_t k);

struct RemainderScan {
  double max_deviation = 0;        // max |r_k(t) - k theta| over the scan
  double certified_upper = 0;      // rigorous upper bound for the same maximum
  std::uint64_t argmax_k = 0;
  std::size_t argmax_t_index = 0;
  bool carry_identity_holds = true;
  std::uint64_t points = 0;
  std::uint64_t mismatches = 0;
};

/// Scans k = 1..K for every t in the grid. r_k is obtained by iterating the
/// rotation coding and compared with floor(t + k theta) - floor(t) at every step.
RemainderScan remainder_bound_scan(const LogRatioAngle& angle, std::uint64_t K,
                                   const std::vector<Rational>& t_grid, unsigned workers = 1);

struct AdaptivePartitionShape {
  std::size_t k = 0;
  std::size_t r = 0;
  Rational width;   // m1^{-r}
  Rational height;  // m2^{-k}
};
AdaptivePartitionShape adaptive_partition_shape(const RotationPoint& t, const LogRatioAngle& angle,
                                                std::size_t k);

/// Half-open [lo, hi).
struct RotationInterval {
  RotationPoint lo;
  RotationPoint hi;
};
/// The partition generated by pulling [0,1-theta), [1-theta,1) back under R_theta^i, i < k.
std::vector<RotationInterval> c_k_intervals(const LogRatioAngle& angle, std::size_t k);

/// shift(omega, 1) when t lies in [1 - theta, 1), else omega.
SymbolSequence sigma_t(const RotationPoint& t, const LogRatioAngle& angle, const SymbolSequence& omega);

}  // namespace carpetslice
