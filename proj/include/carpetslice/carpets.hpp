#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carpetslice/certified.hpp"
#include "carpetslice/logexpr.hpp"
#include "carpetslice/symbolic.hpp"

namespace carpetslice {

/// Bedford-McMullen carpet with exponents m > n and digit set Gamma in [m] x [n].
/// Digit pairs are (i, j) with i the column (base m) and j the row (base n).
struct Carpet {
  std::int64_t m = 2;
  std::int64_t n = 2;
  std::vector<DigitPair> digits;  // sorted, unique

  /// Sorts, deduplicates and validates.
  static Carpet make(std::int64_t m, std::int64_t n, std::vector<DigitPair> digits);
  static Carpet full(std::int64_t m, std::int64_t n);
  void validate() const;
  bool contains(int i, int j) const;
  bool operator==(const Carpet& o) const { return m == o.m && n == o.n && digits == o.digits; }
};

/// Gamma_j for every row j in [n]; empty rows give empty fibers.
std::vector<std::vector<int>> fibers(const Carpet& c);
/// Rows with nonempty fibers (the digit set of P2(F)).
std::vector<int> nonempty_rows(const Carpet& c);
/// Columns used by some digit (the digit set of P1(F)).
std::vector<int> nonempty_columns(const Carpet& c);

struct DimensionReport {
  DimValue dim_box;
  DimValue dim_hausdorff;
  DimValue dim_p2;
  DimValue dim_star;
  bool uniform_fibers = false;
};
DimensionReport dims(const Carpet& c, unsigned prec = 128);

/// Exact number of approximate squares of side about n^{-k}:
/// |Gamma|^l * R^{k-l} with l = floor(k log n / log m) and R the nonempty rows.
Integer approximate_square_count(const Carpet& c, std::size_t k);
/// l = floor(k log n / log m), decided exactly.
std::size_t approximate_square_x_depth(std::int64_t m, std::int64_t n, std::size_t k);

struct IncommensurabilityVerdict {
  bool incommensurable = true;
  /// Names and values of the first multiplicatively dependent pair, e.g. ("m1", 3, "n2", 3).
  std::optional<std::pair<std::string, std::string>> witness;
  std::optional<std::pair<std::int64_t, std::int64_t>> witness_values;
};
IncommensurabilityVerdict is_incommensurable(const Carpet& F, const Carpet& E);

struct BoundResult {
  LogExpr value;
  bool hypothesis_ok = true;
  std::string warning;
};

/// max{dim* F - 1, 0}.
BoundResult bound_slice_star(const Carpet& F);
/// max{dim_H F - 1, 0}; the alternative candidate bound, reported alongside.
DimValue bound_slice_hausdorff(const Carpet& F, unsigned prec = 128);

enum class Orientation { Diagonal, Antidiagonal };
BoundResult bound_intersection(const Carpet& F, const Carpet& E, Orientation orientation);

struct RowWeights {
  std::vector<Rational> alpha1;  // over the Gamma family
  std::vector<Rational> alpha2;  // over the Lambda family
};
/// Worst case: max_{i,j} {log|Gamma_i|/log m1 + log|Lambda_j|/log m2 - 1, 0}.
/// With weights: max{sum alpha1_i log|Gamma_i|/log m1 + sum alpha2_j log|Lambda_j|/log m2 - 1, 0}.
LogExpr bound_product_slice(const std::vector<std::vector<int>>& gammas,
                            const std::vector<std::vector<int>>& lambdas, std::int64_t m1, std::int64_t m2,
                            const std::optional<RowWeights>& weights = std::nullopt);

/// Affine map whose linear part is diagonal (x,y) -> (a x + tx, d y + ty)
/// or antidiagonal (x,y) -> (a y + tx, d x + ty).
struct AffinePlaneMap {
  Orientation orientation = Orientation::Diagonal;
  Rational a = 1;
  Rational d = 1;
  Rational tx = 0;
  Rational ty = 0;

  static AffinePlaneMap identity() { return {}; }
  static AffinePlaneMap swap() { return {Orientation::Antidiagonal, 1, 1, 0, 0}; }
  static AffinePlaneMap translation(const Rational& tx, const Rational& ty) {
    return {Orientation::Diagonal, 1, 1, tx, ty};
  }
  void validate() const;
  Rect apply(const Rect& r) const;
};

/// A point of the plane given by base-m and base-n digit sequences of its coordinates.
struct DigitPoint {
  SymbolSequence x;  // base m digits
  SymbolSequence y;  // base n digits
};

struct RectCover {
  std::vector<Rect> rects;
  Rational cell_width;
  Rational cell_height;
  bool exact_center = true;  // false when the center was truncated
};

/// Cover of [m^k (F - x)] cap [-1,1]^2: images of the carpet's approximate
/// squares with x-depth k + w under z -> m^k (z - x), clipped to [-1,1]^2.
RectCover miniset_cover(const Carpet& c, const DigitPoint& x, std::size_t k, std::size_t window_depth);

/// 1D cover of the set of base-m expansions whose p-th digit lies in digits(p),
/// as merged closed intervals at resolution m^{-depth}.
std::vector<std::pair<Rational, Rational>> digit_set_cover(
    std::int64_t m, std::size_t depth, const std::function<const std::vector<int>&(std::size_t)>& digits);

/// Cover of diag(1, n^s) (pi_m(F_omega) x P2(F) + z) clipped to [-2,2]^2, with
/// pi_m(F_omega) covered at depth and P2(F) at the matching base-n depth.
/// `n_pow_s` encloses n^s; an exact enclosure keeps the cover exact.
RectCover omega_s_set_cover(const SymbolSequence& omega, const Enclosure& n_pow_s, const Carpet& c,
                            const Rational& zx, const Rational& zy, std::size_t depth);

/// n^s for s = frac(k log_n m): m^k / n^{floor(k log_n m)}, exact.
Rational n_pow_frac_k_log(std::int64_t m, std::int64_t n, std::size_t k);

/// True when the closed rectangle r is contained in the union of the closed rectangles.
bool rect_union_covers(const Rect& r, const std::vector<Rect>& cover);
/// Grows each rectangle by (dx, dy) on every side.
std::vector<Rect> inflate(const std::vector<Rect>& rects, const Rational& dx, const Rational& dy);

}  // namespace carpetslice
