#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "carpetslice/carpets.hpp"
#include "carpetslice/rotation.hpp"
#include "carpetslice/symbolic.hpp"

namespace carpetslice {

/// A slope: an exact rational, or coef * base^e with 0 < e < 1 rational
/// and base^e irrational. Comparisons with rationals are exact.
class Slope {
 public:
  static Slope rational(const Rational& s);
  /// m1^t for t = q + b*theta, theta = log m2 / log m1; equals m1^q * m2^b.
  static Slope power(std::int64_t m1, std::int64_t m2, const Rational& q, const Integer& b = 0);

  bool is_rational() const { return exact_.has_value(); }
  const Rational& value() const { return *exact_; }
  int sign() const;
  /// sign(s - r); nullopt only when an irrational comparison exceeded the precision cap.
  std::optional<int> compare(const Rational& r) const;
  /// Fast pre-check: sign(s - num/den) when a double evaluation is conclusive.
  std::optional<int> quick_compare(double r) const;
  Enclosure enclosure(unsigned prec = 128) const;
  double approx() const { return approx_; }
  std::string to_string() const;

 private:
  std::optional<Rational> exact_;
  Rational coef_;           // s = coef * base^e
  std::int64_t base_ = 1;
  Rational e_;
  double approx_ = 0;
};

/// Non-vertical line through (x0, y0) with the given slope.
struct Line {
  Slope slope = Slope::rational(1);
  Rational x0 = 0;
  Rational y0 = 0;

  /// y = s x + c.
  static Line slope_intercept(const Rational& s, const Rational& c) { return {Slope::rational(s), 0, c}; }
  static Line through(const Slope& s, const Rational& x0, const Rational& y0);
  void validate() const;
  std::string to_string() const;
};

enum class PartitionKind { Dyadic, BaseGrid, ApproximateSquare };
const char* to_string(PartitionKind kind);
PartitionKind partition_from_string(const std::string& s);

struct CoverCount {
  std::size_t k = 0;
  PartitionKind partition = PartitionKind::Dyadic;
  Integer count_lower = 0;
  Integer count_upper = 0;
  bool complete = true;        // false when the node budget ran out
  std::uint64_t nodes_visited = 0;
  bool exact() const { return complete && count_lower == count_upper; }
};

class ResourceExhausted : public std::runtime_error {
 public:
  ResourceExhausted(const std::string& what, CoverCount partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const CoverCount& partial() const { return partial_; }

 private:
  CoverCount partial_;
};

using Target = std::variant<Carpet, CodedProduct>;

/// One level of a cover tree: every node has children (X*xm + dx, Y*ym + dy)
/// for (dx, dy) in digits.
struct LevelRule {
  std::int64_t xm = 1;
  std::int64_t ym = 1;
  std::vector<DigitPair> digits;
};

/// Rectangles [X/A, (X+1)/A] x [Y/B, (Y+1)/B] generated level by level from the
/// unit square, with the half-open partition grid they are counted against.
struct CoverTree {
  std::vector<LevelRule> levels;
  Integer px = 1;  // partition columns
  Integer py = 1;  // partition rows
  std::int64_t base = 2;  // scale base for slope fits: cell height is base^{-k}
};

CoverTree cover_tree(const Target& target, std::size_t k, PartitionKind partition);

struct CountOptions {
  std::uint64_t budget = 100000000;
  unsigned workers = 1;
};

/// Number of partition cells C with C cap line cap cover != empty.
/// Throws ResourceExhausted (with a partial lower count) when the budget runs out.
CoverCount count_line_cells(const Target& target, const Line& line, std::size_t k, PartitionKind partition,
                            const CountOptions& options = {});
CoverCount count_line_cells(const CoverTree& tree, const Line& line, std::size_t k, PartitionKind partition,
                            const CountOptions& options = {});

/// Leaves of the tree whose closed rectangle meets the line, as digit paths.
std::vector<PairWord> tree_leaves_meeting(const CoverTree& tree, const Line& line, const CountOptions& options = {});

struct SlopeEstimate {
  double slope = 0;
  double slope_lower = 0;  // fit on lower counts
  double slope_upper = 0;  // fit on upper counts
  double intercept = 0;
  double residual = 0;     // RMS residual of the upper fit
  std::size_t k_min = 0;
  std::size_t k_max = 0;
};

/// Least-squares slope of log N_k against k log(base).
SlopeEstimate boxdim_estimate(const std::vector<CoverCount>& counts, double base);

struct Verdict {
  bool pass = false;
  SlopeEstimate estimate;
  Enclosure bound;
  std::string bound_text;
  double slack = 0;
  std::vector<CoverCount> counts;
};

/// Verdict for precomputed counts: pass iff the fitted slope is at most bound.hi + slack.
Verdict judge_slice_counts(std::vector<CoverCount> counts, double base, const Enclosure& bound, std::string bound_text,
                           double slack);

Verdict verify_slice_bound(const Target& target, const Line& line, std::size_t k_min, std::size_t k_max,
                           const LogExpr& bound, double slack, PartitionKind partition = PartitionKind::Dyadic,
                           const CountOptions& options = {});
/// Same test for a bound known only as an enclosure.
Verdict verify_slice_bound(const Target& target, const Line& line, std::size_t k_min, std::size_t k_max,
                           const DimValue& bound, double slack, PartitionKind partition = PartitionKind::Dyadic,
                           const CountOptions& options = {});

/// Number of dyadic 2^{-k} cells meeting both the image under g of F's cover and
/// E's cover, each at the coarsest depth whose rectangles fit in a cell.
CoverCount intersect_cover_count(const Carpet& F, const AffinePlaneMap& g, const Carpet& E, std::size_t k);

/// Dyadic 2^{-k} cells met by the image under g of F's depth-matched cover.
std::vector<std::pair<std::int64_t, std::int64_t>> image_cover_cells(const Carpet& F, const AffinePlaneMap& g,
                                                                     std::size_t k);

struct InclusionResult {
  bool included = true;
  std::optional<Rect> witness;  // first image rectangle not covered
  std::size_t e_depth = 0;
  std::size_t rectangles_checked = 0;
};

/// Checks every rectangle of g(F)'s depth-k cover against E's grid at the
/// coarsest depth whose cells are no larger than g(F)'s rectangles, with E's
/// cover inflated by slack_cells cells.
InclusionResult cover_inclusion(const AffinePlaneMap& g, const Carpet& F, const Carpet& E, std::size_t k,
                                std::size_t slack_cells);

}  // namespace carpetslice
