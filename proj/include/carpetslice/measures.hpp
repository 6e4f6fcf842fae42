#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "carpetslice/carpets.hpp"
#include "carpetslice/dynamics.hpp"

namespace carpetslice {

/// Bernoulli measure on Gamma^N: i.i.d. digit pairs with exact probabilities.
struct BernoulliSpec {
  std::vector<DigitPair> support;
  std::vector<Rational> probabilities;
  std::uint64_t seed = 0;

  static BernoulliSpec uniform(const Carpet& c, std::uint64_t seed);
  /// Throws std::invalid_argument unless support is a subset of the carpet's
  /// digits, probabilities are positive and sum to 1.
  void validate(const Carpet& c) const;
};

/// Exact sample points x = xs[i] / m^depth, y = ys[i] / n^depth.
struct SamplePoints {
  std::int64_t m = 2;
  std::int64_t n = 2;
  std::size_t depth = 0;
  std::vector<std::uint64_t> xs;
  std::vector<std::uint64_t> ys;

  std::size_t size() const { return xs.size(); }
  ExactPoint point(std::size_t i) const;
};

/// Samples per chunk; chunk c draws from its own generator seeded from (seed, c),
/// so results do not depend on the number of workers.
inline constexpr std::size_t kSampleChunk = 4096;

/// N points of pi_m x pi_n of i.i.d. words truncated at digit_depth.
SamplePoints sample_self_affine(const Carpet& c, const BernoulliSpec& spec, std::size_t N, std::size_t digit_depth,
                                unsigned workers = 1);

/// Samples of the conditional measure mu_y on the fiber coded by omega: the p-th
/// x digit is drawn from the spec restricted to row omega[p], renormalized.
class FiberSampler {
 public:
  FiberSampler(const Carpet& c, const BernoulliSpec& spec, SymbolSequence omega);
  /// x numerators over m^digit_depth; throws std::domain_error on a zero-probability row.
  std::vector<std::uint64_t> sample(std::size_t N, std::size_t digit_depth, std::uint64_t seed) const;
  std::int64_t base() const { return m_; }

 private:
  std::int64_t m_;
  // per row: cumulative thresholds over a common denominator, and the digits
  std::vector<std::vector<std::uint64_t>> thresholds_;
  std::vector<std::vector<int>> digits_;
  std::vector<std::uint64_t> denominators_;
  SymbolSequence omega_;
};

FiberSampler conditional_fiber_sampler(const Carpet& c, const BernoulliSpec& spec, const SymbolSequence& omega);

/// Counts over the cells [i/b^k, (i+1)/b^k) x [j/b^k, (j+1)/b^k).
struct GridHistogram {
  std::size_t k = 0;
  std::int64_t base = 2;
  std::uint64_t total = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> counts;  // key: pack(i, j)

  static std::uint64_t pack(std::int64_t i, std::int64_t j);
  static std::pair<std::int64_t, std::int64_t> unpack(std::uint64_t key);
  void add(std::int64_t i, std::int64_t j, std::uint64_t c = 1);
  /// Shannon entropy (natural log) of the normalized counts.
  double entropy() const;
  /// Histogram at a coarser depth of the same base.
  GridHistogram coarsen(std::size_t k_new) const;
  /// Sorted (i, j, count) rows.
  std::vector<std::tuple<std::int64_t, std::int64_t, std::uint64_t>> rows() const;
};

/// 2D histogram of the samples at depth k in base b.
GridHistogram histogram(const SamplePoints& pts, std::int64_t base, std::size_t k);
/// 1D histogram (row 0) of x numerators over m^depth.
GridHistogram histogram_1d(const std::vector<std::uint64_t>& xs, std::int64_t m, std::size_t depth,
                           std::int64_t base, std::size_t k);

struct EntropyEstimate {
  double slope = 0;  // least-squares slope of H_k against k log(base)
  double intercept = 0;
  double residual = 0;
  std::vector<double> entropies;  // H_k for k = k_min..k_max
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::uint64_t sample_size = 0;
};

/// The finest histogram must be at depth k_max. Empirical entropy saturates at
/// log N, so the window is rejected unless base^{2 k_max} * 16 <= N.
EntropyEstimate entropy_dim_estimate(const GridHistogram& finest, std::size_t k_min, std::size_t k_max);

struct RestrictedEntropyResult {
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
  double sup_ball_mass = 0;
  std::int64_t radius_cells = 0;
};

/// inf over cells y of H(mu restricted to B(y, delta)^c, D_{2^k}) against
/// H(mu, D_{2^k}) - C1 k sqrt(eps), with sup-norm balls made of whole cells and
/// the restriction left unnormalized. Throws PreconditionViolated when the
/// largest ball mass exceeds eps.
RestrictedEntropyResult restricted_entropy_check(const GridHistogram& hist, double delta, double eps,
                                                 double c1 = 8.0);

struct TvPoint {
  std::size_t k = 0;
  double tv = 0;
  double noise_scale = 0;  // sqrt(cells / N)
};

struct SingularityReport {
  std::vector<TvPoint> curve;
  std::string hypothesis;  // dimension hypothesis status
  std::string note;
};

/// Total-variation distance between depth-k dyadic histograms of g(mu) and nu samples.
/// An observation only: TV near 1 is consistent with singularity but proves nothing.
SingularityReport singularity_experiment(const Carpet& F, const BernoulliSpec& mu, const AffinePlaneMap& g,
                                         const Carpet& E, const BernoulliSpec& nu, std::size_t k_min,
                                         std::size_t k_max, std::size_t N, std::size_t digit_depth,
                                         unsigned workers = 1);

struct DensityBracket {
  double lower = 0;
  double upper = 0;
  double full = 0;       // |O cap [0, N)| / N
  double last_half = 0;  // |O cap [N/2, N)| / (N - N/2)
};
DensityBracket density_of_visits(const std::function<bool(std::uint64_t)>& in_O, std::uint64_t N);

/// Lebesgue measure of the union of width-1/M cells (M = floor(sqrt N)) that
/// contain some visited point {t0 + k theta}, k in O cap [0, N).
double visited_closure_measure(const RotationPoint& t0, const LogRatioAngle& angle,
                               const std::function<bool(std::uint64_t)>& in_O, std::uint64_t N);

}  // namespace carpetslice
