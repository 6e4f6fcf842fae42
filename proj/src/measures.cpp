#include "carpetslice/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include <boost/integer/common_factor.hpp>

#include "carpetslice/errors.hpp"

namespace carpetslice {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(chunk + 1)));
}

// Uniform integer in [0, q) by rejection; q >= 1.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t q) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % q);
  for (;;) {
    const std::uint64_t u = rng();
    if (u < limit) return u % q;
  }
}

// Cumulative integer thresholds of exact probabilities over their common denominator.
struct Table {
  std::uint64_t denominator = 1;
  std::vector<std::uint64_t> cumulative;

  static Table of(const std::vector<Rational>& probs) {
    Integer den = 1;
    for (const auto& p : probs) den = boost::integer::lcm(den, carpetslice::denominator(p));
    if (den >= (Integer(1) << 62)) throw std::invalid_argument("probability denominators too large");
    Table t;
    t.denominator = den.convert_to<std::uint64_t>();
    Integer acc = 0;
    for (const auto& p : probs) {
      acc += numerator(p) * (den / carpetslice::denominator(p));
      t.cumulative.push_back(acc.convert_to<std::uint64_t>());
    }
    return t;
  }
  std::size_t draw(std::mt19937_64& rng) const {
    const std::uint64_t u = draw_below(rng, denominator);
    return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
  }
};

std::uint64_t checked_power(std::int64_t base, std::size_t e) {
  const Integer p = ipow(base, static_cast<unsigned>(e));
  if (p > Integer(~std::uint64_t{0})) throw std::invalid_argument("digit depth too large for 64-bit numerators");
  return p.convert_to<std::uint64_t>();
}

template <class Fn>
void for_chunks(std::size_t N, unsigned workers, Fn&& fn) {
  const std::size_t chunks = (N + kSampleChunk - 1) / kSampleChunk;
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (std::size_t c = next++; c < chunks; c = next++) {
      fn(c, c * kSampleChunk, std::min(N, (c + 1) * kSampleChunk));
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run);
  for (auto& t : threads) t.join();
}

}  // namespace

BernoulliSpec BernoulliSpec::uniform(const Carpet& c, std::uint64_t seed) {
  BernoulliSpec s;
  s.support = c.digits;
  s.probabilities.assign(c.digits.size(), Rational(1, static_cast<long long>(c.digits.size())));
  s.seed = seed;
  return s;
}

void BernoulliSpec::validate(const Carpet& c) const {
  if (support.empty() || support.size() != probabilities.size()) {
    throw std::invalid_argument("Bernoulli spec: support and probabilities must be nonempty and of equal length");
  }
  std::set<DigitPair> seen;
  Rational total = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!c.contains(support[i].x, support[i].y)) throw std::invalid_argument("Bernoulli spec: digit outside Gamma");
    if (!seen.insert(support[i]).second) throw std::invalid_argument("Bernoulli spec: repeated digit");
    if (probabilities[i] <= 0) throw std::invalid_argument("Bernoulli spec: probabilities must be positive");
    total += probabilities[i];
  }
  if (total != 1) throw std::invalid_argument("Bernoulli spec: probabilities must sum to 1");
}

ExactPoint SamplePoints::point(std::size_t i) const {
  return {Rational(Integer(xs.at(i)), ipow(m, static_cast<unsigned>(depth))),
          Rational(Integer(ys.at(i)), ipow(n, static_cast<unsigned>(depth)))};
}

SamplePoints sample_self_affine(const Carpet& c, const BernoulliSpec& spec, std::size_t N, std::size_t digit_depth,
                                unsigned workers) {
  c.validate();
  spec.validate(c);
  if (N < 1) throw std::invalid_argument("sample_self_affine: N must be at least 1");
  if (digit_depth < 1) throw std::invalid_argument("sample_self_affine: digit depth must be at least 1");
  checked_power(c.m, digit_depth);
  checked_power(c.n, digit_depth);
  const Table table = Table::of(spec.probabilities);
  SamplePoints out;
  out.m = c.m;
  out.n = c.n;
  out.depth = digit_depth;
  out.xs.resize(N);
  out.ys.resize(N);
  const auto m = static_cast<std::uint64_t>(c.m), n = static_cast<std::uint64_t>(c.n);
  for_chunks(N, workers, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
    auto rng = chunk_rng(spec.seed, chunk);
    for (std::size_t s = lo; s < hi; ++s) {
      std::uint64_t x = 0, y = 0;
      for (std::size_t p = 0; p < digit_depth; ++p) {
        const DigitPair& d = spec.support[table.draw(rng)];
        x = x * m + static_cast<std::uint64_t>(d.x);
        y = y * n + static_cast<std::uint64_t>(d.y);
      }
      out.xs[s] = x;
      out.ys[s] = y;
    }
  });
  return out;
}

FiberSampler::FiberSampler(const Carpet& c, const BernoulliSpec& spec, SymbolSequence omega)
    : m_(c.m), omega_(std::move(omega)) {
  c.validate();
  spec.validate(c);
  if (omega_.alphabet_size() > c.n) throw std::invalid_argument("fiber sampler: omega alphabet exceeds the rows");
  thresholds_.resize(static_cast<std::size_t>(c.n));
  digits_.resize(static_cast<std::size_t>(c.n));
  denominators_.assign(static_cast<std::size_t>(c.n), 0);
  for (int j = 0; j < c.n; ++j) {
    std::vector<Rational> probs;
    Rational row_total = 0;
    for (std::size_t i = 0; i < spec.support.size(); ++i) {
      if (spec.support[i].y == j) {
        digits_[static_cast<std::size_t>(j)].push_back(spec.support[i].x);
        probs.push_back(spec.probabilities[i]);
        row_total += spec.probabilities[i];
      }
    }
    if (row_total == 0) continue;
    for (auto& p : probs) p /= row_total;
    const Table t = Table::of(probs);
    thresholds_[static_cast<std::size_t>(j)] = t.cumulative;
    denominators_[static_cast<std::size_t>(j)] = t.denominator;
  }
}

std::vector<std::uint64_t> FiberSampler::sample(std::size_t N, std::size_t digit_depth, std::uint64_t seed) const {
  if (digit_depth < 1) throw std::invalid_argument("fiber sampler: digit depth must be at least 1");
  checked_power(m_, digit_depth);
  std::vector<std::size_t> rows(digit_depth);
  for (std::size_t p = 0; p < digit_depth; ++p) {
    rows[p] = static_cast<std::size_t>(omega_.at(p));
    if (denominators_[rows[p]] == 0) {
      throw std::domain_error("fiber sampler: row " + std::to_string(rows[p]) + " at position " + std::to_string(p) +
                              " has zero probability");
    }
  }
  std::vector<std::uint64_t> out(N);
  for_chunks(N, 1, [&](std::size_t chunk, std::size_t lo, std::size_t hi) {
    auto rng = chunk_rng(seed, chunk);
    for (std::size_t s = lo; s < hi; ++s) {
      std::uint64_t x = 0;
      for (std::size_t p = 0; p < digit_depth; ++p) {
        const auto& th = thresholds_[rows[p]];
        const std::uint64_t u = draw_below(rng, denominators_[rows[p]]);
        const auto idx = static_cast<std::size_t>(std::upper_bound(th.begin(), th.end(), u) - th.begin());
        x = x * static_cast<std::uint64_t>(m_) + static_cast<std::uint64_t>(digits_[rows[p]][idx]);
      }
      out[s] = x;
    }
  });
  return out;
}

FiberSampler conditional_fiber_sampler(const Carpet& c, const BernoulliSpec& spec, const SymbolSequence& omega) {
  return FiberSampler(c, spec, omega);
}

// ---------------------------------------------------------------- histograms

std::uint64_t GridHistogram::pack(std::int64_t i, std::int64_t j) {
  if (i < INT32_MIN || i > INT32_MAX || j < INT32_MIN || j > INT32_MAX) {
    throw std::out_of_range("histogram cell index out of range");
  }
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(static_cast<std::int32_t>(j));
}

std::pair<std::int64_t, std::int64_t> GridHistogram::unpack(std::uint64_t key) {
  return {static_cast<std::int32_t>(static_cast<std::uint32_t>(key >> 32)),
          static_cast<std::int32_t>(static_cast<std::uint32_t>(key))};
}

void GridHistogram::add(std::int64_t i, std::int64_t j, std::uint64_t c) {
  counts[pack(i, j)] += c;
  total += c;
}

double GridHistogram::entropy() const {
  if (total == 0) return 0;
  const double n = static_cast<double>(total);
  double h = 0;
  for (const auto& [key, c] : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

namespace {
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}
}  // namespace

GridHistogram GridHistogram::coarsen(std::size_t k_new) const {
  if (k_new > k) throw std::invalid_argument("coarsen: depth must not increase");
  const std::int64_t f = ipow(base, static_cast<unsigned>(k - k_new)).convert_to<std::int64_t>();
  GridHistogram out;
  out.k = k_new;
  out.base = base;
  for (const auto& [key, c] : counts) {
    const auto [i, j] = unpack(key);
    out.add(floor_div(i, f), floor_div(j, f), c);
  }
  return out;
}

std::vector<std::tuple<std::int64_t, std::int64_t, std::uint64_t>> GridHistogram::rows() const {
  std::vector<std::tuple<std::int64_t, std::int64_t, std::uint64_t>> out;
  for (const auto& [key, c] : counts) {
    const auto [i, j] = unpack(key);
    out.emplace_back(i, j, c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// floor(num * base^k / den) for num < 2^64, den = m^depth.
std::int64_t scaled_cell(std::uint64_t num, std::uint64_t bk, std::uint64_t den) {
  const unsigned __int128 v = static_cast<unsigned __int128>(num) * bk;
  return static_cast<std::int64_t>(v / den);
}

}  // namespace

GridHistogram histogram(const SamplePoints& pts, std::int64_t base, std::size_t k) {
  if (base < 2) throw std::invalid_argument("histogram: base must be at least 2");
  const std::uint64_t bk = checked_power(base, k);
  if (bk >= (std::uint64_t{1} << 31)) throw std::invalid_argument("histogram: depth too large");
  const std::uint64_t dx = checked_power(pts.m, pts.depth), dy = checked_power(pts.n, pts.depth);
  GridHistogram h;
  h.k = k;
  h.base = base;
  h.counts.reserve(std::min<std::size_t>(pts.size(), 1u << 20));
  for (std::size_t s = 0; s < pts.size(); ++s) h.add(scaled_cell(pts.xs[s], bk, dx), scaled_cell(pts.ys[s], bk, dy));
  return h;
}

GridHistogram histogram_1d(const std::vector<std::uint64_t>& xs, std::int64_t m, std::size_t depth,
                           std::int64_t base, std::size_t k) {
  if (base < 2) throw std::invalid_argument("histogram: base must be at least 2");
  const std::uint64_t bk = checked_power(base, k);
  if (bk >= (std::uint64_t{1} << 31)) throw std::invalid_argument("histogram: depth too large");
  const std::uint64_t d = checked_power(m, depth);
  GridHistogram h;
  h.k = k;
  h.base = base;
  for (auto x : xs) h.add(scaled_cell(x, bk, d), 0);
  return h;
}

EntropyEstimate entropy_dim_estimate(const GridHistogram& finest, std::size_t k_min, std::size_t k_max) {
  if (k_max < k_min + 2) throw std::invalid_argument("entropy_dim_estimate: need at least three depths");
  if (finest.k < k_max) throw std::invalid_argument("entropy_dim_estimate: histogram coarser than k_max");
  if (finest.total == 0) throw std::invalid_argument("entropy_dim_estimate: empty histogram");
  const Integer need = ipow(finest.base, static_cast<unsigned>(2 * k_max)) * 16;
  if (need > Integer(finest.total)) {
    throw std::invalid_argument("entropy_dim_estimate: window too deep for sample size (base^(2 k_max) * 16 = " +
                                need.str() + " > N = " + std::to_string(finest.total) + ")");
  }
  EntropyEstimate e;
  e.k_min = k_min;
  e.k_max = k_max;
  e.sample_size = finest.total;
  std::vector<double> x;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    e.entropies.push_back(finest.coarsen(k).entropy());
    x.push_back(static_cast<double>(k) * std::log(static_cast<double>(finest.base)));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += e.entropies[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (e.entropies[i] - my);
  }
  e.slope = sxy / sxx;
  e.intercept = my - e.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = e.entropies[i] - (e.slope * x[i] + e.intercept);
    ss += r * r;
  }
  e.residual = std::sqrt(ss / n);
  return e;
}

RestrictedEntropyResult restricted_entropy_check(const GridHistogram& hist, double delta, double eps, double c1) {
  if (hist.base != 2) throw std::invalid_argument("restricted_entropy_check: needs a dyadic histogram");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("restricted_entropy_check: delta must lie in (0,1)");
  if (!(eps > 0)) throw std::invalid_argument("restricted_entropy_check: eps must be positive");
  if (hist.k > 11) throw std::invalid_argument("restricted_entropy_check: depth too large");
  if (hist.total == 0) throw std::invalid_argument("restricted_entropy_check: empty histogram");
  const std::int64_t W = std::int64_t{1} << hist.k;
  if (1.0 / static_cast<double>(W) > delta) throw std::invalid_argument("restricted_entropy_check: need 2^-k <= delta");
  const auto idx = [W](std::int64_t i, std::int64_t j) { return static_cast<std::size_t>(i * (W + 1) + j); };
  std::vector<double> P(static_cast<std::size_t>((W + 1) * (W + 1)), 0.0), Hs(P.size(), 0.0);
  const double n = static_cast<double>(hist.total);
  double H = 0;
  for (const auto& [key, c] : hist.counts) {
    const auto [i, j] = GridHistogram::unpack(key);
    if (i < 0 || j < 0 || i >= W || j >= W) {
      throw std::invalid_argument("restricted_entropy_check: mass outside the unit square");
    }
    const double p = static_cast<double>(c) / n;
    P[idx(i + 1, j + 1)] = p;
    Hs[idx(i + 1, j + 1)] = -p * std::log(p);
    H += Hs[idx(i + 1, j + 1)];
  }
  for (std::int64_t i = 1; i <= W; ++i) {
    for (std::int64_t j = 1; j <= W; ++j) {
      P[idx(i, j)] += P[idx(i - 1, j)] + P[idx(i, j - 1)] - P[idx(i - 1, j - 1)];
      Hs[idx(i, j)] += Hs[idx(i - 1, j)] + Hs[idx(i, j - 1)] - Hs[idx(i - 1, j - 1)];
    }
  }
  auto box = [&](const std::vector<double>& S, std::int64_t i0, std::int64_t i1, std::int64_t j0, std::int64_t j1) {
    return S[idx(i1, j1)] - S[idx(i0, j1)] - S[idx(i1, j0)] + S[idx(i0, j0)];
  };
  RestrictedEntropyResult out;
  out.radius_cells = static_cast<std::int64_t>(std::floor(delta * static_cast<double>(W)));
  const std::int64_t r = out.radius_cells;
  double worst_ball_entropy = 0;
  for (std::int64_t i = 0; i < W; ++i) {
    for (std::int64_t j = 0; j < W; ++j) {
      const std::int64_t i0 = std::max<std::int64_t>(0, i - r), i1 = std::min(W, i + r + 1);
      const std::int64_t j0 = std::max<std::int64_t>(0, j - r), j1 = std::min(W, j + r + 1);
      out.sup_ball_mass = std::max(out.sup_ball_mass, box(P, i0, i1, j0, j1));
      worst_ball_entropy = std::max(worst_ball_entropy, box(Hs, i0, i1, j0, j1));
    }
  }
  if (out.sup_ball_mass > eps * (1 + 1e-12)) {
    throw PreconditionViolated("restricted_entropy_check: largest ball mass " + std::to_string(out.sup_ball_mass) +
                               " exceeds eps = " + std::to_string(eps));
  }
  out.lhs = H - worst_ball_entropy;
  out.rhs = H - c1 * static_cast<double>(hist.k) * std::sqrt(eps);
  out.pass = out.lhs >= out.rhs;
  return out;
}

SingularityReport singularity_experiment(const Carpet& F, const BernoulliSpec& mu, const AffinePlaneMap& g,
                                         const Carpet& E, const BernoulliSpec& nu, std::size_t k_min,
                                         std::size_t k_max, std::size_t N, std::size_t digit_depth,
                                         unsigned workers) {
  g.validate();
  if (k_max < k_min) throw std::invalid_argument("singularity_experiment: empty depth window");
  if (k_max > 24) throw std::invalid_argument("singularity_experiment: depth too large");
  const SamplePoints a = sample_self_affine(F, mu, N, digit_depth, workers);
  BernoulliSpec nu2 = nu;
  if (nu2.seed == mu.seed) nu2.seed = splitmix64(mu.seed);  // independent streams
  const SamplePoints b = sample_self_affine(E, nu2, N, digit_depth, workers);

  const Rational W = Rational(Integer(1) << k_max);
  const Integer dxa = ipow(F.m, static_cast<unsigned>(digit_depth)), dya = ipow(F.n, static_cast<unsigned>(digit_depth));
  GridHistogram ha;
  ha.k = k_max;
  ha.base = 2;
  for (std::size_t s = 0; s < a.size(); ++s) {
    const Rational x(Integer(a.xs[s]), dxa), y(Integer(a.ys[s]), dya);
    const Rect img = g.apply({x, x, y, y});
    ha.add(floor(img.x0 * W).convert_to<std::int64_t>(), floor(img.y0 * W).convert_to<std::int64_t>());
  }
  const GridHistogram hb = histogram(b, 2, k_max);

  SingularityReport rep;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const GridHistogram ca = ha.coarsen(k), cb = hb.coarsen(k);
    std::unordered_map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> joint;
    for (const auto& [key, c] : ca.counts) joint[key].first = c;
    for (const auto& [key, c] : cb.counts) joint[key].second = c;
    double tv = 0;
    for (const auto& [key, pq] : joint) {
      tv += std::abs(static_cast<double>(pq.first) / ca.total - static_cast<double>(pq.second) / cb.total);
    }
    rep.curve.push_back({k, tv / 2, std::sqrt(static_cast<double>(joint.size()) / static_cast<double>(N))});
  }
  const DimensionReport df = dims(F), de = dims(E);
  const bool uniform_mu = mu.support.size() == F.digits.size() &&
                          std::all_of(mu.probabilities.begin(), mu.probabilities.end(),
                                      [&](const Rational& p) { return p == mu.probabilities.front(); });
  const bool uniform_nu = nu.support.size() == E.digits.size() &&
                          std::all_of(nu.probabilities.begin(), nu.probabilities.end(),
                                      [&](const Rational& p) { return p == nu.probabilities.front(); });
  if (df.uniform_fibers && de.uniform_fibers && uniform_mu && uniform_nu) {
    rep.hypothesis = "kappa(mu) = " + df.dim_hausdorff.text() + ", kappa(nu) = " + de.dim_hausdorff.text();
  } else {
    rep.hypothesis = "not checked";
  }
  rep.note = "observation only: TV near 1 is consistent with mutual singularity and proves nothing";
  return rep;
}

DensityBracket density_of_visits(const std::function<bool(std::uint64_t)>& in_O, std::uint64_t N) {
  if (N < 1) throw std::invalid_argument("density_of_visits: N must be at least 1");
  std::uint64_t all = 0, late = 0;
  const std::uint64_t half = N / 2;
  for (std::uint64_t k = 0; k < N; ++k) {
    if (in_O(k)) {
      ++all;
      if (k >= half) ++late;
    }
  }
  DensityBracket d;
  d.full = static_cast<double>(all) / static_cast<double>(N);
  d.last_half = static_cast<double>(late) / static_cast<double>(N - half);
  d.lower = std::min(d.full, d.last_half);
  d.upper = std::max(d.full, d.last_half);
  return d;
}

double visited_closure_measure(const RotationPoint& t0, const LogRatioAngle& angle,
                               const std::function<bool(std::uint64_t)>& in_O, std::uint64_t N) {
  if (N < 1) throw std::invalid_argument("visited_closure_measure: N must be at least 1");
  const auto M = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(N)))));
  std::vector<bool> hit(M, false);
  for (std::uint64_t k = 0; k < N; ++k) {
    if (!in_O(k)) continue;
    const double v = approx(angle, {t0.q, t0.b + Integer(k)});
    const double f = v - std::floor(v);
    hit[std::min<std::uint64_t>(M - 1, static_cast<std::uint64_t>(f * static_cast<double>(M)))] = true;
  }
  return static_cast<double>(std::count(hit.begin(), hit.end(), true)) / static_cast<double>(M);
}

}  // namespace carpetslice
