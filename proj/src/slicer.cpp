#include "carpetslice/slicer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <boost/integer/common_factor.hpp>

#include "carpetslice/errors.hpp"

namespace carpetslice {

// ---------------------------------------------------------------- Slope

namespace {

std::size_t bit_length(const Integer& z) { return z == 0 ? 0 : msb(abs(z)) + 1; }

// Integer d-th root of a when a is a perfect d-th power.
std::optional<Integer> exact_root(std::int64_t a, std::int64_t d) {
  const double guess = std::round(std::pow(static_cast<double>(a), 1.0 / static_cast<double>(d)));
  for (std::int64_t r = std::max<std::int64_t>(1, static_cast<std::int64_t>(guess) - 1);
       r <= static_cast<std::int64_t>(guess) + 1; ++r) {
    if (ipow(r, static_cast<unsigned>(d)) == a) return Integer(r);
  }
  return std::nullopt;
}

}  // namespace

Slope Slope::rational(const Rational& s) {
  Slope out;
  out.exact_ = s;
  out.coef_ = s;
  out.approx_ = to_double(s);
  return out;
}

Slope Slope::power(std::int64_t m1, std::int64_t m2, const Rational& q, const Integer& b) {
  if (m1 < 2 || m2 < 2) throw std::invalid_argument("Slope::power: bases must be at least 2");
  const Integer fl = floor(q);
  if (abs(fl) > 100000 || abs(b) > 100000) throw std::invalid_argument("Slope::power: exponent too large");
  Rational coef = rpow(Rational(m1), fl.convert_to<int>()) * rpow(Rational(m2), b.convert_to<int>());
  const Rational e = q - fl;
  if (e == 0) return rational(coef);
  const Integer p = numerator(e), d = denominator(e);
  if (d <= 64) {
    if (auto r = exact_root(m1, d.convert_to<std::int64_t>())) {
      return rational(coef * Rational(ipow(r->convert_to<std::int64_t>(), p.convert_to<unsigned>())));
    }
  }
  Slope out;
  out.coef_ = coef;
  out.base_ = m1;
  out.e_ = e;
  out.approx_ = to_double(coef) * std::pow(static_cast<double>(m1), to_double(e));
  return out;
}

int Slope::sign() const { return coef_.sign(); }

std::optional<int> Slope::compare(const Rational& r) const {
  if (exact_) return (*exact_ > r) - (*exact_ < r);
  // s - r = coef * (base^e - r / coef)
  const int cs = coef_.sign();
  const Rational x = r / coef_;
  if (x <= 0) return cs;
  const Integer u = numerator(x), v = denominator(x);
  const Integer p = numerator(e_), d = denominator(e_);
  const std::size_t bits = static_cast<std::size_t>(d) * std::max(bit_length(u), bit_length(v)) +
                           static_cast<std::size_t>(p) * bit_length(Integer(base_));
  if (bits < (std::size_t{1} << 20)) {
    // base^(p/d) vs u/v  <=>  base^p * v^d vs u^d
    const unsigned pd = d.convert_to<unsigned>();
    const Integer lhs = pow(Integer(base_), p.convert_to<unsigned>()) * pow(v, pd);
    const Integer rhs = pow(u, pd);
    return cs * ((lhs > rhs) - (lhs < rhs));
  }
  for (unsigned prec = default_precision(); prec <= precision_cap(); prec *= 2) {
    const Enclosure b = pow_enclosure(Integer(base_), e_, prec);
    if (b.lo > x) return cs;
    if (b.hi < x) return -cs;
  }
  return std::nullopt;
}

std::optional<int> Slope::quick_compare(double r) const {
  if (!std::isfinite(approx_) || !std::isfinite(r)) return std::nullopt;
  const double diff = approx_ - r;
  if (std::abs(diff) > 1e-9 * std::max(std::abs(approx_), std::abs(r))) return diff > 0 ? 1 : -1;
  return std::nullopt;
}

Enclosure Slope::enclosure(unsigned prec) const {
  if (exact_) return Enclosure::exact(*exact_);
  return pow_enclosure(Integer(base_), e_, prec).scaled(coef_);
}

std::string Slope::to_string() const {
  if (exact_) return carpetslice::to_string(*exact_);
  std::string out;
  if (coef_ != 1) out = carpetslice::to_string(coef_) + "*";
  return out + std::to_string(base_) + "^(" + carpetslice::to_string(e_) + ")";
}

Line Line::through(const Slope& s, const Rational& x0, const Rational& y0) { return {s, x0, y0}; }

void Line::validate() const {
  if (!slope.is_rational() && slope.sign() == 0) throw std::invalid_argument("degenerate slope");
}

std::string Line::to_string() const {
  return "y - " + carpetslice::to_string(y0) + " = " + slope.to_string() + " (x - " + carpetslice::to_string(x0) +
         ")";
}

const char* to_string(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::Dyadic: return "dyadic";
    case PartitionKind::BaseGrid: return "base-grid";
    case PartitionKind::ApproximateSquare: return "approximate-square";
  }
  return "?";
}

PartitionKind partition_from_string(const std::string& s) {
  if (s == "dyadic") return PartitionKind::Dyadic;
  if (s == "base-grid") return PartitionKind::BaseGrid;
  if (s == "approximate-square") return PartitionKind::ApproximateSquare;
  throw std::invalid_argument("unknown partition: " + s);
}

// ---------------------------------------------------------------- cover trees

namespace {

std::size_t min_depth_at_least(std::int64_t base, const Integer& target) {
  std::size_t d = 0;
  Integer p = 1;
  while (p < target) {
    p *= base;
    ++d;
  }
  return d;
}

LevelRule pair_level(std::int64_t xm, std::int64_t ym, std::vector<DigitPair> digits) {
  return {xm, ym, std::move(digits)};
}

CoverTree carpet_tree(const Carpet& c, std::size_t k, PartitionKind partition) {
  c.validate();
  CoverTree t;
  std::vector<DigitPair> rows_only, cols_only;
  for (int j : nonempty_rows(c)) rows_only.push_back({0, j});
  for (int i : nonempty_columns(c)) cols_only.push_back({i, 0});
  switch (partition) {
    case PartitionKind::Dyadic: {
      const Integer two_k = Integer(1) << k;
      const std::size_t dx = min_depth_at_least(c.m, two_k);
      const std::size_t dy = min_depth_at_least(c.n, two_k);
      const std::size_t both = std::min(dx, dy);
      for (std::size_t p = 0; p < both; ++p) t.levels.push_back(pair_level(c.m, c.n, c.digits));
      for (std::size_t p = both; p < dy; ++p) t.levels.push_back(pair_level(1, c.n, rows_only));
      for (std::size_t p = both; p < dx; ++p) t.levels.push_back(pair_level(c.m, 1, cols_only));
      t.px = t.py = two_k;
      t.base = 2;
      break;
    }
    case PartitionKind::BaseGrid:
      for (std::size_t p = 0; p < k; ++p) t.levels.push_back(pair_level(c.m, c.n, c.digits));
      t.px = ipow(c.m, static_cast<unsigned>(k));
      t.py = ipow(c.n, static_cast<unsigned>(k));
      t.base = c.n;
      break;
    case PartitionKind::ApproximateSquare: {
      const std::size_t l = approximate_square_x_depth(c.m, c.n, k);
      for (std::size_t p = 0; p < l; ++p) t.levels.push_back(pair_level(c.m, c.n, c.digits));
      for (std::size_t p = l; p < k; ++p) t.levels.push_back(pair_level(1, c.n, rows_only));
      t.px = ipow(c.m, static_cast<unsigned>(l));
      t.py = ipow(c.n, static_cast<unsigned>(k));
      t.base = c.n;
      break;
    }
  }
  return t;
}

void push_coded_levels(const CodedProduct& cp, std::size_t depth, CoverTree& t, std::size_t& r) {
  r = 0;
  for (std::size_t p = 0; p < depth; ++p) {
    auto pairs = cp.allowed(p, r);
    if (cp.tau.at(p) == 1) {
      t.levels.push_back(pair_level(cp.m1, cp.m2, std::move(pairs)));
      ++r;
    } else {
      for (auto& d : pairs) d.x = 0;
      t.levels.push_back(pair_level(1, cp.m2, std::move(pairs)));
    }
  }
}

CoverTree coded_tree(const CodedProduct& cp, std::size_t k, PartitionKind partition) {
  cp.validate();
  CoverTree t;
  std::size_t r = 0;
  if (partition == PartitionKind::Dyadic) {
    const Integer two_k = Integer(1) << k;
    const std::size_t limit = 64 * (k + 1);
    std::size_t d = 0, ones = 0;
    Integer ym = 1, xm = 1;
    while (ym < two_k || xm < two_k) {
      if (d >= limit) throw std::invalid_argument("coded product: tau has too few ones for a dyadic cover");
      if (cp.tau.at(d) == 1) {
        xm *= cp.m1;
        ++ones;
      }
      ym *= cp.m2;
      ++d;
    }
    push_coded_levels(cp, d, t, r);
    t.px = t.py = two_k;
    t.base = 2;
  } else {
    push_coded_levels(cp, k, t, r);
    t.px = ipow(cp.m1, static_cast<unsigned>(r));
    t.py = ipow(cp.m2, static_cast<unsigned>(k));
    t.base = cp.m2;
  }
  return t;
}

}  // namespace

CoverTree cover_tree(const Target& target, std::size_t k, PartitionKind partition) {
  if (const auto* c = std::get_if<Carpet>(&target)) return carpet_tree(*c, k, partition);
  return coded_tree(std::get<CodedProduct>(target), k, partition);
}

// ---------------------------------------------------------------- exact descent

namespace {

struct Overflow {};

// __int128 with overflow checks; overflow aborts the pass, which is rerun with Integer.
struct CI {
  __int128 v = 0;
  CI() = default;
  CI(__int128 x) : v(x) {}  // NOLINT(google-explicit-constructor)
};
inline CI operator+(CI a, CI b) {
  __int128 r;
  if (__builtin_add_overflow(a.v, b.v, &r)) throw Overflow{};
  return r;
}
inline CI operator-(CI a, CI b) {
  __int128 r;
  if (__builtin_sub_overflow(a.v, b.v, &r)) throw Overflow{};
  return r;
}
inline CI operator*(CI a, CI b) {
  __int128 r;
  if (__builtin_mul_overflow(a.v, b.v, &r)) throw Overflow{};
  return r;
}
inline CI operator/(CI a, CI b) { return a.v / b.v; }
inline bool operator<(CI a, CI b) { return a.v < b.v; }
inline bool operator<=(CI a, CI b) { return a.v <= b.v; }
inline bool operator==(CI a, CI b) { return a.v == b.v; }

inline int sgn(CI a) { return (a.v > 0) - (a.v < 0); }
inline int sgn(const Integer& a) { return a.sign(); }
inline double to_dbl(CI a) { return static_cast<double>(a.v); }
inline double to_dbl(const Integer& a) { return a.convert_to<double>(); }
inline std::uint64_t to_u64(CI a) { return static_cast<std::uint64_t>(a.v); }
inline std::uint64_t to_u64(const Integer& a) { return a.convert_to<std::uint64_t>(); }

Integer to_integer(CI a) {
  const bool neg = a.v < 0;
  const unsigned __int128 u = neg ? -static_cast<unsigned __int128>(a.v) : static_cast<unsigned __int128>(a.v);
  Integer z = static_cast<std::uint64_t>(u >> 64);
  z <<= 64;
  z += static_cast<std::uint64_t>(u);
  return neg ? Integer(-z) : z;
}
const Integer& to_integer(const Integer& a) { return a; }

template <class I>
I from_integer(const Integer& z);
template <>
CI from_integer<CI>(const Integer& z) {
  static const Integer lim = Integer(1) << 124;
  if (abs(z) >= lim) throw Overflow{};
  const bool neg = z < 0;
  const Integer u = neg ? Integer(-z) : z;
  const auto lo = static_cast<std::uint64_t>(u & Integer(~std::uint64_t{0}));
  const auto hi = static_cast<std::uint64_t>(u >> 64);
  const __int128 v = static_cast<__int128>((static_cast<unsigned __int128>(hi) << 64) | lo);
  return neg ? CI(-v) : CI(v);
}
template <>
Integer from_integer<Integer>(const Integer& z) {
  return z;
}

// Everything is scaled so that partition corners and tree corners are integers:
// x = X / Dx, y = Y / Dy with Dx = lcm(A_L, Px), Dy = lcm(B_L, Py).
struct Frame {
  Integer Dx, Dy, bx, by, axDx, ayDy, K, M, sp, sq, cx, cy, Px, Py;
  std::vector<Integer> fx, fy;  // tree cell size at depth p, in frame units
  bool rational = true;
};

Frame make_frame(const CoverTree& tree, const Line& line) {
  Frame f;
  std::vector<Integer> A{1}, B{1};
  for (const auto& lv : tree.levels) {
    if (lv.xm < 1 || lv.ym < 1) throw std::invalid_argument("cover tree: scale factors must be positive");
    A.push_back(A.back() * lv.xm);
    B.push_back(B.back() * lv.ym);
  }
  f.Px = tree.px;
  f.Py = tree.py;
  f.Dx = boost::integer::lcm(A.back(), f.Px);
  f.Dy = boost::integer::lcm(B.back(), f.Py);
  for (std::size_t p = 0; p < A.size(); ++p) {
    f.fx.push_back(f.Dx / A[p]);
    f.fy.push_back(f.Dy / B[p]);
  }
  f.cx = f.Dx / f.Px;
  f.cy = f.Dy / f.Py;
  f.bx = denominator(line.x0);
  f.by = denominator(line.y0);
  f.axDx = numerator(line.x0) * f.Dx;
  f.ayDy = numerator(line.y0) * f.Dy;
  f.K = f.Dx * f.bx;
  f.M = f.Dy * f.by;
  f.rational = line.slope.is_rational();
  if (f.rational) {
    f.sp = numerator(line.slope.value());
    f.sq = denominator(line.slope.value());
  }
  return f;
}

constexpr int kUndecided = 2;

template <class I>
struct Geo {
  I Dx, Dy, bx, by, axDx, ayDy, K, M, sp, sq, cx, cy, Px, Py;
  std::vector<I> fx, fy;
  bool rational;
  const Slope* slope;

  Geo(const Frame& f, const Slope& s)
      : Dx(from_integer<I>(f.Dx)), Dy(from_integer<I>(f.Dy)), bx(from_integer<I>(f.bx)),
        by(from_integer<I>(f.by)), axDx(from_integer<I>(f.axDx)), ayDy(from_integer<I>(f.ayDy)),
        K(from_integer<I>(f.K)), M(from_integer<I>(f.M)), sp(from_integer<I>(f.sp)), sq(from_integer<I>(f.sq)),
        cx(from_integer<I>(f.cx)), cy(from_integer<I>(f.cy)), Px(from_integer<I>(f.Px)),
        Py(from_integer<I>(f.Py)), rational(f.rational), slope(&s) {
    for (const auto& v : f.fx) fx.push_back(from_integer<I>(v));
    for (const auto& v : f.fy) fy.push_back(from_integer<I>(v));
  }

  // Sign of (y - y0) - s (x - x0) at (X/Dx, Y/Dy); kUndecided past the precision cap.
  int sign_at(const I& X, const I& Y) const {
    const I U = X * bx - axDx;
    const I V = Y * by - ayDy;
    if (rational) return sgn(sq * V * K - sp * U * M);
    const int su = sgn(U);
    if (su == 0) return sgn(V);
    const I N = V * K;
    const I D = U * M;
    std::optional<int> c = slope->quick_compare(to_dbl(N) / to_dbl(D));
    if (!c) {
      Integer n = to_integer(N), d = to_integer(D);
      if (d < 0) {
        n = -n;
        d = -d;
      }
      c = slope->compare(Rational(n, d));
      if (!c) return kUndecided;
    }
    return su * -*c;
  }
};

enum class Tri { No, Maybe, Yes };

// Does the line meet the box [xl, xr] x [yl, yr]? The left and bottom sides are
// closed; the right/top sides are open when the flags say so.
template <class I>
Tri box_meets(const Geo<I>& g, const I& xl, const I& xr, bool xr_open, const I& yl, const I& yr, bool yr_open) {
  if (xr < xl || yr < yl) return Tri::No;
  if ((xl == xr && xr_open) || (yl == yr && yr_open)) return Tri::No;
  if (xl == xr && yl == yr) {
    const int s = g.sign_at(xl, yl);
    return s == 0 ? Tri::Yes : (s == kUndecided ? Tri::Maybe : Tri::No);
  }
  if (xl == xr) {
    // f increases with y along a vertical segment
    const int a = g.sign_at(xl, yl), b = g.sign_at(xl, yr);
    if (a == kUndecided || b == kUndecided) return Tri::Maybe;
    if (a > 0) return Tri::No;
    if (a == 0) return Tri::Yes;
    if (b > 0) return Tri::Yes;
    if (b == 0) return yr_open ? Tri::No : Tri::Yes;
    return Tri::No;
  }
  if (yl == yr) {
    // f is monotone in x along a horizontal segment
    const int a = g.sign_at(xl, yl), b = g.sign_at(xr, yl);
    if (a == kUndecided || b == kUndecided) return Tri::Maybe;
    if (a == 0) return Tri::Yes;
    if (b == 0) return xr_open ? Tri::No : Tri::Yes;
    return a != b ? Tri::Yes : Tri::No;
  }
  const int s[4] = {g.sign_at(xl, yl), g.sign_at(xr, yl), g.sign_at(xl, yr), g.sign_at(xr, yr)};
  const bool on_open[4] = {false, xr_open, yr_open, xr_open || yr_open};
  bool pos = false, neg = false, unknown = false;
  for (int v : s) {
    pos = pos || v == 1;
    neg = neg || v == -1;
    unknown = unknown || v == kUndecided;
  }
  if (pos && neg) return Tri::Yes;
  bool zero_inside = false;
  for (int c = 0; c < 4; ++c) zero_inside = zero_inside || (s[c] == 0 && !on_open[c]);
  if (zero_inside) return Tri::Yes;
  if (unknown) return Tri::Maybe;
  // Only zero corners on open sides are left: the line touches the box there and nowhere else.
  return Tri::No;
}

using CellSet = std::unordered_set<std::uint64_t>;

struct Shared {
  std::atomic<std::uint64_t> visited{0};
  std::atomic<bool> exhausted{false};
  std::uint64_t budget = 0;
};

template <class I>
struct Walker {
  const CoverTree& tree;
  const Geo<I>& g;
  Shared& shared;
  bool collect_leaves = false;
  CellSet yes, maybe;
  std::vector<PairWord> leaves;
  PairWord path;

  Walker(const CoverTree& t, const Geo<I>& geo, Shared& s) : tree(t), g(geo), shared(s) {}

  bool corners_one_side(const I& x0, const I& x1, const I& y0, const I& y1) const {
    const int a = g.sign_at(x0, y0);
    if (a == 0 || a == kUndecided) return false;
    for (int s : {g.sign_at(x1, y0), g.sign_at(x0, y1), g.sign_at(x1, y1)}) {
      if (s != a) return false;
    }
    return true;
  }

  void visit(const I& X, const I& Y, std::size_t p) {
    if (shared.exhausted.load(std::memory_order_relaxed)) return;
    if (shared.visited.fetch_add(1, std::memory_order_relaxed) >= shared.budget) {
      shared.exhausted = true;
      return;
    }
    const I x0 = X * g.fx[p], y0 = Y * g.fy[p];
    const I x1 = x0 + g.fx[p], y1 = y0 + g.fy[p];
    if (corners_one_side(x0, x1, y0, y1)) return;
    if (p == tree.levels.size()) {
      leaf(x0, x1, y0, y1);
      return;
    }
    const LevelRule& lv = tree.levels[p];
    const I xm = I(lv.xm), ym = I(lv.ym);
    for (const auto& d : lv.digits) {
      path.push_back(d);
      visit(X * xm + I(d.x), Y * ym + I(d.y), p + 1);
      path.pop_back();
    }
  }

  void leaf(const I& x0, const I& x1, const I& y0, const I& y1) {
    if (collect_leaves) {
      if (box_meets(g, x0, x1, false, y0, y1, false) != Tri::No) leaves.push_back(path);
      return;
    }
    const I one(1);
    const I i_lo = x0 / g.cx, j_lo = y0 / g.cy;
    I i_hi = x1 / g.cx, j_hi = y1 / g.cy;
    if (g.Px <= i_hi) i_hi = g.Px - one;
    if (g.Py <= j_hi) j_hi = g.Py - one;
    for (I i = i_lo; i <= i_hi; i = i + one) {
      const I cl = i * g.cx, cr = cl + g.cx;
      const I bl = x0 < cl ? cl : x0;
      const bool r_open = cr <= x1 && i < g.Px - one;
      const I br = r_open ? cr : x1;
      for (I j = j_lo; j <= j_hi; j = j + one) {
        const std::uint64_t key = to_u64(i) * to_u64(g.Py) + to_u64(j);
        if (yes.count(key)) continue;
        const I ct = j * g.cy, cu = ct + g.cy;
        const I bb = y0 < ct ? ct : y0;
        const bool t_open = cu <= y1 && j < g.Py - one;
        const I bt = t_open ? cu : y1;
        const Tri t = box_meets(g, bl, br, r_open, bb, bt, t_open);
        if (t == Tri::Yes) {
          yes.insert(key);
          maybe.erase(key);
        } else if (t == Tri::Maybe) {
          maybe.insert(key);
        }
      }
    }
  }
};

struct Frontier {
  Integer X, Y;
  std::size_t depth;
  PairWord path;
};

// Top-level nodes to hand out to workers.
std::vector<Frontier> make_frontier(const CoverTree& tree, std::size_t want) {
  std::vector<Frontier> cur{{0, 0, 0, {}}};
  while (cur.size() < want && cur.front().depth < tree.levels.size()) {
    std::vector<Frontier> next;
    for (const auto& f : cur) {
      const LevelRule& lv = tree.levels[f.depth];
      for (const auto& d : lv.digits) {
        Frontier c{f.X * lv.xm + d.x, f.Y * lv.ym + d.y, f.depth + 1, f.path};
        c.path.push_back(d);
        next.push_back(std::move(c));
      }
    }
    if (next.empty()) break;
    cur = std::move(next);
  }
  return cur;
}

struct DescentResult {
  CellSet yes, maybe;
  std::vector<PairWord> leaves;
  std::uint64_t visited = 0;
  bool exhausted = false;
};

template <class I>
DescentResult descend(const CoverTree& tree, const Frame& frame, const Slope& slope, const CountOptions& options,
                      bool collect_leaves) {
  const Geo<I> g(frame, slope);
  Shared shared;
  shared.budget = options.budget;
  const unsigned workers = std::max(1u, options.workers);
  const std::vector<Frontier> frontier =
      workers == 1 ? std::vector<Frontier>{{0, 0, 0, {}}} : make_frontier(tree, 8 * workers);

  std::vector<Walker<I>> walkers;
  walkers.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    walkers.emplace_back(tree, g, shared);
    walkers.back().collect_leaves = collect_leaves;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&](unsigned w) {
    try {
      for (std::size_t idx = next++; idx < frontier.size(); idx = next++) {
        const Frontier& f = frontier[idx];
        walkers[w].path = f.path;
        walkers[w].visit(from_integer<I>(f.X), from_integer<I>(f.Y), f.depth);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      shared.exhausted = true;  // stop the other workers
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  DescentResult out;
  for (auto& w : walkers) {
    out.yes.merge(w.yes);
    for (auto key : w.maybe) out.maybe.insert(key);
    for (auto& l : w.leaves) out.leaves.push_back(std::move(l));
  }
  for (auto key : out.yes) out.maybe.erase(key);
  out.visited = shared.visited.load();
  out.exhausted = shared.exhausted.load();
  return out;
}

DescentResult run_descent(const CoverTree& tree, const Line& line, const CountOptions& options, bool collect_leaves) {
  line.validate();
  if (tree.px < 1 || tree.py < 1) throw std::invalid_argument("cover tree: empty partition");
  if (tree.px * tree.py >= (Integer(1) << 63)) throw std::invalid_argument("partition too fine to index");
  const Frame frame = make_frame(tree, line);
  try {
    return descend<CI>(tree, frame, line.slope, options, collect_leaves);
  } catch (const Overflow&) {
    return descend<Integer>(tree, frame, line.slope, options, collect_leaves);
  }
}

}  // namespace

CoverCount count_line_cells(const CoverTree& tree, const Line& line, std::size_t k, PartitionKind partition,
                            const CountOptions& options) {
  DescentResult r = run_descent(tree, line, options, false);
  CoverCount c;
  c.k = k;
  c.partition = partition;
  c.count_lower = r.yes.size();
  c.count_upper = r.yes.size() + r.maybe.size();
  c.nodes_visited = r.visited;
  if (r.exhausted) {
    c.complete = false;
    c.count_upper = tree.px * tree.py;
    throw ResourceExhausted("node budget of " + std::to_string(options.budget) + " exhausted at k=" +
                                std::to_string(k),
                            c);
  }
  return c;
}

CoverCount count_line_cells(const Target& target, const Line& line, std::size_t k, PartitionKind partition,
                            const CountOptions& options) {
  return count_line_cells(cover_tree(target, k, partition), line, k, partition, options);
}

std::vector<PairWord> tree_leaves_meeting(const CoverTree& tree, const Line& line, const CountOptions& options) {
  DescentResult r = run_descent(tree, line, options, true);
  if (r.exhausted) throw ResourceExhausted("node budget exhausted", CoverCount{});
  std::sort(r.leaves.begin(), r.leaves.end());
  return r.leaves;
}

// ---------------------------------------------------------------- estimates

namespace {

struct Fit {
  double slope, intercept, residual;
};

Fit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("boxdim_estimate: depths must differ");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (slope * x[i] + intercept);
    ss += e * e;
  }
  return {slope, intercept, std::sqrt(ss / n)};
}

double log_count(const Integer& z) {
  // log of a possibly huge integer
  const std::size_t bits = bit_length(z);
  if (bits < 1000) return std::log(z.convert_to<double>());
  const std::size_t shift = bits - 64;
  return std::log(Integer(z >> shift).convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

}  // namespace

SlopeEstimate boxdim_estimate(const std::vector<CoverCount>& counts, double base) {
  if (counts.size() < 3) throw std::invalid_argument("boxdim_estimate: need at least three depths");
  if (!(base > 1)) throw std::invalid_argument("boxdim_estimate: base must exceed 1");
  bool all_zero = true, any_zero = false;
  for (const auto& c : counts) {
    all_zero = all_zero && c.count_upper == 0;
    any_zero = any_zero || c.count_lower == 0 || c.count_upper == 0;
  }
  if (all_zero) throw UndefinedEstimate("boxdim_estimate: every count is zero");
  if (any_zero) throw std::invalid_argument("boxdim_estimate: a count is zero");
  std::vector<double> x, lo, hi;
  SlopeEstimate e;
  e.k_min = counts.front().k;
  e.k_max = counts.front().k;
  for (const auto& c : counts) {
    x.push_back(static_cast<double>(c.k) * std::log(base));
    lo.push_back(log_count(c.count_lower));
    hi.push_back(log_count(c.count_upper));
    e.k_min = std::min(e.k_min, c.k);
    e.k_max = std::max(e.k_max, c.k);
  }
  const Fit fu = least_squares(x, hi);
  const Fit fl = least_squares(x, lo);
  e.slope = fu.slope;
  e.slope_upper = fu.slope;
  e.slope_lower = fl.slope;
  e.intercept = fu.intercept;
  e.residual = fu.residual;
  return e;
}

namespace {

Verdict verify_impl(const Target& target, const Line& line, std::size_t k_min, std::size_t k_max,
                    const Enclosure& bound, std::string bound_text, double slack, PartitionKind partition,
                    const CountOptions& options) {
  if (k_max < k_min + 2) throw std::invalid_argument("verify_slice_bound: need at least three depths");
  if (!(slack >= 0)) throw std::invalid_argument("verify_slice_bound: slack must be nonnegative");
  std::vector<CoverCount> counts;
  std::int64_t base = 2;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const CoverTree tree = cover_tree(target, k, partition);
    base = tree.base;
    counts.push_back(count_line_cells(tree, line, k, partition, options));
  }
  return judge_slice_counts(std::move(counts), static_cast<double>(base), bound, std::move(bound_text), slack);
}

}  // namespace

Verdict judge_slice_counts(std::vector<CoverCount> counts, double base, const Enclosure& bound, std::string bound_text,
                           double slack) {
  if (!(slack >= 0)) throw std::invalid_argument("judge_slice_counts: slack must be nonnegative");
  Verdict v;
  v.bound = bound;
  v.bound_text = std::move(bound_text);
  v.slack = slack;
  v.counts = std::move(counts);
  v.estimate = boxdim_estimate(v.counts, base);
  v.pass = v.estimate.slope <= to_double(bound.hi) + slack;
  return v;
}

Verdict verify_slice_bound(const Target& target, const Line& line, std::size_t k_min, std::size_t k_max,
                           const LogExpr& bound, double slack, PartitionKind partition, const CountOptions& options) {
  return verify_impl(target, line, k_min, k_max, bound.enclosure(), bound.to_string(), slack, partition, options);
}

Verdict verify_slice_bound(const Target& target, const Line& line, std::size_t k_min, std::size_t k_max,
                           const DimValue& bound, double slack, PartitionKind partition, const CountOptions& options) {
  return verify_impl(target, line, k_min, k_max, bound.enclosure, bound.text(), slack, partition, options);
}

// ---------------------------------------------------------------- intersections

namespace {

// Rectangle widths of g(F) at depth d, as (x-extent, y-extent).
std::pair<Rational, Rational> image_cell_size(const Carpet& F, const AffinePlaneMap& g, std::size_t d) {
  const Rational wm = Rational(1) / Rational(ipow(F.m, static_cast<unsigned>(d)));
  const Rational wn = Rational(1) / Rational(ipow(F.n, static_cast<unsigned>(d)));
  const Rational a = abs(g.a), dd = abs(g.d);
  if (g.orientation == Orientation::Diagonal) return {a * wm, dd * wn};
  return {a * wn, dd * wm};
}

template <class Fn>
void for_each_image_rect(const Carpet& F, const AffinePlaneMap& g, std::size_t depth, const Rect* window, Fn&& fn) {
  struct Node {
    Integer X, Y;
    std::size_t p;
  };
  std::vector<Node> stack{{0, 0, 0}};
  std::vector<Integer> mp{1}, np{1};
  for (std::size_t p = 0; p < depth; ++p) {
    mp.push_back(mp.back() * F.m);
    np.push_back(np.back() * F.n);
  }
  while (!stack.empty()) {
    Node nd = std::move(stack.back());
    stack.pop_back();
    const Rect r{Rational(nd.X, mp[nd.p]), Rational(nd.X + 1, mp[nd.p]), Rational(nd.Y, np[nd.p]),
                 Rational(nd.Y + 1, np[nd.p])};
    const Rect img = g.apply(r);
    if (window && !window->intersects(img)) continue;
    if (nd.p == depth) {
      fn(img);
      continue;
    }
    for (auto it = F.digits.rbegin(); it != F.digits.rend(); ++it) {
      stack.push_back({nd.X * F.m + it->x, nd.Y * F.n + it->y, nd.p + 1});
    }
  }
}

std::size_t matched_depth(const Carpet& F, const AffinePlaneMap& g, const Rational& side) {
  for (std::size_t d = 0; d < 4096; ++d) {
    const auto [w, h] = image_cell_size(F, g, d);
    if (w <= side && h <= side) return d;
  }
  throw std::invalid_argument("matched depth out of range");
}

// Half-open cells of side 1/W (last one closed) met by the closed interval [lo, hi].
std::optional<std::pair<std::int64_t, std::int64_t>> cell_range(const Rational& lo, const Rational& hi,
                                                                std::int64_t W) {
  if (hi < 0 || lo > 1) return std::nullopt;
  Integer a = lo <= 0 ? Integer(0) : floor(lo * W);
  Integer b = floor(hi * W);
  if (a > W - 1) a = W - 1;
  if (b > W - 1) b = W - 1;
  return std::make_pair(a.convert_to<std::int64_t>(), b.convert_to<std::int64_t>());
}

}  // namespace

std::vector<std::pair<std::int64_t, std::int64_t>> image_cover_cells(const Carpet& F, const AffinePlaneMap& g,
                                                                     std::size_t k) {
  F.validate();
  g.validate();
  if (k > 40) throw std::invalid_argument("image_cover_cells: k too large");
  const std::int64_t W = std::int64_t{1} << k;
  const std::size_t d = matched_depth(F, g, Rational(1, W));
  const Rect unit{0, 1, 0, 1};
  std::set<std::pair<std::int64_t, std::int64_t>> cells;
  for_each_image_rect(F, g, d, &unit, [&](const Rect& img) {
    const auto xr = cell_range(img.x0, img.x1, W);
    const auto yr = cell_range(img.y0, img.y1, W);
    if (!xr || !yr) return;
    for (std::int64_t i = xr->first; i <= xr->second; ++i) {
      for (std::int64_t j = yr->first; j <= yr->second; ++j) cells.insert({i, j});
    }
  });
  return {cells.begin(), cells.end()};
}

CoverCount intersect_cover_count(const Carpet& F, const AffinePlaneMap& g, const Carpet& E, std::size_t k) {
  E.validate();
  const auto cells = image_cover_cells(F, g, k);
  const Integer W = Integer(1) << k;
  const std::size_t e = matched_depth(E, AffinePlaneMap::identity(), Rational(1, W));
  std::vector<Integer> mp{1}, np{1};
  for (std::size_t p = 0; p < e; ++p) {
    mp.push_back(mp.back() * E.m);
    np.push_back(np.back() * E.n);
  }
  // Closed [X/A, (X+1)/A] meets the half-open cell [i/W, (i+1)/W) (closed when last).
  auto meets = [&](const Integer& X, const Integer& A, std::int64_t i) {
    const bool last = i == W - 1;
    const Integer lhs = X * W, rhs = Integer(i + 1) * A;
    const bool left_ok = last ? lhs <= rhs : lhs < rhs;
    return left_ok && (X + 1) * W >= Integer(i) * A;
  };
  std::uint64_t count = 0, visited = 0;
  for (const auto& [i, j] : cells) {
    struct Node {
      Integer X, Y;
      std::size_t p;
    };
    std::vector<Node> stack{{0, 0, 0}};
    bool found = false;
    while (!stack.empty() && !found) {
      Node nd = std::move(stack.back());
      stack.pop_back();
      ++visited;
      if (!meets(nd.X, mp[nd.p], i) || !meets(nd.Y, np[nd.p], j)) continue;
      if (nd.p == e) {
        found = true;
        break;
      }
      for (const auto& dg : E.digits) stack.push_back({nd.X * E.m + dg.x, nd.Y * E.n + dg.y, nd.p + 1});
    }
    count += found;
  }
  CoverCount c;
  c.k = k;
  c.partition = PartitionKind::Dyadic;
  c.count_lower = c.count_upper = count;
  c.nodes_visited = visited;
  return c;
}

InclusionResult cover_inclusion(const AffinePlaneMap& g, const Carpet& F, const Carpet& E, std::size_t k,
                                std::size_t slack_cells) {
  F.validate();
  E.validate();
  g.validate();
  InclusionResult out;
  const auto [w, h] = image_cell_size(F, g, k);
  std::size_t j = 0;
  Integer W = 1, H = 1;
  while (Rational(1) / Rational(W) > w || Rational(1) / Rational(H) > h) {
    W *= E.m;
    H *= E.n;
    ++j;
    if (j > 60) throw std::invalid_argument("cover_inclusion: E depth out of range");
  }
  if (W * H >= (Integer(1) << 62)) throw std::invalid_argument("cover_inclusion: grid too fine");
  out.e_depth = j;
  const std::int64_t Wi = W.convert_to<std::int64_t>(), Hi = H.convert_to<std::int64_t>();

  // allowed[y] = bitmask of x digits in row y of E
  std::vector<std::uint64_t> allowed(static_cast<std::size_t>(E.n), 0);
  if (E.m > 64) throw std::invalid_argument("cover_inclusion: m too large");
  for (const auto& d : E.digits) allowed[static_cast<std::size_t>(d.y)] |= std::uint64_t{1} << d.x;
  auto member = [&](std::int64_t x, std::int64_t y) {
    if (x < 0 || y < 0 || x >= Wi || y >= Hi) return false;
    for (std::size_t p = 0; p < j; ++p) {
      const auto dx = x % E.m, dy = y % E.n;
      if (!((allowed[static_cast<std::size_t>(dy)] >> dx) & 1)) return false;
      x /= E.m;
      y /= E.n;
    }
    return true;
  };
  const auto s = static_cast<std::int64_t>(slack_cells);
  auto covered = [&](std::int64_t x, std::int64_t y) {
    if (member(x, y)) return true;
    for (std::int64_t a = x - s; a <= x + s; ++a) {
      for (std::int64_t b = y - s; b <= y + s; ++b) {
        if (member(a, b)) return true;
      }
    }
    return false;
  };

  for_each_image_rect(F, g, k, nullptr, [&](const Rect& img) {
    if (!out.included) return;
    ++out.rectangles_checked;
    const std::int64_t i0 = floor(img.x0 * W).convert_to<std::int64_t>();
    const std::int64_t i1 = ceil(img.x1 * W).convert_to<std::int64_t>() - 1;
    const std::int64_t j0 = floor(img.y0 * H).convert_to<std::int64_t>();
    const std::int64_t j1 = ceil(img.y1 * H).convert_to<std::int64_t>() - 1;
    for (std::int64_t x = i0; x <= i1 && out.included; ++x) {
      for (std::int64_t y = j0; y <= j1; ++y) {
        if (!covered(x, y)) {
          out.included = false;
          out.witness = img;
          break;
        }
      }
    }
  });
  return out;
}

}  // namespace carpetslice
