#include "carpetslice/carpets.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace carpetslice {

Carpet Carpet::make(std::int64_t m, std::int64_t n, std::vector<DigitPair> digits) {
  std::sort(digits.begin(), digits.end());
  digits.erase(std::unique(digits.begin(), digits.end()), digits.end());
  Carpet c{m, n, std::move(digits)};
  c.validate();
  return c;
}

Carpet Carpet::full(std::int64_t m, std::int64_t n) {
  std::vector<DigitPair> d;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) d.push_back({i, j});
  }
  return make(m, n, std::move(d));
}

void Carpet::validate() const {
  if (n < 2 || m <= n) throw std::invalid_argument("carpet exponents need m > n >= 2");
  if (digits.empty()) throw std::invalid_argument("carpet digit set is empty");
  std::set<int> is, js;
  for (const auto& d : digits) {
    if (d.x < 0 || d.x >= m || d.y < 0 || d.y >= n) {
      throw std::invalid_argument("digit pair [" + std::to_string(d.x) + ", " + std::to_string(d.y) +
                                  "] out of range for exponents (" + std::to_string(m) + ", " +
                                  std::to_string(n) + ")");
    }
    is.insert(d.x);
    js.insert(d.y);
  }
  if (is.size() < 2 || js.size() < 2) {
    throw std::invalid_argument("carpet digits lie on a single vertical or horizontal line");
  }
  if (!std::is_sorted(digits.begin(), digits.end()) ||
      std::adjacent_find(digits.begin(), digits.end()) != digits.end()) {
    throw std::invalid_argument("carpet digits must be sorted and unique");
  }
}

bool Carpet::contains(int i, int j) const {
  return std::binary_search(digits.begin(), digits.end(), DigitPair{i, j});
}

std::vector<std::vector<int>> fibers(const Carpet& c) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(c.n));
  for (const auto& d : c.digits) out[static_cast<std::size_t>(d.y)].push_back(d.x);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<int> nonempty_rows(const Carpet& c) {
  std::set<int> s;
  for (const auto& d : c.digits) s.insert(d.y);
  return {s.begin(), s.end()};
}

std::vector<int> nonempty_columns(const Carpet& c) {
  std::set<int> s;
  for (const auto& d : c.digits) s.insert(d.x);
  return {s.begin(), s.end()};
}

DimensionReport dims(const Carpet& c, unsigned prec) {
  c.validate();
  const auto fib = fibers(c);
  const auto R = static_cast<std::int64_t>(nonempty_rows(c).size());
  const auto total = static_cast<std::int64_t>(c.digits.size());
  std::int64_t gmax = 0, gmin = total;
  for (const auto& f : fib) {
    if (f.empty()) continue;
    gmax = std::max<std::int64_t>(gmax, static_cast<std::int64_t>(f.size()));
    gmin = std::min<std::int64_t>(gmin, static_cast<std::int64_t>(f.size()));
  }
  DimensionReport rep;
  rep.uniform_fibers = gmax == gmin;
  const LogExpr p2 = LogExpr::log_ratio(R, c.n);
  const LogExpr box = p2 + LogExpr::log_ratio(total, c.m) - LogExpr::log_ratio(R, c.m);
  rep.dim_p2 = DimValue::of(p2, prec);
  rep.dim_star = DimValue::of(p2 + LogExpr::log_ratio(gmax, c.m), prec);
  rep.dim_box = DimValue::of(box, prec);
  if (rep.uniform_fibers) {
    rep.dim_hausdorff = DimValue::of(box, prec);
  } else {
    // log_n( sum_j |Gamma_j|^{log n / log m} ), each term increasing in the exponent.
    const Enclosure expo = log_ratio_enclosure(c.n, c.m, prec);
    Enclosure sum = Enclosure::exact(0);
    for (const auto& f : fib) {
      if (f.empty()) continue;
      sum = sum + pow_enclosure(Enclosure::exact(Rational(static_cast<std::int64_t>(f.size()))), expo, prec);
    }
    const Enclosure num = log_enclosure(sum, prec);
    const Enclosure den = log_enclosure(Integer(c.n), prec);
    rep.dim_hausdorff = {std::nullopt, {num.lo / den.hi, num.hi / den.lo}};
  }
  return rep;
}

std::size_t approximate_square_x_depth(std::int64_t m, std::int64_t n, std::size_t k) {
  const Integer target = ipow(n, static_cast<unsigned>(k));
  std::size_t l = 0;
  Integer p = m;
  while (p <= target) {
    ++l;
    p *= m;
  }
  return l;
}

Integer approximate_square_count(const Carpet& c, std::size_t k) {
  const std::size_t l = approximate_square_x_depth(c.m, c.n, k);
  const auto rows = static_cast<std::int64_t>(nonempty_rows(c).size());
  const auto total = static_cast<std::int64_t>(c.digits.size());
  Integer count = 1;
  for (std::size_t p = 0; p < k; ++p) count *= p < l ? total : rows;
  return count;
}

IncommensurabilityVerdict is_incommensurable(const Carpet& F, const Carpet& E) {
  const std::pair<const char*, std::int64_t> a[] = {{"m1", F.m}, {"n1", F.n}};
  const std::pair<const char*, std::int64_t> b[] = {{"m2", E.m}, {"n2", E.n}};
  // order: (m1,m2), (m1,n2), (n1,m2), (n1,n2)
  IncommensurabilityVerdict v;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (multiplicatively_dependent(x.second, y.second)) {
        v.incommensurable = false;
        v.witness = std::make_pair(std::string(x.first), std::string(y.first));
        v.witness_values = std::make_pair(x.second, y.second);
        return v;
      }
    }
  }
  return v;
}

BoundResult bound_slice_star(const Carpet& F) {
  const DimensionReport d = dims(F);
  BoundResult out;
  out.value = clamp_nonneg(*d.dim_star.exact - 1);
  if (multiplicatively_dependent(F.m, F.n)) {
    out.hypothesis_ok = false;
    out.warning = "log m / log n is rational";
  }
  return out;
}

DimValue bound_slice_hausdorff(const Carpet& F, unsigned prec) {
  const DimensionReport d = dims(F, prec);
  if (d.dim_hausdorff.exact) return DimValue::of(clamp_nonneg(*d.dim_hausdorff.exact - 1), prec);
  Enclosure e = d.dim_hausdorff.enclosure - Enclosure::exact(1);
  if (e.hi <= 0) return DimValue::of(LogExpr(0), prec);
  if (e.lo < 0) e.lo = 0;
  return {std::nullopt, e};
}

namespace {

std::vector<LogExpr> fiber_terms(const std::vector<std::vector<int>>& fam, std::int64_t m) {
  std::vector<LogExpr> out;
  for (const auto& f : fam) {
    if (!f.empty()) out.push_back(LogExpr::log_ratio(static_cast<std::int64_t>(f.size()), m));
  }
  return out;
}

}  // namespace

BoundResult bound_intersection(const Carpet& F, const Carpet& E, Orientation orientation) {
  F.validate();
  E.validate();
  BoundResult out;
  const auto verdict = is_incommensurable(F, E);
  if (!verdict.incommensurable) {
    out.hypothesis_ok = false;
    out.warning = "carpets are not incommensurable (" + verdict.witness->first + ", " + verdict.witness->second + ")";
  }
  const auto gam = fiber_terms(fibers(F), F.m);
  const auto lam = fiber_terms(fibers(E), E.m);
  const LogExpr p2F = LogExpr::log_ratio(static_cast<std::int64_t>(nonempty_rows(F).size()), F.n);
  const LogExpr p2E = LogExpr::log_ratio(static_cast<std::int64_t>(nonempty_rows(E).size()), E.n);
  if (orientation == Orientation::Diagonal) {
    const LogExpr fib = clamp_nonneg(max_of(gam) + max_of(lam) - 1);
    out.value = fib + clamp_nonneg(p2F + p2E - 1);
  } else {
    out.value = clamp_nonneg(max_of(gam) + p2E - 1) + clamp_nonneg(p2F + max_of(lam) - 1);
  }
  return out;
}

LogExpr bound_product_slice(const std::vector<std::vector<int>>& gammas,
                            const std::vector<std::vector<int>>& lambdas, std::int64_t m1, std::int64_t m2,
                            const std::optional<RowWeights>& weights) {
  if (gammas.empty() || lambdas.empty()) throw std::invalid_argument("empty fiber family");
  for (const auto* fam : {&gammas, &lambdas}) {
    for (const auto& f : *fam) {
      if (f.empty()) throw std::invalid_argument("empty fiber");
    }
  }
  const auto gam = fiber_terms(gammas, m1);
  const auto lam = fiber_terms(lambdas, m2);
  if (!weights) return clamp_nonneg(max_of(gam) + max_of(lam) - 1);
  if (weights->alpha1.size() != gam.size() || weights->alpha2.size() != lam.size()) {
    throw std::invalid_argument("weight vectors must match the fiber families");
  }
  LogExpr acc = -1;
  for (const auto& [alpha, terms] : {std::pair{&weights->alpha1, &gam}, std::pair{&weights->alpha2, &lam}}) {
    Rational total = 0;
    for (std::size_t i = 0; i < terms->size(); ++i) {
      if ((*alpha)[i] < 0) throw std::invalid_argument("negative weight");
      total += (*alpha)[i];
      acc += (*terms)[i] * (*alpha)[i];
    }
    if (total != 1) throw std::invalid_argument("weights must sum to 1");
  }
  return clamp_nonneg(acc);
}

void AffinePlaneMap::validate() const {
  if (a == 0 || d == 0) throw std::invalid_argument("affine map is not invertible");
}

Rect AffinePlaneMap::apply(const Rect& r) const {
  validate();
  const Rational& sx0 = orientation == Orientation::Diagonal ? r.x0 : r.y0;
  const Rational& sx1 = orientation == Orientation::Diagonal ? r.x1 : r.y1;
  const Rational& sy0 = orientation == Orientation::Diagonal ? r.y0 : r.x0;
  const Rational& sy1 = orientation == Orientation::Diagonal ? r.y1 : r.x1;
  Rational x0 = a * sx0 + tx, x1 = a * sx1 + tx;
  Rational y0 = d * sy0 + ty, y1 = d * sy1 + ty;
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return {x0, x1, y0, y1};
}

namespace {

Rational truncated_value(const SymbolSequence& s, std::int64_t base, std::size_t depth, bool& exact) {
  if (s.periodic_form()) return periodic_expansion_value(s, base);
  exact = false;
  Integer num = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    const int d = s.at(i);
    if (d < 0 || d >= base) throw std::invalid_argument("digit out of range for base");
    num = num * base + d;
  }
  return Rational(num, ipow(base, static_cast<unsigned>(depth)));
}

std::optional<Rect> clip(const Rect& r, const Rational& lo, const Rational& hi) {
  Rect c{std::max(r.x0, lo), std::min(r.x1, hi), std::max(r.y0, lo), std::min(r.y1, hi)};
  if (c.x0 > c.x1 || c.y0 > c.y1) return std::nullopt;
  return c;
}

}  // namespace

RectCover miniset_cover(const Carpet& c, const DigitPoint& x, std::size_t k, std::size_t window_depth) {
  c.validate();
  const std::size_t dx = k + window_depth;
  // smallest dy with n^dy >= m^dx
  const Integer mx = ipow(c.m, static_cast<unsigned>(dx));
  std::size_t dy = 0;
  for (Integer p = 1; p < mx; p *= c.n) ++dy;
  dy = std::max(dy, dx);

  RectCover out;
  const Rational scale(ipow(c.m, static_cast<unsigned>(k)));
  const Rational cx = truncated_value(x.x, c.m, dx + 2, out.exact_center);
  const Rational cy = truncated_value(x.y, c.n, dy + 2, out.exact_center);
  const Rational radius = 1 / scale;
  const Rect window{cx - radius, cx + radius, cy - radius, cy + radius};
  const auto rows = nonempty_rows(c);

  struct Node {
    Integer X, Y;
    std::size_t depth;
  };
  std::vector<Node> stack{{0, 0, 0}};
  while (!stack.empty()) {
    const Node nd = stack.back();
    stack.pop_back();
    const std::size_t px = std::min(nd.depth, dx);
    const Integer W = ipow(c.m, static_cast<unsigned>(px));
    const Integer H = ipow(c.n, static_cast<unsigned>(nd.depth));
    const Rect r{Rational(nd.X, W), Rational(nd.X + 1, W), Rational(nd.Y, H), Rational(nd.Y + 1, H)};
    if (!r.intersects(window)) continue;
    if (nd.depth == dy) {
      const Rect img{scale * (r.x0 - cx), scale * (r.x1 - cx), scale * (r.y0 - cy), scale * (r.y1 - cy)};
      if (auto cl = clip(img, -1, 1)) out.rects.push_back(*cl);
      continue;
    }
    if (nd.depth < dx) {
      for (const auto& d : c.digits) stack.push_back({nd.X * c.m + d.x, nd.Y * c.n + d.y, nd.depth + 1});
    } else {
      for (int j : rows) stack.push_back({nd.X, nd.Y * c.n + j, nd.depth + 1});
    }
  }
  out.cell_width = scale / Rational(ipow(c.m, static_cast<unsigned>(dx)));
  out.cell_height = scale / Rational(ipow(c.n, static_cast<unsigned>(dy)));
  return out;
}

std::vector<std::pair<Rational, Rational>> digit_set_cover(
    std::int64_t m, std::size_t depth, const std::function<const std::vector<int>&(std::size_t)>& digits) {
  std::vector<std::pair<Integer, Integer>> merged;  // numerators over m^depth
  std::vector<int> sorted_digits;
  // Depth-first in increasing digit order yields the intervals sorted.
  std::function<void(std::size_t, const Integer&)> rec = [&](std::size_t p, const Integer& num) {
    if (p == depth) {
      if (!merged.empty() && merged.back().second == num) {
        merged.back().second = num + 1;
      } else {
        merged.emplace_back(num, num + 1);
      }
      return;
    }
    std::vector<int> ds = digits(p);
    std::sort(ds.begin(), ds.end());
    for (int d : ds) rec(p + 1, num * m + d);
  };
  rec(0, 0);
  const Integer den = ipow(m, static_cast<unsigned>(depth));
  std::vector<std::pair<Rational, Rational>> out;
  out.reserve(merged.size());
  for (const auto& [a, b] : merged) out.emplace_back(Rational(a, den), Rational(b, den));
  return out;
}

RectCover omega_s_set_cover(const SymbolSequence& omega, const Enclosure& n_pow_s, const Carpet& c,
                            const Rational& zx, const Rational& zy, std::size_t depth) {
  c.validate();
  if (depth < 1) throw std::invalid_argument("omega_s_set_cover: depth must be at least 1");
  if (n_pow_s.lo <= 0) throw std::invalid_argument("n^s enclosure must be positive");
  const auto fib = fibers(c);
  const auto rows = nonempty_rows(c);
  for (std::size_t p = 0; p < depth; ++p) {
    const int w = omega.at(p);
    if (w < 0 || w >= c.n || fib[static_cast<std::size_t>(w)].empty()) {
      throw std::invalid_argument("omega symbol " + std::to_string(w) + " is not a nonempty row");
    }
  }
  const auto xs = digit_set_cover(c.m, depth, [&](std::size_t p) -> const std::vector<int>& {
    return fib[static_cast<std::size_t>(omega.at(p))];
  });
  const Integer mx = ipow(c.m, static_cast<unsigned>(depth));
  std::size_t dy = 0;
  for (Integer p = 1; p < mx; p *= c.n) ++dy;
  const auto ys = digit_set_cover(c.n, dy, [&](std::size_t) -> const std::vector<int>& { return rows; });

  RectCover out;
  out.cell_width = Rational(1, mx);
  out.cell_height = n_pow_s.hi / Rational(ipow(c.n, static_cast<unsigned>(dy)));
  for (const auto& [x0, x1] : xs) {
    for (const auto& [y0, y1] : ys) {
      const Rational a = y0 + zy, b = y1 + zy;
      const Rational lo = std::min(n_pow_s.lo * a, n_pow_s.hi * a);
      const Rational hi = std::max(n_pow_s.lo * b, n_pow_s.hi * b);
      if (auto cl = clip(Rect{x0 + zx, x1 + zx, lo, hi}, -2, 2)) out.rects.push_back(*cl);
    }
  }
  return out;
}

Rational n_pow_frac_k_log(std::int64_t m, std::int64_t n, std::size_t k) {
  const Integer mk = ipow(m, static_cast<unsigned>(k));
  Integer p = 1;
  while (p * n <= mk) p *= n;
  return Rational(mk, p);
}

bool rect_union_covers(const Rect& r, const std::vector<Rect>& cover) {
  std::vector<const Rect*> rel;
  for (const auto& c : cover) {
    if (c.intersects(r)) rel.push_back(&c);
  }
  if (rel.empty()) return false;
  std::vector<Rational> xs{r.x0, r.x1}, ys{r.y0, r.y1};
  for (const Rect* c : rel) {
    for (const auto& v : {c->x0, c->x1}) {
      if (v > r.x0 && v < r.x1) xs.push_back(v);
    }
    for (const auto& v : {c->y0, c->y1}) {
      if (v > r.y0 && v < r.y1) ys.push_back(v);
    }
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  // Elementary cells; a degenerate side contributes the single coordinate.
  auto cells = [](const std::vector<Rational>& v) {
    std::vector<std::pair<Rational, Rational>> out;
    if (v.size() == 1) out.emplace_back(v[0], v[0]);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) out.emplace_back(v[i], v[i + 1]);
    return out;
  };
  for (const auto& [xa, xb] : cells(xs)) {
    for (const auto& [ya, yb] : cells(ys)) {
      bool covered = false;
      for (const Rect* c : rel) {
        if (c->x0 <= xa && xb <= c->x1 && c->y0 <= ya && yb <= c->y1) {
          covered = true;
          break;
        }
      }
      if (!covered) return false;
    }
  }
  return true;
}

std::vector<Rect> inflate(const std::vector<Rect>& rects, const Rational& dx, const Rational& dy) {
  std::vector<Rect> out;
  out.reserve(rects.size());
  for (const auto& r : rects) out.push_back({r.x0 - dx, r.x1 + dx, r.y0 - dy, r.y1 + dy});
  return out;
}

}  // namespace carpetslice
