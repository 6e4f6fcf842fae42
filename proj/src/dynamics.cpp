#include "carpetslice/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace carpetslice {

Rational t_map(std::int64_t m, const Rational& x) { return frac(x * m); }

ExactPoint phi_t(const RotationPoint& t, const LogRatioAngle& angle, const ExactPoint& z) {
  const Rational x = in_shift_interval(angle, t) ? t_map(angle.m1, z.x) : z.x;
  return {x, t_map(angle.m2, z.y)};
}

SkewState u_map(const SkewState& s, const LogRatioAngle& angle) {
  return {phi_t(s.t, angle, s.z), rotate(angle, s.t), sigma_t(s.t, angle, s.omega), shift(s.eta, 1)};
}

ClosedFormReport u_iterate_closed_form(const ExactPoint& z, const RotationPoint& t, const LogRatioAngle& angle,
                                       std::size_t k) {
  require_unit(angle, t);
  ClosedFormReport rep;
  rep.r_k = r_k(t, angle, k);
  rep.closed_form = {frac(z.x * Rational(ipow(angle.m1, static_cast<unsigned>(rep.r_k)))),
                     frac(z.y * Rational(ipow(angle.m2, static_cast<unsigned>(k))))};
  SkewState s{z, t};
  for (std::size_t i = 0; i < k; ++i) s = u_map(s, angle);
  rep.iterated = s.z;
  rep.equal = rep.closed_form == rep.iterated;
  return rep;
}

// ---------------------------------------------------------------- measures on words

struct EmpiricalMeasure::Trie {
  struct Node {
    std::vector<std::pair<DigitPair, std::uint32_t>> children;  // sorted by symbol
    Rational weight;
  };
  std::vector<Node> nodes;

  std::optional<std::uint32_t> child(std::uint32_t n, const DigitPair& a) const {
    const auto& ch = nodes[n].children;
    auto it = std::lower_bound(ch.begin(), ch.end(), a,
                               [](const std::pair<DigitPair, std::uint32_t>& e, const DigitPair& s) { return e.first < s; });
    if (it == ch.end() || !(it->first == a)) return std::nullopt;
    return it->second;
  }
};

EmpiricalMeasure EmpiricalMeasure::from_weights(const std::vector<std::pair<PairWord, Rational>>& atoms) {
  if (atoms.empty()) throw std::invalid_argument("EmpiricalMeasure: no atoms");
  const std::size_t depth = atoms.front().first.size();
  Rational total = 0;
  auto trie = std::make_shared<Trie>();
  trie->nodes.push_back({});
  std::set<PairWord> seen;
  for (const auto& [w, p] : atoms) {
    if (w.size() != depth) throw std::invalid_argument("EmpiricalMeasure: words must share one depth");
    if (p < 0) throw std::invalid_argument("EmpiricalMeasure: negative weight");
    if (!seen.insert(w).second) throw std::invalid_argument("EmpiricalMeasure: repeated word");
    total += p;
    if (p == 0) continue;
    std::uint32_t n = 0;
    trie->nodes[0].weight += p;
    for (const auto& a : w) {
      auto c = trie->child(n, a);
      if (!c) {
        const auto idx = static_cast<std::uint32_t>(trie->nodes.size());
        auto& ch = trie->nodes[n].children;
        ch.insert(std::upper_bound(ch.begin(), ch.end(), a,
                                   [](const DigitPair& s, const std::pair<DigitPair, std::uint32_t>& e) {
                                     return s < e.first;
                                   }),
                  {a, idx});
        trie->nodes.push_back({});
        c = idx;
      }
      n = *c;
      trie->nodes[n].weight += p;
    }
  }
  if (total != 1) throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1");
  return EmpiricalMeasure(std::move(trie), 0, depth);
}

EmpiricalMeasure EmpiricalMeasure::uniform(const std::vector<PairWord>& words) {
  std::set<PairWord> distinct(words.begin(), words.end());
  if (distinct.empty()) throw std::invalid_argument("EmpiricalMeasure: no words");
  const Rational w(1, static_cast<long long>(distinct.size()));
  std::vector<std::pair<PairWord, Rational>> atoms;
  for (const auto& d : distinct) atoms.emplace_back(d, w);
  return from_weights(atoms);
}

std::size_t EmpiricalMeasure::depth() const { return depth_; }

Rational EmpiricalMeasure::mass(const PairWord& prefix) const {
  if (prefix.size() > depth_) return 0;
  std::uint32_t n = node_;
  for (const auto& a : prefix) {
    auto c = trie_->child(n, a);
    if (!c) return 0;
    n = *c;
  }
  return trie_->nodes[n].weight / trie_->nodes[node_].weight;
}

std::vector<std::pair<PairWord, Rational>> EmpiricalMeasure::atoms() const {
  std::vector<std::pair<PairWord, Rational>> out;
  const Rational root = trie_->nodes[node_].weight;
  PairWord path;
  auto rec = [&](auto&& self, std::uint32_t n) -> void {
    if (path.size() == depth_) {
      out.emplace_back(path, trie_->nodes[n].weight / root);
      return;
    }
    for (const auto& [a, c] : trie_->nodes[n].children) {
      path.push_back(a);
      self(self, c);
      path.pop_back();
    }
  };
  rec(rec, node_);
  return out;
}

Rational EmpiricalMeasure::total() const {
  Rational s = 0;
  for (const auto& [w, p] : atoms()) s += p;
  return s;
}

EmpiricalMeasure EmpiricalMeasure::conditioned(const DigitPair& a) const {
  if (depth_ == 0) throw std::invalid_argument("conditioning a depth-0 measure");
  auto c = trie_->child(node_, a);
  if (!c || trie_->nodes[*c].weight == 0) throw std::domain_error("conditioning on a zero-mass cylinder");
  return EmpiricalMeasure(trie_, *c, depth_ - 1);
}

std::string EmpiricalMeasure::view_key() const {
  std::ostringstream os;
  os << static_cast<const void*>(trie_.get()) << ':' << node_;
  return os.str();
}

std::pair<EmpiricalMeasure, PairWord> magnify(const EmpiricalMeasure& mu, const PairWord& x) {
  if (x.empty()) throw std::invalid_argument("magnify: empty word");
  return {mu.conditioned(x.front()), PairWord(x.begin() + 1, x.end())};
}

MicroState m_hat(const MicroState& s, const LogRatioAngle& angle) {
  auto [mu, x] = magnify(s.measure, s.point);
  return {std::move(mu), std::move(x), rotate(angle, s.t), shift(s.tau, 1), sigma_t(s.t, angle, s.omega),
          shift(s.eta, 1)};
}

Rational ChainDistribution::total() const {
  Rational s = 0;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

// ---------------------------------------------------------------- chains

std::vector<PairWord> slice_preimage(const CodedProduct& cp, const Line& line, std::size_t depth,
                                     const CountOptions& options) {
  if (depth < 1) throw std::invalid_argument("slice_preimage: depth must be at least 1");
  const CoverTree tree = cover_tree(cp, depth, PartitionKind::BaseGrid);
  std::vector<PairWord> words = tree_leaves_meeting(tree, line, options);
  // The tree stores no x digit where tau is 0; the coded product uses symbol 1 there.
  for (auto& w : words) {
    for (std::size_t p = 0; p < w.size(); ++p) {
      if (cp.tau.at(p) == 0) w[p].x = 1;
    }
  }
  std::sort(words.begin(), words.end());
  return words;
}

CpChain build_cp_chain(const std::vector<PairWord>& E, std::size_t n_k, const RotationPoint& t0,
                       const LogRatioAngle& angle, const SymbolSequence& omega0, const SymbolSequence& eta0) {
  if (E.empty()) throw std::invalid_argument("build_cp_chain: empty E");
  if (n_k < 1) throw std::invalid_argument("build_cp_chain: n_k must be at least 1");
  require_unit(angle, t0);
  std::map<PairWord, PairWord> reps;  // depth-n_k cylinder -> least word of E in it
  for (const auto& w : E) {
    if (w.size() < n_k) throw std::invalid_argument("build_cp_chain: words of E are shorter than n_k");
    PairWord u(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n_k));
    auto it = reps.find(u);
    if (it == reps.end()) {
      reps.emplace(std::move(u), w);
    } else if (w < it->second) {
      it->second = w;
    }
  }
  std::vector<PairWord> points;
  for (auto& [u, w] : reps) points.push_back(w);
  // Representatives may differ in depth; truncating to the shortest keeps one atom per cylinder.
  std::size_t depth = points.front().size();
  for (const auto& p : points) depth = std::min(depth, p.size());
  for (auto& p : points) p.resize(depth);

  CpChain chain;
  chain.mu_k = EmpiricalMeasure::uniform(points);
  const auto N = static_cast<long long>(points.size());
  const SymbolSequence tau0 = coding_sequence(t0, angle, n_k + 64);
  chain.p_k.n_k = chain.q_k.n_k = n_k;
  chain.p_k.support_size = chain.q_k.support_size = points.size();
  const Rational wp(1, N);
  const Rational wq(1, N * static_cast<long long>(n_k));
  chain.q_k.atoms.reserve(points.size() * n_k);
  for (const auto& x : points) {
    MicroState s{chain.mu_k, x, t0, tau0, omega0, eta0};
    chain.p_k.atoms.push_back({s, wp, 0});
    for (std::size_t i = 0; i < n_k; ++i) {
      chain.q_k.atoms.push_back({s, wq, i});
      if (i + 1 < n_k) s = m_hat(s, angle);
    }
  }
  return chain;
}

namespace {

double log_rational(const Rational& q) {
  auto lg = [](const Integer& z) {
    const std::size_t bits = msb(z) + 1;
    if (bits < 1000) return std::log(z.convert_to<double>());
    const std::size_t sh = bits - 64;
    return std::log(Integer(z >> sh).convert_to<double>()) + static_cast<double>(sh) * std::log(2.0);
  };
  return lg(numerator(q)) - lg(denominator(q));
}

double star_discrepancy(std::vector<std::pair<double, double>> pts) {
  // pts: (value in [0,1), weight); weights sum to 1
  std::sort(pts.begin(), pts.end());
  double before = 0, worst = 0;
  std::size_t i = 0;
  while (i < pts.size()) {
    const double v = pts[i].first;
    double here = 0;
    while (i < pts.size() && pts[i].first == v) here += pts[i++].second;
    worst = std::max({worst, std::abs(before - v), std::abs(before + here - v)});
    before += here;
  }
  return worst;
}

double unit_value(const LogRatioAngle& angle, const RotationPoint& t) {
  const double v = approx(angle, t);
  return v - std::floor(v);
}

}  // namespace

double entropy_H(const ChainDistribution& d, std::int64_t m2) {
  if (m2 < 2) throw std::invalid_argument("entropy_H: m2 must be at least 2");
  double h = 0;
  for (const auto& a : d.atoms) {
    if (a.state.point.empty()) throw std::domain_error("entropy_H: atom with an empty point");
    const Rational p = a.state.measure.mass(PairWord{a.state.point.front()});
    if (p == 0) throw std::domain_error("entropy_H: point cylinder has zero mass");
    h += to_double(a.weight) * -log_rational(p);
  }
  return h / std::log(static_cast<double>(m2));
}

double t_marginal_discrepancy(const ChainDistribution& d, const LogRatioAngle& angle) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(d.atoms.size());
  for (const auto& a : d.atoms) pts.emplace_back(unit_value(angle, a.state.t), to_double(a.weight));
  return star_discrepancy(std::move(pts));
}

double orbit_star_discrepancy(const RotationPoint& t0, const LogRatioAngle& angle, std::size_t horizon) {
  if (horizon == 0) throw std::invalid_argument("orbit_star_discrepancy: empty orbit");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(horizon);
  const double w = 1.0 / static_cast<double>(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    pts.emplace_back(unit_value(angle, {t0.q, t0.b + Integer(i)}), w);
  }
  return star_discrepancy(std::move(pts));
}

Rational adaptedness_residual(const ChainDistribution& d, std::size_t depth) {
  if (depth == 0) return 0;
  struct Group {
    const EmpiricalMeasure* measure = nullptr;
    Rational weight = 0;
    std::vector<const ChainAtom*> atoms;
  };
  constexpr std::size_t kSeqPrefix = 32;
  auto seq_key = [](const SymbolSequence& s) {
    std::string out;
    for (int v : s.prefix(kSeqPrefix)) out += std::to_string(v) + ",";
    return out;
  };
  std::map<std::string, Group> groups;
  for (const auto& a : d.atoms) {
    const std::string key = a.state.measure.view_key() + "|" + a.state.t.to_string() + "|" + seq_key(a.state.tau) +
                            "|" + seq_key(a.state.omega) + "|" + seq_key(a.state.eta);
    Group& g = groups[key];
    g.measure = &a.state.measure;
    g.weight += a.weight;
    g.atoms.push_back(&a);
  }
  Rational worst = 0;
  for (const auto& [key, g] : groups) {
    std::map<PairWord, Rational> lhs;
    std::set<PairWord> words;
    for (const ChainAtom* a : g.atoms) {
      const auto& x = a->state.point;
      for (std::size_t l = 1; l <= std::min(depth, x.size()); ++l) {
        PairWord w(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(l));
        lhs[w] += a->weight;
        words.insert(std::move(w));
      }
    }
    for (const auto& [x, p] : g.measure->atoms()) {
      for (std::size_t l = 1; l <= std::min(depth, x.size()); ++l) {
        words.insert(PairWord(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(l)));
      }
    }
    for (const auto& w : words) {
      auto it = lhs.find(w);
      const Rational left = it == lhs.end() ? Rational(0) : it->second;
      const Rational diff = abs(left - g.weight * g.measure->mass(w));
      if (diff > worst) worst = diff;
    }
  }
  return worst;
}

bool coding_consistent(const ChainDistribution& d, const LogRatioAngle& angle, std::size_t prefix) {
  for (const auto& a : d.atoms) {
    if (a.state.tau.prefix(prefix) != rotation_code_prefix(a.state.t, angle, prefix)) return false;
  }
  return true;
}

GenericityReport z_orbit_genericity(const RotationPoint& t, const LogRatioAngle& angle, const SymbolSequence& omega,
                                    const SymbolSequence& eta, const std::vector<Rational>& alpha1,
                                    const std::vector<Rational>& alpha2, std::size_t n) {
  if (n == 0) throw std::invalid_argument("z_orbit_genericity: N must be at least 1");
  require_unit(angle, t);
  std::vector<std::size_t> omega_hits(alpha1.size(), 0), eta_hits(alpha2.size(), 0), t_hits(10, 0);
  RotationPoint x = t;
  std::size_t r = 0;  // shifts applied to omega so far
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(omega.at(r));
    const auto b = static_cast<std::size_t>(eta.at(i));
    if (a < omega_hits.size()) ++omega_hits[a];
    if (b < eta_hits.size()) ++eta_hits[b];
    const Integer bucket = floor_of(angle, {x.q * 10, x.b * 10});
    ++t_hits[static_cast<std::size_t>(std::clamp<long long>(bucket.convert_to<long long>(), 0, 9))];
    if (in_shift_interval(angle, x)) ++r;
    x = rotate(angle, x);
  }
  GenericityReport rep;
  rep.n = n;
  const double dn = static_cast<double>(n);
  for (std::size_t a = 0; a < alpha1.size(); ++a) {
    rep.omega_deviation = std::max(rep.omega_deviation, std::abs(omega_hits[a] / dn - to_double(alpha1[a])));
  }
  for (std::size_t b = 0; b < alpha2.size(); ++b) {
    rep.eta_deviation = std::max(rep.eta_deviation, std::abs(eta_hits[b] / dn - to_double(alpha2[b])));
  }
  for (std::size_t j = 0; j < 10; ++j) rep.t_deviation = std::max(rep.t_deviation, std::abs(t_hits[j] / dn - 0.1));
  rep.t_discrepancy = orbit_star_discrepancy(t, angle, n);
  rep.max_deviation = std::max({rep.omega_deviation, rep.eta_deviation, rep.t_deviation});
  return rep;
}

std::size_t pi_image_grid_cells(const CodedProduct& cp, const PairWord& word) {
  const Rect r = pi_coded_cylinder(cp, word);
  const Integer G = ipow(cp.m2, static_cast<unsigned>(word.size()));
  auto span = [&](const Rational& lo, const Rational& hi) {
    Integer a = floor(lo * G), b = floor(hi * G);
    if (b > G - 1) b = G - 1;
    if (a > G - 1) a = G - 1;
    return static_cast<std::size_t>((b - a + 1).convert_to<long long>());
  };
  return span(r.x0, r.x1) * span(r.y0, r.y1);
}

}  // namespace carpetslice
