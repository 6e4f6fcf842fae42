#include "carpetslice/symbolic.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

namespace carpetslice {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct PeriodicData {
  std::vector<int> prefix;
  std::vector<int> period;
};

struct BernoulliData {
  std::vector<Rational> probabilities;
  // symbol i is emitted when the hash is below thresholds[i] (last one saturates)
  std::vector<std::uint64_t> thresholds;
  std::uint64_t seed;
  std::uint64_t seed_hash;
};

struct GeneratedData {
  std::function<int(std::uint64_t)> fn;
  std::string label;
};

}  // namespace

struct SymbolSequence::Impl {
  int alphabet_size;
  std::variant<PeriodicData, BernoulliData, GeneratedData> data;
};

SymbolSequence SymbolSequence::constant(int alphabet_size, int symbol) {
  return periodic(alphabet_size, {}, {symbol});
}

SymbolSequence SymbolSequence::periodic(int alphabet_size, std::vector<int> prefix,
                                        std::vector<int> period) {
  if (alphabet_size < 1) throw std::invalid_argument("alphabet size must be positive");
  if (period.empty()) throw std::invalid_argument("empty period word");
  for (const auto* w : {&prefix, &period}) {
    for (int s : *w) {
      if (s < 0 || s >= alphabet_size) {
        throw std::invalid_argument("symbol " + std::to_string(s) + " outside alphabet of size " +
                                    std::to_string(alphabet_size));
      }
    }
  }
  auto impl = std::make_shared<Impl>(Impl{alphabet_size, PeriodicData{std::move(prefix), std::move(period)}});
  return SymbolSequence(std::move(impl), 0);
}

SymbolSequence SymbolSequence::bernoulli(std::vector<Rational> probabilities, std::uint64_t seed) {
  if (probabilities.empty()) throw std::invalid_argument("empty probability vector");
  Rational total = 0;
  for (const auto& p : probabilities) {
    if (p < 0 || p > 1) throw std::invalid_argument("probability " + to_string(p) + " outside [0,1]");
    total += p;
  }
  if (total != 1) throw std::invalid_argument("probabilities sum to " + to_string(total) + ", not 1");
  BernoulliData data;
  Rational cumulative = 0;
  const Integer two64 = Integer(1) << 64;
  for (const auto& p : probabilities) {
    cumulative += p;
    const Integer t = floor(cumulative * Rational(two64));
    data.thresholds.push_back(t >= two64 ? ~std::uint64_t{0} : t.convert_to<std::uint64_t>());
  }
  data.probabilities = std::move(probabilities);
  data.seed = seed;
  data.seed_hash = splitmix64(seed);
  const int n = static_cast<int>(data.probabilities.size());
  auto impl = std::make_shared<Impl>(Impl{n, std::move(data)});
  return SymbolSequence(std::move(impl), 0);
}

SymbolSequence SymbolSequence::generated(int alphabet_size, std::function<int(std::uint64_t)> fn,
                                         std::string label) {
  if (alphabet_size < 1) throw std::invalid_argument("alphabet size must be positive");
  auto impl = std::make_shared<Impl>(Impl{alphabet_size, GeneratedData{std::move(fn), std::move(label)}});
  return SymbolSequence(std::move(impl), 0);
}

int SymbolSequence::alphabet_size() const { return impl_->alphabet_size; }

SymbolSequence::Kind SymbolSequence::kind() const {
  switch (impl_->data.index()) {
    case 0: return Kind::Periodic;
    case 1: return Kind::Bernoulli;
    default: return Kind::Generated;
  }
}

int SymbolSequence::at(std::uint64_t i) const {
  const std::uint64_t j = i + offset_;
  if (const auto* p = std::get_if<PeriodicData>(&impl_->data)) {
    if (j < p->prefix.size()) return p->prefix[j];
    return p->period[(j - p->prefix.size()) % p->period.size()];
  }
  if (const auto* b = std::get_if<BernoulliData>(&impl_->data)) {
    const std::uint64_t h = splitmix64(b->seed_hash ^ splitmix64(j));
    for (std::size_t s = 0; s + 1 < b->thresholds.size(); ++s) {
      if (h < b->thresholds[s]) return static_cast<int>(s);
    }
    // Skip trailing zero-probability symbols.
    for (std::size_t s = b->thresholds.size(); s-- > 0;) {
      if (b->probabilities[s] > 0) return static_cast<int>(s);
    }
    return 0;
  }
  const auto& g = std::get<GeneratedData>(impl_->data);
  const int s = g.fn(j);
  if (s < 0 || s >= impl_->alphabet_size) {
    throw std::logic_error("generator '" + g.label + "' emitted symbol outside its alphabet");
  }
  return s;
}

std::vector<int> SymbolSequence::prefix(std::size_t n) const {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = at(i);
  return out;
}

SymbolSequence SymbolSequence::shifted(std::uint64_t k) const { return SymbolSequence(impl_, offset_ + k); }

std::optional<SymbolSequence::PeriodicForm> SymbolSequence::periodic_form() const {
  const auto* p = std::get_if<PeriodicData>(&impl_->data);
  if (!p) return std::nullopt;
  PeriodicForm out;
  if (offset_ < p->prefix.size()) {
    out.prefix.assign(p->prefix.begin() + static_cast<std::ptrdiff_t>(offset_), p->prefix.end());
    out.period = p->period;
  } else {
    const std::size_t r = (offset_ - p->prefix.size()) % p->period.size();
    out.period.assign(p->period.begin() + static_cast<std::ptrdiff_t>(r), p->period.end());
    out.period.insert(out.period.end(), p->period.begin(), p->period.begin() + static_cast<std::ptrdiff_t>(r));
  }
  return out;
}

const std::vector<Rational>& SymbolSequence::probabilities() const {
  const auto* b = std::get_if<BernoulliData>(&impl_->data);
  if (!b) throw std::logic_error("not a Bernoulli sequence");
  return b->probabilities;
}

std::uint64_t SymbolSequence::seed() const {
  const auto* b = std::get_if<BernoulliData>(&impl_->data);
  if (!b) throw std::logic_error("not a Bernoulli sequence");
  return b->seed;
}

std::string SymbolSequence::label() const {
  if (const auto* g = std::get_if<GeneratedData>(&impl_->data)) return g->label;
  return kind() == Kind::Periodic ? "periodic" : "bernoulli";
}

Rational periodic_expansion_value(const SymbolSequence& seq, std::int64_t base) {
  const auto form = seq.periodic_form();
  if (!form) throw std::invalid_argument("exact expansion value needs a periodic sequence");
  Rational value = 0;
  Rational scale(1, base);
  for (int d : form->prefix) {
    value += scale * d;
    scale /= base;
  }
  Rational block = 0;
  Rational inner(1, base);
  for (int d : form->period) {
    block += inner * d;
    inner /= base;
  }
  // tail = scale * base * block / (1 - base^{-L})
  const Rational bl = rpow(Rational(base), -static_cast<int>(form->period.size()));
  value += scale * base * block / (1 - bl);
  return value;
}

DigitInterval pi_base_cylinder(std::int64_t m, const std::vector<int>& word) {
  if (m < 2) throw std::invalid_argument("base must be at least 2");
  Integer num = 0;
  for (int d : word) {
    if (d < 0 || d >= m) {
      throw std::invalid_argument("digit " + std::to_string(d) + " out of range for base " + std::to_string(m));
    }
    num = num * m + d;
  }
  const Integer den = ipow(m, static_cast<unsigned>(word.size()));
  return {m, word.size(), Rational(num, den), Rational(1, den)};
}

void CodedProduct::validate() const {
  if (m2 < 2 || m1 <= m2) throw std::invalid_argument("coded product needs m1 > m2 >= 2");
  if (tau.alphabet_size() != 2) throw std::invalid_argument("tau must be a binary sequence");
  if (gammas.empty() || lambdas.empty()) throw std::invalid_argument("fiber families must be nonempty");
  if (static_cast<std::size_t>(omega.alphabet_size()) > gammas.size()) {
    throw std::invalid_argument("omega alphabet exceeds the number of Gamma fibers");
  }
  if (static_cast<std::size_t>(eta.alphabet_size()) > lambdas.size()) {
    throw std::invalid_argument("eta alphabet exceeds the number of Lambda fibers");
  }
  auto check = [](const std::vector<std::vector<int>>& fam, std::int64_t m, const char* name) {
    for (const auto& f : fam) {
      if (f.empty()) throw std::invalid_argument(std::string("empty fiber in ") + name);
      for (int d : f) {
        if (d < 0 || d >= m) throw std::invalid_argument(std::string("digit out of range in ") + name);
      }
    }
  };
  check(gammas, m1, "Gamma");
  check(lambdas, m2, "Lambda");
}

std::vector<DigitPair> CodedProduct::allowed(std::size_t p, std::size_t r) const {
  const auto& lam = lambdas.at(static_cast<std::size_t>(eta.at(p)));
  std::vector<DigitPair> out;
  if (tau.at(p) == 1) {
    const auto& gam = gammas.at(static_cast<std::size_t>(omega.at(r)));
    out.reserve(gam.size() * lam.size());
    for (int a : gam) {
      for (int b : lam) out.push_back({a, b});
    }
  } else {
    for (int b : lam) out.push_back({1, b});
  }
  return out;
}

std::size_t ones_before(const SymbolSequence& tau, std::size_t k) {
  std::size_t r = 0;
  for (std::size_t i = 0; i < k; ++i) r += tau.at(i) == 1;
  return r;
}

Integer coded_product_count(const CodedProduct& cp, std::size_t k) {
  Integer count = 1;
  std::size_t r = 0;
  for (std::size_t p = 0; p < k; ++p) {
    count *= cp.lambdas.at(static_cast<std::size_t>(cp.eta.at(p))).size();
    if (cp.tau.at(p) == 1) {
      count *= cp.gammas.at(static_cast<std::size_t>(cp.omega.at(r))).size();
      ++r;
    }
  }
  return count;
}

std::vector<PairWord> coded_product_cylinders(const CodedProduct& cp, std::size_t k) {
  if (k < 1) throw std::invalid_argument("coded_product_cylinders: depth must be at least 1");
  cp.validate();
  std::vector<PairWord> words{PairWord{}};
  std::size_t r = 0;
  for (std::size_t p = 0; p < k; ++p) {
    const auto pairs = cp.allowed(p, r);
    if (cp.tau.at(p) == 1) ++r;
    std::vector<PairWord> next;
    next.reserve(words.size() * pairs.size());
    for (const auto& w : words) {
      for (const auto& d : pairs) {
        next.push_back(w);
        next.back().push_back(d);
      }
    }
    words = std::move(next);
  }
  return words;
}

bool is_coded_product_word(const CodedProduct& cp, const PairWord& word) {
  std::size_t r = 0;
  for (std::size_t p = 0; p < word.size(); ++p) {
    const auto pairs = cp.allowed(p, r);
    if (cp.tau.at(p) == 1) ++r;
    bool found = false;
    for (const auto& d : pairs) found = found || d == word[p];
    if (!found) return false;
  }
  return true;
}

Rect pi_coded_cylinder(const CodedProduct& cp, const PairWord& word) {
  if (!is_coded_product_word(cp, word)) throw std::invalid_argument("word is not a cylinder of the coded product");
  std::vector<int> xs, ys;
  for (std::size_t p = 0; p < word.size(); ++p) {
    if (cp.tau.at(p) == 1) xs.push_back(word[p].x);
    ys.push_back(word[p].y);
  }
  const DigitInterval ix = pi_base_cylinder(cp.m1, xs);
  const DigitInterval iy = pi_base_cylinder(cp.m2, ys);
  return {ix.lo(), ix.hi(), iy.lo(), iy.hi()};
}

double cylinder_entropy(const std::vector<double>& weights) {
  double total = 0, h = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("negative weight");
    total += w;
    if (w > 0) h -= w * std::log(w);
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights do not sum to 1");
  return h;
}

double cylinder_entropy(const std::vector<Rational>& weights) {
  Rational total = 0;
  std::vector<double> w;
  w.reserve(weights.size());
  for (const auto& q : weights) {
    if (q < 0) throw std::invalid_argument("negative weight");
    total += q;
    w.push_back(to_double(q));
  }
  if (total != 1) throw std::invalid_argument("weights do not sum to 1");
  double h = 0;
  for (double x : w) {
    if (x > 0) h -= x * std::log(x);
  }
  return h;
}

DrhoResult d_rho(const std::vector<int>& x, const std::vector<int>& y, const Rational& rho) {
  if (rho <= 0 || rho >= 1) throw std::invalid_argument("rho must lie in (0,1)");
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (x[k] != y[k]) return {rpow(rho, static_cast<int>(k)), false, k};
  }
  return {0, true, n};
}

}  // namespace carpetslice
