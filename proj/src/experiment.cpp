#include "carpetslice/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "carpetslice/dynamics.hpp"
#include "carpetslice/errors.hpp"
#include "carpetslice/measures.hpp"
#include "carpetslice/rotation.hpp"
#include "carpetslice/slicer.hpp"

namespace carpetslice {

using nlohmann::json;
namespace fs = std::filesystem;

std::string SpecError::located() const {
  if (line_ > 0) return "line " + std::to_string(line_) + ", column " + std::to_string(column_) + ": " + what();
  return "at " + (pointer_.empty() ? std::string("/") : pointer_) + ": " + what();
}

namespace {

constexpr const char* kKindNames[] = {"dims",          "slice",       "intersect", "embed",
                                      "cpchain",       "rotation-scan", "singularity", "entropy"};

std::string child(const std::string& ptr, const std::string& key) {
  std::string k;
  for (char c : key) {
    if (c == '~') k += "~0";
    else if (c == '/') k += "~1";
    else k += c;
  }
  return ptr + "/" + k;
}
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

[[noreturn]] void fail(const std::string& ptr, const std::string& msg) { throw SpecError(msg, ptr); }

// Object reader that rejects unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) fail(ptr_, "expected an object");
  }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& get(const std::string& k) {
    used_.insert(k);
    if (!j_.contains(k)) fail(ptr_, "missing field '" + k + "'");
    return j_.at(k);
  }
  const json* opt(const std::string& k) {
    used_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string at(const std::string& k) const { return child(ptr_, k); }
  const std::string& ptr() const { return ptr_; }
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) fail(child(ptr_, item.key()), "unknown field '" + item.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    if (!origin.empty()) msg = origin + ": " + msg;
    throw SpecError(msg, "", line, col);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "0.15" -> 3/20; anything else goes through parse_rational.
Rational parse_exact_text(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) return parse_rational(s);
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  if (digits.empty() || digits == "-" || s.find('/') != std::string::npos) throw std::invalid_argument("bad decimal");
  const std::size_t places = s.size() - dot - 1;
  if (places == 0) throw std::invalid_argument("bad decimal");
  return parse_rational(digits + "/" + ipow(10, static_cast<unsigned>(places)).str());
}

Rational exact(const json& j, const std::string& ptr) {
  if (j.is_number_unsigned()) return Rational(Integer(j.get<std::uint64_t>()));
  if (j.is_number_integer()) return Rational(Integer(j.get<std::int64_t>()));
  if (j.is_number_float()) fail(ptr, "write non-integers as exact strings such as \"2/3\" or \"0.15\"");
  if (!j.is_string()) fail(ptr, "expected an exact rational");
  const auto s = j.get<std::string>();
  try {
    return parse_exact_text(s);
  } catch (const std::invalid_argument&) {
    fail(ptr, "not an exact rational: '" + s + "'");
  }
}

std::int64_t integer(const json& j, const std::string& ptr, std::int64_t lo, std::int64_t hi) {
  if (!j.is_number_integer()) fail(ptr, "expected an integer");
  if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
    fail(ptr, "value out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > hi) fail(ptr, "value out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

std::uint64_t unsigned64(const json& j, const std::string& ptr) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) fail(ptr, "expected a nonnegative integer");
  fail(ptr, "expected an integer");
}

std::string text_field(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected a string");
  return j.get<std::string>();
}

std::string str(const Rational& q) { return to_string(q); }
Rational rat(const json& normalized) { return parse_rational(normalized.get<std::string>()); }

std::vector<int> int_list(const json& j, const std::string& ptr, int lo, int hi) {
  if (!j.is_array()) fail(ptr, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(static_cast<int>(integer(j[i], child(ptr, i), lo, hi)));
  return out;
}

// ------------------------------------------------------------------- carpets

std::vector<DigitPair> digit_pairs(const json& j, const std::string& ptr, std::int64_t m, std::int64_t n) {
  if (!j.is_array()) fail(ptr, "expected an array of [i, j] digit pairs");
  std::vector<DigitPair> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = child(ptr, k);
    const json& d = j[k];
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer()) {
      fail(p, "expected a digit pair [i, j]");
    }
    const auto i = d[0].get<std::int64_t>(), jj = d[1].get<std::int64_t>();
    if (i < 0 || i >= m || jj < 0 || jj >= n) {
      fail(p, "digit pair [" + std::to_string(i) + ", " + std::to_string(jj) + "] out of range for m=" +
                  std::to_string(m) + ", n=" + std::to_string(n));
    }
    out.push_back({static_cast<int>(i), static_cast<int>(jj)});
  }
  return out;
}

json pairs_json(const std::vector<DigitPair>& ds) {
  json a = json::array();
  for (const auto& d : ds) a.push_back({d.x, d.y});
  return a;
}

json load_json_file(const std::string& ref, const std::string& ptr, const fs::path& base) {
  const fs::path p = base.empty() ? fs::path(ref) : base / ref;
  if (!fs::exists(p)) fail(ptr, "referenced file not found: " + p.string());
  return parse_json_text(read_file(p), p.string());
}

json norm_carpet(const json& j, const std::string& ptr, const fs::path& base) {
  if (j.is_string()) return carpet_to_json(carpet_from_json(load_json_file(j.get<std::string>(), ptr, base), ptr));
  return carpet_to_json(carpet_from_json(j, ptr));
}

// ------------------------------------------------------------- lines and maps

json norm_line(const json& j, const std::string& ptr) {
  Fields f(j, ptr);
  json out;
  const json& s = f.get("slope");
  if (s.is_object()) {
    Fields sf(s, f.at("slope"));
    Fields pf(sf.get("power"), sf.at("power"));
    const auto m1 = integer(pf.get("m1"), pf.at("m1"), 2, 1 << 20);
    const auto m2 = integer(pf.get("m2"), pf.at("m2"), 2, 1 << 20);
    const Rational q = pf.has("q") ? exact(*pf.opt("q"), pf.at("q")) : Rational(0);
    const Rational b = pf.has("b") ? exact(*pf.opt("b"), pf.at("b")) : Rational(0);
    if (denominator(b) != 1) fail(pf.at("b"), "b must be an integer");
    pf.finish();
    sf.finish();
    try {
      (void)Slope::power(m1, m2, q, numerator(b));
    } catch (const std::invalid_argument& e) {
      fail(f.at("slope"), e.what());
    }
    out["slope"] = {{"power", {{"m1", m1}, {"m2", m2}, {"q", str(q)}, {"b", str(b)}}}};
  } else {
    out["slope"] = str(exact(s, f.at("slope")));
  }
  out["x0"] = str(f.has("x0") ? exact(*f.opt("x0"), f.at("x0")) : Rational(0));
  out["y0"] = str(f.has("y0") ? exact(*f.opt("y0"), f.at("y0")) : Rational(0));
  f.finish();
  return out;
}

Line line_from(const json& n) {
  const json& s = n.at("slope");
  Slope slope = Slope::rational(0);
  if (s.is_object()) {
    const json& p = s.at("power");
    slope = Slope::power(p.at("m1").get<std::int64_t>(), p.at("m2").get<std::int64_t>(), rat(p.at("q")),
                         numerator(rat(p.at("b"))));
  } else {
    slope = Slope::rational(rat(s));
  }
  return Line::through(slope, rat(n.at("x0")), rat(n.at("y0")));
}

json map_json(const AffinePlaneMap& g) {
  return {{"orientation", g.orientation == Orientation::Diagonal ? "diagonal" : "antidiagonal"},
          {"a", str(g.a)},
          {"d", str(g.d)},
          {"tx", str(g.tx)},
          {"ty", str(g.ty)}};
}

json norm_map(const json& j, const std::string& ptr) {
  AffinePlaneMap g;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "identity") g = AffinePlaneMap::identity();
    else if (s == "swap") g = AffinePlaneMap::swap();
    else fail(ptr, "unknown map '" + s + "' (expected identity, swap or an object)");
  } else {
    Fields f(j, ptr);
    const auto o = f.has("orientation") ? text_field(*f.opt("orientation"), f.at("orientation")) : "diagonal";
    if (o == "diagonal") g.orientation = Orientation::Diagonal;
    else if (o == "antidiagonal") g.orientation = Orientation::Antidiagonal;
    else fail(f.at("orientation"), "expected diagonal or antidiagonal");
    if (const json* v = f.opt("a")) g.a = exact(*v, f.at("a"));
    if (const json* v = f.opt("d")) g.d = exact(*v, f.at("d"));
    if (const json* v = f.opt("tx")) g.tx = exact(*v, f.at("tx"));
    if (const json* v = f.opt("ty")) g.ty = exact(*v, f.at("ty"));
    f.finish();
  }
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    fail(ptr, e.what());
  }
  return map_json(g);
}

AffinePlaneMap map_from(const json& n) {
  AffinePlaneMap g;
  g.orientation = n.at("orientation") == "diagonal" ? Orientation::Diagonal : Orientation::Antidiagonal;
  g.a = rat(n.at("a"));
  g.d = rat(n.at("d"));
  g.tx = rat(n.at("tx"));
  g.ty = rat(n.at("ty"));
  return g;
}

json norm_depths(const json& j, const std::string& ptr, std::size_t min_count) {
  Fields f(j, ptr);
  const auto lo = integer(f.get("min"), f.at("min"), 0, 64);
  const auto hi = integer(f.get("max"), f.at("max"), 0, 64);
  f.finish();
  if (lo > hi) fail(ptr, "depth window is empty");
  if (static_cast<std::size_t>(hi - lo + 1) < min_count) {
    fail(ptr, "need at least " + std::to_string(min_count) + " depths for a slope fit");
  }
  return {{"min", lo}, {"max", hi}};
}

std::pair<std::size_t, std::size_t> depths_from(const json& n) {
  return {n.at("min").get<std::size_t>(), n.at("max").get<std::size_t>()};
}

// ------------------------------------------------------------------ sequences

SymbolSequence sequence_from(const json& n, const LogRatioAngle* angle) {
  if (n.contains("constant")) {
    const json& c = n.at("constant");
    return SymbolSequence::constant(c.at("alphabet").get<int>(), c.at("symbol").get<int>());
  }
  if (n.contains("periodic")) {
    const json& p = n.at("periodic");
    return SymbolSequence::periodic(p.at("alphabet").get<int>(), p.at("prefix").get<std::vector<int>>(),
                                    p.at("period").get<std::vector<int>>());
  }
  if (n.contains("bernoulli")) {
    const json& b = n.at("bernoulli");
    std::vector<Rational> probs;
    for (const auto& p : b.at("probabilities")) probs.push_back(rat(p));
    return SymbolSequence::bernoulli(std::move(probs), b.at("seed").get<std::uint64_t>());
  }
  const json& r = n.at("rotation_coding");
  if (angle == nullptr) throw std::invalid_argument("rotation coding needs an angle");
  return coding_sequence({rat(r.at("q")), numerator(rat(r.at("b")))}, *angle, 256);
}

json norm_sequence(const json& j, const std::string& ptr, const LogRatioAngle* angle) {
  if (!j.is_object() || j.size() != 1) {
    fail(ptr, "expected exactly one of constant, periodic, bernoulli or rotation_coding");
  }
  json out;
  const std::string key = j.begin().key();
  Fields outer(j, ptr);
  Fields f(outer.get(key), outer.at(key));
  if (key == "constant") {
    out["constant"] = {{"alphabet", integer(f.get("alphabet"), f.at("alphabet"), 1, 1 << 20)},
                       {"symbol", integer(f.get("symbol"), f.at("symbol"), 0, 1 << 20)}};
  } else if (key == "periodic") {
    const auto a = integer(f.get("alphabet"), f.at("alphabet"), 1, 1 << 20);
    const auto pre = f.has("prefix") ? int_list(*f.opt("prefix"), f.at("prefix"), 0, 1 << 20) : std::vector<int>{};
    const auto per = int_list(f.get("period"), f.at("period"), 0, 1 << 20);
    out["periodic"] = {{"alphabet", a}, {"prefix", pre}, {"period", per}};
  } else if (key == "bernoulli") {
    const json& p = f.get("probabilities");
    if (!p.is_array()) fail(f.at("probabilities"), "expected an array of rationals");
    json probs = json::array();
    for (std::size_t i = 0; i < p.size(); ++i) probs.push_back(str(exact(p[i], child(f.at("probabilities"), i))));
    out["bernoulli"] = {{"probabilities", probs},
                        {"seed", f.has("seed") ? unsigned64(*f.opt("seed"), f.at("seed")) : std::uint64_t{0}}};
  } else if (key == "rotation_coding") {
    if (angle == nullptr) fail(ptr, "rotation_coding is only available for tau");
    const Rational q = exact(f.get("q"), f.at("q"));
    const Rational b = f.has("b") ? exact(*f.opt("b"), f.at("b")) : Rational(0);
    if (denominator(b) != 1) fail(f.at("b"), "b must be an integer");
    out["rotation_coding"] = {{"q", str(q)}, {"b", str(b)}};
    try {
      require_unit(*angle, {q, numerator(b)});
    } catch (const std::invalid_argument& e) {
      fail(ptr, e.what());
    }
  } else {
    fail(ptr, "unknown sequence kind '" + key + "'");
  }
  f.finish();
  try {
    (void)sequence_from(out, angle);
  } catch (const std::invalid_argument& e) {
    fail(ptr, e.what());
  }
  return out;
}

// ------------------------------------------------------------ coded products

CodedProduct product_from(const json& n) {
  CodedProduct cp;
  cp.m1 = n.at("m1").get<std::int64_t>();
  cp.m2 = n.at("m2").get<std::int64_t>();
  cp.gammas = n.at("gammas").get<std::vector<std::vector<int>>>();
  cp.lambdas = n.at("lambdas").get<std::vector<std::vector<int>>>();
  const LogRatioAngle angle = theta_of(cp.m1, cp.m2);
  if (n.contains("tau")) cp.tau = sequence_from(n.at("tau"), &angle);
  cp.omega = sequence_from(n.at("omega"), nullptr);
  cp.eta = sequence_from(n.at("eta"), nullptr);
  return cp;
}

// With allow_tau false the product's tau is left out: the experiment supplies it.
json norm_product(const json& j, const std::string& ptr, bool allow_tau) {
  Fields f(j, ptr);
  json out;
  const auto m1 = integer(f.get("m1"), f.at("m1"), 2, 1 << 20);
  const auto m2 = integer(f.get("m2"), f.at("m2"), 2, 1 << 20);
  out["m1"] = m1;
  out["m2"] = m2;
  for (const char* key : {"gammas", "lambdas"}) {
    const json& fam = f.get(key);
    if (!fam.is_array() || fam.empty()) fail(f.at(key), "expected a nonempty array of digit lists");
    const int lim = static_cast<int>(key[0] == 'g' ? m1 : m2) - 1;
    json norm = json::array();
    for (std::size_t i = 0; i < fam.size(); ++i) norm.push_back(int_list(fam[i], child(f.at(key), i), 0, lim));
    out[key] = norm;
  }
  const LogRatioAngle angle = theta_of(m1, m2);
  if (allow_tau) {
    out["tau"] = f.has("tau") ? norm_sequence(*f.opt("tau"), f.at("tau"), &angle)
                              : json{{"rotation_coding", {{"q", "0"}, {"b", "0"}}}};
  } else if (f.has("tau")) {
    fail(f.at("tau"), "tau is fixed to the rotation coding of t0 in this experiment");
  }
  const auto seq_default = [](std::size_t alphabet) {
    return json{{"constant", {{"alphabet", alphabet}, {"symbol", 0}}}};
  };
  out["omega"] = f.has("omega") ? norm_sequence(*f.opt("omega"), f.at("omega"), nullptr)
                                : seq_default(out["gammas"].size());
  out["eta"] = f.has("eta") ? norm_sequence(*f.opt("eta"), f.at("eta"), nullptr) : seq_default(out["lambdas"].size());
  f.finish();
  try {
    product_from(out).validate();
  } catch (const std::invalid_argument& e) {
    fail(ptr, e.what());
  }
  return out;
}

// ------------------------------------------------------------------ measures

json norm_bernoulli(const json& j, const std::string& ptr, const Carpet& c) {
  if (j.is_string()) {
    if (j.get<std::string>() != "uniform") fail(ptr, "expected \"uniform\" or an object with support and probabilities");
    return "uniform";
  }
  Fields f(j, ptr);
  BernoulliSpec s;
  s.support = digit_pairs(f.get("support"), f.at("support"), c.m, c.n);
  const json& p = f.get("probabilities");
  if (!p.is_array()) fail(f.at("probabilities"), "expected an array of rationals");
  for (std::size_t i = 0; i < p.size(); ++i) s.probabilities.push_back(exact(p[i], child(f.at("probabilities"), i)));
  f.finish();
  try {
    s.validate(c);
  } catch (const std::invalid_argument& e) {
    fail(ptr, e.what());
  }
  json probs = json::array();
  for (const auto& q : s.probabilities) probs.push_back(str(q));
  return {{"support", pairs_json(s.support)}, {"probabilities", probs}};
}

BernoulliSpec bernoulli_from(const json& n, const Carpet& c, std::uint64_t seed) {
  if (n.is_string()) return BernoulliSpec::uniform(c, seed);
  BernoulliSpec s;
  for (const auto& d : n.at("support")) s.support.push_back({d[0].get<int>(), d[1].get<int>()});
  for (const auto& p : n.at("probabilities")) s.probabilities.push_back(rat(p));
  s.seed = seed;
  return s;
}

// ------------------------------------------------------------- kind schemas

std::size_t size_field(Fields& f, const std::string& key, std::int64_t lo, std::int64_t hi, std::int64_t dflt) {
  const json* v = f.opt(key);
  return static_cast<std::size_t>(v ? integer(*v, f.at(key), lo, hi) : dflt);
}

std::string rational_field(Fields& f, const std::string& key, const Rational& dflt) {
  const json* v = f.opt(key);
  const Rational q = v ? exact(*v, f.at(key)) : dflt;
  return str(q);
}

// Deepest digit depth (at most 30) whose base^depth numerators fit in 64 bits.
std::int64_t max_digit_depth(std::initializer_list<std::int64_t> bases) {
  std::int64_t best = 30;
  for (const std::int64_t b : bases) {
    std::int64_t d = 0;
    unsigned __int128 p = 1;
    while (d < 30 && p * static_cast<unsigned>(b) <= std::numeric_limits<std::uint64_t>::max()) {
      p *= static_cast<unsigned>(b);
      ++d;
    }
    best = std::min(best, d);
  }
  return best;
}

void require_nonneg(const json& out, const std::string& key, const std::string& ptr) {
  if (rat(out.at(key)) < 0) fail(ptr, key + " must be nonnegative");
}

json normalize(const json& doc, const fs::path& base) {
  Fields f(doc, "");
  json out;
  if (const json* v = f.opt("schema_version")) {
    if (integer(*v, f.at("schema_version"), 0, 1 << 20) != kSchemaVersion) {
      fail(f.at("schema_version"), "unsupported schema_version (this build reads " + std::to_string(kSchemaVersion) + ")");
    }
  }
  out["schema_version"] = kSchemaVersion;
  const std::string kind = text_field(f.get("kind"), f.at("kind"));
  ExperimentKind k;
  try {
    k = kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    fail(f.at("kind"), e.what());
  }
  out["kind"] = kind;
  out["seed"] = f.has("seed") ? unsigned64(*f.opt("seed"), f.at("seed")) : std::uint64_t{0};
  if (const json* v = f.opt("output")) out["output"] = text_field(*v, f.at("output"));

  const auto carpet = [&](const std::string& key) {
    out[key] = norm_carpet(f.get(key), f.at(key), base);
    return carpet_from_json(out[key]);
  };

  switch (k) {
    case ExperimentKind::Dims: {
      carpet("carpet");
      if (const json* e = f.opt("expect")) {
        Fields ef(*e, f.at("expect"));
        json ex = json::object();
        for (const char* q : {"dim_box", "dim_hausdorff", "dim_p2", "dim_star"}) {
          if (const json* v = ef.opt(q)) ex[q] = v->is_string() ? v->get<std::string>() : str(exact(*v, ef.at(q)));
        }
        ef.finish();
        out["expect"] = ex;
      }
      break;
    }
    case ExperimentKind::Slice: {
      const bool has_carpet = f.has("carpet"), has_product = f.has("product");
      if (has_carpet == has_product) fail("", "slice needs exactly one of carpet or product");
      if (has_carpet) carpet("carpet");
      else out["product"] = norm_product(f.get("product"), f.at("product"), true);
      out["line"] = norm_line(f.get("line"), f.at("line"));
      out["depths"] = norm_depths(f.get("depths"), f.at("depths"), 3);
      out["slack"] = rational_field(f, "slack", 0);
      require_nonneg(out, "slack", f.at("slack"));
      const std::string part = f.has("partition") ? text_field(*f.opt("partition"), f.at("partition")) : "dyadic";
      try {
        (void)partition_from_string(part);
      } catch (const std::invalid_argument& e) {
        fail(f.at("partition"), e.what());
      }
      if (has_product && part == "approximate-square") {
        fail(f.at("partition"), "approximate-square applies to carpets only");
      }
      out["partition"] = part;
      if (const json* b = f.opt("bound")) {
        if (b->is_string() && (*b == "star" || *b == "hausdorff")) {
          if (*b == "hausdorff" && has_product) fail(f.at("bound"), "the Hausdorff bound applies to carpets only");
          out["bound"] = *b;
        } else {
          out["bound"] = str(exact(*b, f.at("bound")));
        }
      } else {
        out["bound"] = "star";
      }
      break;
    }
    case ExperimentKind::Intersect:
    case ExperimentKind::Embed: {
      carpet("carpet");
      carpet("carpet2");
      out["map"] = f.has("map") ? norm_map(*f.opt("map"), f.at("map")) : map_json(AffinePlaneMap::identity());
      if (k == ExperimentKind::Intersect) {
        out["depths"] = norm_depths(f.get("depths"), f.at("depths"), 3);
        out["slack"] = rational_field(f, "slack", 0);
        require_nonneg(out, "slack", f.at("slack"));
      } else {
        out["depths"] = norm_depths(f.get("depths"), f.at("depths"), 1);
        out["slack_cells"] = size_field(f, "slack_cells", 0, 1 << 20, 0);
        if (const json* v = f.opt("expect_included")) {
          if (!v->is_boolean()) fail(f.at("expect_included"), "expected true or false");
          out["expect_included"] = v->get<bool>();
        } else {
          out["expect_included"] = true;
        }
      }
      break;
    }
    case ExperimentKind::CpChain: {
      out["product"] = norm_product(f.get("product"), f.at("product"), false);
      const LogRatioAngle angle = theta_of(out["product"]["m1"].get<std::int64_t>(),
                                           out["product"]["m2"].get<std::int64_t>());
      json t0 = {{"q", "0"}, {"b", "0"}};
      if (const json* v = f.opt("t0")) {
        if (v->is_object()) {
          Fields tf(*v, f.at("t0"));
          t0["q"] = str(exact(tf.get("q"), tf.at("q")));
          if (const json* b = tf.opt("b")) {
            const Rational bb = exact(*b, tf.at("b"));
            if (denominator(bb) != 1) fail(tf.at("b"), "b must be an integer");
            t0["b"] = str(bb);
          }
          tf.finish();
        } else {
          t0["q"] = str(exact(*v, f.at("t0")));
        }
      }
      try {
        require_unit(angle, {rat(t0["q"]), numerator(rat(t0["b"]))});
      } catch (const std::invalid_argument& e) {
        fail(f.at("t0"), e.what());
      }
      out["t0"] = t0;
      out["line"] = norm_line(f.get("line"), f.at("line"));
      std::vector<int> nk{6, 8, 10, 12};
      if (const json* v = f.opt("n_k")) {
        nk = int_list(*v, f.at("n_k"), 1, 40);
        if (nk.empty()) fail(f.at("n_k"), "need at least one n_k");
      }
      out["n_k"] = nk;
      out["horizon"] = size_field(f, "horizon", 1, std::int64_t{1} << 40, 10000);
      out["adaptedness_depth"] = size_field(f, "adaptedness_depth", 1, 8, 2);
      out["coding_prefix"] = size_field(f, "coding_prefix", 1, 64, 16);
      if (const json* v = f.opt("expect_entropy")) {
        Fields ef(*v, f.at("expect_entropy"));
        out["expect_entropy"] = {{"value", str(exact(ef.get("value"), ef.at("value")))},
                                 {"tolerance", str(exact(ef.get("tolerance"), ef.at("tolerance")))}};
        ef.finish();
      }
      if (const json* v = f.opt("max_discrepancy")) out["max_discrepancy"] = str(exact(*v, f.at("max_discrepancy")));
      break;
    }
    case ExperimentKind::RotationScan: {
      out["m1"] = integer(f.get("m1"), f.at("m1"), 2, 1 << 20);
      out["m2"] = integer(f.get("m2"), f.at("m2"), 2, 1 << 20);
      if (out["m1"].get<std::int64_t>() <= out["m2"].get<std::int64_t>()) fail(f.at("m1"), "need m1 > m2");
      out["K"] = size_field(f, "K", 1, std::int64_t{1} << 40, 100000);
      out["grid_points"] = size_field(f, "grid_points", 1, 1 << 24, 1000);
      out["bound"] = rational_field(f, "bound", 2);
      break;
    }
    case ExperimentKind::Singularity: {
      const Carpet F = carpet("carpet");
      const Carpet E = carpet("carpet2");
      out["mu"] = f.has("mu") ? norm_bernoulli(*f.opt("mu"), f.at("mu"), F) : json("uniform");
      out["nu"] = f.has("nu") ? norm_bernoulli(*f.opt("nu"), f.at("nu"), E) : json("uniform");
      out["map"] = f.has("map") ? norm_map(*f.opt("map"), f.at("map")) : map_json(AffinePlaneMap::identity());
      out["depths"] = norm_depths(f.get("depths"), f.at("depths"), 1);
      out["samples"] = size_field(f, "samples", 1, std::int64_t{1} << 32, 100000);
      const auto dmax = max_digit_depth({F.m, F.n, E.m, E.n});
      out["digit_depth"] = size_field(f, "digit_depth", 1, dmax, dmax);
      break;
    }
    case ExperimentKind::Entropy: {
      const Carpet c = carpet("carpet");
      out["mu"] = f.has("mu") ? norm_bernoulli(*f.opt("mu"), f.at("mu"), c) : json("uniform");
      const std::string src = f.has("source") ? text_field(*f.opt("source"), f.at("source")) : "self-affine";
      if (src != "self-affine" && src != "fiber") fail(f.at("source"), "expected self-affine or fiber");
      out["source"] = src;
      if (src == "fiber") {
        out["omega"] = f.has("omega") ? norm_sequence(*f.opt("omega"), f.at("omega"), nullptr)
                                      : json{{"constant", {{"alphabet", c.n}, {"symbol", 0}}}};
      } else if (f.has("omega")) {
        fail(f.at("omega"), "omega applies to the fiber source only");
      }
      out["base"] = size_field(f, "base", 2, 1 << 16, src == "fiber" ? c.m : 2);
      out["depths"] = norm_depths(f.get("depths"), f.at("depths"), 2);
      out["samples"] = size_field(f, "samples", 1, std::int64_t{1} << 32, 1000000);
      const auto dmax = max_digit_depth({c.m, c.n});
      out["digit_depth"] = size_field(f, "digit_depth", 1, dmax, dmax);
      if (const json* v = f.opt("expect")) {
        Fields ef(*v, f.at("expect"));
        out["expect"] = {{"lo", str(exact(ef.get("lo"), ef.at("lo")))}, {"hi", str(exact(ef.get("hi"), ef.at("hi")))}};
        ef.finish();
      }
      break;
    }
  }
  f.finish();
  return out;
}

// ------------------------------------------------------------------- output

std::string dec(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json enclosure_json(const Enclosure& e) {
  return {{"lo", to_decimal(e.lo, 20)},
          {"hi", to_decimal(e.hi, 20)},
          {"value", to_decimal((e.lo + e.hi) / 2, 20)},
          {"certified_error", to_decimal(e.width() / 2, 3)}};
}

class Csv {
 public:
  Csv(const std::string& kind, std::uint64_t seed, const std::string& columns) {
    out_ << "# carpetslice kind=" << kind << " schema_version=" << kSchemaVersion << " seed=" << seed << "\n";
    out_ << columns << "\n";
  }
  template <class... T>
  void row(const T&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cells), ...);
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

json verdict_json(const Verdict& v) {
  const auto& e = v.estimate;
  return {{"pass", v.pass},
          {"slope", dec(e.slope)},
          {"slope_lower", dec(e.slope_lower)},
          {"slope_upper", dec(e.slope_upper)},
          {"intercept", dec(e.intercept)},
          {"residual", dec(e.residual)},
          {"k_min", e.k_min},
          {"k_max", e.k_max},
          {"bound", {{"text", v.bound_text}, {"enclosure", enclosure_json(v.bound)}}},
          {"slack", dec(v.slack)}};
}

void add_count_row(Csv& csv, const CoverCount& c) {
  csv.row(c.k, to_string(c.partition), to_string(c.count_lower), to_string(c.count_upper), c.complete ? 1 : 0,
          c.nodes_visited);
}

struct Ctx {
  const json& body;
  std::uint64_t seed;
  const RunOptions& options;
  unsigned prec;
  CountOptions counting;
};

// Each runner fills the result summary and CSV; exceptions escape to run_experiment.
Outcome run_dims(const Ctx& cx, json& summary, Csv& csv) {
  const Carpet c = carpet_from_json(cx.body.at("carpet"));
  const DimensionReport r = dims(c, cx.prec);
  const std::pair<const char*, const DimValue*> rows[] = {
      {"dim_box", &r.dim_box}, {"dim_hausdorff", &r.dim_hausdorff}, {"dim_p2", &r.dim_p2}, {"dim_star", &r.dim_star}};
  json d = json::object();
  bool all = true;
  const json expect = cx.body.value("expect", json::object());
  for (const auto& [name, v] : rows) {
    json q = enclosure_json(v->enclosure);
    q["exact"] = v->exact ? json(v->exact->to_string()) : json(nullptr);
    if (expect.contains(name)) {
      const std::string want = expect.at(name).get<std::string>();
      bool eq = false;
      if (v->exact) {
        eq = v->exact->to_string() == want;
        if (!eq && v->exact->is_rational()) {
          try {
            eq = parse_exact_text(want) == v->exact->constant();
          } catch (const std::invalid_argument&) {
          }
        }
      }
      q["expected"] = want;
      q["exact_equal"] = eq;
      all = all && eq;
    }
    d[name] = q;
    csv.row(name, v->exact ? v->exact->to_string() : "", q["value"].get<std::string>(),
            q["certified_error"].get<std::string>());
  }
  summary["dims"] = d;
  summary["uniform_fibers"] = r.uniform_fibers;
  if (expect.empty()) return Outcome::Observation;
  return all ? Outcome::Pass : Outcome::Fail;
}

Outcome run_slice(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  Target target = Carpet{};
  std::optional<Carpet> carpet;
  if (b.contains("carpet")) {
    carpet = carpet_from_json(b.at("carpet"));
    target = *carpet;
  } else {
    target = product_from(b.at("product"));
  }
  const Line line = line_from(b.at("line"));
  const auto [kmin, kmax] = depths_from(b.at("depths"));
  const PartitionKind part = partition_from_string(b.at("partition").get<std::string>());
  const double slack = to_double(rat(b.at("slack")));

  Enclosure bound;
  std::string bound_text;
  const std::string bsel = b.at("bound").get<std::string>();
  if (bsel == "star" && carpet) {
    const BoundResult br = bound_slice_star(*carpet);
    bound = br.value.enclosure(cx.prec);
    bound_text = br.value.to_string();
    if (!br.hypothesis_ok) summary["warning"] = br.warning;
  } else if (bsel == "star") {
    const auto& cp = std::get<CodedProduct>(target);
    const LogExpr v = bound_product_slice(cp.gammas, cp.lambdas, cp.m1, cp.m2);
    bound = v.enclosure(cx.prec);
    bound_text = v.to_string();
  } else if (bsel == "hausdorff") {
    const DimValue v = bound_slice_hausdorff(*carpet, cx.prec);
    bound = v.enclosure;
    bound_text = v.text();
  } else {
    bound = Enclosure::exact(rat(b.at("bound")));
    bound_text = bsel;
  }
  summary["bound"] = {{"text", bound_text}, {"enclosure", enclosure_json(bound)}};

  std::vector<CoverCount> counts;
  std::int64_t base = 2;
  for (std::size_t k = kmin; k <= kmax; ++k) {
    const CoverTree tree = cover_tree(target, k, part);
    base = tree.base;
    counts.push_back(count_line_cells(tree, line, k, part, cx.counting));
    add_count_row(csv, counts.back());
  }
  const Verdict v = judge_slice_counts(counts, static_cast<double>(base), bound, bound_text, slack);
  summary["verdict"] = verdict_json(v);
  return v.pass ? Outcome::Pass : Outcome::Fail;
}

Outcome run_intersect(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  const Carpet F = carpet_from_json(b.at("carpet")), E = carpet_from_json(b.at("carpet2"));
  const AffinePlaneMap g = map_from(b.at("map"));
  const auto [kmin, kmax] = depths_from(b.at("depths"));
  const BoundResult br = bound_intersection(F, E, g.orientation);
  const IncommensurabilityVerdict inc = is_incommensurable(F, E);
  summary["incommensurable"] = inc.incommensurable;
  if (inc.witness) summary["dependent_pair"] = {inc.witness->first, inc.witness->second};
  if (!br.hypothesis_ok) summary["warning"] = br.warning;
  std::vector<CoverCount> counts;
  for (std::size_t k = kmin; k <= kmax; ++k) {
    counts.push_back(intersect_cover_count(F, g, E, k));
    add_count_row(csv, counts.back());
  }
  const Verdict v = judge_slice_counts(counts, 2.0, br.value.enclosure(cx.prec), br.value.to_string(),
                                       to_double(rat(b.at("slack"))));
  summary["verdict"] = verdict_json(v);
  return v.pass ? Outcome::Pass : Outcome::Fail;
}

Outcome run_embed(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  const Carpet F = carpet_from_json(b.at("carpet")), E = carpet_from_json(b.at("carpet2"));
  const AffinePlaneMap g = map_from(b.at("map"));
  const auto [kmin, kmax] = depths_from(b.at("depths"));
  const auto slack = b.at("slack_cells").get<std::size_t>();
  const bool expect = b.at("expect_included").get<bool>();
  bool all = true;
  json per = json::array();
  for (std::size_t k = kmin; k <= kmax; ++k) {
    const InclusionResult r = cover_inclusion(g, F, E, k, slack);
    json w = nullptr;
    std::string wx0, wx1, wy0, wy1;
    if (r.witness) {
      wx0 = to_string(r.witness->x0);
      wx1 = to_string(r.witness->x1);
      wy0 = to_string(r.witness->y0);
      wy1 = to_string(r.witness->y1);
      w = {wx0, wx1, wy0, wy1};
    }
    per.push_back({{"k", k}, {"included", r.included}, {"e_depth", r.e_depth},
                   {"rectangles_checked", r.rectangles_checked}, {"witness", w}});
    csv.row(k, r.included ? 1 : 0, r.e_depth, r.rectangles_checked, wx0, wx1, wy0, wy1);
    all = all && r.included == expect;
  }
  summary["inclusion"] = per;
  summary["expect_included"] = expect;
  return all ? Outcome::Pass : Outcome::Fail;
}

Outcome run_cpchain(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  CodedProduct cp = product_from(b.at("product"));
  const LogRatioAngle angle = theta_of(cp.m1, cp.m2);
  const RotationPoint t0{rat(b.at("t0").at("q")), numerator(rat(b.at("t0").at("b")))};
  const auto nks = b.at("n_k").get<std::vector<std::size_t>>();
  std::size_t top = 0;
  for (auto n : nks) top = std::max(top, n);
  cp.tau = coding_sequence(t0, angle, top + 64);
  const Line line = line_from(b.at("line"));
  const auto adepth = b.at("adaptedness_depth").get<std::size_t>();
  const auto prefix = b.at("coding_prefix").get<std::size_t>();

  bool ok = true;
  double last_H = 0;
  json rows = json::array();
  for (std::size_t nk : nks) {
    const auto E = slice_preimage(cp, line, nk, cx.counting);
    if (E.empty()) throw PreconditionViolated("the line misses the coded product at depth " + std::to_string(nk));
    const CpChain ch = build_cp_chain(E, nk, t0, angle, cp.omega, cp.eta);
    const double H = entropy_H(ch.q_k, cp.m2);
    const double disc = t_marginal_discrepancy(ch.q_k, angle);
    const Rational res = adaptedness_residual(ch.q_k, adepth);
    const bool cc = coding_consistent(ch.q_k, angle, prefix);
    csv.row(nk, ch.q_k.support_size, dec(H), dec(disc), to_string(res), cc ? 1 : 0);
    rows.push_back({{"n_k", nk}, {"support_size", ch.q_k.support_size}, {"H", dec(H)},
                    {"t_marginal_discrepancy", dec(disc)}, {"adaptedness_residual", to_string(res)},
                    {"coding_consistent", cc}});
    ok = ok && res == 0 && cc;
    last_H = H;
  }
  summary["chains"] = rows;
  const auto horizon = b.at("horizon").get<std::size_t>();
  const double orbit = orbit_star_discrepancy(t0, angle, horizon);
  summary["orbit_discrepancy"] = {{"horizon", horizon}, {"value", dec(orbit)}};
  if (b.contains("expect_entropy")) {
    const double want = to_double(rat(b["expect_entropy"]["value"]));
    const double tol = to_double(rat(b["expect_entropy"]["tolerance"]));
    ok = ok && std::abs(last_H - want) <= tol;
  }
  if (b.contains("max_discrepancy")) ok = ok && orbit <= to_double(rat(b["max_discrepancy"]));
  return ok ? Outcome::Pass : Outcome::Fail;
}

Outcome run_rotation(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  const LogRatioAngle angle = theta_of(b.at("m1").get<std::int64_t>(), b.at("m2").get<std::int64_t>());
  const auto K = b.at("K").get<std::uint64_t>();
  const auto G = b.at("grid_points").get<std::size_t>();
  std::vector<Rational> grid;
  for (std::size_t i = 0; i < G; ++i) grid.emplace_back(Integer(i), Integer(G));
  const RemainderScan s = remainder_bound_scan(angle, K, grid, cx.options.workers);
  const Rational bound = rat(b.at("bound"));
  const bool pass = s.carry_identity_holds && s.mismatches == 0 && s.certified_upper < to_double(bound);
  csv.row(K, G, dec(s.max_deviation), dec(s.certified_upper), s.argmax_k, to_string(grid[s.argmax_t_index]),
          s.carry_identity_holds ? 1 : 0, s.mismatches);
  summary["scan"] = {{"max_deviation", dec(s.max_deviation)},
                     {"certified_upper", dec(s.certified_upper)},
                     {"argmax_k", s.argmax_k},
                     {"argmax_t", to_string(grid[s.argmax_t_index])},
                     {"carry_identity_holds", s.carry_identity_holds},
                     {"points", s.points},
                     {"mismatches", s.mismatches},
                     {"bound", to_string(bound)}};
  return pass ? Outcome::Pass : Outcome::Fail;
}

// Second stream seed for nu, distinct from mu's.
std::uint64_t derived_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

Outcome run_singularity(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  const Carpet F = carpet_from_json(b.at("carpet")), E = carpet_from_json(b.at("carpet2"));
  const BernoulliSpec mu = bernoulli_from(b.at("mu"), F, cx.seed);
  const BernoulliSpec nu = bernoulli_from(b.at("nu"), E, derived_seed(cx.seed));
  const auto [kmin, kmax] = depths_from(b.at("depths"));
  const SingularityReport r =
      singularity_experiment(F, mu, map_from(b.at("map")), E, nu, kmin, kmax, b.at("samples").get<std::size_t>(),
                             b.at("digit_depth").get<std::size_t>(), cx.options.workers);
  json curve = json::array();
  for (const auto& p : r.curve) {
    csv.row(p.k, dec(p.tv), dec(p.noise_scale));
    curve.push_back({{"k", p.k}, {"tv", dec(p.tv)}, {"noise_scale", dec(p.noise_scale)}});
  }
  summary["tv_curve"] = curve;
  summary["hypothesis"] = r.hypothesis;
  summary["note"] = r.note;
  summary["seeds"] = {{"mu", mu.seed}, {"nu", nu.seed}};
  return Outcome::Observation;
}

Outcome run_entropy(const Ctx& cx, json& summary, Csv& csv) {
  const json& b = cx.body;
  const Carpet c = carpet_from_json(b.at("carpet"));
  const BernoulliSpec mu = bernoulli_from(b.at("mu"), c, cx.seed);
  const auto [kmin, kmax] = depths_from(b.at("depths"));
  const auto N = b.at("samples").get<std::size_t>();
  const auto depth = b.at("digit_depth").get<std::size_t>();
  const auto base = b.at("base").get<std::int64_t>();
  GridHistogram h;
  if (b.at("source") == "fiber") {
    const FiberSampler s = conditional_fiber_sampler(c, mu, sequence_from(b.at("omega"), nullptr));
    h = histogram_1d(s.sample(N, depth, cx.seed), c.m, depth, base, kmax);
  } else {
    h = histogram(sample_self_affine(c, mu, N, depth, cx.options.workers), base, kmax);
  }
  const EntropyEstimate e = entropy_dim_estimate(h, kmin, kmax);
  for (std::size_t k = kmin; k <= kmax; ++k) csv.row(k, dec(e.entropies[k - kmin]));
  summary["estimate"] = {{"slope", dec(e.slope)},
                         {"intercept", dec(e.intercept)},
                         {"residual", dec(e.residual)},
                         {"sample_size", e.sample_size}};
  if (!b.contains("expect")) return Outcome::Observation;
  const bool pass = e.slope >= to_double(rat(b["expect"]["lo"])) && e.slope <= to_double(rat(b["expect"]["hi"]));
  return pass ? Outcome::Pass : Outcome::Fail;
}

const char* columns(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Dims: return "quantity,exact,value,certified_error";
    case ExperimentKind::Slice:
    case ExperimentKind::Intersect: return "k,partition,N_lower,N_upper,complete,nodes_visited";
    case ExperimentKind::Embed: return "k,included,e_depth,rectangles_checked,witness_x0,witness_x1,witness_y0,witness_y1";
    case ExperimentKind::CpChain: return "n_k,support_size,H,t_marginal_discrepancy,adaptedness_residual,coding_consistent";
    case ExperimentKind::RotationScan:
      return "K,grid_points,max_deviation,certified_upper,argmax_k,argmax_t,carry_identity_holds,mismatches";
    case ExperimentKind::Singularity: return "k,tv,noise_scale";
    case ExperimentKind::Entropy: return "k,entropy";
  }
  return "";
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

const char* to_string(ExperimentKind kind) { return kKindNames[static_cast<int>(kind)]; }

ExperimentKind kind_from_string(const std::string& name) {
  for (int i = 0; i < 8; ++i) {
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  }
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Pass: return "PASS";
    case Outcome::Fail: return "FAIL";
    case Outcome::Observation: return "OBSERVATION";
    case Outcome::Error: return "ERROR";
  }
  return "ERROR";
}

int RunResult::exit_code() const {
  switch (outcome) {
    case Outcome::Pass:
    case Outcome::Observation: return 0;
    case Outcome::Fail: return 1;
    case Outcome::Error: return 2;
  }
  return 2;
}

std::uint64_t ExperimentSpec::seed() const { return body.value("seed", std::uint64_t{0}); }

std::optional<std::string> ExperimentSpec::output() const {
  if (!body.contains("output")) return std::nullopt;
  return body.at("output").get<std::string>();
}

Carpet carpet_from_json(const json& j, const std::string& pointer) {
  Fields f(j, pointer);
  const auto m = integer(f.get("m"), f.at("m"), 2, 1 << 20);
  const auto n = integer(f.get("n"), f.at("n"), 2, 1 << 20);
  auto ds = digit_pairs(f.get("digits"), f.at("digits"), m, n);
  f.finish();
  try {
    return Carpet::make(m, n, std::move(ds));
  } catch (const std::invalid_argument& e) {
    fail(pointer, e.what());
  }
}

json carpet_to_json(const Carpet& c) { return {{"m", c.m}, {"n", c.n}, {"digits", pairs_json(c.digits)}}; }

Carpet parse_carpet_text(const std::string& text) { return carpet_from_json(parse_json_text(text, "")); }

std::string serialize_carpet(const Carpet& c) {
  std::string s = "{\"m\": " + std::to_string(c.m) + ", \"n\": " + std::to_string(c.n) + ", \"digits\": [";
  for (std::size_t i = 0; i < c.digits.size(); ++i) {
    if (i) s += ", ";
    s += "[" + std::to_string(c.digits[i].x) + ", " + std::to_string(c.digits[i].y) + "]";
  }
  return s + "]}\n";
}

Carpet load_carpet(const fs::path& path) {
  return carpet_from_json(parse_json_text(read_file(path), path.string()));
}

ExperimentSpec parse_spec_text(const std::string& text, const fs::path& base_dir) {
  const json doc = parse_json_text(text, "");
  ExperimentSpec spec;
  spec.body = normalize(doc, base_dir);
  spec.kind = kind_from_string(spec.body.at("kind").get<std::string>());
  return spec;
}

ExperimentSpec parse_spec(const fs::path& path) {
  if (!fs::exists(path)) throw SpecError("spec file not found: " + path.string(), "");
  const std::string text = read_file(path);
  try {
    return parse_spec_text(text, path.parent_path());
  } catch (const SpecError& e) {
    if (e.line() > 0) throw SpecError(path.string() + ": " + e.what(), e.pointer(), e.line(), e.column());
    throw;
  }
}

std::string serialize_spec(const ExperimentSpec& spec) { return spec.body.dump(2) + "\n"; }

RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(spec.seed());
  if (options.precision) set_precision_cap(*options.precision);
  Ctx cx{spec.body, seed, options, options.precision.value_or(128), {}};
  if (options.budget) cx.counting.budget = *options.budget;
  cx.counting.workers = std::max(1u, options.workers);

  RunResult rr;
  rr.csv_name = std::string(to_string(spec.kind)) + ".csv";
  Csv csv(to_string(spec.kind), seed, columns(spec.kind));
  json summary = json::object();
  try {
    switch (spec.kind) {
      case ExperimentKind::Dims: rr.outcome = run_dims(cx, summary, csv); break;
      case ExperimentKind::Slice: rr.outcome = run_slice(cx, summary, csv); break;
      case ExperimentKind::Intersect: rr.outcome = run_intersect(cx, summary, csv); break;
      case ExperimentKind::Embed: rr.outcome = run_embed(cx, summary, csv); break;
      case ExperimentKind::CpChain: rr.outcome = run_cpchain(cx, summary, csv); break;
      case ExperimentKind::RotationScan: rr.outcome = run_rotation(cx, summary, csv); break;
      case ExperimentKind::Singularity: rr.outcome = run_singularity(cx, summary, csv); break;
      case ExperimentKind::Entropy: rr.outcome = run_entropy(cx, summary, csv); break;
    }
  } catch (const ResourceExhausted& e) {
    rr.outcome = Outcome::Error;
    const CoverCount& p = e.partial();
    add_count_row(csv, p);
    summary["error"] = {{"type", "resource"}, {"message", e.what()}};
    summary["partial"] = {{"k", p.k}, {"count_lower", to_string(p.count_lower)}, {"nodes_visited", p.nodes_visited}};
  } catch (const PrecisionExhausted& e) {
    rr.outcome = Outcome::Error;
    summary["error"] = {{"type", "precision"}, {"message", e.what()}};
  } catch (const UndefinedEstimate& e) {
    rr.outcome = Outcome::Error;
    summary["error"] = {{"type", "estimate"}, {"message", e.what()}};
  } catch (const PreconditionViolated& e) {
    rr.outcome = Outcome::Error;
    summary["error"] = {{"type", "precondition"}, {"message", e.what()}};
  }

  rr.csv = csv.str();
  rr.result = {{"schema_version", kSchemaVersion}, {"kind", to_string(spec.kind)}, {"verdict", to_string(rr.outcome)},
               {"seed", seed},       {"spec", spec.body},  {"summary", summary},   {"csv", rr.csv_name}};
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    write_file(options.out_dir / "result.json", rr.result.dump(2) + "\n");
    write_file(options.out_dir / rr.csv_name, rr.csv);
  }
  return rr;
}

}  // namespace carpetslice
