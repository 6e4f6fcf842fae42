#include <filesystem>

#include "carpetslice/experiment.hpp"
#include "doctest.h"

using namespace carpetslice;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CARPETSLICE_DATA_DIR;

SpecError spec_error_of(const std::string& text) {
  try {
    parse_spec_text(text, kData);
  } catch (const SpecError& e) {
    return e;
  }
  FAIL("expected a SpecError");
  return SpecError("", "");
}

}  // namespace

TEST_CASE("a minimal dims spec parses") {
  const auto s = parse_spec_text(R"({"kind": "dims", "carpet": {"m": 3, "n": 2, "digits": [[0, 0], [0, 1], [2, 0]]}})");
  CHECK(s.kind == ExperimentKind::Dims);
  CHECK(s.seed() == 0);
  CHECK_FALSE(s.output().has_value());
  CHECK(s.body["schema_version"] == kSchemaVersion);
  CHECK(kind_from_string("rotation-scan") == ExperimentKind::RotationScan);
  CHECK_THROWS_AS(kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("semantic errors carry a JSON pointer") {
  const auto e = spec_error_of(R"({"kind": "dims", "carpet": {"m": 3, "n": 2, "digits": [[0, 0], [3, 0]]}})");
  CHECK(e.pointer() == "/carpet/digits/1");
  CHECK(e.located().rfind("at /carpet/digits/1", 0) == 0);
  const auto unknown = spec_error_of(R"({"kind": "dims", "carpet": "carpet_F.json", "colour": 1})");
  CHECK(unknown.pointer() == "/colour");
  const auto kind = spec_error_of(R"({"kind": "slicing"})");
  CHECK(kind.pointer() == "/kind");
  // Floats would lose exactness, so they are refused.
  const auto flt = spec_error_of(
      R"({"kind": "slice", "carpet": "carpet_F.json", "line": {"slope": 0.5, "x0": "0", "y0": "0"}})");
  CHECK(flt.pointer() == "/line/slope");
}

TEST_CASE("syntax errors carry line and column") {
  const auto e = spec_error_of("{\"kind\": \"dims\",\n  \"carpet\": [1,}");
  CHECK(e.line() == 2);
  CHECK(e.column() == 16);
  CHECK(e.located().rfind("line 2, column 16", 0) == 0);
}

TEST_CASE("rationals stay exact") {
  const auto s = parse_spec_text(
      R"({"kind": "slice", "carpet": "carpet_F.json", "line": {"slope": "2/3", "x0": "0.15", "y0": "4/6"},
          "depths": {"min": 2, "max": 6}})", kData);
  CHECK(s.body["line"]["slope"] == "2/3");
  CHECK(s.body["line"]["x0"] == "3/20");
  CHECK(s.body["line"]["y0"] == "2/3");
}

TEST_CASE("property: serialize then parse is the identity on every shipped spec") {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kData / "specs")) {
    const auto s = parse_spec(entry.path());
    const auto again = parse_spec_text(serialize_spec(s), entry.path().parent_path());
    CHECK_MESSAGE(again.body == s.body, entry.path().string());
    CHECK(again.kind == s.kind);
    CHECK(serialize_spec(again) == serialize_spec(s));
    ++n;
  }
  CHECK(n >= 10);
}

TEST_CASE("carpet text round-trips bit-exactly") {
  for (const char* name : {"carpet_F.json", "carpet_E.json", "carpet_E_neg.json", "full_3x2.json"}) {
    const Carpet c = load_carpet(kData / name);
    const std::string text = serialize_carpet(c);
    CHECK(parse_carpet_text(text) == c);
    CHECK(serialize_carpet(parse_carpet_text(text)) == text);
  }
  CHECK(serialize_carpet(Carpet::make(3, 2, {{2, 0}, {0, 1}, {0, 0}})) ==
        "{\"m\": 3, \"n\": 2, \"digits\": [[0, 0], [0, 1], [2, 0]]}\n");
  CHECK_THROWS_AS(parse_carpet_text("{\"m\": 3, \"n\": 2, \"digits\": [[0, 0], [0, 1]]}"), SpecError);
}

TEST_CASE("reruns are byte-identical across worker counts") {
  const auto s = parse_spec(kData / "specs" / "entropy_cantor.json");
  RunOptions one, four;
  four.workers = 4;
  const auto a = run_experiment(s, one), b = run_experiment(s, four);
  CHECK(a.csv == b.csv);
  CHECK(a.result.dump() == b.result.dump());
  CHECK(a.csv.rfind("# carpetslice kind=entropy schema_version=1 seed=", 0) == 0);
}

TEST_CASE("exit codes follow verdicts") {
  const auto dims = run_experiment(parse_spec(kData / "specs" / "dims_F.json"));
  CHECK(dims.outcome == Outcome::Pass);
  CHECK(dims.exit_code() == 0);
  const auto forced = run_experiment(parse_spec(kData / "specs" / "slice_full_forced.json"));
  CHECK(forced.outcome == Outcome::Fail);
  CHECK(forced.exit_code() == 1);
  RunOptions tight;
  tight.budget = 10;
  const auto starved = run_experiment(parse_spec(kData / "specs" / "slice_F.json"), tight);
  CHECK(starved.outcome == Outcome::Error);
  CHECK(starved.exit_code() == 2);
  CHECK(starved.result["summary"].contains("error"));
}
