#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "carpetslice/carpets.hpp"

namespace carpetslice {

inline constexpr int kSchemaVersion = 1;

/// A problem with a spec document. Syntax errors carry a 1-based line and
/// column; semantic errors carry the JSON pointer of the offending value.
class SpecError : public std::runtime_error {
 public:
  SpecError(const std::string& what, std::string pointer, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), pointer_(std::move(pointer)), line_(line), column_(column) {}
  const std::string& pointer() const { return pointer_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  /// "line 3, column 7: ..." or "at /carpet/digits/2: ...".
  std::string located() const;

 private:
  std::string pointer_;
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

enum class ExperimentKind { Dims, Slice, Intersect, Embed, CpChain, RotationScan, Singularity, Entropy };
const char* to_string(ExperimentKind kind);
/// Throws std::invalid_argument on an unknown name.
ExperimentKind kind_from_string(const std::string& name);

/// A validated experiment. `body` is the normalized document: file references
/// inlined, exact numbers as reduced "p/q" strings, defaults filled in.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Dims;
  nlohmann::json body;

  std::uint64_t seed() const;
  std::optional<std::string> output() const;
};

/// File references are resolved against base_dir.
ExperimentSpec parse_spec_text(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentSpec parse_spec(const std::filesystem::path& path);
/// Normalized text; parse_spec_text(serialize_spec(s)).body == s.body.
std::string serialize_spec(const ExperimentSpec& spec);

/// Carpet file format: {"m": 3, "n": 2, "digits": [[0, 0], [0, 1], [2, 0]]}.
Carpet carpet_from_json(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json carpet_to_json(const Carpet& c);
Carpet parse_carpet_text(const std::string& text);
/// Canonical one-line text with sorted digits; parse_carpet_text inverts it bit-exactly.
std::string serialize_carpet(const Carpet& c);
Carpet load_carpet(const std::filesystem::path& path);

enum class Outcome { Pass, Fail, Observation, Error };
const char* to_string(Outcome outcome);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing is written
  unsigned workers = 1;
  std::optional<std::uint64_t> budget;
  std::optional<unsigned> precision;
  std::optional<std::uint64_t> seed;  // overrides the spec's seed
};

struct RunResult {
  Outcome outcome = Outcome::Error;
  nlohmann::json result;  // the result.json document
  std::string csv;        // comment header, column line, rows
  std::string csv_name;
  /// 0 for PASS and observations, 1 for FAIL, 2 for resource or precision errors.
  int exit_code() const;
};

/// Runs the experiment and, when out_dir is set, writes result.json and the CSV
/// table there. Resource and precision failures come back as Outcome::Error
/// with whatever rows finished before the failure.
RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

}  // namespace carpetslice
