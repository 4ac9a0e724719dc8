#pragma once
// Uniform result record for every statistical check, with JSON/CSV rendering.
// Reports carry raw numbers regardless of verdict; renderers never round the
// stored values, only the display.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmj {

enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v);

struct TestReport {
  std::string name;
  std::string target;  // one-line description of the quantity being checked
  Verdict verdict = Verdict::inconclusive;
  std::uint64_t seed = 0;
  double elapsed_s = 0.0;
  nlohmann::ordered_json details;  // grids, estimates, errors, counts, ...
  std::vector<std::string> notes;  // warnings that do not affect the verdict

  void note(std::string msg) { notes.push_back(std::move(msg)); }
};

nlohmann::ordered_json to_json(const TestReport& r);

// "name ........ PASS   (1.2s)  <target>"
std::string render_line(const TestReport& r);

// 0 all pass, 2 inconclusive but nothing failed, 1 any fail.
int exit_code_for(std::span<const TestReport> reports);

// ---- CSV ----

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Renders with full precision; header_comment (if nonempty) becomes a leading
// "# ..." line, used to pin config hash and seed into dumps.
std::string to_csv(const CsvTable& t, const std::string& header_comment = "");

}  // namespace cmj
