#include "cmj/report.hpp"

#include <cstdio>
#include <sstream>

namespace cmj {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

nlohmann::ordered_json to_json(const TestReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["target"] = r.target;
  j["verdict"] = to_string(r.verdict);
  j["seed"] = r.seed;
  j["elapsed_s"] = r.elapsed_s;
  j["details"] = r.details;
  j["notes"] = r.notes;
  return j;
}

std::string render_line(const TestReport& r) {
  std::string dots(r.name.size() < 28 ? 28 - r.name.size() : 1, '.');
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s (%.1fs)", to_string(r.verdict), r.elapsed_s);
  return r.name + " " + dots + " " + buf + "  " + r.target;
}

int exit_code_for(std::span<const TestReport> reports) {
  bool any_fail = false, any_inconclusive = false;
  for (const auto& r : reports) {
    any_fail |= r.verdict == Verdict::fail;
    any_inconclusive |= r.verdict == Verdict::inconclusive;
  }
  if (any_fail) return 1;
  if (any_inconclusive) return 2;
  return 0;
}

std::string to_csv(const CsvTable& t, const std::string& header_comment) {
  std::ostringstream os;
  os.precision(17);
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) os << ',';
    os << t.columns[i];
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << row[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cmj
