#include "rducb/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace rducb {

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

}  // namespace

double parse_double(std::string_view text) {
  if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    parse_fail("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::size_t parse_size(std::string_view text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    parse_fail("not a non-negative integer: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) parse_fail("unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string trace_header(std::size_t d) {
  std::string h = "seed,round,phase,decomposition";
  for (std::size_t i = 1; i <= d; ++i) h += ",x_" + std::to_string(i);
  h += ",y,best_y,inst_regret,best_regret,wall_ms,beta,n_edges";
  return h;
}

void write_trace(std::ostream& out, const RegretTrace& trace) {
  out << trace_header(trace.dim) << '\n';
  for (const auto& r : trace.rows) {
    out << trace.seed << ',' << r.round << ','
        << (r.phase == Phase::kInit ? "init" : "bo") << ',' << quote(r.decomposition);
    for (double v : r.x) out << ',' << num(v);
    out << ',' << num(r.y) << ',' << num(r.best_y) << ',' << num(r.inst_regret) << ','
        << num(r.best_regret) << ',' << num(r.wall_ms) << ',' << num(r.beta) << ','
        << r.n_edges << '\n';
  }
}

std::string trace_to_csv(const RegretTrace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

RegretTrace parse_trace(std::string_view csv) {
  const auto lines = lines_of(csv);
  if (lines.empty()) parse_fail("empty trace");
  const auto header = split_csv_line(lines.front());
  if (header.size() < 11) parse_fail("trace header too short");
  const std::size_t d = header.size() - 11;
  if (split_csv_line(trace_header(d)) != header) parse_fail("unexpected trace header");
  RegretTrace trace;
  trace.dim = d;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_csv_line(lines[k]);
    if (f.size() != header.size()) {
      parse_fail("line " + std::to_string(k + 1) + ": expected " +
                 std::to_string(header.size()) + " fields");
    }
    const std::uint64_t seed = parse_size(f[0]);
    if (k == 1) {
      trace.seed = seed;
    } else if (seed != trace.seed) {
      parse_fail("line " + std::to_string(k + 1) + ": mixed seeds");
    }
    TraceRow r;
    r.round = parse_size(f[1]);
    if (f[2] == "init") {
      r.phase = Phase::kInit;
    } else if (f[2] == "bo") {
      r.phase = Phase::kBo;
    } else {
      parse_fail("line " + std::to_string(k + 1) + ": bad phase '" + f[2] + "'");
    }
    r.decomposition = f[3];
    for (std::size_t i = 0; i < d; ++i) r.x.push_back(parse_double(f[4 + i]));
    std::size_t c = 4 + d;
    r.y = parse_double(f[c++]);
    r.best_y = parse_double(f[c++]);
    r.inst_regret = parse_double(f[c++]);
    r.best_regret = parse_double(f[c++]);
    r.wall_ms = parse_double(f[c++]);
    r.beta = parse_double(f[c++]);
    r.n_edges = parse_size(f[c]);
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "round,mean_best_regret,stderr_best_regret,n_seeds\n";
  for (const auto& r : rows) {
    out << r.round << ',' << num(r.mean_best_regret) << ',' << num(r.stderr_best_regret)
        << ',' << r.n_seeds << '\n';
  }
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  write_summary(os, rows);
  return os.str();
}

std::vector<SummaryRow> parse_summary(std::string_view csv) {
  const auto lines = lines_of(csv);
  if (lines.empty() || lines.front() != "round,mean_best_regret,stderr_best_regret,n_seeds") {
    parse_fail("unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 4) parse_fail("line " + std::to_string(k + 1) + ": expected 4 fields");
    rows.push_back({parse_size(f[0]), parse_double(f[1]), parse_double(f[2]), parse_size(f[3])});
  }
  return rows;
}

}  // namespace rducb
