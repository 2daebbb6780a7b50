#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rducb/engine.hpp"

namespace rducb {

// Trace CSV: seed, round, phase, decomposition, x_1..x_d, y, best_y,
// inst_regret, best_regret, wall_ms, beta, n_edges. Doubles use the
// shortest round-trip form; NaN is written as "nan".
std::string trace_header(std::size_t d);
void write_trace(std::ostream& out, const RegretTrace& trace);
std::string trace_to_csv(const RegretTrace& trace);
RegretTrace parse_trace(std::string_view csv);

// Summary CSV: round, mean_best_regret, stderr_best_regret, n_seeds.
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary(std::string_view csv);

double parse_double(std::string_view text);
std::size_t parse_size(std::string_view text);

// Splits one CSV line; fields may be double-quoted with "" as an escape.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace rducb
