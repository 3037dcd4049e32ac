#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fsmcmc/experiments.hpp"

namespace fsmcmc {

inline constexpr const char* kSweepHeader = "m,delta,a,method,value,is_upper_bound,ci_lo,ci_hi,n_samples,seed";

/// Non-finite numbers are written as the literal "degenerate".
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
/// Reads rows back; "degenerate" cells become NaN. Throws std::runtime_error
/// on a header mismatch or malformed line.
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Shortest round-trip decimal representation, or "degenerate".
std::string format_number(double value);

/// Fixed-width table with one line per (m, method), ordered by a, m, method.
std::string render_report(std::vector<SweepRow> rows);

}  // namespace fsmcmc
