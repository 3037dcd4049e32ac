#include "fsmcmc/sweep_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace fsmcmc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, std::size_t line_no) {
  if (cell == "degenerate") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw std::runtime_error("sweep csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  return value;
}

template <class T>
T parse_integer(const std::string& cell, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw std::runtime_error("sweep csv line " + std::to_string(line_no) + ": bad integer '" + cell + "'");
  return value;
}

}  // namespace

std::string format_number(double value) {
  if (!std::isfinite(value)) return "degenerate";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw std::runtime_error("format_number: buffer too small");
  return std::string(buffer, ptr);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.m << ',' << format_number(r.delta) << ',' << format_number(r.a) << ',' << r.method << ','
        << format_number(r.value) << ',' << (r.is_upper_bound ? "true" : "false") << ','
        << format_number(r.ci_lo) << ',' << format_number(r.ci_hi) << ',' << r.n_samples << ',' << r.seed
        << '\n';
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("sweep csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepHeader) throw std::runtime_error("sweep csv header mismatch: '" + line + "'");

  std::vector<SweepRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 10)
      throw std::runtime_error("sweep csv line " + std::to_string(line_no) + ": expected 10 fields");
    SweepRow r;
    r.m = parse_integer<std::size_t>(cells[0], line_no);
    r.delta = parse_double(cells[1], line_no);
    r.a = parse_double(cells[2], line_no);
    r.method = cells[3];
    r.value = parse_double(cells[4], line_no);
    if (cells[5] != "true" && cells[5] != "false")
      throw std::runtime_error("sweep csv line " + std::to_string(line_no) + ": is_upper_bound must be true/false");
    r.is_upper_bound = cells[5] == "true";
    r.ci_lo = parse_double(cells[6], line_no);
    r.ci_hi = parse_double(cells[7], line_no);
    r.n_samples = parse_integer<std::size_t>(cells[8], line_no);
    r.seed = parse_integer<std::uint64_t>(cells[9], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_report(std::vector<SweepRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    return std::tie(x.a, x.m, x.method) < std::tie(y.a, y.m, y.method);
  });
  auto fixed = [](double v) {
    if (!std::isfinite(v)) return std::string("degenerate");
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };

  std::size_t method_width = 6;
  for (const auto& r : rows) method_width = std::max(method_width, r.method.size());

  std::ostringstream out;
  out << std::left << std::setw(6) << "m" << "  " << std::setw(10) << "delta" << "  " << std::setw(5) << "a"
      << "  " << std::setw(static_cast<int>(method_width)) << "method" << "  " << std::setw(12) << "value"
      << "  " << std::setw(5) << "bound" << "  " << std::setw(12) << "ci_lo" << "  " << std::setw(12)
      << "ci_hi" << "  " << "n" << '\n';
  out << std::string(6 + 10 + 5 + method_width + 12 + 5 + 12 + 12 + 10 + 16, '-') << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(6) << r.m << "  " << std::setw(10) << fixed(r.delta) << "  " << std::setw(5)
        << fixed(r.a) << "  " << std::setw(static_cast<int>(method_width)) << r.method << "  " << std::setw(12)
        << fixed(r.value) << "  " << std::setw(5) << (r.is_upper_bound ? "yes" : "no") << "  " << std::setw(12)
        << fixed(r.ci_lo) << "  " << std::setw(12) << fixed(r.ci_hi) << "  " << r.n_samples << '\n';
  }
  return out.str();
}

}  // namespace fsmcmc
