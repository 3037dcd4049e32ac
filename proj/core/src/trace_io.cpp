#include "fsmcmc/trace_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fsmcmc {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'S', 'M', 'C', 'T', 'R', 'C', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!in) throw std::runtime_error("trace: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_trace_binary(std::ostream& out, const ChainTrace& trace) {
  const std::size_t m = trace.dimension();
  const std::size_t n = trace.steps();
  if (trace.states.size() != n + 1) throw std::invalid_argument("trace: states/flags length mismatch");
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, m);
  put_u64(out, n);
  put_u64(out, trace.seed);
  const std::string descriptor = trace.kernel.dump();
  put_u64(out, descriptor.size());
  out.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
  for (std::size_t j = 0; j < m; ++j)
    for (const auto& x : trace.states) put_f64(out, x[static_cast<Eigen::Index>(j)]);
  for (bool flag : trace.accept_flags) put_f64(out, flag ? 1.0 : 0.0);
  if (!out) throw std::runtime_error("trace: write failed");
}

ChainTrace read_trace_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("trace: bad magic");
  const std::uint64_t m = get_u64(in);
  const std::uint64_t n = get_u64(in);
  ChainTrace trace;
  trace.seed = get_u64(in);
  const std::uint64_t len = get_u64(in);
  std::string descriptor(len, '\0');
  in.read(descriptor.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("trace: truncated descriptor");
  trace.kernel = nlohmann::json::parse(descriptor);
  trace.states.assign(n + 1, StateVector(static_cast<Eigen::Index>(m)));
  for (std::uint64_t j = 0; j < m; ++j)
    for (auto& x : trace.states) x[static_cast<Eigen::Index>(j)] = get_f64(in);
  trace.accept_flags.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) trace.accept_flags[k] = get_f64(in) != 0.0;
  return trace;
}

void write_trace_csv(std::ostream& out, const ChainTrace& trace,
                     const std::function<double(const StateVector&)>& functional) {
  const std::size_t m = trace.dimension();
  out << "step,accept";
  if (functional) {
    out << ",value";
  } else {
    for (std::size_t j = 1; j <= m; ++j) out << ",x_" << j;
  }
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < trace.states.size(); ++k) {
    out << k << ',' << (k > 0 && trace.accept_flags[k - 1] ? 1 : 0);
    const auto& x = trace.states[k];
    if (functional) {
      out << ',' << functional(x);
    } else {
      for (Eigen::Index j = 0; j < x.size(); ++j) out << ',' << x[j];
    }
    out << '\n';
  }
}

}  // namespace fsmcmc
