#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "fsmcmc/kernel.hpp"

namespace fsmcmc {

/// Binary column layout, all integers and floats little-endian:
///
///   8 bytes   magic "FSMCTRC1"
///   u64       m (dimension)
///   u64       n (steps)
///   u64       seed
///   u64       byte length L of the kernel descriptor
///   L bytes   kernel descriptor, UTF-8 JSON
///   m columns of n + 1 f64 values (coordinate j of X_0 .. X_n)
///   1 column  of n f64 values, accept flag of step k as 0.0 / 1.0
void write_trace_binary(std::ostream& out, const ChainTrace& trace);
ChainTrace read_trace_binary(std::istream& in);

/// CSV with header `step,accept,x_1,...,x_m`, or `step,accept,value` when a
/// functional is given. Row 0 is the initial state with accept = 0.
void write_trace_csv(std::ostream& out, const ChainTrace& trace,
                     const std::function<double(const StateVector&)>& functional = {});

}  // namespace fsmcmc
