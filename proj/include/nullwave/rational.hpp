#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace nullwave {

// Exact arithmetic for the tensor algebra. Floats appear only in witnesses,
// sampling oracles and the grid code.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parse "p", "p/q" or a plain decimal like "-0.125" into an exact rational.
std::optional<Rational> parse_rational(const std::string& text);

/// Canonical text form: integers as "p", everything else as "p/q".
std::string format_rational(const Rational& r);

}  // namespace nullwave
