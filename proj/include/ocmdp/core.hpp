#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ocmdp {

using Rat = mpq_class;

// Counter values and bounds. kInf stands for an unbounded interval end or B = inf.
using Counter = std::int64_t;
inline constexpr Counter kInf = std::numeric_limits<Counter>::max();

// Largest finite counter we accept; keeps 2*k and k+1 away from overflow.
inline constexpr Counter kMaxFinite = Counter(1) << 60;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Rat parse_rat(std::string_view text);
std::string rat_str(const Rat& r);
double to_double(const Rat& r);

Counter parse_counter(std::string_view text);  // accepts "inf"
std::string counter_str(Counter k);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);

Counter checked_add(Counter a, Counter b);
Counter checked_mul(Counter a, Counter b);

}  // namespace ocmdp
