#pragma once

#include "ocmdp/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ocmdp {

struct Interval {
  Counter lo = 1;
  Counter hi = 1;  // kInf for [lo, inf)

  bool bounded() const { return hi != kInf; }
  Counter size() const { return bounded() ? hi - lo + 1 : kInf; }
  bool contains(Counter k) const { return k >= lo && k <= hi; }
  bool operator==(const Interval&) const = default;
};

using Partition = std::vector<Interval>;

struct PeriodicPartition {
  Counter period = 1;
  Partition window;  // covers [1, period]
  bool operator==(const PeriodicPartition&) const = default;
};

// floor(log2(x)) for x >= 1.
int floor_log2(Counter x);
// Returns beta if |i| = 2^beta - 1, otherwise -1.
int size_exponent(const Interval& i);

std::vector<Interval> refine(const Interval& i);
Partition isolate(const Partition& p, Counter k);
Partition refine_partition(const Partition& p);

// Empty string when p is a contiguous sorted partition of [1, B-1] (B may be kInf).
std::string check_covers(const Partition& p, Counter B);
int find_interval(const Partition& p, Counter k);  // -1 when k is not covered

// Partitions of [1,B-1] with at most d intervals, bounded ones of size at most n.
// Ordered by interval count, then lexicographically by the length sequence.
class PartitionStream {
 public:
  PartitionStream(Counter d, Counter n, Counter B);
  std::optional<Partition> next();
  void reset();

 private:
  bool first_of_count();
  bool advance();
  Partition build() const;

  Counter d_, n_, B_;
  Counter count_ = 0;             // number of bounded intervals
  std::vector<Counter> lengths_;  // bounded interval lengths
  bool started_ = false;
  bool done_ = false;
};

std::vector<Partition> enumerate_partitions(Counter d, Counter n, Counter B);

Partition expand_periodic(const PeriodicPartition& pp, Counter upto);

std::string format_partition(const Partition& p);
Partition parse_partition(std::string_view text);
std::string format_periodic(const PeriodicPartition& pp);
PeriodicPartition parse_periodic(std::string_view text);

}  // namespace ocmdp
