#pragma once

#include "ocmdp/model.hpp"
#include "ocmdp/partitions.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace ocmdp {

// Distribution over actions: (action id, probability > 0), sorted by action id.
using Dist = std::vector<std::pair<int, Rat>>;

Dist dirac(int action);
Dist uniform(const std::vector<int>& actions);
std::vector<int> support(const Dist& d);

enum class StrategyKind { OEIS, CIS };

struct IntervalStrategy {
  StrategyKind kind = StrategyKind::OEIS;
  Partition base;      // OEIS: partition of [1,B-1]; CIS: window over [1,period]
  Counter period = 0;  // CIS only
  std::vector<std::vector<Dist>> table;  // [interval][state]

  int interval_of(Counter k) const;  // throws std::domain_error outside the domain
  const Dist& lookup(int q, Counter k) const;
  bool operator==(const IntervalStrategy&) const = default;
};

std::vector<std::string> validate(const IntervalStrategy& s, const OcMdp& m);

IntervalStrategy make_oeis(const Partition& p, std::vector<std::vector<Dist>> table);
IntervalStrategy make_cis(const PeriodicPartition& pp, std::vector<std::vector<Dist>> table);
// Same row in every interval.
IntervalStrategy counter_oblivious(const std::vector<Dist>& row, Counter B);

bool is_based_on(const IntervalStrategy& s, const Partition& p);

// Rows of s re-indexed on a partition that refines its base (e.g. after Refine/Isolate).
std::vector<std::vector<Dist>> rows_on(const IntervalStrategy& s, const Partition& finer);

// Periodic strategy unrolled into an OEIS on [1,B-1] (B finite).
IntervalStrategy unroll_cis(const IntervalStrategy& s, Counter B);

// For q in targets, rows are replaced by the single absorbing action of absorb_targets.
IntervalStrategy adapt_to_absorbed(const IntervalStrategy& s, const OcMdp& absorbed,
                                   const std::vector<int>& targets);

// Per (interval, state) action subsets.
struct SupportAssignment {
  std::vector<std::vector<std::vector<int>>> sets;  // [interval][state] -> sorted action ids
};

class PureStream {
 public:
  PureStream(const Partition& p, const OcMdp& m, StrategyKind kind = StrategyKind::OEIS,
             Counter period = 0, std::vector<std::vector<int>> allowed = {});
  std::optional<IntervalStrategy> next();
  std::size_t count() const;  // saturates at SIZE_MAX

 private:
  Partition p_;
  StrategyKind kind_;
  Counter period_;
  std::vector<std::vector<int>> choices_;  // per state
  std::vector<std::size_t> odo_;           // per (interval, state)
  bool done_ = false;
  bool started_ = false;
};

class SupportStream {
 public:
  SupportStream(const Partition& p, const OcMdp& m, std::vector<std::vector<int>> allowed = {});
  std::optional<SupportAssignment> next();
  std::size_t count() const;

 private:
  std::size_t intervals_;
  std::vector<std::vector<int>> choices_;
  std::vector<std::uint64_t> odo_;  // bitmask per (interval, state), from 1
  bool done_ = false;
  bool started_ = false;
};

std::vector<IntervalStrategy> enumerate_pure(const Partition& p, const OcMdp& m);
std::vector<SupportAssignment> enumerate_supports(const Partition& p, const OcMdp& m);

struct MealyMachine {
  std::vector<Counter> memory;  // memory labels (counter values or residues)
  int initial = 0;              // index into memory
  std::map<std::tuple<int, int, int>, int> update;  // (m, q, a) -> m'; missing = history ends
  std::vector<std::vector<Dist>> next;              // [m][q]
};

MealyMachine export_mealy(const IntervalStrategy& s, const OcMdp& m, Counter k_init, Counter B,
                          bool full = false);
std::string print_mealy(const MealyMachine& mm, const OcMdp& m);

IntervalStrategy parse_strategy(std::string_view text, const OcMdp& m);
std::string print_strategy(const IntervalStrategy& s, const OcMdp& m);
std::string print_dist(const Dist& d, const OcMdp& m);

}  // namespace ocmdp
