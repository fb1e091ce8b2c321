#pragma once

#include "ocmdp/eqsys.hpp"
#include "ocmdp/solvers.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ocmdp {

enum class NumMode { Rational, Float, Symbolic };
std::string mode_str(NumMode m);

struct ChainEntry {
  int to = 0;
  Rat exact;          // valid when is_exact
  double lo = 0, hi = 0;
  bool is_exact = false;
  Poly sym;           // symbolic mode
};

// State 0 is the sink for histories that never change the counter again.
struct CompressedChain {
  NumMode mode = NumMode::Rational;
  std::vector<std::string> names;
  std::vector<Config> configs;  // configs[0] = {-1, 0}
  std::vector<bool> absorbing;
  std::vector<std::vector<ChainEntry>> rows;
  std::shared_ptr<PolySystem> sys;  // symbolic mode only
  std::map<std::pair<int, Counter>, int> index;
  bool capped = false;  // some numeric sub-solve hit its iteration cap

  int size() const { return static_cast<int>(names.size()); }
  int find(int state, Counter k) const;
  int require(int state, Counter k) const;
  bool all_exact() const;
};

bool operator==(const CompressedChain& a, const CompressedChain& b);

// Retained counter values of one interval of a refined partition.
std::vector<Counter> retained_values(const Interval& i);
// {-1,0} (the sink), then Q x {0}, Q x {B} when finite, then retained configurations by counter.
std::vector<Config> retained_states(const Partition& p, int nq, Counter B);

struct CompressConfig {
  NumMode mode = NumMode::Rational;
  SolveConfig solve;
};

// Core construction; folds[i] is the kernel used for interval i.
CompressedChain compress_folds(const std::vector<std::string>& state_names, const Partition& p, Counter B,
                               const std::vector<Fold>& folds, const CompressConfig& cfg,
                               std::shared_ptr<PolySystem> shared = nullptr, const std::string& prefix = "");

// p must be refined and s based on it.
CompressedChain compress(const OcMdp& m, const IntervalStrategy& s, const Partition& p, Counter B,
                         const CompressConfig& cfg = {});
// Refines s's partition, isolating k_init first.
CompressedChain compress_for(const OcMdp& m, const IntervalStrategy& s, Counter B, Counter k_init,
                             const CompressConfig& cfg = {});

// One-counter kernel over the window configurations (plus the sink), read off a window compression with bound
// rho+1. Works for exact and symbolic chains.
struct WindowKernel {
  std::vector<std::string> names;
  std::vector<Config> configs;  // window configuration of each kernel state; configs[0] is the sink
  Fold fold;
};
WindowKernel window_kernel(const CompressedChain& inner, Counter rho);

// One-counter chain whose compression over the outer counter equals the cyclic compression.
OneCounterChain cis_to_ocmc(const OcMdp& m, const IntervalStrategy& s, const Partition& window);
// k covers [1,inf), or [1,B-1] for a chain bounded by B.
// k covers [1,inf), or [1,B-1] for a chain with ceiling B.
CompressedChain compress_ocmc(const OneCounterChain& c, const Partition& k, const CompressConfig& cfg = {});

// Partitions and entry point of the double compression for a cyclic strategy started at counter k_init >= 1.
struct CisLayout {
  Partition window;         // refined window partition of [1,period]
  Partition outer;          // partition of the outer counter
  Counter window_counter;   // counter of the initial window configuration
  Counter outer_init;       // initial outer counter
};
CisLayout cis_layout(const Partition& window_base, Counter period, Counter k_init);
// Index of the kernel state for window configuration (q,k), or -1.
int kernel_state(const WindowKernel& k, int q, Counter c);

std::string dump_chain(const CompressedChain& c);
CompressedChain parse_chain_dump(std::string_view text);

}  // namespace ocmdp
