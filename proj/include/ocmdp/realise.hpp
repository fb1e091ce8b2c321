#pragma once

#include "ocmdp/smt.hpp"
#include "ocmdp/verify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ocmdp {

struct SearchStats {
  std::size_t partitions = 0;   // partitions (or windows) examined
  std::size_t candidates = 0;   // strategies verified
  std::size_t supports = 0;     // support assignments examined
  std::size_t pruned = 0;       // supports discarded by the restricted-model bound
  std::size_t solver_calls = 0;
  std::size_t merged_actions = 0;  // actions skipped as duplicates of an equivalent one
};

struct RealisabilityResult {
  Answer answer = Answer::Inconclusive;
  std::optional<IntervalStrategy> witness;
  std::optional<Verdict> witness_verdict;
  SearchStats stats;
  std::vector<std::string> notes;
  std::vector<std::string> scripts;  // per undecided support, when no solver settled it
};

struct RealiseConfig {
  VerifyConfig verify;
  unsigned threads = 0;           // 0: hardware concurrency
  std::size_t max_candidates = 0; // 0: no limit; hitting the limit makes a negative answer inconclusive
  std::optional<std::string> solver;  // external SMT solver command
  int solver_timeout = 60;
  int samples = 24;               // random interior points tried per support
  unsigned seed = 1;
  std::size_t bound_check_limit = 2'000'000;  // max configurations for the restricted-model bound
};

// Actions that are copies of a lower-id action at the same state (same weight and successors) are skipped,
// and states that cannot be reached from the initial state only keep their first action.
std::vector<std::vector<int>> relevant_actions(const OcMdp& m, const Query& q, std::size_t* merged = nullptr);

RealisabilityResult realise_pure_fixed(const OcMdp& m, const Query& q, const Partition& p,
                                       const RealiseConfig& cfg = {});
RealisabilityResult realise_pure_fixed_cis(const OcMdp& m, const Query& q, const PeriodicPartition& pp,
                                           const RealiseConfig& cfg = {});
RealisabilityResult realise_pure_param(const OcMdp& m, const Query& q, Counter d, Counter n,
                                       const RealiseConfig& cfg = {});
RealisabilityResult realise_pure_param_cis(const OcMdp& m, const Query& q, Counter d, Counter n,
                                           const RealiseConfig& cfg = {});

RealisabilityResult realise_rand_bounded(const OcMdp& m, const Query& q, const Partition& p,
                                         const RealiseConfig& cfg = {});

// Maximum probability over all strategies restricted to the given supports, as a sound upper bound.
// Returns nullopt when the model is too large for the explicit bound.
std::optional<double> restricted_upper_bound(const OcMdp& m, const Query& q, const Partition& p,
                                             const SupportAssignment& sup, std::size_t limit);

SmtScript emit_realisability_smt(const OcMdp& m, const Query& q, const Partition& p,
                                 SmtForm form = SmtForm::Universal, const SupportAssignment* sup = nullptr);
SmtScript emit_realisability_smt(const OcMdp& m, const Query& q, const PeriodicPartition& pp,
                                 SmtForm form = SmtForm::Universal);

}  // namespace ocmdp
