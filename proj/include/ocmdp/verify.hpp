#pragma once

#include "ocmdp/compression.hpp"
#include "ocmdp/smt.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ocmdp {

enum class Answer { Yes, No, Inconclusive };
std::string answer_str(Answer a);

struct Verdict {
  Answer answer = Answer::Inconclusive;
  bool exact = false;
  Rat probability;       // valid when exact
  double lo = 0, hi = 0;  // bracket (equal to the probability when exact)
  std::string partition;  // partition the compression was built on
  std::string status;     // solver diagnostics
  bool reach_transformed = false;
  int chain_states = 0;
};

// Decides theta against [lo,hi]: yes iff theta <= lo, no iff hi < theta.
Answer decide(double lo, double hi, const Rat& theta);

struct VerifyConfig {
  NumMode mode = NumMode::Rational;
  SolveConfig solve;
};

// Reachability of target states in a compressed chain.
Rat reach_exact(const CompressedChain& c, const std::vector<bool>& target, int from);
struct Bracket {
  double lo = 0, hi = 1;
  bool capped = false;
};
Bracket reach_bracket(const CompressedChain& c, const std::vector<bool>& target, int from,
                      const SolveConfig& cfg = {});

Verdict verify_bounded_oeis(const OcMdp& m, const IntervalStrategy& s, const Query& q,
                            const VerifyConfig& cfg = {});
Verdict verify_oeis(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg = {});
Verdict verify_cis(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg = {});
// Dispatches on the bound and the strategy kind; bounded cyclic strategies are unrolled.
Verdict verify(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg = {});

SmtScript emit_verification_smt(const OcMdp& m, const IntervalStrategy& s, const Query& q,
                                SmtForm form = SmtForm::Negated);
// Strategy left symbolic: one variable per (interval, state, action).
SmtScript emit_verification_smt(const OcMdp& m, StrategyKind kind, const Partition& base, Counter period,
                                const Query& q, SmtForm form = SmtForm::Negated);

}  // namespace ocmdp
