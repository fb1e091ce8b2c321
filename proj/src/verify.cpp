#include "ocmdp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ocmdp {

std::string answer_str(Answer a) {
  switch (a) {
    case Answer::Yes: return "yes";
    case Answer::No: return "no";
    case Answer::Inconclusive: return "inconclusive";
  }
  return "?";
}

Answer decide(double lo, double hi, const Rat& theta) {
  if (theta <= 0) return Answer::Yes;
  if (Rat(lo) >= theta) return Answer::Yes;
  if (Rat(hi) < theta) return Answer::No;
  return Answer::Inconclusive;
}

namespace {

int reach_var(const PolySystem& sys, int from) {
  for (int v = 0; v < sys.size(); ++v)
    if (sys.vars[static_cast<size_t>(v)].role == VarRole::Reach && sys.vars[static_cast<size_t>(v)].from == from)
      return v;
  return -1;
}

}  // namespace

Rat reach_exact(const CompressedChain& c, const std::vector<bool>& target, int from) {
  if (target[static_cast<size_t>(from)]) return 1;
  PolySystem sys = build_reach_system(c, target);
  const int y = reach_var(sys, from);
  if (y < 0 || sys.pinned[static_cast<size_t>(y)]) return 0;
  return solve_linear_exact(sys)[static_cast<size_t>(y)];
}

namespace {

// Gauss-Seidel sweeps of y <- F(y) from `x`, clamped to [0,1].
long sweep(const PolySystem& sys, std::vector<double>& x, long max_sweeps, double eps, bool downward) {
  long it = 0;
  for (; it < max_sweeps; ++it) {
    double change = 0;
    for (int v = 0; v < sys.size(); ++v) {
      if (!sys.is_free(v)) continue;
      double nv = std::clamp(eval_poly(sys.rhs[static_cast<size_t>(v)], x), 0.0, 1.0);
      if (downward) nv = std::min(nv, x[static_cast<size_t>(v)]);
      change = std::max(change, std::abs(nv - x[static_cast<size_t>(v)]));
      x[static_cast<size_t>(v)] = nv;
    }
    if (change <= eps) break;
  }
  return it;
}

bool post_fixed(const PolySystem& sys, const std::vector<double>& u) {
  for (int v = 0; v < sys.size(); ++v)
    if (sys.is_free(v) && eval_poly(sys.rhs[static_cast<size_t>(v)], u) > u[static_cast<size_t>(v)]) return false;
  return true;
}

}  // namespace

Bracket reach_bracket(const CompressedChain& c, const std::vector<bool>& target, int from, const SolveConfig& cfg) {
  Bracket b;
  if (target[static_cast<size_t>(from)]) {
    b.lo = b.hi = 1;
    return b;
  }
  if (c.mode == NumMode::Symbolic) throw std::invalid_argument("reach_bracket needs a numeric chain");
  if (c.all_exact()) {
    b.lo = b.hi = reach_exact(c, target, from).get_d();
    return b;
  }
  // Lower bound: least solution with every entry at its lower end.
  PolySystem lo_sys = build_reach_system(c, target);
  const int y = reach_var(lo_sys, from);
  if (y < 0 || lo_sys.pinned[static_cast<size_t>(y)]) {
    b.lo = b.hi = 0;
    return b;
  }
  std::vector<double> lo;
  bool solved = false;
  try {
    lo = solve_linear_float(lo_sys);
    solved = std::all_of(lo.begin(), lo.end(), [](double v) { return std::isfinite(v) && v >= -1e-9 && v <= 1 + 1e-9; });
  } catch (const std::exception&) {
  }
  if (!solved) {
    lo.assign(static_cast<size_t>(lo_sys.size()), 0.0);
    long it = sweep(lo_sys, lo, cfg.max_iters, cfg.eps * 1e-3, false);
    if (it >= cfg.max_iters) b.capped = true;
  }
  b.lo = std::clamp(lo[static_cast<size_t>(y)], 0.0, 1.0);

  // Upper bound: a post-fixed point of the system with entries at their upper ends.
  CompressedChain upper = c;
  for (auto& row : upper.rows)
    for (auto& e : row)
      if (!e.is_exact) e.lo = e.hi;
  PolySystem hi_sys = build_reach_system(upper, target);
  std::vector<double> u(static_cast<size_t>(hi_sys.size()), 1.0);
  bool have = false;
  try {
    std::vector<double> cand = solve_linear_float(hi_sys);
    for (double slack = 1e-14; slack <= 1e-6 && !have; slack *= 16) {
      std::vector<double> w = cand;
      for (auto& v : w) v = std::isfinite(v) ? std::clamp(v + slack, 0.0, 1.0) : 1.0;
      if (post_fixed(hi_sys, w)) {
        u = std::move(w);
        have = true;
      }
    }
  } catch (const std::exception&) {
  }
  for (int v = 0; v < hi_sys.size(); ++v)
    if (!hi_sys.is_free(v)) u[static_cast<size_t>(v)] = 0;
  // From a post-fixed point (or from 1) downward sweeps stay above the least solution.
  long it = sweep(hi_sys, u, have ? 64 : cfg.max_iters, cfg.eps * 1e-3, true);
  if (!have && it >= cfg.max_iters) b.capped = true;
  b.hi = std::clamp(u[static_cast<size_t>(reach_var(hi_sys, from))], b.lo, 1.0);
  return b;
}

namespace {

void check_query(const OcMdp& m, const IntervalStrategy& s, const Query& q) {
  auto errs = validate(m, q);
  if (!errs.empty()) throw std::invalid_argument("invalid query: " + errs.front());
  auto serrs = validate(s, m);
  if (!serrs.empty()) throw std::invalid_argument("invalid strategy: " + serrs.front());
}

// Value when the initial configuration is absorbing, if it is.
std::optional<Rat> trivial_value(const Query& q) {
  const bool in_t = q.objective.is_target(q.init.state);
  const bool reach = q.objective.kind == ObjectiveKind::Reach;
  if (q.init.counter == 0) return Rat(in_t ? 1 : 0);
  if (reach && in_t) return Rat(1);
  if (q.bound != kInf && q.init.counter == q.bound) return Rat(0);
  return std::nullopt;
}

Verdict exact_verdict(const Rat& p, const Query& q) {
  Verdict v;
  v.exact = true;
  v.probability = p;
  v.lo = v.hi = p.get_d();
  v.answer = p >= q.theta ? Answer::Yes : Answer::No;
  v.status = "exact";
  return v;
}

struct Prepared {
  OcMdp model;
  IntervalStrategy strategy;
  bool transformed = false;
};

Prepared prepare(const OcMdp& m, const IntervalStrategy& s, const Query& q) {
  Prepared p{m, s, false};
  if (q.objective.kind == ObjectiveKind::Reach) {
    p.model = absorb_targets(m, q.objective.targets);
    p.strategy = adapt_to_absorbed(s, p.model, q.objective.targets);
    p.transformed = true;
  }
  return p;
}

void finish_bracket(Verdict& v, const Bracket& b, const Query& q, bool capped) {
  v.lo = b.lo;
  v.hi = b.hi;
  v.answer = capped ? Answer::Inconclusive : decide(b.lo, b.hi, q.theta);
  v.status = capped ? "capped: iteration limit reached before convergence" : "bracket";
}

}  // namespace

Verdict verify_bounded_oeis(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg) {
  if (q.bound == kInf) throw std::invalid_argument("bounded verification needs a finite bound");
  if (s.kind != StrategyKind::OEIS) throw std::invalid_argument("expected an open-ended interval strategy");
  if (q.init.counter < 0 || q.init.counter > q.bound)
    throw std::domain_error("initial counter " + counter_str(q.init.counter) + " outside [0," + counter_str(q.bound) + "]");
  check_query(m, s, q);
  std::string cover = check_covers(s.base, q.bound);
  if (!cover.empty()) throw std::invalid_argument("strategy partition does not cover [1,B-1]: " + cover);
  if (cfg.mode == NumMode::Symbolic) throw std::invalid_argument("symbolic verification goes through SMT emission");

  if (auto t = trivial_value(q)) {
    Verdict v = exact_verdict(*t, q);
    v.status = "absorbing initial configuration";
    return v;
  }
  Prepared pr = prepare(m, s, q);
  Partition p = refine_partition(isolate(pr.strategy.base, q.init.counter));
  CompressedChain c = compress(pr.model, pr.strategy, p, q.bound, {cfg.mode, cfg.solve});
  std::vector<bool> target(static_cast<size_t>(c.size()), false);
  for (int t : q.objective.targets) {
    target[static_cast<size_t>(c.require(t, 0))] = true;
    if (pr.transformed) target[static_cast<size_t>(c.require(t, q.bound))] = true;
  }
  const int init = c.require(q.init.state, q.init.counter);
  Verdict v;
  if (cfg.mode == NumMode::Rational) {
    v = exact_verdict(reach_exact(c, target, init), q);
  } else {
    Bracket b = reach_bracket(c, target, init, cfg.solve);
    v.lo = b.lo;
    v.hi = b.hi;
    v.answer = Rat(b.lo) >= q.theta ? Answer::Yes : Answer::No;
    v.status = "float";
  }
  v.partition = format_partition(p);
  v.reach_transformed = pr.transformed;
  v.chain_states = c.size();
  return v;
}

Verdict verify_oeis(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg) {
  if (q.bound != kInf) return verify_bounded_oeis(m, s, q, cfg);
  if (s.kind != StrategyKind::OEIS) throw std::invalid_argument("expected an open-ended interval strategy");
  check_query(m, s, q);
  std::string cover = check_covers(s.base, kInf);
  if (!cover.empty()) throw std::invalid_argument("strategy partition does not cover the positive counters: " + cover);
  if (cfg.mode == NumMode::Symbolic) throw std::invalid_argument("symbolic verification goes through SMT emission");
  if (auto t = trivial_value(q)) {
    Verdict v = exact_verdict(*t, q);
    v.status = "absorbing initial configuration";
    return v;
  }
  Prepared pr = prepare(m, s, q);
  Partition p = refine_partition(isolate(pr.strategy.base, q.init.counter));
  CompressedChain c = compress(pr.model, pr.strategy, p, kInf, {cfg.mode, cfg.solve});
  std::vector<bool> target(static_cast<size_t>(c.size()), false);
  for (int t : q.objective.targets) target[static_cast<size_t>(c.require(t, 0))] = true;
  const int init = c.require(q.init.state, q.init.counter);
  Verdict v;
  Bracket b = reach_bracket(c, target, init, cfg.solve);
  finish_bracket(v, b, q, b.capped || c.capped);
  v.partition = format_partition(p);
  v.reach_transformed = pr.transformed;
  v.chain_states = c.size();
  return v;
}

Verdict verify_cis(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg) {
  if (s.kind != StrategyKind::CIS) throw std::invalid_argument("expected a cyclic interval strategy");
  if (q.bound != kInf) throw std::invalid_argument("cyclic verification is for unbounded models");
  check_query(m, s, q);
  if (cfg.mode == NumMode::Symbolic) throw std::invalid_argument("symbolic verification goes through SMT emission");
  if (auto t = trivial_value(q)) {
    Verdict v = exact_verdict(*t, q);
    v.status = "absorbing initial configuration";
    return v;
  }
  std::string cover = check_covers(s.base, s.period + 1);
  if (!cover.empty()) throw std::invalid_argument("window partition does not cover [1,period]: " + cover);
  Prepared pr = prepare(m, s, q);
  const Counter rho = pr.strategy.period;
  CisLayout l = cis_layout(pr.strategy.base, rho, q.init.counter);
  OneCounterChain oc = cis_to_ocmc(pr.model, pr.strategy, l.window);
  auto index_of = [&](int state, Counter k) {
    std::string name = pr.model.states[static_cast<size_t>(state)] + "@" + std::to_string(k);
    for (int i = 1; i < oc.num_states(); ++i)
      if (oc.states[static_cast<size_t>(i)] == name) return i;
    throw std::logic_error("window configuration " + name + " is not retained");
  };
  CompressedChain c = compress_ocmc(oc, l.outer, {cfg.mode, cfg.solve});
  std::vector<bool> target(static_cast<size_t>(c.size()), false);
  for (int t : q.objective.targets) target[static_cast<size_t>(c.require(index_of(t, rho), 0))] = true;
  const int init = c.require(index_of(q.init.state, l.window_counter), l.outer_init);
  Verdict v;
  Bracket b = reach_bracket(c, target, init, cfg.solve);
  finish_bracket(v, b, q, b.capped || c.capped);
  v.partition = "window " + format_partition(l.window) + "; outer " + format_partition(l.outer);
  v.reach_transformed = pr.transformed;
  v.chain_states = c.size();
  return v;
}

Verdict verify(const OcMdp& m, const IntervalStrategy& s, const Query& q, const VerifyConfig& cfg) {
  if (q.bound != kInf) {
    if (s.kind == StrategyKind::CIS) return verify_bounded_oeis(m, unroll_cis(s, q.bound), q, cfg);
    return verify_bounded_oeis(m, s, q, cfg);
  }
  if (s.kind == StrategyKind::CIS) return verify_cis(m, s, q, cfg);
  return verify_oeis(m, s, q, cfg);
}

SmtScript emit_verification_smt(const OcMdp& m, const IntervalStrategy& s, const Query& q, SmtForm form) {
  check_query(m, s, q);
  SmtTask t;
  t.model = &m;
  t.query = q;
  t.kind = s.kind;
  t.strategy = &s;
  t.form = form;
  return emit_smt(t);
}

SmtScript emit_verification_smt(const OcMdp& m, StrategyKind kind, const Partition& base, Counter period,
                                const Query& q, SmtForm form) {
  auto errs = validate(m, q);
  if (!errs.empty()) throw std::invalid_argument("invalid query: " + errs.front());
  SmtTask t;
  t.model = &m;
  t.query = q;
  t.kind = kind;
  t.base = base;
  t.period = period;
  t.form = form;
  return emit_smt(t);
}

}  // namespace ocmdp
