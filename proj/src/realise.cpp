#include "ocmdp/realise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

namespace ocmdp {

namespace {

bool same_behaviour(const Action& a, const Action& b) {
  if (a.weight != b.weight || a.succ.size() != b.succ.size()) return false;
  for (size_t i = 0; i < a.succ.size(); ++i)
    if (a.succ[i].target != b.succ[i].target || a.succ[i].prob != b.succ[i].prob) return false;
  return true;
}

void check_query(const OcMdp& m, const Query& q) {
  auto errs = validate(m, q);
  if (!errs.empty()) throw std::invalid_argument("invalid query: " + errs.front());
}

unsigned thread_count(const RealiseConfig& cfg) {
  unsigned t = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  return std::max(1u, t);
}

struct Search {
  bool inconclusive = false;  // some candidate straddled the threshold
  bool limited = false;       // max_candidates reached
  std::optional<IntervalStrategy> witness;
  std::optional<Verdict> verdict;
};

// Verifies candidates in order-preserving batches and stops at the first yes.
void first_yes(const std::function<std::optional<IntervalStrategy>()>& next,
               const std::function<Verdict(const IntervalStrategy&)>& check, const RealiseConfig& cfg,
               SearchStats& stats, Search& out) {
  const unsigned threads = thread_count(cfg);
  const size_t batch_size = threads == 1 ? 1 : threads * 4;
  for (;;) {
    std::vector<IntervalStrategy> batch;
    while (batch.size() < batch_size) {
      if (cfg.max_candidates && stats.candidates + batch.size() >= cfg.max_candidates) {
        out.limited = true;
        break;
      }
      auto s = next();
      if (!s) break;
      batch.push_back(std::move(*s));
    }
    if (batch.empty()) return;
    std::vector<std::optional<Verdict>> res(batch.size());
    std::exception_ptr err;
    std::mutex err_mu;
    std::atomic<size_t> cursor{0};
    auto work = [&] {
      for (size_t i; (i = cursor.fetch_add(1)) < batch.size();) {
        try {
          res[i] = check(batch[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    };
    if (threads == 1 || batch.size() == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < std::min<size_t>(threads, batch.size()); ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);
    for (size_t i = 0; i < batch.size(); ++i) {
      ++stats.candidates;
      if (res[i]->answer == Answer::Yes) {
        out.witness = std::move(batch[i]);
        out.verdict = std::move(res[i]);
        return;
      }
      if (res[i]->answer == Answer::Inconclusive) out.inconclusive = true;
    }
    if (out.limited) return;
  }
}

Answer negative(const Search& s) { return s.inconclusive || s.limited ? Answer::Inconclusive : Answer::No; }

void add_search_notes(RealisabilityResult& r, const Search& s) {
  if (s.limited) r.notes.push_back("candidate limit reached");
  if (s.inconclusive) r.notes.push_back("some candidates could not be separated from the threshold");
}

RealisabilityResult pure_search(const OcMdp& m, const Query& q, const Partition& p, StrategyKind kind, Counter period,
                                const RealiseConfig& cfg, SearchStats& stats, Search& search) {
  RealisabilityResult r;
  auto allowed = relevant_actions(m, q, &stats.merged_actions);
  PureStream stream(p, m, kind, period, allowed);
  first_yes([&] { return stream.next(); }, [&](const IntervalStrategy& s) { return verify(m, s, q, cfg.verify); },
            cfg, stats, search);
  return r;
}

}  // namespace

std::vector<std::vector<int>> relevant_actions(const OcMdp& m, const Query& q, std::size_t* merged) {
  const int n = m.num_states();
  std::vector<bool> seen(static_cast<size_t>(n), false);
  std::vector<int> stack{q.init.state};
  seen[static_cast<size_t>(q.init.state)] = true;
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (const auto& a : m.enabled[static_cast<size_t>(s)])
      for (const auto& t : a.succ)
        if (!seen[static_cast<size_t>(t.target)]) {
          seen[static_cast<size_t>(t.target)] = true;
          stack.push_back(t.target);
        }
  }
  const bool reach = q.objective.kind == ObjectiveKind::Reach;
  std::vector<std::vector<int>> out(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto& acts = m.enabled[static_cast<size_t>(s)];
    auto& keep = out[static_cast<size_t>(s)];
    if (!seen[static_cast<size_t>(s)] || (reach && q.objective.is_target(s))) {
      keep.push_back(acts.front().id);
      continue;
    }
    for (size_t i = 0; i < acts.size(); ++i) {
      bool dup = false;
      for (size_t j = 0; j < i && !dup; ++j)
        dup = std::find(keep.begin(), keep.end(), acts[j].id) != keep.end() && same_behaviour(acts[i], acts[j]);
      if (dup) {
        if (merged) ++*merged;
        continue;
      }
      keep.push_back(acts[i].id);
    }
  }
  return out;
}

RealisabilityResult realise_pure_fixed(const OcMdp& m, const Query& q, const Partition& p, const RealiseConfig& cfg) {
  check_query(m, q);
  std::string cover = check_covers(p, q.bound);
  if (!cover.empty()) throw std::invalid_argument("partition does not cover the counter range: " + cover);
  RealisabilityResult r;
  Search s;
  r.stats.partitions = 1;
  pure_search(m, q, p, StrategyKind::OEIS, 0, cfg, r.stats, s);
  r.answer = s.witness ? Answer::Yes : negative(s);
  r.witness = s.witness;
  r.witness_verdict = s.verdict;
  add_search_notes(r, s);
  return r;
}

RealisabilityResult realise_pure_fixed_cis(const OcMdp& m, const Query& q, const PeriodicPartition& pp,
                                           const RealiseConfig& cfg) {
  check_query(m, q);
  if (q.bound != kInf) throw std::invalid_argument("cyclic strategies are searched on unbounded models");
  std::string cover = check_covers(pp.window, pp.period + 1);
  if (!cover.empty()) throw std::invalid_argument("window does not cover [1,period]: " + cover);
  RealisabilityResult r;
  Search s;
  r.stats.partitions = 1;
  pure_search(m, q, pp.window, StrategyKind::CIS, pp.period, cfg, r.stats, s);
  r.answer = s.witness ? Answer::Yes : negative(s);
  r.witness = s.witness;
  r.witness_verdict = s.verdict;
  add_search_notes(r, s);
  return r;
}

RealisabilityResult realise_pure_param(const OcMdp& m, const Query& q, Counter d, Counter n, const RealiseConfig& cfg) {
  check_query(m, q);
  if (d < 1 || n < 1) throw std::invalid_argument("d and n must be positive");
  RealisabilityResult r;
  Search s;
  PartitionStream parts(d, n, q.bound);
  while (auto p = parts.next()) {
    ++r.stats.partitions;
    pure_search(m, q, *p, StrategyKind::OEIS, 0, cfg, r.stats, s);
    if (s.witness || s.limited) break;
  }
  if (r.stats.partitions == 0) {
    r.answer = Answer::No;
    r.notes.push_back("no partition of the counter range is compatible with d and n");
    return r;
  }
  r.answer = s.witness ? Answer::Yes : negative(s);
  r.witness = s.witness;
  r.witness_verdict = s.verdict;
  add_search_notes(r, s);
  return r;
}

RealisabilityResult realise_pure_param_cis(const OcMdp& m, const Query& q, Counter d, Counter n,
                                           const RealiseConfig& cfg) {
  check_query(m, q);
  if (q.bound != kInf) throw std::invalid_argument("cyclic strategies are searched on unbounded models");
  if (d < 1 || n < 1) throw std::invalid_argument("d and n must be positive");
  const Counter max_period = checked_mul(d, n);
  RealisabilityResult r;
  Search s;
  for (Counter rho = 1; rho <= max_period && !s.witness && !s.limited; ++rho) {
    PartitionStream windows(d, n, rho + 1);
    while (auto w = windows.next()) {
      ++r.stats.partitions;
      pure_search(m, q, *w, StrategyKind::CIS, rho, cfg, r.stats, s);
      if (s.witness || s.limited) break;
    }
  }
  r.answer = s.witness ? Answer::Yes : negative(s);
  r.witness = s.witness;
  r.witness_verdict = s.verdict;
  add_search_notes(r, s);
  return r;
}

std::optional<double> restricted_upper_bound(const OcMdp& m, const Query& q, const Partition& p,
                                             const SupportAssignment& sup, std::size_t limit) {
  const Counter B = q.bound;
  if (B == kInf) return std::nullopt;
  const int nq = m.num_states();
  if (static_cast<double>(nq) * static_cast<double>(B + 1) > static_cast<double>(limit)) return std::nullopt;
  const bool reach = q.objective.kind == ObjectiveKind::Reach;
  auto idx = [&](int s, Counter k) { return static_cast<size_t>(k) * static_cast<size_t>(nq) + static_cast<size_t>(s); };
  const size_t total = static_cast<size_t>(B + 1) * static_cast<size_t>(nq);
  // fixed[i]: -1 free, else the value.
  std::vector<int> fixed(total, -1);
  for (Counter k = 0; k <= B; ++k)
    for (int s = 0; s < nq; ++s) {
      bool t = q.objective.is_target(s);
      if (k == 0) fixed[idx(s, k)] = t ? 1 : 0;
      else if (k == B) fixed[idx(s, k)] = reach && t ? 1 : 0;
      else if (reach && t) fixed[idx(s, k)] = 1;
    }
  std::vector<int> iv_of(static_cast<size_t>(B + 1), -1);
  for (Counter k = 1; k < B; ++k) iv_of[static_cast<size_t>(k)] = find_interval(p, k);
  auto actions = [&](int s, Counter k) -> const std::vector<int>& {
    return sup.sets[static_cast<size_t>(iv_of[static_cast<size_t>(k)])][static_cast<size_t>(s)];
  };
  auto act = [&](int s, int a) -> const Action* { return m.find(s, a); };

  // Configurations that can reach a target under the supports; the rest are 0.
  std::vector<std::vector<size_t>> pred(total);
  for (Counter k = 1; k < B; ++k)
    for (int s = 0; s < nq; ++s) {
      if (fixed[idx(s, k)] >= 0) continue;
      for (int a : actions(s, k)) {
        const Action* ac = act(s, a);
        if (!ac) continue;
        for (const auto& t : ac->succ) pred[idx(t.target, k + ac->weight)].push_back(idx(s, k));
      }
    }
  std::vector<bool> live(total, false);
  std::vector<size_t> stack;
  for (size_t i = 0; i < total; ++i)
    if (fixed[i] == 1) {
      live[i] = true;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    size_t i = stack.back();
    stack.pop_back();
    for (size_t j : pred[i])
      if (!live[j]) {
        live[j] = true;
        stack.push_back(j);
      }
  }
  std::vector<double> v(total, 0.0);
  for (size_t i = 0; i < total; ++i) v[i] = fixed[i] >= 0 ? fixed[i] : (live[i] ? 1.0 : 0.0);
  // Downward value iteration from 1 stays above the optimum.
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0;
    for (Counter k = 1; k < B; ++k)
      for (int s = 0; s < nq; ++s) {
        size_t i = idx(s, k);
        if (fixed[i] >= 0 || !live[i]) continue;
        double best = 0;
        for (int a : actions(s, k)) {
          const Action* ac = act(s, a);
          if (!ac) continue;
          double sum = 0;
          for (const auto& t : ac->succ) sum += t.prob.get_d() * v[idx(t.target, k + ac->weight)];
          best = std::max(best, sum);
        }
        best = std::min(best, v[i]);
        change = std::max(change, v[i] - best);
        v[i] = best;
      }
    if (change < 1e-15) break;
  }
  return v[idx(q.init.state, q.init.counter)];
}

namespace {

IntervalStrategy strategy_from_weights(const Partition& p, const SupportAssignment& sup,
                                       const std::function<Rat(size_t j, int s, size_t i, size_t n)>& weight) {
  std::vector<std::vector<Dist>> table(p.size());
  for (size_t j = 0; j < p.size(); ++j)
    for (size_t s = 0; s < sup.sets[j].size(); ++s) {
      const auto& acts = sup.sets[j][s];
      Dist d;
      Rat total = 0;
      for (size_t i = 0; i < acts.size(); ++i) {
        Rat w = weight(j, static_cast<int>(s), i, acts.size());
        d.emplace_back(acts[i], w);
        total += w;
      }
      for (auto& [a, w] : d) w /= total;
      table[j].push_back(std::move(d));
    }
  return make_oeis(p, std::move(table));
}

bool is_pure(const SupportAssignment& sup) {
  for (const auto& row : sup.sets)
    for (const auto& s : row)
      if (s.size() > 1) return false;
  return true;
}

}  // namespace

RealisabilityResult realise_rand_bounded(const OcMdp& m, const Query& q, const Partition& p, const RealiseConfig& cfg) {
  check_query(m, q);
  if (q.bound == kInf) throw std::invalid_argument("randomised support search needs a finite bound");
  std::string cover = check_covers(p, q.bound);
  if (!cover.empty()) throw std::invalid_argument("partition does not cover [1,B-1]: " + cover);

  RealisabilityResult r;
  r.stats.partitions = 1;
  Search pure;
  pure_search(m, q, p, StrategyKind::OEIS, 0, cfg, r.stats, pure);
  if (pure.witness) {
    r.answer = Answer::Yes;
    r.witness = pure.witness;
    r.witness_verdict = pure.verdict;
    r.notes.push_back("a pure strategy already meets the threshold");
    return r;
  }

  auto allowed = relevant_actions(m, q);
  SupportStream supports(p, m, allowed);
  std::mt19937 rng(cfg.seed);
  std::uniform_int_distribution<int> pick(1, 16);
  VerifyConfig exact = cfg.verify;
  exact.mode = NumMode::Rational;
  size_t undecided = 0;
  auto try_witness = [&](const IntervalStrategy& s) {
    ++r.stats.candidates;
    Verdict v = verify(m, s, q, exact);
    if (v.answer != Answer::Yes) return false;
    r.answer = Answer::Yes;
    r.witness = s;
    r.witness_verdict = v;
    return true;
  };

  while (auto sup = supports.next()) {
    ++r.stats.supports;
    if (is_pure(*sup)) continue;  // settled by the pure search
    if (auto ub = restricted_upper_bound(m, q, p, *sup, cfg.bound_check_limit); ub && *ub + 1e-9 < q.theta.get_d()) {
      ++r.stats.pruned;
      continue;
    }
    if (try_witness(strategy_from_weights(p, *sup, [](size_t, int, size_t, size_t) { return Rat(1); }))) return r;
    // The bounded chain is finite, so probability one depends only on which edges are present:
    // if the uniform choice misses it, so does every strategy with this support.
    if (q.theta == 1) {
      ++r.stats.pruned;
      continue;
    }
    bool found = false;
    for (int k = 0; k < cfg.samples && !found; ++k) {
      auto s = strategy_from_weights(p, *sup, [&](size_t, int, size_t, size_t) { return Rat(pick(rng)); });
      found = try_witness(s);
    }
    if (found) return r;

    SmtTask task;
    task.model = &m;
    task.query = q;
    task.base = p;
    task.supports = &*sup;
    task.form = SmtForm::Unique;
    SmtScript script = emit_smt(task);
    if (cfg.solver) {
      ++r.stats.solver_calls;
      SolverOutcome o = run_solver(*cfg.solver, script.text, cfg.solver_timeout);
      if (o.status == SolverOutcome::Status::Unsat) continue;
      if (o.status == SolverOutcome::Status::Sat) {
        bool complete = true;
        auto s = strategy_from_weights(p, *sup, [&](size_t j, int st, size_t i, size_t) -> Rat {
          int a = sup->sets[j][static_cast<size_t>(st)][i];
          auto it = script.strategy_vars.find({static_cast<int>(j), st, a});
          if (it == script.strategy_vars.end()) return Rat(1);  // state without a choice
          auto val = o.model.find(it->second);
          if (val == o.model.end() || val->second <= 0) {
            complete = false;
            return Rat(1);
          }
          return val->second;
        });
        if (complete && try_witness(s)) {
          r.notes.push_back("witness taken from the solver model");
          return r;
        }
        r.notes.push_back("solver reported sat but its model could not be turned into an exact witness");
      }
    }
    ++undecided;
    r.scripts.push_back(script.text);
  }
  if (undecided == 0) {
    r.answer = Answer::No;
  } else {
    r.answer = Answer::Inconclusive;
    r.notes.push_back(std::to_string(undecided) + " support assignment(s) need an SMT solver");
  }
  return r;
}

SmtScript emit_realisability_smt(const OcMdp& m, const Query& q, const Partition& p, SmtForm form,
                                 const SupportAssignment* sup) {
  check_query(m, q);
  SmtTask t;
  t.model = &m;
  t.query = q;
  t.kind = StrategyKind::OEIS;
  t.base = p;
  t.supports = sup;
  t.form = form;
  return emit_smt(t);
}

SmtScript emit_realisability_smt(const OcMdp& m, const Query& q, const PeriodicPartition& pp, SmtForm form) {
  check_query(m, q);
  SmtTask t;
  t.model = &m;
  t.query = q;
  t.kind = StrategyKind::CIS;
  t.base = pp.window;
  t.period = pp.period;
  t.form = form;
  return emit_smt(t);
}

}  // namespace ocmdp
