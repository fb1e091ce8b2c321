#include "ocmdp/strategies.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace ocmdp {

Dist dirac(int action) { return Dist{{action, Rat(1)}}; }

Dist uniform(const std::vector<int>& actions) {
  Dist d;
  Rat p(1, static_cast<unsigned long>(actions.size()));
  for (int a : actions) d.emplace_back(a, p);
  std::sort(d.begin(), d.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return d;
}

std::vector<int> support(const Dist& d) {
  std::vector<int> out;
  for (const auto& [a, p] : d)
    if (p > 0) out.push_back(a);
  return out;
}

int IntervalStrategy::interval_of(Counter k) const {
  if (k < 1) throw std::domain_error("counter value " + counter_str(k) + " has no strategy row");
  Counter key = k;
  if (kind == StrategyKind::CIS) key = ((k - 1) % period) + 1;
  int idx = find_interval(base, key);
  if (idx < 0) throw std::domain_error("counter value " + counter_str(k) + " outside the strategy's partition");
  return idx;
}

const Dist& IntervalStrategy::lookup(int q, Counter k) const {
  return table.at(static_cast<size_t>(interval_of(k))).at(static_cast<size_t>(q));
}

std::vector<std::string> validate(const IntervalStrategy& s, const OcMdp& m) {
  std::vector<std::string> out;
  if (s.kind == StrategyKind::CIS) {
    if (s.period < 1 || s.period == kInf) out.push_back("period must be a positive integer");
    std::string err = check_covers(s.base, s.period + 1);
    if (!err.empty()) out.push_back("window does not cover [1,period]: " + err);
  } else {
    Counter expect = 1;
    for (size_t i = 0; i < s.base.size(); ++i) {
      if (s.base[i].lo != expect || s.base[i].hi < s.base[i].lo) {
        out.push_back("partition is not contiguous from 1 at interval " + std::to_string(i));
        break;
      }
      if (!s.base[i].bounded() && i + 1 != s.base.size()) out.push_back("unbounded interval is not last");
      if (s.base[i].bounded()) expect = s.base[i].hi + 1;
    }
  }
  if (s.table.size() != s.base.size()) {
    out.push_back("table has " + std::to_string(s.table.size()) + " blocks for " +
                  std::to_string(s.base.size()) + " intervals");
    return out;
  }
  for (size_t i = 0; i < s.table.size(); ++i) {
    if (static_cast<int>(s.table[i].size()) != m.num_states()) {
      out.push_back("interval " + std::to_string(i) + " does not have one row per state");
      continue;
    }
    for (int q = 0; q < m.num_states(); ++q) {
      const Dist& d = s.table[i][static_cast<size_t>(q)];
      Rat sum = 0;
      if (d.empty()) out.push_back("empty row for state " + m.states[static_cast<size_t>(q)]);
      for (const auto& [a, p] : d) {
        if (!m.find(q, a))
          out.push_back("action " + (a >= 0 && a < m.num_actions() ? m.actions[static_cast<size_t>(a)] : "?") +
                        " not enabled at " + m.states[static_cast<size_t>(q)]);
        if (p <= 0) out.push_back("non-positive probability at " + m.states[static_cast<size_t>(q)]);
        sum += p;
      }
      if (!d.empty() && sum != 1)
        out.push_back("row for " + m.states[static_cast<size_t>(q)] + " in interval " + std::to_string(i) +
                      " sums to " + rat_str(sum));
    }
  }
  return out;
}

IntervalStrategy make_oeis(const Partition& p, std::vector<std::vector<Dist>> table) {
  IntervalStrategy s;
  s.kind = StrategyKind::OEIS;
  s.base = p;
  s.table = std::move(table);
  return s;
}

IntervalStrategy make_cis(const PeriodicPartition& pp, std::vector<std::vector<Dist>> table) {
  IntervalStrategy s;
  s.kind = StrategyKind::CIS;
  s.base = pp.window;
  s.period = pp.period;
  s.table = std::move(table);
  return s;
}

IntervalStrategy counter_oblivious(const std::vector<Dist>& row, Counter B) {
  Partition p;
  if (B == kInf)
    p.push_back({1, kInf});
  else if (B > 1)
    p.push_back({1, B - 1});
  return make_oeis(p, std::vector<std::vector<Dist>>(p.size(), row));
}

namespace {

std::vector<int> touched_intervals(const IntervalStrategy& s, const Interval& j) {
  std::vector<int> idx;
  if (s.kind == StrategyKind::OEIS) {
    int a = s.interval_of(j.lo);
    int b;
    if (!j.bounded()) {
      if (s.base.back().bounded()) throw std::domain_error("interval exceeds strategy domain");
      b = static_cast<int>(s.base.size()) - 1;
    } else {
      b = s.interval_of(j.hi);
    }
    for (int i = a; i <= b; ++i) idx.push_back(i);
    return idx;
  }
  if (!j.bounded() || j.size() >= s.period) {
    for (size_t i = 0; i < s.base.size(); ++i) idx.push_back(static_cast<int>(i));
    return idx;
  }
  int a = s.interval_of(j.lo);
  int b = s.interval_of(j.hi);
  Counter rlo = ((j.lo - 1) % s.period) + 1, rhi = ((j.hi - 1) % s.period) + 1;
  if (rlo <= rhi) {
    for (int i = a; i <= b; ++i) idx.push_back(i);
  } else {
    for (int i = a; i < static_cast<int>(s.base.size()); ++i) idx.push_back(i);
    for (int i = 0; i <= b; ++i) idx.push_back(i);
  }
  return idx;
}

}  // namespace

bool is_based_on(const IntervalStrategy& s, const Partition& p) {
  for (const auto& j : p) {
    std::vector<int> idx;
    try {
      idx = touched_intervals(s, j);
    } catch (const std::domain_error&) {
      return false;
    }
    for (int i : idx)
      if (s.table[static_cast<size_t>(i)] != s.table[static_cast<size_t>(idx.front())]) return false;
  }
  return true;
}

std::vector<std::vector<Dist>> rows_on(const IntervalStrategy& s, const Partition& finer) {
  std::vector<std::vector<Dist>> rows;
  rows.reserve(finer.size());
  for (const auto& j : finer) {
    auto idx = touched_intervals(s, j);
    for (int i : idx)
      if (s.table[static_cast<size_t>(i)] != s.table[static_cast<size_t>(idx.front())])
        throw std::invalid_argument("strategy is not constant on interval " + format_partition({j}));
    rows.push_back(s.table[static_cast<size_t>(idx.front())]);
  }
  return rows;
}

IntervalStrategy unroll_cis(const IntervalStrategy& s, Counter B) {
  if (s.kind != StrategyKind::CIS) return s;
  if (B == kInf) throw std::domain_error("cannot unroll a cyclic strategy without a finite bound");
  Partition p = expand_periodic({s.period, s.base}, B - 1);
  std::vector<std::vector<Dist>> table;
  for (const auto& j : p) table.push_back(s.table[static_cast<size_t>(s.interval_of(j.lo))]);
  return make_oeis(p, std::move(table));
}

IntervalStrategy adapt_to_absorbed(const IntervalStrategy& s, const OcMdp& absorbed,
                                   const std::vector<int>& targets) {
  IntervalStrategy out = s;
  for (auto& block : out.table)
    for (int q : targets) block.at(static_cast<size_t>(q)) = dirac(absorbed.enabled[static_cast<size_t>(q)].front().id);
  return out;
}

namespace {

std::vector<std::vector<int>> resolve_allowed(const OcMdp& m, std::vector<std::vector<int>> allowed) {
  if (allowed.empty()) {
    allowed.resize(static_cast<size_t>(m.num_states()));
    for (int q = 0; q < m.num_states(); ++q)
      for (const auto& act : m.enabled[static_cast<size_t>(q)]) allowed[static_cast<size_t>(q)].push_back(act.id);
  }
  return allowed;
}

std::size_t sat_pow_product(const std::vector<std::size_t>& factors) {
  std::size_t total = 1;
  for (auto f : factors) {
    if (f != 0 && total > SIZE_MAX / f) return SIZE_MAX;
    total *= f;
  }
  return total;
}

}  // namespace

PureStream::PureStream(const Partition& p, const OcMdp& m, StrategyKind kind, Counter period,
                       std::vector<std::vector<int>> allowed)
    : p_(p), kind_(kind), period_(period), choices_(resolve_allowed(m, std::move(allowed))) {
  odo_.assign(p_.size() * choices_.size(), 0);
  for (const auto& c : choices_)
    if (c.empty()) done_ = true;
}

std::size_t PureStream::count() const {
  std::vector<std::size_t> f;
  for (size_t i = 0; i < p_.size(); ++i)
    for (const auto& c : choices_) f.push_back(c.size());
  return sat_pow_product(f);
}

std::optional<IntervalStrategy> PureStream::next() {
  if (done_) return std::nullopt;
  if (started_) {
    size_t i = odo_.size();
    for (;;) {
      if (i == 0) {
        done_ = true;
        return std::nullopt;
      }
      --i;
      size_t q = i % choices_.size();
      if (++odo_[i] < choices_[q].size()) break;
      odo_[i] = 0;
    }
  }
  started_ = true;
  IntervalStrategy s;
  s.kind = kind_;
  s.period = period_;
  s.base = p_;
  s.table.assign(p_.size(), std::vector<Dist>(choices_.size()));
  for (size_t i = 0; i < p_.size(); ++i)
    for (size_t q = 0; q < choices_.size(); ++q)
      s.table[i][q] = dirac(choices_[q][odo_[i * choices_.size() + q]]);
  return s;
}

SupportStream::SupportStream(const Partition& p, const OcMdp& m, std::vector<std::vector<int>> allowed)
    : intervals_(p.size()), choices_(resolve_allowed(m, std::move(allowed))) {
  odo_.assign(intervals_ * choices_.size(), 1);
  for (const auto& c : choices_) {
    if (c.empty()) done_ = true;
    if (c.size() >= 63) throw std::invalid_argument("too many actions for support enumeration");
  }
}

std::size_t SupportStream::count() const {
  std::vector<std::size_t> f;
  for (size_t i = 0; i < intervals_; ++i)
    for (const auto& c : choices_) f.push_back((std::size_t(1) << c.size()) - 1);
  return sat_pow_product(f);
}

std::optional<SupportAssignment> SupportStream::next() {
  if (done_) return std::nullopt;
  if (started_) {
    size_t i = odo_.size();
    for (;;) {
      if (i == 0) {
        done_ = true;
        return std::nullopt;
      }
      --i;
      size_t q = i % choices_.size();
      if (++odo_[i] < (std::uint64_t(1) << choices_[q].size())) break;
      odo_[i] = 1;
    }
  }
  started_ = true;
  SupportAssignment sa;
  sa.sets.assign(intervals_, std::vector<std::vector<int>>(choices_.size()));
  for (size_t i = 0; i < intervals_; ++i)
    for (size_t q = 0; q < choices_.size(); ++q) {
      std::uint64_t mask = odo_[i * choices_.size() + q];
      for (size_t b = 0; b < choices_[q].size(); ++b)
        if (mask >> b & 1) sa.sets[i][q].push_back(choices_[q][b]);
    }
  return sa;
}

std::vector<IntervalStrategy> enumerate_pure(const Partition& p, const OcMdp& m) {
  std::vector<IntervalStrategy> out;
  PureStream s(p, m);
  while (auto x = s.next()) out.push_back(std::move(*x));
  return out;
}

std::vector<SupportAssignment> enumerate_supports(const Partition& p, const OcMdp& m) {
  std::vector<SupportAssignment> out;
  SupportStream s(p, m);
  while (auto x = s.next()) out.push_back(std::move(*x));
  return out;
}

MealyMachine export_mealy(const IntervalStrategy& s, const OcMdp& m, Counter k_init, Counter B, bool full) {
  MealyMachine mm;
  if (auto errs = validate(s, m); !errs.empty()) throw std::domain_error("invalid strategy: " + errs.front());
  const bool cis = s.kind == StrategyKind::CIS;
  Counter lo, hi;
  if (cis) {
    if (B != kInf) throw std::domain_error("cyclic strategies are exported for unbounded models");
    lo = 0;
    hi = s.period - 1;
  } else {
    if (B == kInf) throw std::domain_error("an open-ended strategy needs infinite memory when B is infinite");
    if (k_init < 1 || k_init > B - 1) throw std::domain_error("initial counter must lie in [1,B-1]");
    lo = 1;
    hi = B - 1;
  }
  if (k_init < 0) throw std::domain_error("negative initial counter");
  Counter m0 = cis ? k_init % s.period : k_init;
  auto row_for = [&](Counter mem, int q) -> const Dist& {
    return cis ? s.lookup(q, mem == 0 ? s.period : mem) : s.lookup(q, mem);
  };
  auto step = [&](Counter mem, int w) -> std::optional<Counter> {
    if (cis) return ((mem + w) % s.period + s.period) % s.period;
    Counter nm = mem + w;
    if (nm < lo || nm > hi) return std::nullopt;
    return nm;
  };

  std::vector<Counter> order;
  std::map<Counter, int> index;
  if (full) {
    if (hi - lo > 50'000'000) throw std::length_error("memory too large to materialise");
    for (Counter c = lo; c <= hi; ++c) {
      index[c] = static_cast<int>(order.size());
      order.push_back(c);
    }
  } else {
    std::deque<Counter> work{m0};
    index[m0] = 0;
    order.push_back(m0);
    while (!work.empty()) {
      Counter mem = work.front();
      work.pop_front();
      for (int q = 0; q < m.num_states(); ++q)
        for (int a : support(row_for(mem, q))) {
          auto nm = step(mem, m.find(q, a)->weight);
          if (nm && !index.count(*nm)) {
            index[*nm] = static_cast<int>(order.size());
            order.push_back(*nm);
            work.push_back(*nm);
          }
        }
    }
  }
  mm.memory = order;
  mm.initial = index.at(m0);
  mm.next.resize(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    for (int q = 0; q < m.num_states(); ++q) {
      mm.next[i].push_back(row_for(order[i], q));
      for (const auto& act : m.enabled[static_cast<size_t>(q)]) {
        auto nm = step(order[i], act.weight);
        if (!nm) continue;
        auto it = index.find(*nm);
        if (it != index.end()) mm.update[{static_cast<int>(i), q, act.id}] = it->second;
      }
    }
  }
  return mm;
}

std::string print_dist(const Dist& d, const OcMdp& m) {
  std::ostringstream os;
  if (d.size() == 1 && d[0].second == 1) {
    os << m.actions[static_cast<size_t>(d[0].first)];
    return os.str();
  }
  for (size_t i = 0; i < d.size(); ++i) {
    if (i) os << ' ';
    os << m.actions[static_cast<size_t>(d[i].first)] << '=' << rat_str(d[i].second);
  }
  return os.str();
}

std::string print_mealy(const MealyMachine& mm, const OcMdp& m) {
  std::ostringstream os;
  os << "mealy memory=" << mm.memory.size() << " initial=" << mm.memory[static_cast<size_t>(mm.initial)] << '\n';
  for (size_t i = 0; i < mm.memory.size(); ++i)
    for (int q = 0; q < m.num_states(); ++q)
      os << "next " << mm.memory[i] << ' ' << m.states[static_cast<size_t>(q)] << " : "
         << print_dist(mm.next[i][static_cast<size_t>(q)], m) << '\n';
  for (const auto& [key, to] : mm.update) {
    auto [i, q, a] = key;
    os << "update " << mm.memory[static_cast<size_t>(i)] << ' ' << m.states[static_cast<size_t>(q)] << ' '
       << m.actions[static_cast<size_t>(a)] << " -> " << mm.memory[static_cast<size_t>(to)] << '\n';
  }
  return os.str();
}

namespace {

Dist parse_row(const std::string& text, int q, const OcMdp& m, int line) {
  Dist d;
  auto toks = split_ws(text);
  if (toks.empty()) throw ParseError("line " + std::to_string(line) + ": empty row");
  for (const auto& tok : toks) {
    auto eq = tok.find('=');
    std::string name = eq == std::string::npos ? tok : tok.substr(0, eq);
    int a = m.action_index(name);
    if (a < 0) throw ParseError("line " + std::to_string(line) + ": unknown action '" + name + "'");
    if (!m.find(q, a))
      throw ParseError("line " + std::to_string(line) + ": action '" + name + "' not enabled at " +
                       m.states[static_cast<size_t>(q)]);
    Rat p = eq == std::string::npos ? Rat(1) : parse_rat(tok.substr(eq + 1));
    d.emplace_back(a, p);
  }
  std::sort(d.begin(), d.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (size_t i = 1; i < d.size(); ++i)
    if (d[i].first == d[i - 1].first) throw ParseError("line " + std::to_string(line) + ": repeated action");
  return d;
}

}  // namespace

IntervalStrategy parse_strategy(std::string_view text, const OcMdp& m) {
  IntervalStrategy s;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  bool header = false;
  std::vector<std::vector<std::optional<Dist>>> rows;
  while (std::getline(is, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (l.empty()) continue;
    auto toks = split_ws(l);
    if (!header) {
      if (toks[0] == "oeis") {
        s.kind = StrategyKind::OEIS;
      } else if (toks[0] == "cis") {
        s.kind = StrategyKind::CIS;
        if (toks.size() != 2 || toks[1].rfind("period=", 0) != 0)
          throw ParseError("line " + std::to_string(line) + ": expected 'cis period=N'");
        s.period = parse_counter(toks[1].substr(7));
        if (s.period < 1 || s.period == kInf) throw ParseError("line " + std::to_string(line) + ": bad period");
      } else {
        throw ParseError("line " + std::to_string(line) + ": expected 'oeis' or 'cis period=N'");
      }
      header = true;
      continue;
    }
    if (toks[0] == "interval") {
      if (toks.size() != 2) throw ParseError("line " + std::to_string(line) + ": expected 'interval LO-HI'");
      Partition p = parse_partition(toks[1]);
      if (p.size() != 1) throw ParseError("line " + std::to_string(line) + ": expected a single interval");
      s.base.push_back(p[0]);
      rows.emplace_back(static_cast<size_t>(m.num_states()));
      continue;
    }
    auto colon = l.find(':');
    if (colon == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected 'state: row'");
    if (rows.empty()) throw ParseError("line " + std::to_string(line) + ": row before any interval");
    std::string qname = trim(l.substr(0, colon));
    int q = m.state_index(qname);
    if (q < 0) throw ParseError("line " + std::to_string(line) + ": unknown state '" + qname + "'");
    auto& slot = rows.back()[static_cast<size_t>(q)];
    if (slot) throw ParseError("line " + std::to_string(line) + ": duplicate row for '" + qname + "'");
    slot = parse_row(l.substr(colon + 1), q, m, line);
  }
  if (!header) throw ParseError("empty strategy file");
  for (size_t i = 0; i < rows.size(); ++i) {
    std::vector<Dist> block;
    for (int q = 0; q < m.num_states(); ++q) {
      auto& slot = rows[i][static_cast<size_t>(q)];
      if (!slot) {
        if (m.enabled[static_cast<size_t>(q)].size() == 1) {
          slot = dirac(m.enabled[static_cast<size_t>(q)][0].id);
        } else {
          throw ParseError("interval " + format_partition({s.base[i]}) + ": no row for state '" +
                           m.states[static_cast<size_t>(q)] + "'");
        }
      }
      block.push_back(*slot);
    }
    s.table.push_back(std::move(block));
  }
  auto errs = validate(s, m);
  if (!errs.empty()) throw ParseError("invalid strategy: " + errs.front());
  return s;
}

std::string print_strategy(const IntervalStrategy& s, const OcMdp& m) {
  std::ostringstream os;
  if (s.kind == StrategyKind::CIS)
    os << "cis period=" << s.period << '\n';
  else
    os << "oeis\n";
  for (size_t i = 0; i < s.base.size(); ++i) {
    os << "interval " << format_partition({s.base[i]}) << '\n';
    for (int q = 0; q < m.num_states(); ++q)
      os << "  " << m.states[static_cast<size_t>(q)] << ": " << print_dist(s.table[i][static_cast<size_t>(q)], m)
         << '\n';
  }
  return os.str();
}

}  // namespace ocmdp
