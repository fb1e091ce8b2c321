#include "ocmdp/compression.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace ocmdp {

std::string mode_str(NumMode m) {
  switch (m) {
    case NumMode::Rational:
      return "rational";
    case NumMode::Float:
      return "float";
    case NumMode::Symbolic:
      return "symbolic";
  }
  return "?";
}

int CompressedChain::find(int state, Counter k) const {
  auto it = index.find({state, k});
  return it == index.end() ? -1 : it->second;
}

int CompressedChain::require(int state, Counter k) const {
  int s = find(state, k);
  if (s < 0) throw std::domain_error("configuration with counter " + counter_str(k) + " is not retained");
  return s;
}

bool CompressedChain::all_exact() const {
  for (size_t s = 0; s < rows.size(); ++s)
    for (const auto& e : rows[s])
      if (!e.is_exact) return false;
  return true;
}

bool operator==(const CompressedChain& a, const CompressedChain& b) {
  if (a.mode != b.mode || a.names != b.names || a.absorbing != b.absorbing || a.rows.size() != b.rows.size())
    return false;
  for (size_t s = 0; s < a.rows.size(); ++s) {
    if (a.rows[s].size() != b.rows[s].size()) return false;
    for (size_t i = 0; i < a.rows[s].size(); ++i) {
      const auto& x = a.rows[s][i];
      const auto& y = b.rows[s][i];
      if (x.to != y.to || x.is_exact != y.is_exact) return false;
      if (x.is_exact ? x.exact != y.exact : (x.lo != y.lo || x.hi != y.hi)) return false;
    }
  }
  return true;
}

std::vector<Counter> retained_values(const Interval& i) {
  if (!i.bounded()) return {i.lo};
  int beta = size_exponent(i);
  if (beta < 1) throw std::invalid_argument("interval " + format_partition({i}) + " does not have size 2^b-1; refine it first");
  std::vector<Counter> out;
  for (int a = 0; a < beta; ++a) {
    out.push_back(i.lo - 1 + (Counter(1) << a));
    out.push_back(i.hi - ((Counter(1) << a) - 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Config> retained_states(const Partition& p, int nq, Counter B) {
  std::vector<Config> out{{-1, 0}};
  for (int q = 0; q < nq; ++q) out.push_back({q, 0});
  if (B != kInf)
    for (int q = 0; q < nq; ++q) out.push_back({q, B});
  for (const auto& i : p)
    for (Counter k : retained_values(i))
      for (int q = 0; q < nq; ++q) out.push_back({q, k});
  return out;
}

namespace {

struct Values {
  std::vector<Rat> exact;
  std::vector<double> lo, hi;
  bool is_exact = false;
};

void push_entry(CompressedChain& c, int from, int to, int var, const Values& vals, NumMode mode) {
  ChainEntry e;
  e.to = to;
  if (mode == NumMode::Symbolic) {
    if (c.sys->pinned[static_cast<size_t>(var)]) return;
    e.sym = poly_var(var);
  } else if (vals.is_exact) {
    const Rat& r = vals.exact[static_cast<size_t>(var)];
    if (r == 0) return;
    e.is_exact = true;
    e.exact = r;
    e.lo = e.hi = r.get_d();
  } else {
    e.lo = vals.lo[static_cast<size_t>(var)];
    e.hi = vals.hi[static_cast<size_t>(var)];
    if (e.hi <= 0) return;
  }
  c.rows[static_cast<size_t>(from)].push_back(std::move(e));
}

// Remaining mass goes to the sink; entries sorted by target.
void close_row(CompressedChain& c, int s, NumMode mode) {
  auto& row = c.rows[static_cast<size_t>(s)];
  std::sort(row.begin(), row.end(), [](const ChainEntry& a, const ChainEntry& b) { return a.to < b.to; });
  ChainEntry sink;
  sink.to = 0;
  if (mode == NumMode::Symbolic) {
    Poly rest = poly_const(Rat(1));
    for (const auto& e : row) rest = poly_add(rest, poly_scale(e.sym, Rat(-1)));
    if (poly_is_zero(rest)) return;
    sink.sym = rest;
  } else {
    bool exact = true;
    Rat total = 0;
    double slo = 0, shi = 0;
    for (const auto& e : row) {
      exact = exact && e.is_exact;
      if (e.is_exact) total += e.exact;
      slo += e.lo;
      shi += e.hi;
    }
    if (exact) {
      Rat rest = Rat(1) - total;
      if (rest == 0) return;
      sink.is_exact = true;
      sink.exact = rest;
      sink.lo = sink.hi = rest.get_d();
    } else {
      sink.lo = std::max(0.0, 1.0 - shi);
      sink.hi = std::min(1.0, 1.0 - slo);
      if (sink.hi <= 0) return;
    }
  }
  row.insert(row.begin(), std::move(sink));
}

}  // namespace

CompressedChain compress_folds(const std::vector<std::string>& state_names, const Partition& p, Counter B,
                               const std::vector<Fold>& folds, const CompressConfig& cfg,
                               std::shared_ptr<PolySystem> shared, const std::string& prefix) {
  std::string err = check_covers(p, B);
  if (!err.empty()) throw std::invalid_argument("partition does not cover [1,B-1]: " + err);
  if (folds.size() != p.size()) throw std::invalid_argument("one kernel per interval expected");
  const int nq = static_cast<int>(state_names.size());
  CompressedChain c;
  c.mode = cfg.mode;
  for (const auto& cf : retained_states(p, nq, B)) {
    int id = c.size();
    c.configs.push_back(cf);
    c.names.push_back(cf.state < 0 ? "bot" : state_names[static_cast<size_t>(cf.state)] + "@" + std::to_string(cf.counter));
    c.absorbing.push_back(cf.state < 0 || cf.counter == 0 || cf.counter == B);
    c.rows.emplace_back();
    c.index[{cf.state, cf.counter}] = id;
  }
  if (cfg.mode == NumMode::Symbolic) c.sys = shared ? shared : std::make_shared<PolySystem>();

  for (size_t ii = 0; ii < p.size(); ++ii) {
    const Interval& iv = p[ii];
    const Fold& f = folds[ii];
    PolySystem local;
    PolySystem& sys = cfg.mode == NumMode::Symbolic ? *c.sys : local;
    std::string pre = prefix + "i" + std::to_string(ii) + "_";
    Values vals;
    if (iv.bounded()) {
      int beta = size_exponent(iv);
      if (beta < 1) throw std::invalid_argument("interval " + format_partition({iv}) + " does not have size 2^b-1");
      BoundedBlock b = add_bounded_system(sys, f, beta, state_names, pre, static_cast<int>(ii));
      refine_unique(sys, b, positivity(f));
      if (cfg.mode == NumMode::Rational) {
        vals.exact = solve_linear_exact(sys);
        vals.is_exact = true;
      } else if (cfg.mode == NumMode::Float) {
        vals.lo = solve_linear_float(sys);
        for (auto& v : vals.lo) v = std::clamp(v, 0.0, 1.0);
        vals.hi = vals.lo;
      }
      const Counter base = iv.lo - 1;
      for (int a = 0; a < beta; ++a) {
        Counter v1 = base + (Counter(1) << a);
        Counter v2 = iv.hi - ((Counter(1) << a) - 1);
        for (int q = 0; q < nq; ++q) {
          int s1 = c.require(q, v1);
          for (int pp = 0; pp < nq; ++pp) {
            push_entry(c, s1, c.require(pp, base + (Counter(1) << (a + 1))), b.up(a, 1, q, pp), vals, cfg.mode);
            push_entry(c, s1, c.require(pp, base), b.down(a, 1, q, pp), vals, cfg.mode);
          }
          if (v2 == v1) continue;
          int s2 = c.require(q, v2);
          for (int pp = 0; pp < nq; ++pp) {
            push_entry(c, s2, c.require(pp, iv.hi + 1), b.up(a, 1, q, pp), vals, cfg.mode);
            push_entry(c, s2, c.require(pp, iv.hi + 1 - (Counter(1) << (a + 1))), b.down(a, 1, q, pp), vals, cfg.mode);
          }
        }
      }
    } else {
      TermBlock b = add_termination_system(sys, f, state_names, pre, static_cast<int>(ii));
      pin_zero_termination(sys, b);
      if (cfg.mode != NumMode::Symbolic) {
        Valuation low = lfp(sys, cfg.solve);
        if (low.status == SolveStatus::Capped) c.capped = true;
        vals.lo = low.value;
        vals.hi = upper_bound_pass(sys, low.value, cfg.solve);
      }
      for (int q = 0; q < nq; ++q) {
        int s = c.require(q, iv.lo);
        for (int pp = 0; pp < nq; ++pp) push_entry(c, s, c.require(pp, iv.lo - 1), b.x(q, pp), vals, cfg.mode);
      }
    }
  }
  for (int s = 0; s < c.size(); ++s)
    if (!c.absorbing[static_cast<size_t>(s)]) close_row(c, s, cfg.mode);
  return c;
}

CompressedChain compress(const OcMdp& m, const IntervalStrategy& s, const Partition& p, Counter B,
                         const CompressConfig& cfg) {
  if (!is_based_on(s, p)) throw std::invalid_argument("strategy is not based on the given partition");
  std::vector<Fold> folds;
  for (const auto& row : rows_on(s, p)) folds.push_back(fold_row(m, row));
  return compress_folds(m.states, p, B, folds, cfg);
}

CompressedChain compress_for(const OcMdp& m, const IntervalStrategy& s, Counter B, Counter k_init,
                             const CompressConfig& cfg) {
  if (s.kind != StrategyKind::OEIS) throw std::domain_error("compress_for expects an open-ended interval strategy");
  Partition p = refine_partition(isolate(s.base, k_init));
  return compress(m, s, p, B, cfg);
}

WindowKernel window_kernel(const CompressedChain& inner, Counter rho) {
  WindowKernel out;
  std::vector<int> map(static_cast<size_t>(inner.size()), -1);
  out.names.push_back("bot");
  map[0] = 0;
  for (int i = 1; i < inner.size(); ++i) {
    const Config& cf = inner.configs[static_cast<size_t>(i)];
    if (cf.counter >= 1 && cf.counter <= rho) {
      map[static_cast<size_t>(i)] = static_cast<int>(out.names.size());
      out.names.push_back(inner.names[static_cast<size_t>(i)]);
      out.configs.push_back(cf);
    }
  }
  out.configs.insert(out.configs.begin(), Config{-1, 0});
  const size_t n = out.names.size();
  out.fold.nq = static_cast<int>(n);
  for (auto& layer : out.fold.d) layer.assign(n, std::vector<Poly>(n));
  out.fold.d[1][0][0] = poly_const(Rat(1));
  for (int i = 1; i < inner.size(); ++i) {
    int from = map[static_cast<size_t>(i)];
    if (from < 0) continue;
    for (const auto& e : inner.rows[static_cast<size_t>(i)]) {
      Poly pe;
      if (inner.mode == NumMode::Symbolic)
        pe = e.sym;
      else if (e.is_exact)
        pe = poly_const(e.exact);
      else
        throw std::logic_error("window compression must be exact or symbolic");
      const Config& to = inner.configs[static_cast<size_t>(e.to)];
      int target, w;
      if (to.state < 0) {
        target = 0;
        w = 0;
      } else if (to.counter == 0) {
        target = map[static_cast<size_t>(inner.require(to.state, rho))];
        w = -1;
      } else if (to.counter == rho + 1) {
        target = map[static_cast<size_t>(inner.require(to.state, 1))];
        w = 1;
      } else {
        target = map[static_cast<size_t>(e.to)];
        w = 0;
      }
      Poly& cell = out.fold.d[static_cast<size_t>(w + 1)][static_cast<size_t>(from)][static_cast<size_t>(target)];
      cell = poly_add(cell, pe);
    }
  }
  return out;
}

OneCounterChain cis_to_ocmc(const OcMdp& m, const IntervalStrategy& s, const Partition& window) {
  if (s.kind != StrategyKind::CIS) throw std::domain_error("cis_to_ocmc expects a cyclic interval strategy");
  const Counter rho = s.period;
  std::vector<Fold> folds;
  for (const auto& row : rows_on(s, window)) folds.push_back(fold_row(m, row));
  WindowKernel k = window_kernel(compress_folds(m.states, window, rho + 1, folds, {}), rho);

  OneCounterChain out;
  out.states = k.names;
  out.trans.resize(out.states.size());
  for (int from = 0; from < k.fold.nq; ++from)
    for (int p = 0; p < k.fold.nq; ++p)
      for (int w = -1; w <= 1; ++w) {
        Poly cell = k.fold.at(w, from, p);
        poly_normalise(cell);
        if (cell.empty()) continue;
        out.trans[static_cast<size_t>(from)].push_back({p, w, cell.front().coef});
      }
  // Successors sorted by target, then weight.
  for (auto& row : out.trans)
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      return a.to != b.to ? a.to < b.to : a.weight < b.weight;
    });
  return out;
}

CisLayout cis_layout(const Partition& window_base, Counter period, Counter k_init) {
  if (period < 1) throw std::invalid_argument("period must be positive");
  if (k_init < 1) throw std::domain_error("cyclic layout needs a positive initial counter");
  CisLayout l;
  const Counter r = k_init % period, n0 = k_init / period;
  l.window = refine_partition(isolate(window_base, r));
  if (n0 >= 1) {
    l.outer = refine({1, n0});
    l.outer.push_back({n0 + 1, kInf});
  } else {
    l.outer = {{1, kInf}};
  }
  l.window_counter = r == 0 ? period : r;
  l.outer_init = r == 0 ? n0 : n0 + 1;
  return l;
}

int kernel_state(const WindowKernel& k, int q, Counter c) {
  for (size_t i = 1; i < k.configs.size(); ++i)
    if (k.configs[i].state == q && k.configs[i].counter == c) return static_cast<int>(i);
  return -1;
}

CompressedChain compress_ocmc(const OneCounterChain& c, const Partition& k, const CompressConfig& cfg) {
  std::vector<Fold> folds(k.size(), fold_chain(c));
  // A bounded partition of [1,B-1] makes B the ceiling.
  Counter B = k.empty() || !k.back().bounded() ? kInf : k.back().hi + 1;
  if (k.empty()) B = 1;
  return compress_folds(c.states, k, B, folds, cfg);
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string poly_str(const Poly& p, const PolySystem* sys) {
  std::ostringstream os;
  if (p.empty()) os << '0';
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) os << '+';
    os << rat_str(p[i].coef);
    for (int v : p[i].vars) os << '*' << (sys ? sys->vars[static_cast<size_t>(v)].name : "v" + std::to_string(v));
  }
  return os.str();
}

}  // namespace

std::string dump_chain(const CompressedChain& c) {
  std::ostringstream os;
  os << "chain mode=" << mode_str(c.mode) << " states=" << c.size() << '\n';
  for (int s = 0; s < c.size(); ++s) {
    os << c.names[static_cast<size_t>(s)];
    if (c.absorbing[static_cast<size_t>(s)]) {
      os << " : absorbing\n";
      continue;
    }
    os << " ->";
    const auto& row = c.rows[static_cast<size_t>(s)];
    for (size_t i = 0; i < row.size(); ++i) {
      const auto& e = row[i];
      os << (i ? ", " : " ") << c.names[static_cast<size_t>(e.to)] << ' ';
      if (c.mode == NumMode::Symbolic)
        os << poly_str(e.sym, c.sys.get());
      else if (e.is_exact)
        os << rat_str(e.exact);
      else
        os << '[' << fmt_double(e.lo) << ',' << fmt_double(e.hi) << ']';
    }
    os << '\n';
  }
  return os.str();
}

CompressedChain parse_chain_dump(std::string_view text) {
  CompressedChain c;
  std::istringstream is{std::string(text)};
  std::string line;
  int ln = 0;
  std::map<std::string, int> state_ids;
  auto fail = [&](const std::string& msg) { throw ParseError("line " + std::to_string(ln) + ": " + msg); };
  if (!std::getline(is, line)) throw ParseError("empty chain dump");
  ++ln;
  auto head = split_ws(line);
  if (head.size() < 2 || head[0] != "chain") fail("expected 'chain mode=... states=...'");
  std::string mode = head[1].substr(head[1].find('=') + 1);
  if (mode == "rational")
    c.mode = NumMode::Rational;
  else if (mode == "float")
    c.mode = NumMode::Float;
  else
    fail("only rational and float dumps can be parsed");
  std::vector<std::string> lines;
  while (std::getline(is, line)) {
    ++ln;
    if (trim(line).empty()) continue;
    std::string l = trim(line);
    bool absorbing = l.size() > 12 && l.substr(l.size() - 12) == " : absorbing";
    std::string name = absorbing ? l.substr(0, l.size() - 12) : trim(l.substr(0, l.find(" ->")));
    if (!absorbing && l.find(" ->") == std::string::npos) fail("expected '->' or ': absorbing'");
    int id = c.size();
    c.names.push_back(name);
    c.absorbing.push_back(absorbing);
    c.rows.emplace_back();
    Config cf{-1, 0};
    if (name != "bot") {
      auto at = name.rfind('@');
      if (at == std::string::npos) fail("state name without '@counter'");
      std::string sn = name.substr(0, at);
      auto it = state_ids.find(sn);
      if (it == state_ids.end()) it = state_ids.emplace(sn, static_cast<int>(state_ids.size())).first;
      cf = {it->second, parse_counter(name.substr(at + 1))};
    }
    c.configs.push_back(cf);
    c.index[{cf.state, cf.counter}] = id;
    lines.push_back(absorbing ? "" : l.substr(l.find(" ->") + 3));
  }
  std::map<std::string, int> by_name;
  for (int s = 0; s < c.size(); ++s) by_name[c.names[static_cast<size_t>(s)]] = s;
  for (int s = 0; s < c.size(); ++s) {
    const std::string& body = lines[static_cast<size_t>(s)];
    if (trim(body).empty()) continue;
    std::string rest = body;
    size_t pos = 0;
    while (pos < rest.size()) {
      while (pos < rest.size() && (rest[pos] == ' ' || rest[pos] == ',')) ++pos;
      if (pos >= rest.size()) break;
      size_t sp = rest.find(' ', pos);
      if (sp == std::string::npos) throw ParseError("state " + c.names[static_cast<size_t>(s)] + ": dangling successor");
      std::string target = rest.substr(pos, sp - pos);
      pos = sp + 1;
      auto it = by_name.find(target);
      if (it == by_name.end()) throw ParseError("unknown successor '" + target + "'");
      ChainEntry e;
      e.to = it->second;
      if (rest[pos] == '[') {
        size_t close = rest.find(']', pos);
        if (close == std::string::npos) throw ParseError("unterminated bracket");
        auto parts = split(rest.substr(pos + 1, close - pos - 1), ',');
        if (parts.size() != 2) throw ParseError("bracket needs two values");
        e.lo = std::stod(parts[0]);
        e.hi = std::stod(parts[1]);
        pos = close + 1;
      } else {
        size_t end = rest.find(',', pos);
        std::string num = rest.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        e.is_exact = true;
        e.exact = parse_rat(num);
        e.lo = e.hi = e.exact.get_d();
        pos = end == std::string::npos ? rest.size() : end;
      }
      c.rows[static_cast<size_t>(s)].push_back(std::move(e));
    }
  }
  return c;
}

}  // namespace ocmdp
