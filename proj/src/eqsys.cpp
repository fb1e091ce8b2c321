#include "ocmdp/eqsys.hpp"

#include "ocmdp/compression.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace ocmdp {

Poly poly_const(const Rat& c) {
  if (c == 0) return {};
  return {Term{c, {}}};
}

Poly poly_var(int v) { return {Term{Rat(1), {v}}}; }

void poly_normalise(Poly& p) {
  std::map<std::vector<int>, Rat> acc;
  for (auto& t : p) {
    std::sort(t.vars.begin(), t.vars.end());
    acc[t.vars] += t.coef;
  }
  p.clear();
  for (auto& [vars, c] : acc)
    if (c != 0) p.push_back({c, vars});
}

Poly poly_add(const Poly& a, const Poly& b) {
  Poly r = a;
  r.insert(r.end(), b.begin(), b.end());
  poly_normalise(r);
  return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& x : a)
    for (const auto& y : b) {
      Term t{x.coef * y.coef, x.vars};
      t.vars.insert(t.vars.end(), y.vars.begin(), y.vars.end());
      r.push_back(std::move(t));
    }
  poly_normalise(r);
  return r;
}

Poly poly_scale(const Poly& a, const Rat& c) {
  if (c == 0) return {};
  Poly r = a;
  for (auto& t : r) t.coef *= c;
  return r;
}

int poly_degree(const Poly& p) {
  int d = 0;
  for (const auto& t : p) d = std::max(d, static_cast<int>(t.vars.size()));
  return d;
}

bool poly_is_zero(const Poly& p) {
  for (const auto& t : p)
    if (t.coef != 0) return false;
  return true;
}

int PolySystem::add_var(VarInfo info, Poly rhs_poly) {
  vars.push_back(std::move(info));
  rhs.push_back(std::move(rhs_poly));
  pinned.push_back(false);
  return size() - 1;
}

int PolySystem::degree() const {
  int d = 0;
  for (int v = 0; v < size(); ++v)
    if (is_free(v)) d = std::max(d, poly_degree(rhs[static_cast<size_t>(v)]));
  return d;
}

std::string PolySystem::dump() const {
  std::ostringstream os;
  for (int v = 0; v < size(); ++v) {
    const auto& info = vars[static_cast<size_t>(v)];
    if (info.external) {
      os << info.name << " : free\n";
      continue;
    }
    os << info.name << " = ";
    if (pinned[static_cast<size_t>(v)]) {
      os << "0 (pinned)\n";
      continue;
    }
    const Poly& p = rhs[static_cast<size_t>(v)];
    if (p.empty()) os << '0';
    for (size_t i = 0; i < p.size(); ++i) {
      if (i) os << " + ";
      os << rat_str(p[i].coef);
      for (int x : p[i].vars) os << '*' << vars[static_cast<size_t>(x)].name;
    }
    os << '\n';
  }
  return os.str();
}

Fold fold(const OcMdp& m, const std::function<Poly(int q, int a)>& sigma) {
  Fold f;
  f.nq = m.num_states();
  for (auto& layer : f.d) layer.assign(static_cast<size_t>(f.nq), std::vector<Poly>(static_cast<size_t>(f.nq)));
  for (int q = 0; q < f.nq; ++q)
    for (const auto& act : m.enabled[static_cast<size_t>(q)]) {
      Poly s = sigma(q, act.id);
      if (s.empty()) continue;
      for (const auto& t : act.succ) {
        Poly& cell = f.d[static_cast<size_t>(act.weight + 1)][static_cast<size_t>(q)][static_cast<size_t>(t.target)];
        cell = poly_add(cell, poly_scale(s, t.prob));
      }
    }
  return f;
}

Fold fold_row(const OcMdp& m, const std::vector<Dist>& row) {
  return fold(m, [&](int q, int a) -> Poly {
    for (const auto& [b, p] : row.at(static_cast<size_t>(q)))
      if (b == a) return poly_const(p);
    return {};
  });
}

Fold fold_chain(const OneCounterChain& c) {
  Fold f;
  f.nq = c.num_states();
  for (auto& layer : f.d) layer.assign(static_cast<size_t>(f.nq), std::vector<Poly>(static_cast<size_t>(f.nq)));
  for (int q = 0; q < f.nq; ++q)
    for (const auto& e : c.trans[static_cast<size_t>(q)]) {
      Poly& cell = f.d[static_cast<size_t>(e.weight + 1)][static_cast<size_t>(q)][static_cast<size_t>(e.to)];
      cell = poly_add(cell, poly_const(e.prob));
    }
  return f;
}

Positivity positivity(const Fold& f) {
  Positivity pos;
  for (size_t u = 0; u < 3; ++u) {
    pos[u].assign(static_cast<size_t>(f.nq), std::vector<bool>(static_cast<size_t>(f.nq), false));
    for (size_t q = 0; q < static_cast<size_t>(f.nq); ++q)
      for (size_t p = 0; p < static_cast<size_t>(f.nq); ++p)
        for (const auto& t : f.d[u][q][p])
          if (t.coef > 0) pos[u][q][p] = true;
  }
  return pos;
}

namespace {

std::string state_name(const std::vector<std::string>& names, int q) {
  return q >= 0 && q < static_cast<int>(names.size()) ? names[static_cast<size_t>(q)] : std::to_string(q);
}

}  // namespace

TermBlock add_termination_system(PolySystem& sys, const Fold& f, const std::vector<std::string>& names,
                                 const std::string& prefix, int interval) {
  TermBlock b;
  b.nq = f.nq;
  const int nq = f.nq;
  for (int q = 0; q < nq; ++q)
    for (int p = 0; p < nq; ++p) {
      VarInfo info;
      info.name = prefix + "term_" + state_name(names, q) + "_" + state_name(names, p);
      info.role = VarRole::Term;
      info.from = q;
      info.to = p;
      info.interval = interval;
      b.ids.push_back(sys.add_var(info));
    }
  for (int q = 0; q < nq; ++q) {
    std::vector<int> group;
    for (int p = 0; p < nq; ++p) {
      Poly r = f.at(-1, q, p);
      for (int t = 0; t < nq; ++t) {
        r = poly_add(r, poly_mul(f.at(0, q, t), poly_var(b.x(t, p))));
        const Poly& up = f.at(1, q, t);
        if (up.empty()) continue;
        for (int t2 = 0; t2 < nq; ++t2)
          r = poly_add(r, poly_mul(up, poly_mul(poly_var(b.x(t, t2)), poly_var(b.x(t2, p)))));
      }
      sys.rhs[static_cast<size_t>(b.x(q, p))] = std::move(r);
      group.push_back(b.x(q, p));
    }
    sys.mass_groups.push_back(std::move(group));
  }
  return b;
}

PolySystem build_termination_system(const OcMdp& m, const std::vector<Dist>& row) {
  PolySystem sys;
  add_termination_system(sys, fold_row(m, row), m.states, "", -1);
  return sys;
}

int BoundedBlock::up(int alpha, int kidx, int q, int p) const {
  int base_id = base[static_cast<size_t>(alpha)];
  if (alpha == 0) return base_id + q * nq + p;
  return base_id + (kidx * nq + q) * nq + p;
}

int BoundedBlock::down(int alpha, int kidx, int q, int p) const {
  int base_id = base[static_cast<size_t>(alpha)];
  if (alpha == 0) return base_id + nq * nq + q * nq + p;
  return base_id + 3 * nq * nq + (kidx * nq + q) * nq + p;
}

BoundedBlock add_bounded_system(PolySystem& sys, const Fold& f, int beta, const std::vector<std::string>& names,
                                const std::string& prefix, int interval, int stage_offset) {
  if (beta < 1) throw std::invalid_argument("bounded interval needs beta >= 1");
  BoundedBlock b;
  b.nq = f.nq;
  b.beta = beta;
  const int nq = f.nq;
  auto make = [&](VarRole role, int alpha, int kidx, int q, int p) {
    VarInfo info;
    Counter k = alpha == 0 ? 1 : (kidx == 0 ? (Counter(1) << (alpha - 1)) : kidx == 1 ? (Counter(1) << alpha)
                                                                                     : 3 * (Counter(1) << (alpha - 1)));
    info.name = prefix + (role == VarRole::Up ? "up" : "down") + std::to_string(alpha) + "_" + state_name(names, q) +
                "_" + std::to_string(k) + "_" + state_name(names, p);
    info.role = role;
    info.from = q;
    info.to = p;
    info.kidx = alpha == 0 ? 1 : kidx;
    info.alpha = alpha;
    info.stage = stage_offset + alpha;
    info.interval = interval;
    return sys.add_var(info);
  };
  for (int alpha = 0; alpha < beta; ++alpha) {
    b.base.push_back(sys.size());
    if (alpha == 0) {
      for (VarRole role : {VarRole::Up, VarRole::Down})
        for (int q = 0; q < nq; ++q)
          for (int p = 0; p < nq; ++p) make(role, 0, 1, q, p);
    } else {
      for (VarRole role : {VarRole::Up, VarRole::Down})
        for (int kidx = 0; kidx < 3; ++kidx)
          for (int q = 0; q < nq; ++q)
            for (int p = 0; p < nq; ++p) make(role, alpha, kidx, q, p);
    }
  }
  auto V = [](int v) { return poly_var(v); };
  for (int q = 0; q < nq; ++q)
    for (int p = 0; p < nq; ++p) {
      Poly u = f.at(1, q, p), d = f.at(-1, q, p);
      for (int t = 0; t < nq; ++t) {
        u = poly_add(u, poly_mul(f.at(0, q, t), V(b.up(0, 1, t, p))));
        d = poly_add(d, poly_mul(f.at(0, q, t), V(b.down(0, 1, t, p))));
      }
      sys.rhs[static_cast<size_t>(b.up(0, 1, q, p))] = std::move(u);
      sys.rhs[static_cast<size_t>(b.down(0, 1, q, p))] = std::move(d);
    }
  for (int alpha = 1; alpha < beta; ++alpha) {
    // One step of size 2^(alpha-1), taken from the previous stage's middle value.
    auto U = [&](int q, int t) { return V(b.up(alpha - 1, 1, q, t)); };
    auto D = [&](int q, int t) { return V(b.down(alpha - 1, 1, q, t)); };
    for (int q = 0; q < nq; ++q)
      for (int p = 0; p < nq; ++p) {
        Poly u0, u1, u2 = U(q, p), d0 = D(q, p), d1, d2;
        for (int t = 0; t < nq; ++t) {
          u0 = poly_add(u0, poly_mul(U(q, t), V(b.up(alpha, 1, t, p))));
          u1 = poly_add(u1, poly_add(poly_mul(U(q, t), V(b.up(alpha, 2, t, p))),
                                     poly_mul(D(q, t), V(b.up(alpha, 0, t, p)))));
          u2 = poly_add(u2, poly_mul(D(q, t), V(b.up(alpha, 1, t, p))));
          d2 = poly_add(d2, poly_mul(D(q, t), V(b.down(alpha, 1, t, p))));
          d1 = poly_add(d1, poly_add(poly_mul(D(q, t), V(b.down(alpha, 0, t, p))),
                                     poly_mul(U(q, t), V(b.down(alpha, 2, t, p)))));
          d0 = poly_add(d0, poly_mul(U(q, t), V(b.down(alpha, 1, t, p))));
        }
        sys.rhs[static_cast<size_t>(b.up(alpha, 0, q, p))] = std::move(u0);
        sys.rhs[static_cast<size_t>(b.up(alpha, 1, q, p))] = std::move(u1);
        sys.rhs[static_cast<size_t>(b.up(alpha, 2, q, p))] = std::move(u2);
        sys.rhs[static_cast<size_t>(b.down(alpha, 0, q, p))] = std::move(d0);
        sys.rhs[static_cast<size_t>(b.down(alpha, 1, q, p))] = std::move(d1);
        sys.rhs[static_cast<size_t>(b.down(alpha, 2, q, p))] = std::move(d2);
      }
  }
  for (int alpha = 0; alpha < beta; ++alpha)
    for (int kidx = (alpha == 0 ? 1 : 0); kidx < (alpha == 0 ? 2 : 3); ++kidx)
      for (int q = 0; q < nq; ++q) {
        std::vector<int> group;
        for (int p = 0; p < nq; ++p) {
          group.push_back(b.up(alpha, kidx, q, p));
          group.push_back(b.down(alpha, kidx, q, p));
        }
        sys.mass_groups.push_back(std::move(group));
      }
  return b;
}

PolySystem build_bounded_system(const OcMdp& m, const std::vector<Dist>& row, const Interval& i) {
  int beta = size_exponent(i);
  if (beta < 1) throw std::invalid_argument("interval " + format_partition({i}) + " does not have size 2^b-1");
  PolySystem sys;
  add_bounded_system(sys, fold_row(m, row), beta, m.states, "", -1);
  return sys;
}

namespace {

// Backward reachability: which sources reach `goal` in a graph given as successor lists.
std::vector<bool> reaches(const std::vector<std::vector<int>>& succ, int goal) {
  std::vector<std::vector<int>> pred(succ.size());
  for (size_t v = 0; v < succ.size(); ++v)
    for (int w : succ[v]) pred[static_cast<size_t>(w)].push_back(static_cast<int>(v));
  std::vector<bool> seen(succ.size(), false);
  std::deque<int> work{goal};
  seen[static_cast<size_t>(goal)] = true;
  while (!work.empty()) {
    int v = work.front();
    work.pop_front();
    for (int w : pred[static_cast<size_t>(v)])
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = true;
        work.push_back(w);
      }
  }
  return seen;
}

}  // namespace

void refine_unique(PolySystem& sys, const BoundedBlock& b, const Positivity& pos) {
  const int nq = b.nq;
  // G_0 over Q x {0,1,2}; node (q,l) = l*nq + q. Only level 1 has successors.
  {
    std::vector<std::vector<int>> succ(static_cast<size_t>(3 * nq));
    for (int q = 0; q < nq; ++q)
      for (int u = -1; u <= 1; ++u)
        for (int p = 0; p < nq; ++p)
          if (pos[static_cast<size_t>(u + 1)][static_cast<size_t>(q)][static_cast<size_t>(p)])
            succ[static_cast<size_t>(nq + q)].push_back((1 + u) * nq + p);
    for (int p = 0; p < nq; ++p) {
      auto to_top = reaches(succ, 2 * nq + p);
      auto to_zero = reaches(succ, p);
      for (int q = 0; q < nq; ++q) {
        if (!to_top[static_cast<size_t>(nq + q)]) sys.pinned[static_cast<size_t>(b.up(0, 1, q, p))] = true;
        if (!to_zero[static_cast<size_t>(nq + q)]) sys.pinned[static_cast<size_t>(b.down(0, 1, q, p))] = true;
      }
    }
  }
  // G_alpha over Q x {0, 2^(a-1), 2^a, 3*2^(a-1), 2^(a+1)} as levels 0..4.
  for (int alpha = 1; alpha < b.beta; ++alpha) {
    std::vector<std::vector<int>> succ(static_cast<size_t>(5 * nq));
    for (int level = 1; level <= 3; ++level)
      for (int q = 0; q < nq; ++q)
        for (int p = 0; p < nq; ++p) {
          if (!sys.pinned[static_cast<size_t>(b.up(alpha - 1, 1, q, p))])
            succ[static_cast<size_t>(level * nq + q)].push_back((level + 1) * nq + p);
          if (!sys.pinned[static_cast<size_t>(b.down(alpha - 1, 1, q, p))])
            succ[static_cast<size_t>(level * nq + q)].push_back((level - 1) * nq + p);
        }
    for (int p = 0; p < nq; ++p) {
      auto to_top = reaches(succ, 4 * nq + p);
      auto to_zero = reaches(succ, p);
      for (int kidx = 0; kidx < 3; ++kidx)
        for (int q = 0; q < nq; ++q) {
          int node = (kidx + 1) * nq + q;
          if (!to_top[static_cast<size_t>(node)]) sys.pinned[static_cast<size_t>(b.up(alpha, kidx, q, p))] = true;
          if (!to_zero[static_cast<size_t>(node)]) sys.pinned[static_cast<size_t>(b.down(alpha, kidx, q, p))] = true;
        }
    }
  }
}

PolySystem refine_unique(PolySystem sys, const BoundedBlock& b, const OcMdp& m, const std::vector<Dist>& row) {
  refine_unique(sys, b, positivity(fold_row(m, row)));
  return sys;
}

std::vector<bool> zero_set(const PolySystem& sys) {
  // A variable is positive iff some monomial of its right-hand side has all factors positive.
  std::vector<bool> pos(static_cast<size_t>(sys.size()), false);
  for (int v = 0; v < sys.size(); ++v)
    if (sys.vars[static_cast<size_t>(v)].external && !sys.pinned[static_cast<size_t>(v)]) pos[static_cast<size_t>(v)] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < sys.size(); ++v) {
      if (pos[static_cast<size_t>(v)] || !sys.is_free(v)) continue;
      for (const auto& t : sys.rhs[static_cast<size_t>(v)]) {
        if (t.coef <= 0) continue;
        bool all = true;
        for (int x : t.vars)
          if (!pos[static_cast<size_t>(x)]) {
            all = false;
            break;
          }
        if (all) {
          pos[static_cast<size_t>(v)] = true;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<bool> zero(pos.size());
  for (size_t v = 0; v < pos.size(); ++v) zero[v] = !pos[v];
  return zero;
}

void pin_zero_termination(PolySystem& sys, const TermBlock& b) {
  auto z = zero_set(sys);
  for (int v : b.ids)
    if (z[static_cast<size_t>(v)]) sys.pinned[static_cast<size_t>(v)] = true;
}

ReachBlock add_reach_system(PolySystem& sys, const CompressedChain& c, const std::vector<bool>& target,
                            const std::string& prefix) {
  const int n = c.size();
  // Qualitative pass over edges that may be positive.
  std::vector<std::vector<int>> succ(static_cast<size_t>(n));
  int goal = n;  // virtual sink for targets
  succ.emplace_back();
  for (int s = 0; s < n; ++s) {
    if (target[static_cast<size_t>(s)]) {
      succ[static_cast<size_t>(s)].push_back(goal);
      continue;
    }
    if (c.absorbing[static_cast<size_t>(s)]) continue;
    for (const auto& e : c.rows[static_cast<size_t>(s)]) {
      bool maybe = e.is_exact ? e.exact > 0 : (c.mode == NumMode::Symbolic ? !poly_is_zero(e.sym) : e.hi > 0);
      if (maybe) succ[static_cast<size_t>(s)].push_back(e.to);
    }
  }
  auto live = reaches(succ, goal);
  ReachBlock rb;
  rb.y.assign(static_cast<size_t>(n), -1);
  for (int s = 0; s < n; ++s) {
    if (target[static_cast<size_t>(s)]) continue;
    VarInfo info;
    info.name = prefix + "y_" + c.names[static_cast<size_t>(s)];
    info.role = VarRole::Reach;
    info.from = s;
    info.stage = 1000000;
    rb.y[static_cast<size_t>(s)] = sys.add_var(info);
    if (!live[static_cast<size_t>(s)] || c.absorbing[static_cast<size_t>(s)])
      sys.pinned[static_cast<size_t>(rb.y[static_cast<size_t>(s)])] = true;
  }
  for (int s = 0; s < n; ++s) {
    int y = rb.y[static_cast<size_t>(s)];
    if (y < 0 || sys.pinned[static_cast<size_t>(y)]) continue;
    Poly r;
    for (const auto& e : c.rows[static_cast<size_t>(s)]) {
      Poly pe = e.is_exact ? poly_const(e.exact)
                           : (c.mode == NumMode::Symbolic ? e.sym : poly_const(Rat(e.lo)));
      if (target[static_cast<size_t>(e.to)])
        r = poly_add(r, pe);
      else if (!sys.pinned[static_cast<size_t>(rb.y[static_cast<size_t>(e.to)])])
        r = poly_add(r, poly_mul(pe, poly_var(rb.y[static_cast<size_t>(e.to)])));
    }
    sys.rhs[static_cast<size_t>(y)] = std::move(r);
  }
  return rb;
}

PolySystem build_reach_system(const CompressedChain& c, const std::vector<bool>& target) {
  PolySystem sys;
  if (c.sys) sys = *c.sys;
  add_reach_system(sys, c, target, "");
  return sys;
}

}  // namespace ocmdp
