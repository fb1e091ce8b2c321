#include "ocmdp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ocmdp {

std::string status_str(SolveStatus s) {
  switch (s) {
    case SolveStatus::Exact:
      return "exact";
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::Capped:
      return "capped";
  }
  return "?";
}

double eval_poly(const Poly& p, const std::vector<double>& x) {
  double s = 0;
  for (const auto& t : p) {
    double m = t.coef.get_d();
    for (int v : t.vars) m *= x[static_cast<size_t>(v)];
    s += m;
  }
  return s;
}

Rat eval_poly(const Poly& p, const std::vector<Rat>& x) {
  Rat s = 0;
  for (const auto& t : p) {
    Rat m = t.coef;
    for (int v : t.vars) {
      if (x[static_cast<size_t>(v)] == 0) {
        m = 0;
        break;
      }
      m *= x[static_cast<size_t>(v)];
    }
    s += m;
  }
  return s;
}

std::vector<std::vector<int>> dependency_sccs(const PolySystem& sys, const std::vector<int>& vars) {
  std::vector<int> local(static_cast<size_t>(sys.size()), -1);
  for (size_t i = 0; i < vars.size(); ++i) local[static_cast<size_t>(vars[i])] = static_cast<int>(i);
  const int n = static_cast<int>(vars.size());
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (const auto& t : sys.rhs[static_cast<size_t>(vars[static_cast<size_t>(i)])])
      for (int w : t.vars)
        if (local[static_cast<size_t>(w)] >= 0) adj[static_cast<size_t>(i)].push_back(local[static_cast<size_t>(w)]);
    auto& a = adj[static_cast<size_t>(i)];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  // Iterative Tarjan; SCCs come out dependencies first.
  std::vector<int> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> out;
  int counter = 0;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<size_t>(root)] >= 0) continue;
    std::vector<std::pair<int, size_t>> call{{root, 0}};
    index[static_cast<size_t>(root)] = low[static_cast<size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<size_t>(root)] = true;
    while (!call.empty()) {
      auto& [v, it] = call.back();
      const auto& a = adj[static_cast<size_t>(v)];
      if (it < a.size()) {
        int w = a[it++];
        if (index[static_cast<size_t>(w)] < 0) {
          index[static_cast<size_t>(w)] = low[static_cast<size_t>(w)] = counter++;
          stack.push_back(w);
          on_stack[static_cast<size_t>(w)] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[static_cast<size_t>(w)]) {
          low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
        }
        continue;
      }
      if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<size_t>(w)] = false;
          comp.push_back(vars[static_cast<size_t>(w)]);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
      int done = v;
      call.pop_back();
      if (!call.empty()) {
        int parent = call.back().first;
        low[static_cast<size_t>(parent)] = std::min(low[static_cast<size_t>(parent)], low[static_cast<size_t>(done)]);
      }
    }
  }
  return out;
}

namespace {

bool is_zero(const Rat& x) { return x == 0; }
bool is_zero(double x) { return std::fabs(x) < 1e-300; }
double magnitude(const Rat& x) { return std::fabs(x.get_d()); }
double magnitude(double x) { return std::fabs(x); }
Rat to_t(const Rat& r, Rat*) { return r; }
double to_t(const Rat& r, double*) { return r.get_d(); }

// Dense Gaussian elimination with pivoting on a*x = b; throws when singular.
template <class T>
std::vector<T> gauss(std::vector<std::vector<T>> a, std::vector<T> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = n;
    double best = 0;
    for (size_t r = col; r < n; ++r) {
      if (is_zero(a[r][col])) continue;
      double mag = magnitude(a[r][col]);
      if (piv == n || mag > best) {
        piv = r;
        best = mag;
        if constexpr (std::is_same_v<T, Rat>) break;  // any non-zero pivot is exact
      }
    }
    if (piv == n) throw std::runtime_error("singular linear system despite zero pinning");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = col + 1; r < n; ++r) {
      if (is_zero(a[r][col])) continue;
      T f = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c)
        if (!is_zero(a[col][c])) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<T> x(n);
  for (size_t i = n; i-- > 0;) {
    T s = b[i];
    for (size_t c = i + 1; c < n; ++c)
      if (!is_zero(a[i][c])) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

template <class T>
std::vector<T> solve_staged(const PolySystem& sys, const std::vector<T>& known) {
  const int n = sys.size();
  std::vector<T> x(static_cast<size_t>(n), T(0));
  for (int v = 0; v < n; ++v)
    if (sys.vars[static_cast<size_t>(v)].external && v < static_cast<int>(known.size()))
      x[static_cast<size_t>(v)] = known[static_cast<size_t>(v)];
  std::map<int, std::vector<int>> stages;
  for (int v = 0; v < n; ++v)
    if (sys.is_free(v)) stages[sys.vars[static_cast<size_t>(v)].stage].push_back(v);
  std::vector<int> where(static_cast<size_t>(n), -1);
  for (const auto& [stage, vars] : stages) {
    for (const auto& comp : dependency_sccs(sys, vars)) {
      for (size_t i = 0; i < comp.size(); ++i) where[static_cast<size_t>(comp[i])] = static_cast<int>(i);
      const size_t m = comp.size();
      std::vector<std::vector<T>> a(m, std::vector<T>(m, T(0)));
      std::vector<T> b(m, T(0));
      for (size_t i = 0; i < m; ++i) {
        a[i][i] = T(1);
        for (const auto& t : sys.rhs[static_cast<size_t>(comp[i])]) {
          T coef = to_t(t.coef, static_cast<T*>(nullptr));
          int inner = -1;
          for (int v : t.vars) {
            if (where[static_cast<size_t>(v)] >= 0) {
              if (inner >= 0) throw std::runtime_error("system is not linear within its stage");
              inner = where[static_cast<size_t>(v)];
            } else {
              coef *= x[static_cast<size_t>(v)];
            }
          }
          if (inner >= 0)
            a[i][static_cast<size_t>(inner)] -= coef;
          else
            b[i] += coef;
        }
      }
      std::vector<T> sol;
      if (m == 1)
        sol = {b[0] / a[0][0]};
      else
        sol = gauss(std::move(a), std::move(b));
      for (size_t i = 0; i < m; ++i) {
        x[static_cast<size_t>(comp[i])] = sol[i];
        where[static_cast<size_t>(comp[i])] = -1;
      }
    }
  }
  return x;
}

}  // namespace

std::vector<Rat> solve_linear_exact(const PolySystem& sys, const std::vector<Rat>& known) {
  return solve_staged<Rat>(sys, known);
}

std::vector<double> solve_linear_float(const PolySystem& sys, const std::vector<double>& known) {
  return solve_staged<double>(sys, known);
}

Valuation solve_linear(const PolySystem& sys, bool exact) {
  Valuation val;
  if (exact) {
    val.exact = solve_linear_exact(sys);
    for (const auto& r : val.exact) val.value.push_back(r.get_d());
    val.status = SolveStatus::Exact;
  } else {
    val.value = solve_linear_float(sys);
    val.status = SolveStatus::Converged;
  }
  return val;
}

namespace {

double partial(const Poly& p, int w, const std::vector<double>& x) {
  double s = 0;
  for (const auto& t : p) {
    for (size_t i = 0; i < t.vars.size(); ++i) {
      if (t.vars[i] != w) continue;
      double m = t.coef.get_d();
      for (size_t j = 0; j < t.vars.size(); ++j)
        if (j != i) m *= x[static_cast<size_t>(t.vars[j])];
      s += m;
    }
  }
  return s;
}

// Newton on one SCC; returns false when it could not make progress.
bool newton_scc(const PolySystem& sys, const std::vector<int>& comp, std::vector<double>& x, const SolveConfig& cfg,
                long& iters) {
  const size_t m = comp.size();
  for (long it = 0; it < 200 && iters < cfg.max_iters; ++it, ++iters) {
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    std::vector<double> b(m);
    for (size_t i = 0; i < m; ++i) {
      const Poly& p = sys.rhs[static_cast<size_t>(comp[i])];
      b[i] = eval_poly(p, x) - x[static_cast<size_t>(comp[i])];
      for (size_t j = 0; j < m; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - partial(p, comp[j], x);
    }
    std::vector<double> delta;
    try {
      delta = gauss(a, b);
    } catch (const std::runtime_error&) {
      return false;
    }
    double change = 0;
    for (size_t i = 0; i < m; ++i) {
      if (!std::isfinite(delta[i])) return false;
      double& xi = x[static_cast<size_t>(comp[i])];
      double nx = std::min(1.0, std::max(xi, xi + delta[i]));
      change = std::max(change, nx - xi);
      xi = nx;
    }
    if (change < cfg.eps) return true;
  }
  return false;
}

bool kleene_scc(const PolySystem& sys, const std::vector<int>& comp, std::vector<double>& x, const SolveConfig& cfg,
                long& iters) {
  while (iters < cfg.max_iters) {
    ++iters;
    double change = 0;
    for (int v : comp) {
      double nv = eval_poly(sys.rhs[static_cast<size_t>(v)], x);
      change = std::max(change, std::fabs(nv - x[static_cast<size_t>(v)]));
      x[static_cast<size_t>(v)] = nv;
    }
    if (change < cfg.eps) return true;
  }
  return false;
}

bool self_dependent(const PolySystem& sys, int v) {
  for (const auto& t : sys.rhs[static_cast<size_t>(v)])
    for (int w : t.vars)
      if (w == v) return true;
  return false;
}

}  // namespace

Valuation lfp(const PolySystem& sys, const SolveConfig& cfg, const std::vector<double>& known) {
  if (!(cfg.eps > 0)) throw std::invalid_argument("tolerance must be positive");
  Valuation val;
  const int n = sys.size();
  val.value.assign(static_cast<size_t>(n), 0.0);
  for (int v = 0; v < n; ++v)
    if (sys.vars[static_cast<size_t>(v)].external && v < static_cast<int>(known.size()))
      val.value[static_cast<size_t>(v)] = known[static_cast<size_t>(v)];
  std::vector<int> free_vars;
  for (int v = 0; v < n; ++v)
    if (sys.is_free(v)) free_vars.push_back(v);
  bool ok = true;
  for (const auto& comp : dependency_sccs(sys, free_vars)) {
    if (comp.size() == 1 && !self_dependent(sys, comp[0])) {
      val.value[static_cast<size_t>(comp[0])] = eval_poly(sys.rhs[static_cast<size_t>(comp[0])], val.value);
      continue;
    }
    bool done = false;
    if (cfg.newton) {
      auto backup = val.value;
      done = newton_scc(sys, comp, val.value, cfg, val.iterations);
      if (!done) val.value = std::move(backup);
    }
    if (!done) done = kleene_scc(sys, comp, val.value, cfg, val.iterations);
    ok = ok && done;
  }
  double res = 0;
  for (int v : free_vars)
    res = std::max(res, std::fabs(eval_poly(sys.rhs[static_cast<size_t>(v)], val.value) - val.value[static_cast<size_t>(v)]));
  val.residual = res;
  val.status = ok ? SolveStatus::Converged : SolveStatus::Capped;
  return val;
}

namespace {

bool post_fixed_exact(const PolySystem& sys, const std::vector<double>& u) {
  std::vector<Rat> ur(u.size());
  for (size_t i = 0; i < u.size(); ++i) ur[i] = Rat(u[i]);
  for (int v = 0; v < sys.size(); ++v)
    if (sys.is_free(v) && eval_poly(sys.rhs[static_cast<size_t>(v)], ur) > ur[static_cast<size_t>(v)]) return false;
  return true;
}

double spectral_estimate(const PolySystem& sys, const std::vector<int>& vars, const std::vector<double>& x) {
  if (vars.empty()) return 0;
  std::vector<int> local(static_cast<size_t>(sys.size()), -1);
  for (size_t i = 0; i < vars.size(); ++i) local[static_cast<size_t>(vars[i])] = static_cast<int>(i);
  std::vector<double> v(vars.size(), 1.0), w(vars.size());
  double rho = 0;
  for (int it = 0; it < 60; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    for (size_t i = 0; i < vars.size(); ++i)
      for (const auto& t : sys.rhs[static_cast<size_t>(vars[i])])
        for (size_t k = 0; k < t.vars.size(); ++k) {
          int j = local[static_cast<size_t>(t.vars[k])];
          if (j < 0) continue;
          double m = t.coef.get_d();
          for (size_t l = 0; l < t.vars.size(); ++l)
            if (l != k) m *= x[static_cast<size_t>(t.vars[l])];
          w[i] += m * v[static_cast<size_t>(j)];
        }
    double norm = 0;
    for (double y : w) norm = std::max(norm, std::fabs(y));
    if (norm == 0) return 0;
    rho = norm;
    for (size_t i = 0; i < w.size(); ++i) v[i] = w[i] / norm;
  }
  return rho;
}


// Solves (I - J) d = b by the Neumann iteration d <- J d + b, with J the Jacobian of the rhs at x restricted to
// vars. Empty when the iteration does not settle (spectral radius too close to 1).
std::vector<double> linearised_step(const PolySystem& sys, const std::vector<int>& vars, const std::vector<double>& x,
                                    const std::vector<double>& b) {
  std::vector<int> local(static_cast<size_t>(sys.size()), -1);
  for (size_t i = 0; i < vars.size(); ++i) local[static_cast<size_t>(vars[i])] = static_cast<int>(i);
  struct Entry {
    size_t row, col;
    double coef;
  };
  std::vector<Entry> jac;
  for (size_t i = 0; i < vars.size(); ++i)
    for (const auto& t : sys.rhs[static_cast<size_t>(vars[i])])
      for (size_t k = 0; k < t.vars.size(); ++k) {
        int j = local[static_cast<size_t>(t.vars[k])];
        if (j < 0) continue;
        double m = t.coef.get_d();
        for (size_t l = 0; l < t.vars.size(); ++l)
          if (l != k) m *= x[static_cast<size_t>(t.vars[l])];
        if (m != 0) jac.push_back({i, static_cast<size_t>(j), m});
      }
  std::vector<double> d(b), next(b.size());
  for (int it = 0; it < 100000; ++it) {
    next = b;
    for (const auto& e : jac) next[e.row] += e.coef * d[e.col];
    double change = 0, size = 0;
    for (size_t i = 0; i < d.size(); ++i) {
      change = std::max(change, std::fabs(next[i] - d[i]));
      size = std::max(size, next[i]);
    }
    d.swap(next);
    if (size > 1e6) return {};
    if (change <= 1e-12 * std::max(size, 1e-300)) return d;
  }
  return {};
}

}  // namespace

std::vector<double> upper_bound_pass(const PolySystem& sys, const std::vector<double>& lower, const SolveConfig& cfg) {
  const int n = sys.size();
  auto zero = zero_set(sys);
  std::vector<int> active;
  for (int v = 0; v < n; ++v)
    if (sys.is_free(v) && !zero[static_cast<size_t>(v)]) active.push_back(v);

  // Mass-group complements: u_v <= 1 - sum of the others' lower bounds.
  std::vector<double> cap(static_cast<size_t>(n), 1.0);
  for (const auto& g : sys.mass_groups) {
    double total = 0;
    for (int w : g) total += lower[static_cast<size_t>(w)];
    for (int v : g) cap[static_cast<size_t>(v)] = std::min(cap[static_cast<size_t>(v)], 1.0 - (total - lower[static_cast<size_t>(v)]));
  }
  std::vector<double> u(lower.begin(), lower.end());
  for (int v = 0; v < n; ++v) {
    if (!sys.is_free(v)) continue;
    u[static_cast<size_t>(v)] = zero[static_cast<size_t>(v)] ? 0.0 : std::max(lower[static_cast<size_t>(v)], cap[static_cast<size_t>(v)]);
  }

  // Shifted lower bound that is post-fixed (F(u) <= u, checked in exact arithmetic) bounds the lfp.
  double residual = 0;
  for (int v : active)
    residual = std::max(residual, eval_poly(sys.rhs[static_cast<size_t>(v)], lower) - lower[static_cast<size_t>(v)]);
  bool found = false;
  auto accept = [&](const std::vector<double>& cand) {
    if (!post_fixed_exact(sys, cand)) return false;
    for (int v : active) u[static_cast<size_t>(v)] = std::min(u[static_cast<size_t>(v)], cand[static_cast<size_t>(v)]);
    return found = true;
  };
  // First try lower + d with (I - J) d = residual + margin: to first order F(lower + d) <= lower + d.
  for (double margin = 1e-13; margin < 1e-2 && !found; margin *= 16) {
    std::vector<double> b(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      int v = active[i];
      double r = eval_poly(sys.rhs[static_cast<size_t>(v)], lower) - lower[static_cast<size_t>(v)];
      b[i] = 2 * std::max(r, 0.0) + margin;
    }
    auto d = linearised_step(sys, active, lower, b);
    if (d.empty()) break;
    std::vector<double> cand = lower;
    for (size_t i = 0; i < active.size(); ++i)
      cand[static_cast<size_t>(active[i])] = std::min(1.0, lower[static_cast<size_t>(active[i])] + d[i]);
    for (int v = 0; v < n; ++v)
      if (sys.is_free(v) && zero[static_cast<size_t>(v)]) cand[static_cast<size_t>(v)] = 0.0;
    accept(cand);
  }
  double rho = spectral_estimate(sys, active, lower);
  double c = 2 * (std::max(residual, 0.0) + 1e-15) / std::max(1.0 - rho, 1e-6);
  for (int attempt = 0; attempt < 24 && c < 1.0 && !found; ++attempt, c *= 4) {
    std::vector<double> cand = lower;
    for (int v : active)
      cand[static_cast<size_t>(v)] = std::min(1.0, lower[static_cast<size_t>(v)] + c);
    for (int v = 0; v < n; ++v)
      if (sys.is_free(v) && zero[static_cast<size_t>(v)]) cand[static_cast<size_t>(v)] = 0.0;
    accept(cand);
  }

  // Downward iteration: every iterate min(u, F(u)) stays above the lfp.
  long sweeps = std::min<long>(cfg.max_iters, 20000);
  for (long it = 0; it < sweeps; ++it) {
    double change = 0;
    for (int v : active) {
      double nv = std::min({u[static_cast<size_t>(v)], eval_poly(sys.rhs[static_cast<size_t>(v)], u), cap[static_cast<size_t>(v)]});
      nv = std::max(nv, lower[static_cast<size_t>(v)]);
      change = std::max(change, u[static_cast<size_t>(v)] - nv);
      u[static_cast<size_t>(v)] = nv;
    }
    if (change < cfg.eps * 1e-3) break;
  }
  return u;
}

}  // namespace ocmdp
