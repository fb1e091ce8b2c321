#include "ocmdp/generators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ocmdp {

namespace {

Instance fig1() {
  Instance in;
  in.name = "fig1";
  OcMdp& m = in.model;
  for (auto s : {"q0", "q1", "q2"}) m.add_state(s);
  m.add_action_name("a");
  m.add_action_name("b");
  m.set_action("q0", "a", 1, {{"q0", Rat(1, 2)}, {"q1", Rat(1, 2)}});
  m.set_action("q1", "a", -1, {{"q1", Rat(1)}});
  m.set_action("q1", "b", -1, {{"q2", Rat(1)}});
  m.set_action("q2", "a", 0, {{"q2", Rat(1)}});
  const Counter B = 8;
  in.query.objective = {ObjectiveKind::SelTerm, {2}};
  in.query.bound = B;
  in.query.init = {0, 1};
  in.query.theta = Rat(1, 2);
  int a = 0, b = 1;
  in.strategies["memory"] =
      make_oeis({{1, 1}, {2, B - 1}}, {{dirac(a), dirac(b), dirac(a)}, {dirac(a), dirac(a), dirac(a)}});
  return in;
}

Instance fig2a() {
  Instance in;
  in.name = "fig2a";
  OcMdp& m = in.model;
  for (auto s : {"q", "p", "t", "t'"}) m.add_state(s);
  for (auto a : {"a", "b", "c"}) m.add_action_name(a);
  m.set_action("q", "a", 1, {{"q", Rat(1, 2)}, {"p", Rat(1, 2)}});
  m.set_action("q", "c", 0, {{"t'", Rat(1)}});
  m.set_action("p", "a", 1, {{"p", Rat(1)}});
  m.set_action("p", "b", -1, {{"t", Rat(1, 2)}, {"p", Rat(1, 2)}});
  m.set_action("t", "b", -1, {{"t", Rat(1)}});
  m.set_action("t'", "c", 0, {{"t'", Rat(1)}});
  in.query.objective = {ObjectiveKind::SelTerm, {2}};
  in.query.bound = kInf;
  in.query.init = {0, 1};
  in.query.theta = Rat(1, 2);
  int a = 0, b = 1, c = 2;
  Dist half{{a, Rat(1, 2)}, {b, Rat(1, 2)}};
  in.strategies["example"] = make_oeis({{1, 7}, {8, kInf}}, {{dirac(a), dirac(a), dirac(b), dirac(c)},
                                                              {dirac(c), half, dirac(b), dirac(c)}});
  return in;
}

Instance fig4() {
  Instance in;
  in.name = "fig4";
  OcMdp& m = in.model;
  for (auto s : {"q", "t_top", "t_bot"}) m.add_state(s);
  m.add_action_name("a");
  m.add_action_name("b");
  m.set_action("q", "a", -1, {{"q", Rat(1, 2)}, {"t_top", Rat(1, 2)}});
  m.set_action("q", "b", -1, {{"t_bot", Rat(1, 4)}, {"t_top", Rat(3, 4)}});
  m.set_action("t_top", "a", -1, {{"t_top", Rat(1)}});
  m.set_action("t_bot", "a", -1, {{"t_bot", Rat(1)}});
  const Counter B = 3;
  in.query.objective = {ObjectiveKind::SelTerm, {1}};
  in.query.bound = B;
  in.query.init = {0, 2};
  in.query.theta = Rat(3, 4);
  int a = 0, b = 1;
  in.strategies["pure_a"] = counter_oblivious({dirac(a), dirac(a), dirac(a)}, B);
  in.strategies["pure_b"] = counter_oblivious({dirac(b), dirac(a), dirac(a)}, B);
  in.strategies["uniform"] = counter_oblivious({uniform({a, b}), dirac(a), dirac(a)}, B);
  return in;
}

Counter bit_size(Counter x) {
  Counter bits = 0;
  do {
    ++bits;
    x >>= 1;
  } while (x > 0);
  return bits;
}

}  // namespace

std::map<std::string, Instance> example_catalog() {
  std::map<std::string, Instance> out;
  for (auto in : {fig1(), fig2a(), fig4()}) out.emplace(in.name, std::move(in));
  return out;
}

Instance catalog_example(const std::string& name) {
  auto all = example_catalog();
  auto it = all.find(name);
  if (it == all.end()) throw std::invalid_argument("unknown example '" + name + "' (fig1, fig2a, fig4)");
  return it->second;
}

Counter SqrtSumInstance::m() const { return xs.empty() ? 0 : *std::max_element(xs.begin(), xs.end()); }

Counter SqrtSumInstance::lambda() const {
  Counter l = bit_size(y);
  for (Counter x : xs) l += bit_size(x);
  return l;
}

Rat SqrtSumInstance::theta() const { return Rat(mpz_class(std::to_string(y)), mpz_class(std::to_string(n() * m()))); }

mpz_class SqrtSumInstance::bound() const {
  mpz_class two_n;
  mpz_ui_pow_ui(two_n.get_mpz_t(), 2, static_cast<unsigned long>(n()));
  mpz_class mm(std::to_string(m()));
  return two_n * mm * (mpz_class(std::to_string(lambda())) + 1) + mpz_class(n()) * mm * mm + 1;
}

bool SqrtSumInstance::is_equality() const {
  // A sum of square roots of naturals is rational only when every term is.
  Counter sum = 0;
  for (Counter x : xs) {
    auto r = static_cast<Counter>(std::llround(std::sqrt(static_cast<double>(x))));
    while (r * r > x) --r;
    while ((r + 1) * (r + 1) <= x) ++r;
    if (r * r != x) return false;
    sum += r;
  }
  return sum == y;
}

std::vector<std::string> validate(const SqrtSumInstance& inst) {
  std::vector<std::string> out;
  if (inst.xs.empty()) out.push_back("xs must be non-empty");
  for (Counter x : inst.xs)
    if (x < 1) out.push_back("every x_i must be at least 1");
  if (inst.y < 0) out.push_back("y must be a natural number");
  if (inst.m() > 1'000'000) out.push_back("x_i too large");
  return out;
}

std::pair<OcMdp, Query> gen_sqrt_sum(const SqrtSumInstance& inst) {
  auto errs = validate(inst);
  if (!errs.empty()) throw std::invalid_argument("invalid square-root-sum instance: " + errs.front());
  OcMdp m;
  m.add_state("q_init");
  m.add_state("t");
  m.add_action_name("a");
  const int n = inst.n();
  const Counter mx = inst.m();
  const Rat m2 = Rat(mpz_class(std::to_string(mx)) * mpz_class(std::to_string(mx)));
  std::vector<std::pair<std::string, Rat>> init_succ;
  for (int i = 1; i <= n; ++i) {
    std::string qi = "q" + std::to_string(i);
    m.add_state(qi);
    m.add_state(qi + "+");
    m.add_state(qi + "-");
    init_succ.emplace_back(qi, Rat(1, static_cast<unsigned long>(n)));
  }
  m.set_action("q_init", "a", 0, init_succ);
  m.set_action("t", "a", -1, {{"t", Rat(1)}});
  for (int i = 1; i <= n; ++i) {
    std::string qi = "q" + std::to_string(i);
    Rat p = Rat(mpz_class(std::to_string(inst.xs[static_cast<size_t>(i - 1)]))) / m2;
    m.set_action(qi, "a", 0, {{qi + "+", Rat(1, 2)}, {qi + "-", Rat(1, 2)}});
    m.set_action(qi + "+", "a", 1, {{qi, Rat(1)}});
    m.set_action(qi + "-", "a", -1, {{"t", p}, {qi, Rat(1) - p}});
  }
  Query q;
  q.objective = {ObjectiveKind::SelTerm, {1}};
  q.bound = kInf;
  q.init = {0, 1};
  q.theta = inst.theta();
  return {m, q};
}

BoundedSqrtSum gen_sqrt_sum_bounded(const SqrtSumInstance& inst, Counter override_bound) {
  auto [m, q] = gen_sqrt_sum(inst);
  BoundedSqrtSum out;
  out.model = std::move(m);
  out.query = q;
  out.formula_bound = inst.bound();
  if (override_bound > 0) {
    out.query.bound = override_bound;
  } else if (out.formula_bound <= mpz_class(std::to_string(kMaxFinite))) {
    out.query.bound = static_cast<Counter>(std::stoll(out.formula_bound.get_str()));
  } else {
    throw std::overflow_error("formula bound " + out.formula_bound.get_str() + " exceeds the supported counter range");
  }
  if (out.query.bound < 2) throw std::invalid_argument("bound must be at least 2");
  if (inst.is_equality())
    out.warnings.push_back(
        "sum of square roots equals y: every finite bound keeps the probability strictly below theta, so the "
        "bounded answer is no while the unbounded one is yes");
  return out;
}

double sqrt_sum_error_bound(Counter m, Counter B) {
  return std::pow(static_cast<double>(m) / static_cast<double>(m + 1), static_cast<double>(B - 1));
}

std::pair<OcMdp, Query> gen_hamiltonian(const DirectedGraph& g) {
  if (g.n < 1) throw std::invalid_argument("graph needs at least one vertex");
  if (g.init < 0 || g.init >= g.n) throw std::invalid_argument("initial vertex out of range");
  OcMdp m;
  for (int v = 0; v < g.n; ++v) m.add_state("v" + std::to_string(v));
  const int init_copy = m.add_state("v" + std::to_string(g.init) + "'");
  const int sink = m.add_state("sink");
  for (int v = 0; v < g.n; ++v) m.add_action_name("v" + std::to_string(v));
  std::vector<std::vector<int>> out(static_cast<size_t>(g.n));
  for (auto [u, v] : g.edges) {
    if (u < 0 || u >= g.n || v < 0 || v >= g.n) throw std::invalid_argument("edge endpoint out of range");
    out[static_cast<size_t>(u)].push_back(v);
  }
  for (int u = 0; u < g.n; ++u) {
    auto& succ = out[static_cast<size_t>(u)];
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    for (int v : succ) m.set_action(u, v, -1, {{v == g.init ? init_copy : v, Rat(1)}});
    // Dead ends still need an action; it leads nowhere useful.
    if (succ.empty()) m.set_action(u, 0, -1, {{sink, Rat(1)}});
  }
  for (int v = 0; v < g.n; ++v) {
    m.set_action(init_copy, v, -1, {{sink, Rat(1)}});
    m.set_action(sink, v, -1, {{sink, Rat(1)}});
  }
  Query q;
  q.objective = {ObjectiveKind::SelTerm, {init_copy}};
  q.bound = g.n + 1;
  q.init = {g.init, g.n};
  q.theta = 1;
  return {m, q};
}

DirectedGraph parse_graph(std::string_view text) {
  // "vertices=N; init=I; edges=0>1,1>2"
  DirectedGraph g;
  bool have_n = false;
  for (const auto& field : split(text, ';')) {
    if (field.empty()) continue;
    auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value in '" + field + "'");
    std::string key = trim(field.substr(0, eq)), val = trim(field.substr(eq + 1));
    if (key == "vertices") {
      g.n = static_cast<int>(parse_counter(val));
      have_n = true;
    } else if (key == "init") {
      g.init = static_cast<int>(parse_counter(val));
    } else if (key == "edges") {
      for (const auto& e : split(val, ',')) {
        if (e.empty()) continue;
        auto gt = e.find('>');
        if (gt == std::string::npos) throw ParseError("edge must look like 'u>v', got '" + e + "'");
        g.edges.emplace_back(static_cast<int>(parse_counter(e.substr(0, gt))),
                             static_cast<int>(parse_counter(e.substr(gt + 1))));
      }
    } else {
      throw ParseError("unknown key '" + key + "'");
    }
  }
  if (!have_n) throw ParseError("graph needs 'vertices=N'");
  if (g.n < 1 || g.n > 1'000'000) throw ParseError("vertex count out of range");
  if (g.init < 0 || g.init >= g.n) throw ParseError("initial vertex out of range");
  for (auto [u, v] : g.edges)
    if (u < 0 || u >= g.n || v < 0 || v >= g.n)
      throw ParseError("edge " + std::to_string(u) + ">" + std::to_string(v) + " has an endpoint out of range");
  return g;
}

}  // namespace ocmdp
