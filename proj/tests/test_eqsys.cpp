#include "ocmdp/compression.hpp"
#include "ocmdp/eqsys.hpp"
#include "ocmdp/generators.hpp"
#include "ocmdp/solvers.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace ocmdp;

namespace {

int var_named(const PolySystem& sys, const std::string& name) {
  for (int v = 0; v < sys.size(); ++v)
    if (sys.vars[static_cast<size_t>(v)].name == name) return v;
  FAIL("no variable " << name);
  return -1;
}

// Jacobi iteration of the right-hand sides from 0, ignoring pins.
std::vector<double> jacobi(const PolySystem& sys, int rounds) {
  std::vector<double> x(static_cast<size_t>(sys.size()), 0.0);
  for (int r = 0; r < rounds; ++r) {
    std::vector<double> nx(x.size(), 0.0);
    for (int v = 0; v < sys.size(); ++v)
      if (!sys.vars[static_cast<size_t>(v)].external) nx[static_cast<size_t>(v)] = eval_poly(sys.rhs[static_cast<size_t>(v)], x);
    x = nx;
  }
  return x;
}

struct Built {
  PolySystem sys;
  BoundedBlock block;
  Fold fold;
};

Built bounded(const OcMdp& m, const std::vector<Dist>& row, int beta) {
  Built b;
  b.fold = fold_row(m, row);
  b.block = add_bounded_system(b.sys, b.fold, beta, m.states, "", 0);
  return b;
}

}  // namespace

TEST_CASE("termination system of the square-root gadget") {
  for (Counter x : {1, 2, 3, 5, 7}) {
    auto [m, q] = gen_sqrt_sum({{x, 9}, 1});
    PolySystem sys = build_termination_system(m, std::vector<Dist>(static_cast<size_t>(m.num_states()), dirac(0)));
    CHECK(sys.size() == m.num_states() * m.num_states());
    SolveConfig cfg;
    cfg.newton = true;
    Valuation v = lfp(sys, cfg);
    double got = v.value[static_cast<size_t>(var_named(sys, "term_q1_t"))];
    CHECK(got == doctest::Approx(std::sqrt(static_cast<double>(x)) / 9).epsilon(1e-9));
  }
}

TEST_CASE("termination systems of one-state chains") {
  OcMdp down;
  down.set_action("q", "a", -1, {{"q", Rat(1)}});
  PolySystem s1 = build_termination_system(down, {dirac(0)});
  REQUIRE(s1.size() == 1);
  CHECK(lfp(s1, {}).value[0] == doctest::Approx(1.0));

  OcMdp walk;
  walk.set_action("q", "d", -1, {{"q", Rat(1)}});
  walk.set_action("q", "u", 1, {{"q", Rat(1)}});
  PolySystem s2 = build_termination_system(walk, {uniform({0, 1})});
  CHECK(s2.degree() == 2);
  SolveConfig cfg;
  cfg.newton = true;
  Valuation v = lfp(s2, cfg);
  CHECK(v.value[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bounded system on the compression example") {
  auto f2 = catalog_example("fig2a");
  const OcMdp& m = f2.model;
  const auto& row = f2.strategies.at("example").table[0];
  Built b = bounded(m, row, 3);
  CHECK(b.sys.size() == 2 * 16 * 7);
  refine_unique(b.sys, b.block, positivity(b.fold));
  Valuation v = solve_linear(b.sys, true);
  REQUIRE(v.status == SolveStatus::Exact);
  auto val = [&](const std::string& n) { return v.exact[static_cast<size_t>(var_named(b.sys, n))]; };
  CHECK(val("up0_q_1_q") == Rat(1, 2));
  CHECK(val("up1_q_2_q") == Rat(1, 4));
  CHECK(val("up2_q_4_q") == Rat(1, 16));
  // q only moves up under a.
  int q = m.require_state("q");
  for (int id = 0; id < b.sys.size(); ++id) {
    const auto& info = b.sys.vars[static_cast<size_t>(id)];
    if (info.role == VarRole::Down && info.from == q) CHECK(b.sys.pinned[static_cast<size_t>(id)]);
  }
}

TEST_CASE("bounded system sizes") {
  auto f4 = catalog_example("fig4");
  for (int beta = 1; beta <= 6; ++beta) {
    PolySystem s = build_bounded_system(f4.model, f4.strategies.at("uniform").table[0],
                                        {1, (Counter(1) << beta) - 1});
    CHECK(s.size() == 2 * 9 * (3 * beta - 2));
    if (beta == 1) CHECK(s.degree() <= 1);
  }
  OcMdp two;
  two.set_action("a", "x", 1, {{"b", Rat(1)}});
  two.set_action("b", "x", -1, {{"a", Rat(1)}});
  CHECK(build_bounded_system(two, {dirac(0), dirac(0)}, {1, 7}).size() == 56);
  CHECK_THROWS(build_bounded_system(two, {dirac(0), dirac(0)}, {1, 6}));
}

TEST_CASE("a model that never decrements pins every down variable") {
  OcMdp up;
  up.set_action("q", "a", 1, {{"q", Rat(1, 2)}, {"p", Rat(1, 2)}});
  up.set_action("p", "a", 0, {{"q", Rat(1)}});
  std::vector<Dist> row{dirac(0), dirac(0)};
  Built b = bounded(up, row, 3);
  refine_unique(b.sys, b.block, positivity(b.fold));
  for (int id = 0; id < b.sys.size(); ++id)
    if (b.sys.vars[static_cast<size_t>(id)].role == VarRole::Down) CHECK(b.sys.pinned[static_cast<size_t>(id)]);
}

TEST_CASE("refine_unique pins exactly the zero coordinates of the least solution") {
  oracle::Gen g(41);
  for (int i = 0; i < 40; ++i) {
    OcMdp m = g.model(3, 3);
    auto row = g.row(m);
    int beta = g.uni(1, 3);
    Built b = bounded(m, row, beta);
    PolySystem raw = b.sys;
    refine_unique(b.sys, b.block, positivity(b.fold));
    auto x = jacobi(raw, raw.size() + 5);
    auto zero = zero_set(raw);
    for (int v = 0; v < raw.size(); ++v) {
      CHECK(b.sys.pinned[static_cast<size_t>(v)] == (x[static_cast<size_t>(v)] == 0.0));
      CHECK(zero[static_cast<size_t>(v)] == (x[static_cast<size_t>(v)] == 0.0));
    }
    // After pinning, the staged solve is exact and reproduces the fixed point.
    Valuation sol = solve_linear(b.sys, true);
    for (int v = 0; v < b.sys.size(); ++v)
      if (b.sys.is_free(v)) CHECK(eval_poly(b.sys.rhs[static_cast<size_t>(v)], sol.exact) == sol.exact[static_cast<size_t>(v)]);
    for (const auto& grp : b.sys.mass_groups) {
      Rat total = 0;
      for (int v : grp) total += sol.exact[static_cast<size_t>(v)];
      CHECK(total <= 1);
    }
  }
}

TEST_CASE("coefficients are non-negative and Kleene iteration is monotone") {
  oracle::Gen g(43);
  for (int i = 0; i < 30; ++i) {
    OcMdp m = g.model(3, 3);
    auto row = g.row(m);
    std::vector<PolySystem> systems{build_termination_system(m, row),
                                    build_bounded_system(m, row, {1, (Counter(1) << g.uni(1, 3)) - 1})};
    for (const auto& sys : systems) {
      for (const auto& rhs : sys.rhs)
        for (const auto& t : rhs) CHECK(t.coef >= 0);
      CHECK(sys.degree() <= 2);
      std::vector<double> x(static_cast<size_t>(sys.size()), 0.0);
      for (int it = 0; it < 50; ++it) {
        std::vector<double> nx(x.size());
        for (int v = 0; v < sys.size(); ++v) nx[static_cast<size_t>(v)] = eval_poly(sys.rhs[static_cast<size_t>(v)], x);
        for (size_t v = 0; v < x.size(); ++v) {
          CHECK(nx[v] >= x[v] - 1e-15);
          CHECK(nx[v] <= 1 + 1e-12);
        }
        x = nx;
      }
    }
  }
}

TEST_CASE("reach systems") {
  auto f4 = catalog_example("fig4");
  CompressedChain c = compress_for(f4.model, f4.strategies.at("uniform"), 3, 2);
  int top = f4.model.require_state("t_top");
  std::vector<bool> target(static_cast<size_t>(c.size()), false);
  target[static_cast<size_t>(c.require(top, 0))] = true;
  PolySystem sys = build_reach_system(c, target);
  CHECK(sys.degree() <= 1);
  Valuation v = solve_linear(sys, true);
  CHECK(v.exact[static_cast<size_t>(var_named(sys, "y_q@2"))] == Rat(25, 32));
  // The sink never reaches the target.
  CHECK(sys.pinned[static_cast<size_t>(var_named(sys, "y_bot"))]);

  std::vector<bool> all(static_cast<size_t>(c.size()), true);
  PolySystem everything = build_reach_system(c, all);
  Valuation w = solve_linear(everything, true);
  for (int s = 0; s < everything.size(); ++s)
    if (everything.is_free(s)) CHECK(w.exact[static_cast<size_t>(s)] == 1);
}

TEST_CASE("reach system of the compression example against the truncated oracle") {
  auto f2 = catalog_example("fig2a");
  const OcMdp& m = f2.model;
  const auto& s = f2.strategies.at("example");
  CompressedChain c = compress_for(m, s, kInf, 1);
  int t = m.require_state("t"), q = m.require_state("q");
  std::vector<bool> target(static_cast<size_t>(c.size()), false);
  target[static_cast<size_t>(c.require(t, 0))] = true;
  // Numeric entries: solve with the lower ends.
  PolySystem sys;
  for (int i = 0; i < c.size(); ++i) {
    VarInfo info;
    info.name = "y" + std::to_string(i);
    sys.add_var(info);
  }
  for (int i = 0; i < c.size(); ++i) {
    Poly rhs;
    if (target[static_cast<size_t>(i)]) {
      sys.pinned[static_cast<size_t>(i)] = true;
      continue;
    }
    if (c.absorbing[static_cast<size_t>(i)]) {
      sys.pinned[static_cast<size_t>(i)] = true;
      continue;
    }
    for (const auto& e : c.rows[static_cast<size_t>(i)]) {
      Rat p(e.lo);
      if (target[static_cast<size_t>(e.to)]) rhs = poly_add(rhs, poly_const(p));
      else rhs = poly_add(rhs, poly_scale(poly_var(e.to), p));
    }
    sys.rhs[static_cast<size_t>(i)] = rhs;
  }
  Valuation v = lfp(sys, {});
  double want = oracle::truncated(m, s, 64, q, 1, oracle::Goal::SelTerm, {t});
  CHECK(v.value[static_cast<size_t>(c.require(q, 1))] == doctest::Approx(want).epsilon(1e-6));
}
