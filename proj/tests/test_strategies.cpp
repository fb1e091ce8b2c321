#include "ocmdp/generators.hpp"
#include "ocmdp/strategies.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <set>

using namespace ocmdp;

namespace {

Partition P(std::string_view s) { return parse_partition(s); }

int act(const OcMdp& m, const char* name) { return m.action_index(name); }

// Walks every history of length <= depth and checks the machine against direct lookup.
void check_mealy(const OcMdp& m, const IntervalStrategy& s, const MealyMachine& mm, int q0, Counter k0, Counter B,
                 int depth) {
  std::function<void(int, Counter, int, int)> walk = [&](int q, Counter k, int mem, int left) {
    if (k == 0 || k == B || left == 0) return;
    CHECK(mm.next[static_cast<size_t>(mem)][static_cast<size_t>(q)] == s.lookup(q, k));
    for (int a : support(s.lookup(q, k))) {
      const Action* ac = m.find(q, a);
      Counter nk = k + ac->weight;
      if (nk == 0 || nk == B) continue;
      auto it = mm.update.find({mem, q, a});
      REQUIRE(it != mm.update.end());
      for (const auto& t : ac->succ) walk(t.target, nk, it->second, left - 1);
    }
  };
  walk(q0, k0, mm.initial, depth);
}

}  // namespace

TEST_CASE("lookup on the compression example") {
  auto f2 = catalog_example("fig2a");
  const auto& s = f2.strategies.at("example");
  const OcMdp& m = f2.model;
  int q = m.require_state("q"), p = m.require_state("p");
  CHECK(s.lookup(q, 5) == dirac(act(m, "a")));
  CHECK(s.lookup(q, 8) == dirac(act(m, "c")));
  Dist half{{act(m, "a"), Rat(1, 2)}, {act(m, "b"), Rat(1, 2)}};
  CHECK(s.lookup(p, 9) == half);
  CHECK(s.lookup(p, 1'000'000'000) == half);
  CHECK_THROWS_AS(s.lookup(q, 0), std::domain_error);
}

TEST_CASE("lookup on cyclic and counter-oblivious strategies") {
  auto f4 = catalog_example("fig4");
  const OcMdp& m = f4.model;
  std::vector<Dist> r1{dirac(0), dirac(0), dirac(0)}, r2{dirac(1), dirac(0), dirac(0)};
  IntervalStrategy c = make_cis({2, P("1-1,2-2")}, {r1, r2});
  CHECK(c.lookup(0, 5) == r1[0]);
  CHECK(c.lookup(0, 6) == r2[0]);
  for (Counter k = 1; k < 40; ++k)
    for (int q = 0; q < m.num_states(); ++q) CHECK(c.lookup(q, k) == c.lookup(q, k + 2));
  const auto& u = f4.strategies.at("uniform");
  CHECK(u.lookup(0, 1) == u.lookup(0, 2));
}

TEST_CASE("is_based_on") {
  auto f2 = catalog_example("fig2a");
  const auto& s = f2.strategies.at("example");
  CHECK(is_based_on(s, P("1-7,8-inf")));
  CHECK(!is_based_on(s, P("1-3,4-inf")));
  Partition singletons;
  for (Counter k = 1; k <= 20; ++k) singletons.push_back({k, k});
  singletons.push_back({21, kInf});
  CHECK(is_based_on(s, singletons));
  CHECK(is_based_on(s, refine_partition(isolate(P("1-7,8-inf"), 1))));
}

TEST_CASE("lookup is constant on the base intervals of random strategies") {
  oracle::Gen g(17);
  for (int i = 0; i < 50; ++i) {
    OcMdp m = g.model();
    IntervalStrategy s = g.oeis(m, g.partition(kInf, 4));
    CHECK(validate(s, m).empty());
    for (size_t j = 0; j < s.base.size(); ++j) {
      const auto& iv = s.base[j];
      Counter hi = iv.bounded() ? iv.hi : iv.lo + 100;
      for (Counter k : {iv.lo, (iv.lo + hi) / 2, hi})
        for (int q = 0; q < m.num_states(); ++q) CHECK(s.lookup(q, k) == s.table[j][static_cast<size_t>(q)]);
    }
    CHECK(is_based_on(s, s.base));
  }
}

TEST_CASE("pure enumeration counts") {
  auto f4 = catalog_example("fig4");
  CHECK(enumerate_pure(P("1-2"), f4.model).size() == 2);
  CHECK(enumerate_pure(P("1-1,2-2"), f4.model).size() == 4);
  OcMdp one;
  one.set_action("x", "a", -1, {{"y", Rat(1)}});
  one.set_action("y", "a", 0, {{"y", Rat(1)}});
  CHECK(enumerate_pure(P("1-3,4-inf"), one).size() == 1);

  oracle::Gen g(23);
  for (int i = 0; i < 30; ++i) {
    OcMdp m = g.model();
    Partition p = g.partition(kInf, 3);
    std::size_t want = 1;
    for (int q = 0; q < m.num_states(); ++q) want *= m.enabled[static_cast<size_t>(q)].size();
    std::size_t expect = 1;
    for (size_t j = 0; j < p.size(); ++j) expect *= want;
    auto all = enumerate_pure(p, m);
    CHECK(all.size() == expect);
    CHECK(PureStream(p, m).count() == expect);
    std::set<std::string> seen;
    for (const auto& s : all) seen.insert(print_strategy(s, m));
    CHECK(seen.size() == all.size());
  }
}

TEST_CASE("support enumeration counts") {
  auto f4 = catalog_example("fig4");
  CHECK(enumerate_supports(P("1-2"), f4.model).size() == 3);
  CHECK(enumerate_supports(P("1-1,2-2"), f4.model).size() == 9);
  OcMdp one;
  one.set_action("x", "a", -1, {{"x", Rat(1)}});
  CHECK(enumerate_supports(P("1-5"), one).size() == 1);
  for (const auto& sup : enumerate_supports(P("1-1,2-2"), f4.model))
    for (const auto& row : sup.sets)
      for (const auto& set : row) CHECK(!set.empty());
}

TEST_CASE("Mealy export") {
  auto f1 = catalog_example("fig1");
  const auto& mem = f1.strategies.at("memory");
  MealyMachine full = export_mealy(mem, f1.model, 1, 8, true);
  CHECK(full.memory.size() == 7);
  check_mealy(f1.model, mem, full, 0, 1, 8, 12);

  auto f4 = catalog_example("fig4");
  std::vector<Dist> row{dirac(0), dirac(0), dirac(0)};
  MealyMachine one = export_mealy(make_cis({1, P("1-1")}, {row}), f4.model, 5, kInf);
  CHECK(one.memory.size() == 1);

  auto f2 = catalog_example("fig2a");
  std::vector<Dist> r2{dirac(0), dirac(0), dirac(1), dirac(2)};
  MealyMachine c3 = export_mealy(make_cis({3, P("1-3")}, {r2}), f2.model, 7, kInf);
  CHECK(c3.memory[static_cast<size_t>(c3.initial)] == 1);

  CHECK_THROWS_AS(export_mealy(f2.strategies.at("example"), f2.model, 1, kInf), std::domain_error);
  CHECK_THROWS_AS(export_mealy(make_cis({3, P("1-3")}, {std::vector<Dist>(4, dirac(0))}), f2.model, 7, kInf),
                  std::domain_error);
}

TEST_CASE("Mealy simulation matches lookup on random bounded strategies") {
  oracle::Gen g(29);
  for (int i = 0; i < 30; ++i) {
    OcMdp m = g.model();
    Counter B = g.uni(2, 14);
    IntervalStrategy s = g.oeis(m, g.partition(B - 1, 3));
    Counter k0 = g.uni(1, static_cast<int>(B - 1));
    MealyMachine mm = export_mealy(s, m, k0, B);
    check_mealy(m, s, mm, g.uni(0, m.num_states() - 1), k0, B, 12);
  }
}

TEST_CASE("cyclic Mealy simulation") {
  oracle::Gen g(31);
  for (int i = 0; i < 20; ++i) {
    OcMdp m = g.model();
    Counter rho = g.uni(1, 4);
    Partition w = g.partition(rho, 2);
    std::vector<std::vector<Dist>> table;
    for (size_t j = 0; j < w.size(); ++j) table.push_back(g.row(m));
    IntervalStrategy s = make_cis({rho, w}, table);
    Counter k0 = g.uni(1, 9);
    MealyMachine mm = export_mealy(s, m, k0, kInf);
    check_mealy(m, s, mm, 0, k0, kInf, 10);
  }
}

TEST_CASE("unrolling a cyclic strategy") {
  auto f4 = catalog_example("fig4");
  std::vector<Dist> r1{dirac(0), dirac(0), dirac(0)}, r2{dirac(1), dirac(0), dirac(0)};
  IntervalStrategy c = make_cis({2, P("1-1,2-2")}, {r1, r2});
  IntervalStrategy u = unroll_cis(c, 7);
  CHECK(u.base == P("1-1,2-2,3-3,4-4,5-5,6-6"));
  for (Counter k = 1; k <= 6; ++k) CHECK(u.lookup(0, k) == c.lookup(0, k));
}

TEST_CASE("strategy text round trip and validation") {
  for (const auto& [name, inst] : example_catalog())
    for (const auto& [sn, s] : inst.strategies) {
      std::string text = print_strategy(s, inst.model);
      CHECK(parse_strategy(text, inst.model) == s);
    }
  auto f4 = catalog_example("fig4");
  std::vector<Dist> r1{dirac(0), dirac(0), dirac(0)};
  IntervalStrategy c = make_cis({3, P("1-1,2-3")}, {r1, r1});
  CHECK(parse_strategy(print_strategy(c, f4.model), f4.model) == c);
  CHECK_THROWS(parse_strategy("oeis\ninterval 1-2\n  q: a=1/2\n  t_top: a\n  t_bot: a\n", f4.model));
  CHECK_THROWS(parse_strategy("oeis\ninterval 1-2\n  q: zz\n  t_top: a\n  t_bot: a\n", f4.model));
  IntervalStrategy bad = make_oeis(P("1-2"), {{dirac(1), dirac(1), dirac(0)}});
  CHECK(!validate(bad, f4.model).empty());
}
