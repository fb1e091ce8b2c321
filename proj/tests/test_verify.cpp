#include "ocmdp/generators.hpp"
#include "ocmdp/verify.hpp"
#include "oracle.hpp"

#include <doctest.h>

using namespace ocmdp;

namespace {

Query query_of(const OcMdp& m, ObjectiveKind kind, std::vector<int> targets, Counter B, int q0, Counter k0,
               Rat theta) {
  (void)m;
  std::sort(targets.begin(), targets.end());
  return Query{Objective{kind, targets}, B, Config{q0, k0}, theta};
}

oracle::Goal goal_of(ObjectiveKind k) {
  return k == ObjectiveKind::SelTerm ? oracle::Goal::SelTerm : oracle::Goal::Reach;
}

IntervalStrategy random_cis(oracle::Gen& g, const OcMdp& m) {
  Counter period = g.uni(1, 9);
  Partition w = g.partition(period, 3);
  std::vector<std::vector<Dist>> table;
  for (size_t i = 0; i < w.size(); ++i) table.push_back(g.row(m));
  return make_cis({period, w}, table);
}

}  // namespace

TEST_CASE("decision rule") {
  CHECK(decide(0.5, 0.5, Rat(1, 2)) == Answer::Yes);
  CHECK(decide(0.4, 0.6, Rat(1, 2)) == Answer::Inconclusive);
  CHECK(decide(0.2, 0.3, Rat(1, 2)) == Answer::No);
  CHECK(decide(0.0, 0.0, Rat(0)) == Answer::Yes);
  CHECK(answer_str(Answer::Inconclusive) == "inconclusive");
}

TEST_CASE("bounded example values") {
  auto f4 = catalog_example("fig4");
  Query q = f4.query;
  for (auto [name, want] : std::vector<std::pair<std::string, Rat>>{
           {"pure_a", Rat(3, 4)}, {"pure_b", Rat(3, 4)}, {"uniform", Rat(25, 32)}}) {
    Verdict v = verify(f4.model, f4.strategies.at(name), q);
    CHECK(v.exact);
    CHECK(v.probability == want);
    q.theta = want;
    CHECK(verify(f4.model, f4.strategies.at(name), q).answer == Answer::Yes);
    q.theta = want + Rat(1, 1000);
    CHECK(verify(f4.model, f4.strategies.at(name), q).answer == Answer::No);
  }
  auto f1 = catalog_example("fig1");
  Verdict v1 = verify(f1.model, f1.strategies.at("memory"), f1.query);
  CHECK(v1.exact);
  int q2 = f1.model.require_state("q2");
  CHECK(v1.probability == oracle::bounded_exact(f1.model, f1.strategies.at("memory"), f1.query.bound,
                                                f1.query.init.state, f1.query.init.counter, oracle::Goal::Reach,
                                                {q2}));
}

TEST_CASE("unbounded example bracket") {
  auto f2 = catalog_example("fig2a");
  const auto& s = f2.strategies.at("example");
  Verdict v = verify(f2.model, s, f2.query);
  CHECK(!v.exact);
  CHECK(v.lo <= 127.0 / 128 + 1e-12);
  CHECK(v.hi >= 127.0 / 128 - 1e-12);
  CHECK(v.hi - v.lo < 1e-6);
  CHECK(v.answer == Answer::Yes);
  Query hard = f2.query;
  hard.theta = Rat(128 * 1000 - 1, 128 * 1000);
  CHECK(verify(f2.model, s, hard).answer == Answer::No);
  int t = f2.model.require_state("t");
  CHECK(oracle::truncated(f2.model, s, 300, f2.query.init.state, f2.query.init.counter, oracle::Goal::SelTerm, {t}) <=
        v.hi + 1e-12);
}

TEST_CASE("bounded verification matches the explicit chain") {
  oracle::Gen g(73);
  for (int i = 0; i < 80; ++i) {
    OcMdp m = g.model();
    Counter B = g.uni(2, 40);
    IntervalStrategy s = g.oeis(m, g.partition(B - 1, 4), i % 3 == 0);
    const int nq = m.num_states();
    auto kind = i % 2 ? ObjectiveKind::Reach : ObjectiveKind::SelTerm;
    std::vector<int> targets{g.uni(0, nq - 1)};
    if (nq > 2 && i % 5 == 0) targets.push_back((targets[0] + 1) % nq);
    int q0 = g.uni(0, nq - 1);
    Counter k0 = g.uni(1, static_cast<int>(B - 1));
    Rat want = oracle::bounded_exact(m, s, B, q0, k0, goal_of(kind), targets);
    Query q = query_of(m, kind, targets, B, q0, k0, want);
    Verdict v = verify(m, s, q);
    REQUIRE(v.exact);
    CHECK(v.probability == want);
    CHECK(v.answer == Answer::Yes);
    if (want < 1) {
      q.theta = (want + 1) / 2;
      CHECK(verify(m, s, q).answer == Answer::No);
    }
    VerifyConfig fl;
    fl.mode = NumMode::Float;
    CHECK(verify(m, s, q, fl).lo == doctest::Approx(want.get_d()).epsilon(1e-9));
  }
}

TEST_CASE("bounded cyclic strategies are unrolled") {
  oracle::Gen g(79);
  for (int i = 0; i < 40; ++i) {
    OcMdp m = g.model();
    IntervalStrategy s = random_cis(g, m);
    Counter B = g.uni(2, 30);
    const int nq = m.num_states();
    int t = g.uni(0, nq - 1), q0 = g.uni(0, nq - 1);
    Counter k0 = g.uni(1, static_cast<int>(B - 1));
    Rat want = oracle::bounded_exact(m, s, B, q0, k0, oracle::Goal::SelTerm, {t});
    Verdict v = verify(m, s, query_of(m, ObjectiveKind::SelTerm, {t}, B, q0, k0, Rat(0)));
    REQUIRE(v.exact);
    CHECK(v.probability == want);
  }
}

TEST_CASE("unbounded brackets contain the truncated probability") {
  oracle::Gen g(83);
  int tight = 0;
  for (int i = 0; i < 60; ++i) {
    OcMdp m = g.model(3, 3);
    bool cyclic = i % 2 == 1;
    IntervalStrategy s = cyclic ? random_cis(g, m) : g.oeis(m, g.partition(kInf, 3));
    const int nq = m.num_states();
    auto kind = i % 4 < 2 ? ObjectiveKind::SelTerm : ObjectiveKind::Reach;
    int t = g.uni(0, nq - 1), q0 = g.uni(0, nq - 1);
    Counter k0 = g.uni(1, 6);
    Query q = query_of(m, kind, {t}, kInf, q0, k0, Rat(1, 2));
    Verdict v = verify(m, s, q);
    CHECK(v.lo <= v.hi);
    CHECK(v.lo >= 0);
    CHECK(v.hi <= 1 + 1e-12);
    // Starting on a target is decided before any transformation.
    if (q0 != t) CHECK(v.reach_transformed == (kind == ObjectiveKind::Reach));
    double low = oracle::truncated(m, s, 400, q0, k0, goal_of(kind), {t});
    CHECK(low <= v.hi + 1e-9);
    if (v.hi - v.lo < 1e-6 && low > v.lo - 1e-4) ++tight;
    if (v.answer == Answer::Yes) CHECK(v.lo >= 0.5);
    if (v.answer == Answer::No) CHECK(v.hi < 0.5);
  }
  // Most random instances converge well within the truncation window.
  CHECK(tight >= 40);
}

TEST_CASE("cyclic and equivalent unrolled strategies agree") {
  oracle::Gen g(89);
  for (int i = 0; i < 30; ++i) {
    OcMdp m = g.model(3, 3);
    IntervalStrategy s = random_cis(g, m);
    const int nq = m.num_states();
    int t = g.uni(0, nq - 1), q0 = g.uni(0, nq - 1);
    Query q = query_of(m, ObjectiveKind::SelTerm, {t}, kInf, q0, 1, Rat(1, 3));
    Verdict vc = verify_cis(m, s, q);
    // Unroll five periods; the tail repeats the last period's rows.
    Partition p;
    std::vector<std::vector<Dist>> table;
    for (Counter rep = 0; rep < 5; ++rep)
      for (size_t j = 0; j < s.base.size(); ++j) {
        Counter lo = s.base[j].lo + rep * s.period, hi = s.base[j].hi + rep * s.period;
        bool last = rep == 4 && j + 1 == s.base.size();
        p.push_back({lo, hi});
        table.push_back(s.table[j]);
        if (last && s.base.size() == 1) p.back().hi = kInf;
      }
    if (s.base.size() > 1) {
      // Still periodic only if one row covers the tail, so compare only on the shared prefix instead.
      double low = oracle::truncated(m, s, 300, q0, 1, oracle::Goal::SelTerm, {t});
      CHECK(low <= vc.hi + 1e-9);
      continue;
    }
    IntervalStrategy so = make_oeis(p, table);
    Verdict vo = verify_oeis(m, so, q);
    CHECK(vc.lo <= vo.hi + 1e-9);
    CHECK(vo.lo <= vc.hi + 1e-9);
  }
}

TEST_CASE("verification rejects bad inputs") {
  auto f4 = catalog_example("fig4");
  Query q = f4.query;
  q.bound = kInf;
  // fig4 strategies are bounded; they do not cover counters beyond the bound.
  CHECK_THROWS(verify(f4.model, f4.strategies.at("uniform"), q));
  Query big = f4.query;
  big.init.counter = 5;
  CHECK_THROWS(verify(f4.model, f4.strategies.at("uniform"), big));
}

TEST_CASE("verification scripts mention the threshold") {
  auto f4 = catalog_example("fig4");
  SmtScript neg = emit_verification_smt(f4.model, f4.strategies.at("uniform"), f4.query, SmtForm::Negated);
  CHECK(neg.text.find("(check-sat)") != std::string::npos);
  CHECK(neg.text.find("(/ 3.0 4.0)") != std::string::npos);
  SmtScript sym = emit_verification_smt(f4.model, StrategyKind::OEIS, parse_partition("1-1,2-2"), 0, f4.query,
                                        SmtForm::Universal);
  CHECK(!sym.strategy_vars.empty());
  CHECK(sym.text.find("forall") != std::string::npos);
}
