#include "ocmdp/cli.hpp"
#include "ocmdp/compression.hpp"
#include "ocmdp/generators.hpp"
#include "ocmdp/model.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ocmdp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("ocmdp_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("verify exit codes follow the answer") {
  auto yes = run({"verify", "--model", "fig4", "--strategy", "uniform"});
  CHECK(yes.code == kExitYes);
  CHECK(has(yes.out, "probability: 25/32"));
  CHECK(run({"verify", "--model", "fig4", "--strategy", "uniform", "--theta", "4/5"}).code == kExitNo);
  auto maybe = run({"verify", "--model", "fig2a", "--strategy", "example", "--theta", "127/128"});
  CHECK(maybe.code == kExitInconclusive);
  CHECK(has(maybe.out, "answer: inconclusive"));
  CHECK(run({"verify", "--model", "fig2a", "--strategy", "example"}).code == kExitYes);
  CHECK(run({"verify", "--model", "fig2a", "--strategy", "example", "--mode", "float"}).code == kExitYes);
}

TEST_CASE("errors exit with code three") {
  fs::path bad = scratch() / "bad.ocm";
  spit(bad, "states q t\nactions a\nq a w=-1 -> t:1/2\nt a w=-1 -> t:1\n");
  auto r = run({"verify", "--model", bad.string(), "--strategy", "x"});
  CHECK(r.code == kExitError);
  CHECK(has(r.err, "error:"));
  CHECK(has(r.err, bad.string()));
  CHECK(run({"verify", "--model", (scratch() / "missing.ocm").string(), "--strategy", "x"}).code == kExitError);
  CHECK(run({"verify", "--model", "fig4", "--strategy", "nonexistent"}).code == kExitError);
  CHECK(run({"verify", "--model", "fig4", "--strategy", "uniform", "--theta", "3/2"}).code == kExitError);
  CHECK(run({"bogus"}).code == kExitError);
  CHECK(run({}).code == kExitError);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("json block") {
  auto r = run({"--json", "verify", "--model", "fig4", "--strategy", "pure_a"});
  REQUIRE(r.code == kExitYes);
  auto sep = r.out.find("---\n");
  REQUIRE(sep != std::string::npos);
  auto j = nlohmann::json::parse(r.out.substr(sep + 4));
  CHECK(j["answer"] == "yes");
  CHECK(j["probability"] == "3/4");
  CHECK(j["exact"] == true);
}

TEST_CASE("generated files round trip through verify") {
  fs::path dir = scratch() / "fig4";
  fs::create_directories(dir);
  auto g = run({"generate", "example", "--name", "fig4", "--model-out", (dir / "m.ocm").string(), "--query-out",
                (dir / "q.txt").string(), "--strategies-dir", dir.string()});
  REQUIRE(g.code == 0);
  auto v = run({"verify", "--model", (dir / "m.ocm").string(), "--query", (dir / "q.txt").string(), "--strategy",
                (dir / "uniform.strat").string()});
  CHECK(v.code == kExitYes);
  CHECK(has(v.out, "probability: 25/32"));
  auto to_stdout = run({"generate", "example", "--name", "fig2a"});
  CHECK(to_stdout.code == 0);
  CHECK(has(to_stdout.out, "---"));
}

TEST_CASE("pure realisation writes a reusable witness") {
  fs::path w = scratch() / "witness.strat";
  auto r = run({"realise-pure", "--model", "fig4", "--partition", "1-1,2-2", "--theta", "7/8", "--witness-out",
                w.string()});
  REQUIRE(r.code == kExitYes);
  CHECK(has(r.out, "witness-probability: 7/8"));
  CHECK(run({"verify", "--model", "fig4", "--theta", "7/8", "--strategy", w.string()}).code == kExitYes);
  CHECK(run({"realise-pure", "--model", "fig4", "--partition", "1-2", "--theta", "25/32"}).code == kExitNo);
  CHECK(run({"realise-pure", "--model", "fig4", "--d", "2", "--n", "1", "--theta", "7/8", "--jobs", "2"}).code ==
        kExitYes);
  CHECK(run({"realise-pure", "--model", "fig2a", "--d", "1", "--n", "1", "--cis"}).code == kExitYes);
  CHECK(run({"realise-pure", "--model", "fig4", "--d", "2", "--n", "2", "--theta", "1", "--max-candidates", "1"})
            .code == kExitInconclusive);
}

TEST_CASE("randomised realisation") {
  auto r = run({"realise-rand", "--model", "fig4", "--theta", "25/32"});
  CHECK(r.code == kExitYes);
  auto none = run({"realise-rand", "--model", "fig4", "--theta", "1"});
  CHECK(none.code == kExitNo);
  CHECK(run({"realise-rand", "--model", "fig2a"}).code == kExitError);
}

TEST_CASE("compress dump round trip") {
  fs::path out = scratch() / "chain.txt";
  auto r = run({"compress", "--model", "fig4", "--strategy", "uniform", "--out", out.string()});
  REQUIRE(r.code == 0);
  CompressedChain parsed = parse_chain_dump(slurp(out));
  auto f4 = catalog_example("fig4");
  CHECK(parsed == compress_for(f4.model, f4.strategies.at("uniform"), f4.query.bound, f4.query.init.counter));
  auto cyc = run({"compress", "--model", "fig2a", "--strategy", "example", "--dump"});
  CHECK(cyc.code == 0);
  CHECK(!cyc.out.empty());
}

TEST_CASE("smt emission") {
  fs::path s = scratch() / "v.smt2";
  auto r = run({"emit-smt", "--model", "fig4", "--strategy", "uniform", "--smt-out", s.string()});
  CHECK(r.code == 0);
  CHECK(has(slurp(s), "(check-sat)"));
  fs::path rs = scratch() / "r.smt2";
  CHECK(run({"emit-smt", "--model", "fig4", "--kind", "realise", "--partition", "1-2", "--smt-out", rs.string()})
            .code == 0);
  CHECK(has(slurp(rs), "(check-sat)"));
}

TEST_CASE("generators on the command line") {
  auto sq = run({"generate", "sqrt-sum", "--xs", "2,3", "--y", "2"});
  CHECK(sq.code == 0);
  CHECK(has(sq.out, "q_init"));
  auto eq = run({"generate", "sqrt-sum-bounded", "--xs", "4", "--y", "2", "--override-bound", "9"});
  CHECK(eq.code == 0);
  CHECK(has(eq.err, "warning"));
  fs::path m = scratch() / "ham.ocm", q = scratch() / "ham.q";
  REQUIRE(run({"generate", "hamiltonian", "--graph", "vertices=3; init=0; edges=0>1,1>2,2>0", "--model-out",
               m.string(), "--query-out", q.string()})
              .code == 0);
  CHECK(run({"realise-pure", "--model", m.string(), "--query", q.string(), "--partition", "1-3"}).code == kExitYes);
  CHECK(run({"generate", "hamiltonian", "--graph", "vertices=2; edges=0>7"}).code == kExitError);
}

TEST_CASE("mealy export") {
  auto r = run({"mealy-export", "--model", "fig4", "--strategy", "uniform"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "mealy"));
}

TEST_CASE("sample data files") {
  const fs::path data = OCMDP_DATA_DIR;
  auto path = [&](const std::string& f) { return (data / f).string(); };
  for (auto [model, strategy, want] : std::vector<std::tuple<std::string, std::string, std::string>>{
           {"fig1", "fig1-memory", "63/64"},
           {"fig4", "fig4-pure_a", "3/4"},
           {"fig4", "fig4-pure_b", "3/4"},
           {"fig4", "fig4-uniform", "25/32"}}) {
    auto r = run({"verify", "--model", path(model + ".ocm"), "--query", path(model + ".query"), "--strategy",
                  path(strategy + ".strat")});
    CHECK(r.code == kExitYes);
    CHECK(has(r.out, "probability: " + want));
  }
  CHECK(run({"verify", "--model", path("fig2a.ocm"), "--query", path("fig2a.query"), "--strategy",
             path("fig2a-example.strat")})
            .code == kExitYes);
  CHECK(run({"realise-pure", "--model", path("cycle4.ocm"), "--query", path("cycle4.query"), "--partition", "1-4"})
            .code == kExitYes);
  auto g = run({"generate", "hamiltonian", "--graph-file", path("cycle4.graph")});
  CHECK(g.code == 0);
  CHECK(has(g.out, slurp(path("cycle4.ocm"))));
  fs::path s = scratch() / "oblivious.strat";
  spit(s, "oeis\ninterval 1-inf\n");
  auto sq = run({"verify", "--model", path("sqrt235.ocm"), "--query", path("sqrt235.query"), "--strategy", s.string()});
  CHECK(sq.code == kExitYes);
}
