#include "ocmdp/cli.hpp"

#include "ocmdp/generators.hpp"
#include "ocmdp/realise.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ocmdp {

namespace {

using nlohmann::json;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_file(const std::string& s) { return std::filesystem::is_regular_file(s); }

// Reads a file and tags parse errors with its path.
template <class F>
auto load(const std::string& path, F&& parse) {
  std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

struct Options {
  std::string model, query, strategy;
  std::string objective, targets, bound, init, theta;
  std::string mode = "rational";
  double eps = 1e-12;
  long max_iters = 1'000'000;
  bool newton = false;
  std::string smt_out, solver_cmd;
  unsigned jobs = 0;
  bool json = false;
};

struct Loaded {
  OcMdp model;
  Query query;
  std::map<std::string, IntervalStrategy> catalog;  // named strategies of a catalog model
  bool from_catalog = false;
};

void add_model_flags(CLI::App* c, Options& o, bool with_query = true) {
  c->add_option("--model", o.model, "model file, or a catalog name (fig1, fig2a, fig4)")->required();
  if (!with_query) return;
  c->add_option("--query", o.query, "query file (defaults to the catalog query)");
  c->add_option("--objective", o.objective, "override: reach | selterm");
  c->add_option("--targets", o.targets, "override: comma-separated target states");
  c->add_option("--bound", o.bound, "override: N or inf");
  c->add_option("--init", o.init, "override: state@counter");
  c->add_option("--theta", o.theta, "override: threshold as a rational");
}

void add_solve_flags(CLI::App* c, Options& o) {
  c->add_option("--mode", o.mode, "rational | float")->check(CLI::IsMember({"rational", "float"}));
  c->add_option("--eps", o.eps, "convergence tolerance of the iterative solvers");
  c->add_option("--max-iters", o.max_iters, "iteration cap of the iterative solvers");
  c->add_flag("--newton", o.newton, "use decomposed Newton steps for the least fixed point");
}

VerifyConfig verify_config(const Options& o) {
  VerifyConfig v;
  v.mode = o.mode == "float" ? NumMode::Float : NumMode::Rational;
  v.solve.eps = o.eps;
  v.solve.max_iters = o.max_iters;
  v.solve.newton = o.newton;
  return v;
}

Config parse_init(const std::string& text, const OcMdp& m) {
  auto at = text.find('@');
  if (at == std::string::npos) throw DataError("--init must look like state@counter, got '" + text + "'");
  return {m.require_state(text.substr(0, at)), parse_counter(text.substr(at + 1))};
}

Loaded load_model(const Options& o, bool need_query = true) {
  Loaded l;
  if (!is_file(o.model)) {
    auto cat = example_catalog();
    auto it = cat.find(o.model);
    if (it == cat.end()) throw DataError("no model file or catalog entry named '" + o.model + "'");
    l.model = it->second.model;
    l.query = it->second.query;
    l.catalog = it->second.strategies;
    l.from_catalog = true;
  } else {
    l.model = load(o.model, [](const std::string& t) { return parse_model(t); });
    auto errs = validate(l.model);
    if (!errs.empty()) throw DataError(o.model + ": " + errs.front());
  }
  if (!o.query.empty()) l.query = load(o.query, [&](const std::string& t) { return parse_query(t, l.model); });
  else if (!l.from_catalog && need_query && o.targets.empty())
    throw DataError("--query (or --targets with the other query flags) is required for model files");

  try {
    if (!o.objective.empty()) {
      if (o.objective == "reach") l.query.objective.kind = ObjectiveKind::Reach;
      else if (o.objective == "selterm") l.query.objective.kind = ObjectiveKind::SelTerm;
      else throw DataError("--objective must be reach or selterm");
    }
    if (!o.targets.empty()) {
      l.query.objective.targets.clear();
      for (const auto& t : split(o.targets, ',')) l.query.objective.targets.push_back(l.model.require_state(trim(t)));
      std::sort(l.query.objective.targets.begin(), l.query.objective.targets.end());
      l.query.objective.targets.erase(
          std::unique(l.query.objective.targets.begin(), l.query.objective.targets.end()),
          l.query.objective.targets.end());
    }
    if (!o.bound.empty()) l.query.bound = parse_counter(o.bound);
    if (!o.init.empty()) l.query.init = parse_init(o.init, l.model);
    if (!o.theta.empty()) l.query.theta = parse_rat(o.theta);
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  if (need_query) {
    auto errs = validate(l.model, l.query);
    if (!errs.empty()) throw DataError("invalid query: " + errs.front());
  }
  return l;
}

IntervalStrategy load_strategy(const Loaded& l, const std::string& name) {
  if (is_file(name)) return load(name, [&](const std::string& t) { return parse_strategy(t, l.model); });
  auto it = l.catalog.find(name);
  if (it != l.catalog.end()) return it->second;
  throw DataError("no strategy file or catalog strategy named '" + name + "'");
}

int exit_for(Answer a) {
  switch (a) {
    case Answer::Yes: return kExitYes;
    case Answer::No: return kExitNo;
    default: return kExitInconclusive;
  }
}

std::string dbl(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string indent(const std::string& text) {
  std::string out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out += "  " + line + "\n";
  return out;
}

void report_verdict(std::ostream& out, const Verdict& v, const Query& q, json& j) {
  out << "answer: " << answer_str(v.answer) << "\n";
  out << "theta: " << rat_str(q.theta) << "\n";
  if (v.exact) out << "probability: " << rat_str(v.probability) << "\n";
  out << "lower: " << dbl(v.lo) << "\n";
  out << "upper: " << dbl(v.hi) << "\n";
  out << "exact: " << (v.exact ? "true" : "false") << "\n";
  if (!v.partition.empty()) out << "partition: " << v.partition << "\n";
  if (!v.status.empty()) out << "status: " << v.status << "\n";
  out << "chain-states: " << v.chain_states << "\n";
  if (v.reach_transformed) out << "reach-transformed: true\n";
  j["answer"] = answer_str(v.answer);
  j["theta"] = rat_str(q.theta);
  if (v.exact) j["probability"] = rat_str(v.probability);
  j["lower"] = v.lo;
  j["upper"] = v.hi;
  j["exact"] = v.exact;
  j["partition"] = v.partition;
  j["status"] = v.status;
  j["chain_states"] = v.chain_states;
}

void report_search(std::ostream& out, const RealisabilityResult& r, const OcMdp& m, const Query& q, json& j) {
  out << "answer: " << answer_str(r.answer) << "\n";
  out << "theta: " << rat_str(q.theta) << "\n";
  out << "partitions: " << r.stats.partitions << "\n";
  out << "candidates: " << r.stats.candidates << "\n";
  out << "supports: " << r.stats.supports << "\n";
  out << "pruned: " << r.stats.pruned << "\n";
  out << "solver-calls: " << r.stats.solver_calls << "\n";
  out << "merged-actions: " << r.stats.merged_actions << "\n";
  for (const auto& n : r.notes) out << "note: " << n << "\n";
  j["answer"] = answer_str(r.answer);
  j["theta"] = rat_str(q.theta);
  j["stats"] = {{"partitions", r.stats.partitions},     {"candidates", r.stats.candidates},
                {"supports", r.stats.supports},         {"pruned", r.stats.pruned},
                {"solver_calls", r.stats.solver_calls}, {"merged_actions", r.stats.merged_actions}};
  j["notes"] = r.notes;
  if (r.witness) {
    const auto& v = *r.witness_verdict;
    if (v.exact) out << "witness-probability: " << rat_str(v.probability) << "\n";
    else out << "witness-lower: " << dbl(v.lo) << "\n";
    out << "witness-partition: " << format_partition(r.witness->base) << "\n";
    if (r.witness->kind == StrategyKind::CIS) out << "witness-period: " << r.witness->period << "\n";
    std::string text = print_strategy(*r.witness, m);
    out << "witness:\n" << indent(text);
    j["witness"] = text;
    j["witness_partition"] = format_partition(r.witness->base);
    if (v.exact) j["witness_probability"] = rat_str(v.probability);
    j["witness_lower"] = v.lo;
  }
}

void finish(std::ostream& out, const Options& o, const json& j) {
  if (o.json) out << "---\n" << j.dump(2) << "\n";
}

std::optional<std::string> solver_of(const Options& o) {
  if (!o.solver_cmd.empty()) return o.solver_cmd;
  return solver_command();
}

// Writes one script per element; several scripts get a numeric suffix before the extension.
std::vector<std::string> write_scripts(const std::string& path, const std::vector<std::string>& scripts) {
  std::vector<std::string> written;
  std::filesystem::path base(path);
  for (size_t i = 0; i < scripts.size(); ++i) {
    std::filesystem::path p = base;
    if (scripts.size() > 1) {
      p = base.parent_path() / (base.stem().string() + "-" + std::to_string(i + 1) + base.extension().string());
    }
    write_file(p.string(), scripts[i]);
    written.push_back(p.string());
  }
  return written;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verification and strategy synthesis for one-counter MDPs", "ocmdp"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_flag("--json", o.json, "append a machine-readable JSON block after the report");

  auto* verify_cmd = app.add_subcommand("verify", "decide whether a strategy meets the threshold");
  add_model_flags(verify_cmd, o);
  add_solve_flags(verify_cmd, o);
  verify_cmd->add_option("--strategy", o.strategy, "strategy file or catalog strategy name")->required();
  verify_cmd->add_option("--smt-out", o.smt_out, "also write the verification SMT-LIB script here");

  std::string partition, periodic;
  Counter d = 0, n = 0;
  bool cis = false;
  std::size_t max_candidates = 0;
  std::string witness_out;
  auto* pure_cmd = app.add_subcommand("realise-pure", "search for a pure interval strategy meeting the threshold");
  add_model_flags(pure_cmd, o);
  add_solve_flags(pure_cmd, o);
  pure_cmd->add_option("--partition", partition, "fixed partition, e.g. 1-2,3-inf");
  pure_cmd->add_option("--periodic", periodic, "fixed cyclic layout, e.g. 'period=2; window=1-2'");
  pure_cmd->add_option("--d", d, "maximum number of intervals");
  pure_cmd->add_option("--n", n, "maximum size of a bounded interval");
  pure_cmd->add_flag("--cis", cis, "with --d/--n: search cyclic strategies with period up to d*n");
  pure_cmd->add_option("--jobs", o.jobs, "parallel candidate verifications (0: all cores)");
  pure_cmd->add_option("--max-candidates", max_candidates, "stop after this many candidates (0: no limit)");
  pure_cmd->add_option("--witness-out", witness_out, "write the witness strategy here");

  int samples = 24;
  unsigned seed = 1;
  int solver_timeout = 60;
  auto* rand_cmd = app.add_subcommand("realise-rand", "search for a randomised strategy on a bounded model");
  add_model_flags(rand_cmd, o);
  add_solve_flags(rand_cmd, o);
  rand_cmd->add_option("--partition", partition, "partition of [1,B-1] (default: one interval)");
  rand_cmd->add_option("--samples", samples, "random distributions tried per support");
  rand_cmd->add_option("--seed", seed, "seed of the sampler");
  rand_cmd->add_option("--solver-cmd", o.solver_cmd, "SMT solver command (default: $OCMDP_SOLVER_CMD)");
  rand_cmd->add_option("--solver-timeout", solver_timeout, "seconds per solver call");
  rand_cmd->add_option("--smt-out", o.smt_out, "write scripts of undecided supports here");
  rand_cmd->add_option("--jobs", o.jobs, "parallel candidate verifications (0: all cores)");
  rand_cmd->add_option("--witness-out", witness_out, "write the witness strategy here");

  bool dump = false;
  std::string dump_out;
  auto* compress_cmd = app.add_subcommand("compress", "build the compressed chain of a strategy");
  add_model_flags(compress_cmd, o);
  add_solve_flags(compress_cmd, o);
  compress_cmd->add_option("--strategy", o.strategy, "strategy file or catalog strategy name")->required();
  compress_cmd->add_flag("--dump", dump, "print the chain in the dump format");
  compress_cmd->add_option("--out", dump_out, "write the dump to a file");

  std::string kind = "verify", form;
  auto* smt_cmd = app.add_subcommand("emit-smt", "emit an SMT-LIB script for verification or realisability");
  add_model_flags(smt_cmd, o);
  smt_cmd->add_option("--kind", kind, "verify | realise")->check(CLI::IsMember({"verify", "realise"}));
  smt_cmd->add_option("--form", form, "negated | universal | unique");
  smt_cmd->add_option("--strategy", o.strategy, "concrete strategy (verify only; omit to keep it symbolic)");
  smt_cmd->add_option("--partition", partition, "partition for a symbolic strategy");
  smt_cmd->add_option("--periodic", periodic, "cyclic layout for a symbolic strategy");
  smt_cmd->add_option("--smt-out", o.smt_out, "write the script here instead of stdout");
  smt_cmd->add_option("--solver-cmd", o.solver_cmd, "run this solver on the script and report its answer");
  smt_cmd->add_option("--solver-timeout", solver_timeout, "seconds per solver call");

  std::string gen_model_out, gen_query_out;
  auto* gen_cmd = app.add_subcommand("generate", "write reduction instances and catalog examples");
  gen_cmd->require_subcommand(1, 1);
  gen_cmd->fallthrough();
  gen_cmd->add_option("--model-out", gen_model_out, "model file (default: stdout)");
  gen_cmd->add_option("--query-out", gen_query_out, "query file (default: stdout)");
  std::vector<Counter> xs;
  Counter y = 0, override_bound = 0;
  auto* g_sqrt = gen_cmd->add_subcommand("sqrt-sum", "square-root-sum gadget, unbounded");
  g_sqrt->add_option("--xs", xs, "the numbers x_i")->required()->delimiter(',');
  g_sqrt->add_option("--y", y, "right-hand side")->required();
  auto* g_sqrtb = gen_cmd->add_subcommand("sqrt-sum-bounded", "square-root-sum gadget with a finite bound");
  g_sqrtb->add_option("--xs", xs, "the numbers x_i")->required()->delimiter(',');
  g_sqrtb->add_option("--y", y, "right-hand side")->required();
  g_sqrtb->add_option("--override-bound", override_bound, "use this bound instead of the formula");
  std::string graph, graph_file;
  auto* g_ham = gen_cmd->add_subcommand("hamiltonian", "Hamiltonian-cycle reduction");
  g_ham->add_option("--graph", graph, "e.g. 'vertices=3; init=0; edges=0>1,1>2,2>0'");
  g_ham->add_option("--graph-file", graph_file, "file holding the graph description");
  std::string example, strategies_dir;
  auto* g_ex = gen_cmd->add_subcommand("example", "catalog example");
  g_ex->add_option("--name", example, "fig1 | fig2a | fig4")->required();
  g_ex->add_option("--strategies-dir", strategies_dir, "also write the named strategies into this directory");

  bool full = false;
  auto* mealy_cmd = app.add_subcommand("mealy-export", "export a strategy as a Mealy machine");
  add_model_flags(mealy_cmd, o);
  mealy_cmd->add_option("--strategy", o.strategy, "strategy file or catalog strategy name")->required();
  mealy_cmd->add_flag("--full", full, "include memory states unreachable from the initial counter");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitError;
  }

  json j;
  try {
    if (verify_cmd->parsed()) {
      Loaded l = load_model(o);
      IntervalStrategy s = load_strategy(l, o.strategy);
      Verdict v = verify(l.model, s, l.query, verify_config(o));
      report_verdict(out, v, l.query, j);
      if (!o.smt_out.empty()) {
        write_file(o.smt_out, emit_verification_smt(l.model, s, l.query).text);
        out << "smt: " << o.smt_out << "\n";
      }
      finish(out, o, j);
      return exit_for(v.answer);
    }

    if (pure_cmd->parsed()) {
      Loaded l = load_model(o);
      RealiseConfig cfg;
      cfg.verify = verify_config(o);
      cfg.threads = o.jobs;
      cfg.max_candidates = max_candidates;
      int modes = !partition.empty() + !periodic.empty() + (d > 0 || n > 0);
      if (modes != 1) throw DataError("give exactly one of --partition, --periodic, or --d with --n");
      RealisabilityResult r;
      if (!partition.empty()) r = realise_pure_fixed(l.model, l.query, parse_partition(partition), cfg);
      else if (!periodic.empty()) r = realise_pure_fixed_cis(l.model, l.query, parse_periodic(periodic), cfg);
      else if (cis) r = realise_pure_param_cis(l.model, l.query, d, n, cfg);
      else r = realise_pure_param(l.model, l.query, d, n, cfg);
      report_search(out, r, l.model, l.query, j);
      if (r.witness && !witness_out.empty()) write_file(witness_out, print_strategy(*r.witness, l.model));
      finish(out, o, j);
      return exit_for(r.answer);
    }

    if (rand_cmd->parsed()) {
      Loaded l = load_model(o);
      if (l.query.bound == kInf) throw DataError("realise-rand needs a finite --bound");
      RealiseConfig cfg;
      cfg.verify = verify_config(o);
      cfg.threads = o.jobs;
      cfg.samples = samples;
      cfg.seed = seed;
      cfg.solver = solver_of(o);
      cfg.solver_timeout = solver_timeout;
      Partition p = partition.empty() ? Partition{} : parse_partition(partition);
      if (partition.empty() && l.query.bound > 1) p.push_back({1, l.query.bound - 1});
      RealisabilityResult r = realise_rand_bounded(l.model, l.query, p, cfg);
      report_search(out, r, l.model, l.query, j);
      out << "solver: " << (cfg.solver ? *cfg.solver : std::string("none")) << "\n";
      out << "pending-scripts: " << r.scripts.size() << "\n";
      if (!o.smt_out.empty() && !r.scripts.empty()) {
        for (const auto& f : write_scripts(o.smt_out, r.scripts)) out << "smt: " << f << "\n";
      }
      if (r.witness && !witness_out.empty()) write_file(witness_out, print_strategy(*r.witness, l.model));
      j["pending_scripts"] = r.scripts.size();
      finish(out, o, j);
      return exit_for(r.answer);
    }

    if (compress_cmd->parsed()) {
      Loaded l = load_model(o);
      IntervalStrategy s = load_strategy(l, o.strategy);
      CompressConfig cc;
      cc.mode = o.mode == "float" ? NumMode::Float : NumMode::Rational;
      cc.solve = verify_config(o).solve;
      CompressedChain c;
      if (s.kind == StrategyKind::OEIS) {
        c = compress_for(l.model, s, l.query.bound, l.query.init.counter, cc);
      } else {
        if (l.query.bound != kInf) throw DataError("compress of a cyclic strategy needs an unbounded model");
        CisLayout lay = cis_layout(s.base, s.period, l.query.init.counter);
        c = compress_ocmc(cis_to_ocmc(l.model, s, lay.window), lay.outer, cc);
      }
      std::string text = dump_chain(c);
      if (!dump_out.empty()) write_file(dump_out, text);
      if (dump || dump_out.empty()) out << text;
      else out << "chain-states: " << c.names.size() << "\n";
      return kExitYes;
    }

    if (smt_cmd->parsed()) {
      Loaded l = load_model(o);
      SmtForm f = form.empty() ? (kind == "verify" ? SmtForm::Negated : SmtForm::Universal) : parse_form(form);
      SmtScript script;
      bool symbolic_partition = !partition.empty() || !periodic.empty();
      if (kind == "verify") {
        if (!o.strategy.empty()) {
          script = emit_verification_smt(l.model, load_strategy(l, o.strategy), l.query, f);
        } else if (!periodic.empty()) {
          PeriodicPartition pp = parse_periodic(periodic);
          script = emit_verification_smt(l.model, StrategyKind::CIS, pp.window, pp.period, l.query, f);
        } else if (!partition.empty()) {
          script = emit_verification_smt(l.model, StrategyKind::OEIS, parse_partition(partition), 0, l.query, f);
        } else {
          throw DataError("emit-smt --kind verify needs --strategy, --partition or --periodic");
        }
      } else {
        if (!symbolic_partition) throw DataError("emit-smt --kind realise needs --partition or --periodic");
        if (!periodic.empty()) script = emit_realisability_smt(l.model, l.query, parse_periodic(periodic), f);
        else script = emit_realisability_smt(l.model, l.query, parse_partition(partition), f);
      }
      if (o.smt_out.empty()) out << script.text;
      else write_file(o.smt_out, script.text);
      std::ostream& info = o.smt_out.empty() ? err : out;
      info << "form: " << form_str(f) << "\n";
      info << "variables: " << script.variables << "\n";
      info << "degree: " << script.degree << "\n";
      if (!o.solver_cmd.empty()) {
        SolverOutcome r = run_solver(o.solver_cmd, script.text, solver_timeout);
        info << "solver-status: " << outcome_str(r.status) << "\n";
        // Negated scripts ask for a counterexample; the others for a witness.
        bool negated = f == SmtForm::Negated;
        if (r.status == SolverOutcome::Status::Sat) return negated ? kExitNo : kExitYes;
        if (r.status == SolverOutcome::Status::Unsat) return negated ? kExitYes : kExitNo;
        return kExitInconclusive;
      }
      return kExitYes;
    }

    if (gen_cmd->parsed()) {
      OcMdp m;
      Query q;
      std::vector<std::string> warnings;
      if (g_sqrt->parsed() || g_sqrtb->parsed()) {
        SqrtSumInstance inst{xs, y};
        auto errs = validate(inst);
        if (!errs.empty()) throw DataError(errs.front());
        if (g_sqrt->parsed()) {
          std::tie(m, q) = gen_sqrt_sum(inst);
        } else {
          BoundedSqrtSum b = gen_sqrt_sum_bounded(inst, override_bound);
          m = std::move(b.model);
          q = b.query;
          warnings = b.warnings;
          err << "formula-bound: " << b.formula_bound.get_str() << "\n";
        }
      } else if (g_ham->parsed()) {
        if (graph.empty() == graph_file.empty()) throw DataError("give exactly one of --graph and --graph-file");
        DirectedGraph g = graph.empty() ? load(graph_file, [](const std::string& t) { return parse_graph(t); })
                                        : parse_graph(graph);
        std::tie(m, q) = gen_hamiltonian(g);
      } else {
        Instance inst = catalog_example(example);
        m = inst.model;
        q = inst.query;
        if (!strategies_dir.empty()) {
          std::filesystem::create_directories(strategies_dir);
          for (const auto& [name, s] : inst.strategies) {
            auto path = std::filesystem::path(strategies_dir) / (name + ".strat");
            write_file(path.string(), print_strategy(s, m));
            err << "strategy: " << path.string() << "\n";
          }
        }
      }
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      std::string mt = print_model(m), qt = print_query(q, m);
      if (gen_model_out.empty()) out << mt;
      else write_file(gen_model_out, mt);
      if (gen_query_out.empty()) out << (gen_model_out.empty() ? "---\n" : "") << qt;
      else write_file(gen_query_out, qt);
      return kExitYes;
    }

    if (mealy_cmd->parsed()) {
      Loaded l = load_model(o, false);
      IntervalStrategy s = load_strategy(l, o.strategy);
      out << print_mealy(export_mealy(s, l.model, l.query.init.counter, l.query.bound, full), l.model);
      return kExitYes;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace ocmdp
