#include "ocmdp/smt.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <unistd.h>

namespace ocmdp {

std::string form_str(SmtForm f) {
  switch (f) {
    case SmtForm::Negated: return "negated";
    case SmtForm::Universal: return "universal";
    case SmtForm::Unique: return "unique";
  }
  return "?";
}

SmtForm parse_form(std::string_view s) {
  if (s == "negated" || s == "exists") return SmtForm::Negated;
  if (s == "universal" || s == "forall") return SmtForm::Universal;
  if (s == "unique") return SmtForm::Unique;
  throw ParseError("unknown SMT form '" + std::string(s) + "' (negated, universal, unique)");
}

std::string smt_symbol(const std::string& name) {
  static const std::string extra = "~!@$%^&*_-+=<>.?/";
  bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && extra.find(ch) == std::string::npos) simple = false;
  if (simple) return name;
  std::string out = "|";
  for (char ch : name) out += (ch == '|' || ch == '\\') ? '_' : ch;
  return out + "|";
}

std::string smt_rat(const Rat& r) {
  mpz_class num = r.get_num(), den = r.get_den();
  bool neg = num < 0;
  if (neg) num = -num;
  std::string body = den == 1 ? num.get_str() + ".0" : "(/ " + num.get_str() + ".0 " + den.get_str() + ".0)";
  return neg ? "(- " + body + ")" : body;
}

namespace {

std::string smt_poly(const Poly& p, const std::vector<std::string>& names) {
  if (p.empty()) return "0.0";
  std::vector<std::string> terms;
  for (const auto& t : p) {
    std::vector<std::string> f;
    if (t.coef != 1 || t.vars.empty()) f.push_back(smt_rat(t.coef));
    for (int v : t.vars) f.push_back(names[static_cast<size_t>(v)]);
    if (f.size() == 1) {
      terms.push_back(f[0]);
    } else {
      std::string s = "(*";
      for (const auto& x : f) s += " " + x;
      terms.push_back(s + ")");
    }
  }
  if (terms.size() == 1) return terms[0];
  std::string s = "(+";
  for (const auto& x : terms) s += " " + x;
  return s + ")";
}

std::string conj(const std::vector<std::string>& parts) {
  if (parts.empty()) return "true";
  if (parts.size() == 1) return parts[0];
  std::string s = "(and";
  for (const auto& p : parts) s += "\n    " + p;
  return s + ")";
}

}  // namespace

SmtScript emit_smt(const SmtTask& task) {
  if (!task.model) throw std::invalid_argument("SMT task without a model");
  const Query& q = task.query;
  const auto& targets = q.objective.targets;
  const bool reach = q.objective.kind == ObjectiveKind::Reach;
  const bool cis = task.kind == StrategyKind::CIS;
  const Counter B = q.bound;
  const Counter k0 = q.init.counter;
  if (cis && B != kInf) throw std::invalid_argument("cyclic strategies are analysed on unbounded models");
  if (task.form == SmtForm::Unique && B == kInf)
    throw std::invalid_argument("the unique-solution form needs a bounded model");
  if (task.strategy && task.strategy->kind != task.kind) throw std::invalid_argument("strategy kind mismatch");

  OcMdp m = reach ? absorb_targets(*task.model, targets) : *task.model;
  std::optional<IntervalStrategy> strat;
  if (task.strategy) strat = reach ? adapt_to_absorbed(*task.strategy, m, targets) : *task.strategy;
  const Partition& base = task.strategy ? task.strategy->base : task.base;
  const Counter rho = task.strategy ? task.strategy->period : task.period;
  if (base.empty() && !(B != kInf && B <= 1))
    throw std::invalid_argument("SMT task needs a partition");

  SmtScript out;
  std::ostringstream os;
  os << "; objective: " << (reach ? "reach" : "selterm") << " init: " << m.states[static_cast<size_t>(q.init.state)]
     << "@" << counter_str(k0) << " theta: " << rat_str(q.theta) << "\n";
  os << "; partition: " << format_partition(base) << (cis ? " period " + counter_str(rho) : "") << "\n";
  os << "; form: " << form_str(task.form) << "\n";

  // Absorbing initial configurations need no system.
  const bool in_t = q.objective.is_target(q.init.state);
  if (k0 == 0 || (B != kInf && k0 == B) || (reach && in_t)) {
    const bool hit = in_t && (k0 == 0 || reach);
    os << "; the initial configuration is absorbing; its value is " << (hit ? 1 : 0) << "\n";
    const bool holds = Rat(hit ? 1 : 0) >= q.theta;
    const bool sat = task.form == SmtForm::Negated ? !holds : holds;
    os << "(assert " << (sat ? "true" : "false") << ")\n(check-sat)\n";
    out.text = os.str();
    return out;
  }

  Partition refined;
  std::vector<int> parent;
  CisLayout layout;
  if (cis) {
    layout = cis_layout(base, rho, k0);
    refined = layout.window;
  } else {
    refined = refine_partition(isolate(base, k0));
  }
  for (const auto& iv : refined) {
    int j = -1;
    for (size_t b = 0; b < base.size(); ++b)
      if (base[b].lo <= iv.lo && (base[b].hi == kInf || (iv.hi != kInf && iv.hi <= base[b].hi))) j = static_cast<int>(b);
    if (j < 0) throw std::invalid_argument("refined interval outside the partition");
    parent.push_back(j);
  }

  auto sys = std::make_shared<PolySystem>();
  // z variables per refined interval; the first sub-interval of each input interval is its representative.
  std::map<std::tuple<int, int, int>, int> zvar;
  std::vector<int> first_of(base.size(), -1);
  std::vector<std::vector<Dist>> rows;
  if (strat) {
    rows = rows_on(*strat, refined);
  } else {
    for (size_t i = 0; i < refined.size(); ++i) {
      if (first_of[static_cast<size_t>(parent[i])] < 0) first_of[static_cast<size_t>(parent[i])] = static_cast<int>(i);
      for (int s = 0; s < m.num_states(); ++s)
        for (const auto& act : m.enabled[static_cast<size_t>(s)]) {
          VarInfo info;
          info.name = "z_i" + std::to_string(i) + "_" + m.states[static_cast<size_t>(s)] + "_" +
                      m.actions[static_cast<size_t>(act.id)];
          info.role = VarRole::Strat;
          info.from = s;
          info.to = act.id;
          info.interval = static_cast<int>(i);
          info.external = true;
          zvar[{static_cast<int>(i), s, act.id}] = sys->add_var(info);
        }
    }
  }
  auto support_of = [&](int j, int s) -> std::vector<int> {
    std::vector<int> all;
    for (const auto& act : m.enabled[static_cast<size_t>(s)]) all.push_back(act.id);
    if (!task.supports) return all;
    const auto& sets = task.supports->sets;
    if (static_cast<size_t>(j) >= sets.size() || static_cast<size_t>(s) >= sets[static_cast<size_t>(j)].size())
      throw std::invalid_argument("support assignment does not match the partition");
    std::vector<int> keep;
    for (int a : sets[static_cast<size_t>(j)][static_cast<size_t>(s)])
      if (std::binary_search(all.begin(), all.end(), a)) keep.push_back(a);
    return keep.empty() ? all : keep;  // absorbed targets keep their single action
  };

  std::vector<Fold> folds;
  for (size_t i = 0; i < refined.size(); ++i) {
    if (strat) {
      folds.push_back(fold_row(m, rows[i]));
      continue;
    }
    folds.push_back(fold(m, [&](int s, int a) -> Poly {
      auto sup = support_of(parent[i], s);
      if (!std::binary_search(sup.begin(), sup.end(), a)) return {};
      return poly_var(zvar.at({static_cast<int>(i), s, a}));
    }));
  }

  CompressConfig sym;
  sym.mode = NumMode::Symbolic;
  CompressedChain chain;
  std::vector<bool> target;
  int init = -1;
  if (cis) {
    CompressedChain inner = compress_folds(m.states, refined, rho + 1, folds, sym, sys, "w");
    WindowKernel kern = window_kernel(inner, rho);
    std::vector<Fold> outer(layout.outer.size(), kern.fold);
    chain = compress_folds(kern.names, layout.outer, kInf, outer, sym, sys, "o");
    target.assign(static_cast<size_t>(chain.size()), false);
    for (int t : targets) {
      int ks = kernel_state(kern, t, rho);
      if (ks >= 0) target[static_cast<size_t>(chain.require(ks, 0))] = true;
    }
    init = chain.require(kernel_state(kern, q.init.state, layout.window_counter), layout.outer_init);
  } else {
    chain = compress_folds(m.states, refined, B, folds, sym, sys, "");
    target.assign(static_cast<size_t>(chain.size()), false);
    for (int t : targets) {
      target[static_cast<size_t>(chain.require(t, 0))] = true;
      if (reach && B != kInf) target[static_cast<size_t>(chain.require(t, B))] = true;
    }
    init = chain.require(q.init.state, k0);
  }
  ReachBlock rb = add_reach_system(*sys, chain, target, "");

  std::vector<std::string> names;
  for (const auto& v : sys->vars) names.push_back(smt_symbol(v.name));
  out.variables = sys->size();
  out.degree = sys->degree();

  // Strategy block.
  std::vector<std::string> phi_strat;
  if (!strat) {
    for (size_t i = 0; i < refined.size(); ++i) {
      const int j = parent[i];
      const int rep = first_of[static_cast<size_t>(j)];
      for (int s = 0; s < m.num_states(); ++s) {
        auto sup = support_of(j, s);
        std::vector<std::string> sum;
        for (const auto& act : m.enabled[static_cast<size_t>(s)]) {
          const std::string& z = names[static_cast<size_t>(zvar.at({static_cast<int>(i), s, act.id}))];
          if (static_cast<int>(i) == rep) {
            bool in = std::binary_search(sup.begin(), sup.end(), act.id);
            if (task.supports)
              phi_strat.push_back(in ? "(> " + z + " 0.0)" : "(= " + z + " 0.0)");
            else
              phi_strat.push_back("(>= " + z + " 0.0)");
            sum.push_back(z);
            out.strategy_vars[{j, s, act.id}] = sys->vars[static_cast<size_t>(zvar.at({static_cast<int>(i), s, act.id}))].name;
          } else {
            phi_strat.push_back("(= " + z + " " + names[static_cast<size_t>(zvar.at({rep, s, act.id}))] + ")");
          }
        }
        if (static_cast<int>(i) == rep) {
          std::string total = sum.size() == 1 ? sum[0] : "(+";
          if (sum.size() > 1) {
            for (const auto& z : sum) total += " " + z;
            total += ")";
          }
          phi_strat.push_back("(= " + total + " 1.0)");
        }
      }
    }
  }

  // Transition and objective blocks.
  std::vector<std::string> phi_trans, phi_obj, bound_vars;
  for (int v = 0; v < sys->size(); ++v) {
    const VarInfo& info = sys->vars[static_cast<size_t>(v)];
    if (info.external) continue;
    bound_vars.push_back(names[static_cast<size_t>(v)]);
    auto& block = info.role == VarRole::Reach ? phi_obj : phi_trans;
    const std::string& x = names[static_cast<size_t>(v)];
    if (sys->pinned[static_cast<size_t>(v)]) {
      block.push_back("(= " + x + " 0.0)");
      continue;
    }
    block.push_back("(>= " + x + " 0.0)");
    block.push_back("(= " + x + " " + smt_poly(sys->rhs[static_cast<size_t>(v)], names) + ")");
  }
  for (const auto& g : sys->mass_groups) {
    std::vector<std::string> live;
    for (int v : g)
      if (!sys->pinned[static_cast<size_t>(v)]) live.push_back(names[static_cast<size_t>(v)]);
    if (live.empty()) continue;
    std::string total = live.size() == 1 ? live[0] : "(+";
    if (live.size() > 1) {
      for (const auto& x : live) total += " " + x;
      total += ")";
    }
    phi_trans.push_back("(<= " + total + " 1.0)");
  }

  std::string yinit;
  if (target[static_cast<size_t>(init)]) {
    yinit = "1.0";
  } else {
    int y = rb.y[static_cast<size_t>(init)];
    yinit = names[static_cast<size_t>(y)];
    out.objective_var = sys->vars[static_cast<size_t>(y)].name;
  }
  const std::string theta = smt_rat(q.theta);

  os << "; variables: " << out.variables << " degree: " << out.degree << "\n";
  const bool quantified = task.form == SmtForm::Universal;
  os << (quantified ? "(set-logic NRA)\n" : "(set-option :produce-models true)\n(set-logic QF_NRA)\n");
  if (quantified) os << "(set-option :produce-models true)\n";
  for (int v = 0; v < sys->size(); ++v)
    if (sys->vars[static_cast<size_t>(v)].external) os << "(declare-const " << names[static_cast<size_t>(v)] << " Real)\n";
  if (!phi_strat.empty()) os << "; strategy\n(assert " << conj(phi_strat) << ")\n";
  if (quantified) {
    os << "(assert (forall (";
    for (size_t i = 0; i < bound_vars.size(); ++i) os << (i ? " " : "") << "(" << bound_vars[i] << " Real)";
    if (bound_vars.empty()) os << "(unused_ Real)";
    std::vector<std::string> body = phi_trans;
    body.insert(body.end(), phi_obj.begin(), phi_obj.end());
    os << ")\n  (=> " << conj(body) << "\n  (>= " << yinit << " " << theta << "))))\n";
  } else {
    for (const auto& x : bound_vars) os << "(declare-const " << x << " Real)\n";
    os << "; transitions\n(assert " << conj(phi_trans) << ")\n";
    os << "; objective\n(assert " << conj(phi_obj) << ")\n";
    if (task.form == SmtForm::Negated)
      os << "(assert (< " << yinit << " " << theta << "))\n";
    else
      os << "(assert (>= " << yinit << " " << theta << "))\n";
  }
  os << "(check-sat)\n";
  if (!quantified) os << "(get-model)\n";
  out.text = os.str();
  return out;
}

std::string outcome_str(SolverOutcome::Status s) {
  switch (s) {
    case SolverOutcome::Status::Sat: return "sat";
    case SolverOutcome::Status::Unsat: return "unsat";
    case SolverOutcome::Status::Unknown: return "unknown";
    case SolverOutcome::Status::Error: return "error";
  }
  return "?";
}

std::optional<std::string> solver_command() {
  const char* env = std::getenv("OCMDP_SOLVER_CMD");
  if (!env || !*env) return std::nullopt;
  return std::string(env);
}

namespace {

// Value terms: 1.5, (/ 1.0 2.0), (- x)
std::optional<Rat> parse_value(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (t.front() != '(') {
    try {
      return parse_rat(t);
    } catch (const ParseError&) {
      return std::nullopt;
    }
  }
  if (t.back() != ')') return std::nullopt;
  std::string inner = trim(t.substr(1, t.size() - 2));
  auto sp = inner.find(' ');
  if (sp == std::string::npos) return std::nullopt;
  std::string op = inner.substr(0, sp), rest = trim(inner.substr(sp + 1));
  // Split rest into top-level arguments.
  std::vector<std::string> args;
  int depth = 0;
  std::string cur;
  for (char ch : rest) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == ' ' && depth == 0) {
      if (!cur.empty()) args.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) args.push_back(cur);
  std::vector<Rat> vals;
  for (const auto& a : args) {
    auto v = parse_value(a);
    if (!v) return std::nullopt;
    vals.push_back(*v);
  }
  if (op == "-" && vals.size() == 1) return Rat(-vals[0]);
  if (op == "/" && vals.size() == 2 && vals[1] != 0) return Rat(vals[0] / vals[1]);
  return std::nullopt;
}

}  // namespace

SolverOutcome parse_solver_output(const std::string& out) {
  SolverOutcome res;
  res.raw = out;
  std::istringstream is(out);
  std::string first;
  while (std::getline(is, first)) {
    first = trim(first);
    if (!first.empty()) break;
  }
  if (first == "sat")
    res.status = SolverOutcome::Status::Sat;
  else if (first == "unsat")
    res.status = SolverOutcome::Status::Unsat;
  else if (first == "unknown" || first == "timeout")
    res.status = SolverOutcome::Status::Unknown;
  else
    return res;
  // (define-fun name () Real value)
  static const std::regex def(R"(\(define-fun\s+(\|[^|]*\||[^\s()]+)\s+\(\)\s+Real\s+)");
  auto begin = std::sregex_iterator(out.begin(), out.end(), def);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    std::string name = (*it)[1];
    if (name.size() >= 2 && name.front() == '|') name = name.substr(1, name.size() - 2);
    size_t pos = static_cast<size_t>(it->position(0) + it->length(0));
    int depth = 0;
    std::string val;
    for (; pos < out.size(); ++pos) {
      char ch = out[pos];
      if (ch == '(') ++depth;
      if (ch == ')') {
        if (depth == 0) break;
        --depth;
      }
      val += ch;
    }
    std::string flat;
    for (char ch : val) flat += std::isspace(static_cast<unsigned char>(ch)) ? ' ' : ch;
    // Collapse repeated blanks so argument splitting sees single separators.
    std::string squeezed;
    for (char ch : flat)
      if (!(ch == ' ' && !squeezed.empty() && squeezed.back() == ' ')) squeezed += ch;
    if (auto v = parse_value(squeezed)) res.model[name] = *v;
  }
  return res;
}

SolverOutcome run_solver(const std::string& command, const std::string& script, int timeout_seconds) {
  char path[] = "/tmp/ocmdp-smt-XXXXXX";
  int fd = mkstemp(path);
  if (fd < 0) {
    SolverOutcome o;
    o.raw = "cannot create temporary file";
    return o;
  }
  if (write(fd, script.data(), script.size()) != static_cast<ssize_t>(script.size())) {
    close(fd);
    unlink(path);
    SolverOutcome o;
    o.raw = "cannot write temporary file";
    return o;
  }
  close(fd);
  std::string cmd = "timeout " + std::to_string(timeout_seconds) + " " + command + " " + path + " 2>&1";
  std::string output;
  if (FILE* pipe = popen(cmd.c_str(), "r")) {
    std::array<char, 4096> buf{};
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
    pclose(pipe);
  }
  unlink(path);
  return parse_solver_output(output);
}

}  // namespace ocmdp
