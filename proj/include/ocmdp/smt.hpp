#pragma once

#include "ocmdp/compression.hpp"
#include "ocmdp/model.hpp"
#include "ocmdp/strategies.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>

namespace ocmdp {

enum class SmtForm {
  // exists x,y. Phi_strat /\ Phi_trans /\ Phi_obj /\ y_s < theta   (unsat: threshold met for every strategy)
  Negated,
  // Phi_strat /\ forall x,y. (Phi_trans /\ Phi_obj) => y_s >= theta (sat: some strategy meets the threshold)
  Universal,
  // Phi_strat /\ Phi_trans /\ Phi_obj /\ y_s >= theta over unique-solution systems (bounded, fixed supports)
  Unique,
};

std::string form_str(SmtForm f);
SmtForm parse_form(std::string_view s);

struct SmtTask {
  const OcMdp* model = nullptr;
  Query query;
  StrategyKind kind = StrategyKind::OEIS;
  Partition base;       // OEIS: partition of [1,B-1]; CIS: window partition of [1,period]
  Counter period = 0;   // CIS only
  const IntervalStrategy* strategy = nullptr;     // concrete strategy, or null for strategy variables
  const SupportAssignment* supports = nullptr;    // per base interval; pins which z are positive
  SmtForm form = SmtForm::Negated;
};

struct SmtScript {
  std::string text;
  // (base interval, state, action) -> name of the representative strategy variable
  std::map<std::tuple<int, int, int>, std::string> strategy_vars;
  std::string objective_var;  // empty when the initial value is a constant
  int variables = 0;
  int degree = 0;
};

SmtScript emit_smt(const SmtTask& task);

// Symbol in SMT-LIB syntax, quoted when needed.
std::string smt_symbol(const std::string& name);
std::string smt_rat(const Rat& r);

struct SolverOutcome {
  enum class Status { Sat, Unsat, Unknown, Error } status = Status::Error;
  std::map<std::string, Rat> model;  // rational values only
  std::string raw;
};

std::string outcome_str(SolverOutcome::Status s);

// Command from OCMDP_SOLVER_CMD, if set; it receives the script path as its last argument.
std::optional<std::string> solver_command();
SolverOutcome run_solver(const std::string& command, const std::string& script, int timeout_seconds = 60);
SolverOutcome parse_solver_output(const std::string& out);

}  // namespace ocmdp
