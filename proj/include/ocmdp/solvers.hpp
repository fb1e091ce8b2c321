#pragma once

#include "ocmdp/eqsys.hpp"

#include <string>
#include <vector>

namespace ocmdp {

struct SolveConfig {
  double eps = 1e-12;
  long max_iters = 1'000'000;
  bool newton = false;
};

enum class SolveStatus { Exact, Converged, Capped };
std::string status_str(SolveStatus s);

struct Valuation {
  std::vector<Rat> exact;     // filled by exact solves
  std::vector<double> value;  // always filled
  SolveStatus status = SolveStatus::Exact;
  double residual = 0;
  long iterations = 0;
};

// Strongly connected components of the free-variable dependency graph, dependencies first.
std::vector<std::vector<int>> dependency_sccs(const PolySystem& sys, const std::vector<int>& vars);

// Solves a system that is linear in each stage once earlier stages are known.
// `known` supplies values for external variables (and is ignored elsewhere).
std::vector<Rat> solve_linear_exact(const PolySystem& sys, const std::vector<Rat>& known = {});
std::vector<double> solve_linear_float(const PolySystem& sys, const std::vector<double>& known = {});
Valuation solve_linear(const PolySystem& sys, bool exact);

// Kleene iteration per SCC (optionally decomposed Newton). Values are lower bounds on the lfp.
Valuation lfp(const PolySystem& sys, const SolveConfig& cfg, const std::vector<double>& known = {});

// Sound upper bound on the lfp given a lower bound; returns per-variable values.
std::vector<double> upper_bound_pass(const PolySystem& sys, const std::vector<double>& lower,
                                     const SolveConfig& cfg = {});

double eval_poly(const Poly& p, const std::vector<double>& x);
Rat eval_poly(const Poly& p, const std::vector<Rat>& x);

}  // namespace ocmdp
