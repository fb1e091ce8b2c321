#pragma once

#include "ocmdp/model.hpp"
#include "ocmdp/strategies.hpp"

#include <gmpxx.h>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ocmdp {

struct Instance {
  std::string name;
  OcMdp model;
  Query query;
  std::map<std::string, IntervalStrategy> strategies;  // named reference strategies
};

// Keys: fig1, fig2a, fig4.
std::map<std::string, Instance> example_catalog();
Instance catalog_example(const std::string& name);

struct SqrtSumInstance {
  std::vector<Counter> xs;
  Counter y = 0;

  int n() const { return static_cast<int>(xs.size()); }
  Counter m() const;
  Counter lambda() const;  // total bit size of xs and y
  Rat theta() const;       // y / (n m)
  mpz_class bound() const; // 2^n m (lambda+1) + n m^2 + 1
  bool is_equality() const;  // sum of sqrt(x_i) == y
};

std::vector<std::string> validate(const SqrtSumInstance& inst);

std::pair<OcMdp, Query> gen_sqrt_sum(const SqrtSumInstance& inst);

struct BoundedSqrtSum {
  OcMdp model;
  Query query;
  mpz_class formula_bound;
  std::vector<std::string> warnings;
};

// override_bound > 0 replaces the formula's bound in the query.
BoundedSqrtSum gen_sqrt_sum_bounded(const SqrtSumInstance& inst, Counter override_bound = 0);

// Upper bound (m/(m+1))^(B-1) on the truncation error.
double sqrt_sum_error_bound(Counter m, Counter B);

struct DirectedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  int init = 0;
};

std::pair<OcMdp, Query> gen_hamiltonian(const DirectedGraph& g);
DirectedGraph parse_graph(std::string_view text);

}  // namespace ocmdp
