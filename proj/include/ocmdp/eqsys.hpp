#pragma once

#include "ocmdp/model.hpp"
#include "ocmdp/partitions.hpp"
#include "ocmdp/strategies.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace ocmdp {

// Monomial coef * prod(vars); vars sorted, repeats allowed.
struct Term {
  Rat coef;
  std::vector<int> vars;
};
using Poly = std::vector<Term>;

Poly poly_const(const Rat& c);
Poly poly_var(int v);
Poly poly_add(const Poly& a, const Poly& b);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_scale(const Poly& a, const Rat& c);
void poly_normalise(Poly& p);  // merge equal monomials, drop zeros
int poly_degree(const Poly& p);
bool poly_is_zero(const Poly& p);

enum class VarRole { Term, Up, Down, Reach, Strat, Cis };

struct VarInfo {
  std::string name;
  VarRole role = VarRole::Term;
  int from = -1;  // state (or chain state for Reach)
  int to = -1;
  int kidx = 0;  // bounded: 0 -> 2^(a-1), 1 -> 2^a, 2 -> 3*2^(a-1)
  int alpha = 0;
  int stage = 0;       // solve order within the system
  int interval = -1;   // owning interval, -1 when not applicable
  bool external = false;  // no equation (strategy or outer unknowns)
};

// Equation system x_v = rhs[v] for each non-pinned, non-external variable.
struct PolySystem {
  std::vector<VarInfo> vars;
  std::vector<Poly> rhs;
  std::vector<bool> pinned;  // forced to 0
  std::vector<std::vector<int>> mass_groups;  // each group's sum is at most 1

  int size() const { return static_cast<int>(vars.size()); }
  int add_var(VarInfo info, Poly rhs_poly = {});
  int degree() const;
  bool is_free(int v) const { return !pinned[static_cast<size_t>(v)] && !vars[static_cast<size_t>(v)].external; }
  std::string dump() const;
};

// Folded one-step kernel d[u+1][q][p] = sum over actions a of weight u of sigma(q)(a) * delta(q,a)(p).
struct Fold {
  int nq = 0;
  std::array<std::vector<std::vector<Poly>>, 3> d;
  const Poly& at(int u, int q, int p) const {
    return d[static_cast<size_t>(u + 1)][static_cast<size_t>(q)][static_cast<size_t>(p)];
  }
};

Fold fold(const OcMdp& m, const std::function<Poly(int q, int a)>& sigma);
Fold fold_row(const OcMdp& m, const std::vector<Dist>& row);
Fold fold_chain(const OneCounterChain& c);

// d[u][q][p] known positive (exact test on rationals; symbolic entries count when non-empty).
using Positivity = std::array<std::vector<std::vector<bool>>, 3>;
Positivity positivity(const Fold& f);

struct TermBlock {
  int nq = 0;
  std::vector<int> ids;  // q*nq + p
  int x(int q, int p) const { return ids[static_cast<size_t>(q * nq + p)]; }
};

TermBlock add_termination_system(PolySystem& sys, const Fold& f, const std::vector<std::string>& names,
                                 const std::string& prefix, int interval);
PolySystem build_termination_system(const OcMdp& m, const std::vector<Dist>& row);

struct BoundedBlock {
  int nq = 0;
  int beta = 0;
  std::vector<int> base;  // per alpha: first id
  // alpha 0 only has kidx 1.
  int up(int alpha, int kidx, int q, int p) const;
  int down(int alpha, int kidx, int q, int p) const;
};

BoundedBlock add_bounded_system(PolySystem& sys, const Fold& f, int beta, const std::vector<std::string>& names,
                                const std::string& prefix, int interval, int stage_offset = 0);
PolySystem build_bounded_system(const OcMdp& m, const std::vector<Dist>& row, const Interval& i);

// Zero-pins every bounded variable whose value is 0 in the least solution, by staged reachability.
void refine_unique(PolySystem& sys, const BoundedBlock& b, const Positivity& pos);
PolySystem refine_unique(PolySystem sys, const BoundedBlock& b, const OcMdp& m, const std::vector<Dist>& row);

// Variables that are 0 in the least solution, via Boolean fixed-point iteration (any degree).
std::vector<bool> zero_set(const PolySystem& sys);
// Pins the zero set of the termination block.
void pin_zero_termination(PolySystem& sys, const TermBlock& b);

struct CompressedChain;

struct ReachBlock {
  std::vector<int> y;  // per chain state, -1 for targets
};

// y_s = sum_{s'} P(s,s') y_s' + sum_{s' in target} P(s,s'); non-reaching states pinned.
ReachBlock add_reach_system(PolySystem& sys, const CompressedChain& c, const std::vector<bool>& target,
                            const std::string& prefix);
PolySystem build_reach_system(const CompressedChain& c, const std::vector<bool>& target);

}  // namespace ocmdp
