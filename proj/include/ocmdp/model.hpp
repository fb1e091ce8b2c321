#pragma once

#include "ocmdp/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ocmdp {

struct Transition {
  int target = 0;
  Rat prob;
  bool operator==(const Transition&) const = default;
};

struct Action {
  int id = 0;
  int weight = 0;
  std::vector<Transition> succ;  // sorted by target, no duplicates once normalised
  bool operator==(const Action&) const = default;
};

// One-counter MDP. States and actions are interned; enabled[q] is sorted by action id.
struct OcMdp {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::vector<std::vector<Action>> enabled;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  int state_index(std::string_view name) const;
  int action_index(std::string_view name) const;
  int require_state(std::string_view name) const;
  const Action* find(int q, int a) const;

  int add_state(const std::string& name);
  int add_action_name(const std::string& name);
  // Adds (or replaces) the enabled action a at q.
  void set_action(int q, int a, int weight, std::vector<Transition> succ);
  void set_action(const std::string& q, const std::string& a, int weight,
                  const std::vector<std::pair<std::string, Rat>>& succ);

  bool operator==(const OcMdp& o) const;
};

std::vector<std::string> validate(const OcMdp& m);

struct Config {
  int state = 0;
  Counter counter = 0;
  bool operator==(const Config&) const = default;
  bool operator<(const Config& o) const {
    return state != o.state ? state < o.state : counter < o.counter;
  }
};

enum class ObjectiveKind { Reach, SelTerm };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::SelTerm;
  std::vector<int> targets;  // sorted
  bool is_target(int q) const;
};

struct Query {
  Objective objective;
  Counter bound = kInf;
  Config init;
  Rat theta = 0;
};

std::vector<std::string> validate(const OcMdp& m, const Query& q);

// Every target gets one action (its lowest-id enabled one) looping with weight -1.
OcMdp absorb_targets(const OcMdp& m, const std::vector<int>& targets);

struct OneCounterChain {
  struct Edge {
    int to = 0;
    int weight = 0;
    Rat prob;
  };
  std::vector<std::string> states;
  std::vector<std::vector<Edge>> trans;
  int num_states() const { return static_cast<int>(states.size()); }
};

std::vector<std::string> validate(const OneCounterChain& c);

// Finite Markov chain with exact probabilities; absorbing rows hold a single self-loop.
struct ExplicitChain {
  std::vector<std::string> names;
  std::vector<std::vector<std::pair<int, Rat>>> rows;
  int size() const { return static_cast<int>(rows.size()); }
};

struct IntervalStrategy;

// Brute-force chain over Q x [0,B]; index of (q,k) is k*|Q| + q.
ExplicitChain induced_chain_bounded(const OcMdp& m, const IntervalStrategy& s, Counter B);
inline int induced_index(int nq, int q, Counter k) { return static_cast<int>(k) * nq + q; }

// Text formats. Grammar is documented in docs/formats.md.
OcMdp parse_model(std::string_view text);
std::string print_model(const OcMdp& m);
Query parse_query(std::string_view text, const OcMdp& m);
std::string print_query(const Query& q, const OcMdp& m);
OneCounterChain parse_ocmc(std::string_view text);
std::string print_ocmc(const OneCounterChain& c);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ocmdp
