#include "ocmdp/model.hpp"

#include "ocmdp/strategies.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace ocmdp {

int OcMdp::state_index(std::string_view name) const {
  for (size_t i = 0; i < states.size(); ++i)
    if (states[i] == name) return static_cast<int>(i);
  return -1;
}

int OcMdp::action_index(std::string_view name) const {
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == name) return static_cast<int>(i);
  return -1;
}

int OcMdp::require_state(std::string_view name) const {
  int q = state_index(name);
  if (q < 0) throw std::domain_error("unknown state '" + std::string(name) + "'");
  return q;
}

const Action* OcMdp::find(int q, int a) const {
  if (q < 0 || q >= num_states()) return nullptr;
  for (const auto& act : enabled[static_cast<size_t>(q)])
    if (act.id == a) return &act;
  return nullptr;
}

int OcMdp::add_state(const std::string& name) {
  int q = state_index(name);
  if (q >= 0) return q;
  states.push_back(name);
  enabled.emplace_back();
  return num_states() - 1;
}

int OcMdp::add_action_name(const std::string& name) {
  int a = action_index(name);
  if (a >= 0) return a;
  actions.push_back(name);
  return num_actions() - 1;
}

void OcMdp::set_action(int q, int a, int weight, std::vector<Transition> succ) {
  std::sort(succ.begin(), succ.end(), [](const Transition& x, const Transition& y) { return x.target < y.target; });
  std::vector<Transition> merged;
  for (auto& t : succ) {
    if (!merged.empty() && merged.back().target == t.target)
      merged.back().prob += t.prob;
    else
      merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(), [](const Transition& t) { return t.prob == 0; }),
               merged.end());
  auto& row = enabled.at(static_cast<size_t>(q));
  auto it = std::lower_bound(row.begin(), row.end(), a, [](const Action& x, int id) { return x.id < id; });
  Action act{a, weight, std::move(merged)};
  if (it != row.end() && it->id == a)
    *it = std::move(act);
  else
    row.insert(it, std::move(act));
}

void OcMdp::set_action(const std::string& q, const std::string& a, int weight,
                       const std::vector<std::pair<std::string, Rat>>& succ) {
  int qi = add_state(q);
  int ai = add_action_name(a);
  std::vector<Transition> ts;
  for (const auto& [p, pr] : succ) ts.push_back({add_state(p), pr});
  set_action(qi, ai, weight, std::move(ts));
}

bool OcMdp::operator==(const OcMdp& o) const {
  if (states != o.states || actions != o.actions || enabled.size() != o.enabled.size()) return false;
  for (size_t q = 0; q < enabled.size(); ++q) {
    const auto& x = enabled[q];
    const auto& y = o.enabled[q];
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i].id != y[i].id || x[i].weight != y[i].weight || x[i].succ.size() != y[i].succ.size()) return false;
      for (size_t j = 0; j < x[i].succ.size(); ++j)
        if (x[i].succ[j].target != y[i].succ[j].target || x[i].succ[j].prob != y[i].succ[j].prob) return false;
    }
  }
  return true;
}

std::vector<std::string> validate(const OcMdp& m) {
  std::vector<std::string> out;
  if (m.states.empty()) out.push_back("model has no states");
  if (m.enabled.size() != m.states.size()) {
    out.push_back("enabled-action table does not match the state list");
    return out;
  }
  for (int q = 0; q < m.num_states(); ++q) {
    const std::string& qn = m.states[static_cast<size_t>(q)];
    if (m.enabled[static_cast<size_t>(q)].empty()) out.push_back("deadlock: no enabled action at " + qn);
    for (const auto& act : m.enabled[static_cast<size_t>(q)]) {
      std::string an = act.id >= 0 && act.id < m.num_actions() ? m.actions[static_cast<size_t>(act.id)] : "?";
      std::string where = "(" + qn + "," + an + ")";
      if (act.weight < -1 || act.weight > 1) out.push_back("weight outside {-1,0,1} at " + where);
      Rat sum = 0;
      for (const auto& t : act.succ) {
        if (t.target < 0 || t.target >= m.num_states()) out.push_back("successor out of range at " + where);
        if (t.prob < 0) out.push_back("negative probability at " + where);
        sum += t.prob;
      }
      if (sum != 1) out.push_back("distribution sum != 1 at " + where + ": " + rat_str(sum));
    }
  }
  return out;
}

bool Objective::is_target(int q) const { return std::binary_search(targets.begin(), targets.end(), q); }

std::vector<std::string> validate(const OcMdp& m, const Query& q) {
  std::vector<std::string> out;
  if (q.objective.targets.empty()) out.push_back("empty target set");
  for (int t : q.objective.targets)
    if (t < 0 || t >= m.num_states()) out.push_back("target out of range");
  if (q.bound < 1) out.push_back("bound must be at least 1");
  if (q.init.state < 0 || q.init.state >= m.num_states()) out.push_back("initial state out of range");
  if (q.init.counter < 0 || q.init.counter == kInf || (q.bound != kInf && q.init.counter > q.bound))
    out.push_back("initial counter outside [0,bound]");
  if (q.theta < 0 || q.theta > 1) out.push_back("threshold outside [0,1]");
  return out;
}

OcMdp absorb_targets(const OcMdp& m, const std::vector<int>& targets) {
  OcMdp out = m;
  for (int q : targets) {
    if (q < 0 || q >= m.num_states()) throw std::domain_error("target state out of range");
    int a = m.enabled[static_cast<size_t>(q)].front().id;
    out.enabled[static_cast<size_t>(q)].clear();
    out.set_action(q, a, -1, {{q, Rat(1)}});
  }
  return out;
}

std::vector<std::string> validate(const OneCounterChain& c) {
  std::vector<std::string> out;
  if (c.trans.size() != c.states.size()) {
    out.push_back("transition table does not match the state list");
    return out;
  }
  for (int q = 0; q < c.num_states(); ++q) {
    Rat sum = 0;
    for (const auto& e : c.trans[static_cast<size_t>(q)]) {
      if (e.to < 0 || e.to >= c.num_states()) out.push_back("successor out of range at " + c.states[static_cast<size_t>(q)]);
      if (e.weight < -1 || e.weight > 1) out.push_back("weight outside {-1,0,1} at " + c.states[static_cast<size_t>(q)]);
      if (e.prob < 0) out.push_back("negative probability at " + c.states[static_cast<size_t>(q)]);
      sum += e.prob;
    }
    if (sum != 1) out.push_back("distribution sum != 1 at " + c.states[static_cast<size_t>(q)] + ": " + rat_str(sum));
  }
  return out;
}

ExplicitChain induced_chain_bounded(const OcMdp& m, const IntervalStrategy& s, Counter B) {
  if (B == kInf) throw std::domain_error("the explicit chain needs a finite bound");
  if (B < 1) throw std::domain_error("bound must be at least 1");
  const int nq = m.num_states();
  if (B > 10'000'000 / std::max(1, nq)) throw std::length_error("explicit chain too large");
  ExplicitChain c;
  const auto size = static_cast<size_t>((B + 1) * nq);
  c.names.resize(size);
  c.rows.resize(size);
  for (Counter k = 0; k <= B; ++k) {
    for (int q = 0; q < nq; ++q) {
      int idx = induced_index(nq, q, k);
      c.names[static_cast<size_t>(idx)] = m.states[static_cast<size_t>(q)] + "@" + std::to_string(k);
      auto& row = c.rows[static_cast<size_t>(idx)];
      if (k == 0 || k == B) {
        row.emplace_back(idx, Rat(1));
        continue;
      }
      std::map<int, Rat> acc;
      for (const auto& [a, pa] : s.lookup(q, k)) {
        const Action* act = m.find(q, a);
        if (!act) throw std::domain_error("strategy plays a disabled action");
        for (const auto& t : act->succ) acc[induced_index(nq, t.target, k + act->weight)] += pa * t.prob;
      }
      for (auto& [to, p] : acc)
        if (p != 0) row.emplace_back(to, p);
    }
  }
  return c;
}

namespace {

int parse_weight(const std::string& tok, int line) {
  std::string v = tok;
  if (v.rfind("w=", 0) == 0) v = v.substr(2);
  if (v == "+1" || v == "1") return 1;
  if (v == "-1") return -1;
  if (v == "0" || v == "+0" || v == "-0") return 0;
  throw ParseError("line " + std::to_string(line) + ": weight must be -1, 0 or +1, got '" + tok + "'");
}

std::string weight_str(int w) { return w > 0 ? "+1" : (w < 0 ? "-1" : "0"); }

std::string strip_value(std::string v) {
  v = trim(v);
  auto strip_pair = [&](char a, char b) {
    if (v.size() >= 2 && v.front() == a && v.back() == b) v = trim(v.substr(1, v.size() - 2));
  };
  strip_pair('"', '"');
  strip_pair('\'', '\'');
  strip_pair('[', ']');
  strip_pair('(', ')');
  return v;
}

std::vector<std::string> list_items(const std::string& v) {
  std::string s = strip_value(v);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::vector<std::string> out;
  for (auto& t : split_ws(s)) out.push_back(strip_value(t));
  return out;
}

std::string strip_comment(const std::string& raw) {
  auto hash = raw.find('#');
  return trim(hash == std::string::npos ? raw : raw.substr(0, hash));
}

}  // namespace

OcMdp parse_model(std::string_view text) {
  OcMdp m;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  bool have_states = false;
  while (std::getline(is, raw)) {
    ++line;
    std::string l = strip_comment(raw);
    if (l.empty()) continue;
    if (l.rfind("states:", 0) == 0) {
      for (const auto& s : split_ws(l.substr(7))) {
        if (m.state_index(s) >= 0) throw ParseError("line " + std::to_string(line) + ": duplicate state '" + s + "'");
        m.add_state(s);
      }
      have_states = true;
      continue;
    }
    if (l.rfind("actions:", 0) == 0) {
      for (const auto& a : split_ws(l.substr(8))) {
        if (m.action_index(a) >= 0) throw ParseError("line " + std::to_string(line) + ": duplicate action '" + a + "'");
        m.add_action_name(a);
      }
      continue;
    }
    if (!have_states) throw ParseError("line " + std::to_string(line) + ": 'states:' must come first");
    auto arrow = l.find("->");
    if (arrow == std::string::npos)
      throw ParseError("line " + std::to_string(line) + ": expected '<state> <action> w=<w> -> succ:prob ...'");
    auto head = split_ws(l.substr(0, arrow));
    if (head.size() != 3)
      throw ParseError("line " + std::to_string(line) + ": expected '<state> <action> w=<w>' before '->'");
    int q = m.state_index(head[0]);
    if (q < 0) throw ParseError("line " + std::to_string(line) + ": unknown state '" + head[0] + "'");
    int a = m.action_index(head[1]);
    if (a < 0) throw ParseError("line " + std::to_string(line) + ": unknown action '" + head[1] + "'");
    if (m.find(q, a))
      throw ParseError("line " + std::to_string(line) + ": action '" + head[1] + "' defined twice at '" + head[0] + "'");
    int w = parse_weight(head[2], line);
    std::vector<Transition> succ;
    for (const auto& tok : split_ws(l.substr(arrow + 2))) {
      auto colon = tok.find(':');
      std::string pn = colon == std::string::npos ? tok : tok.substr(0, colon);
      int p = m.state_index(pn);
      if (p < 0) throw ParseError("line " + std::to_string(line) + ": unknown successor '" + pn + "'");
      Rat pr = colon == std::string::npos ? Rat(1) : parse_rat(tok.substr(colon + 1));
      if (pr < 0) throw ParseError("line " + std::to_string(line) + ": negative probability");
      succ.push_back({p, pr});
    }
    if (succ.empty()) throw ParseError("line " + std::to_string(line) + ": no successors");
    m.set_action(q, a, w, std::move(succ));
  }
  auto errs = validate(m);
  if (!errs.empty()) throw ParseError("invalid model: " + errs.front());
  return m;
}

std::string print_model(const OcMdp& m) {
  std::ostringstream os;
  os << "states:";
  for (const auto& s : m.states) os << ' ' << s;
  os << "\nactions:";
  for (const auto& a : m.actions) os << ' ' << a;
  os << '\n';
  for (int q = 0; q < m.num_states(); ++q)
    for (const auto& act : m.enabled[static_cast<size_t>(q)]) {
      os << m.states[static_cast<size_t>(q)] << ' ' << m.actions[static_cast<size_t>(act.id)] << " w="
         << weight_str(act.weight) << " ->";
      for (const auto& t : act.succ) os << ' ' << m.states[static_cast<size_t>(t.target)] << ':' << rat_str(t.prob);
      os << '\n';
    }
  return os.str();
}

namespace {

Config parse_config(const std::string& text, const OcMdp& m) {
  std::string v = strip_value(text);
  auto at = v.rfind('@');
  if (at == std::string::npos) at = v.rfind(',');
  if (at == std::string::npos) throw ParseError("configuration must look like 'state@counter'");
  std::string qn = trim(v.substr(0, at));
  int q = m.state_index(qn);
  if (q < 0) throw ParseError("unknown state '" + qn + "' in configuration");
  return {q, parse_counter(v.substr(at + 1))};
}

}  // namespace

Query parse_query(std::string_view text, const OcMdp& m) {
  Query q;
  bool have_targets = false, have_init = false;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string l = strip_comment(raw);
    if (l.empty() || l.front() == '[') continue;
    auto eq = l.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
    std::string key = trim(l.substr(0, eq));
    std::string val = strip_value(l.substr(eq + 1));
    try {
      if (key == "objective") {
        if (val == "reach")
          q.objective.kind = ObjectiveKind::Reach;
        else if (val == "selterm")
          q.objective.kind = ObjectiveKind::SelTerm;
        else
          throw ParseError("objective must be 'reach' or 'selterm'");
      } else if (key == "targets") {
        q.objective.targets.clear();
        for (const auto& t : list_items(val)) {
          int s = m.state_index(t);
          if (s < 0) throw ParseError("unknown target state '" + t + "'");
          q.objective.targets.push_back(s);
        }
        std::sort(q.objective.targets.begin(), q.objective.targets.end());
        q.objective.targets.erase(std::unique(q.objective.targets.begin(), q.objective.targets.end()),
                                  q.objective.targets.end());
        have_targets = true;
      } else if (key == "bound") {
        q.bound = parse_counter(val);
      } else if (key == "init") {
        q.init = parse_config(val, m);
        have_init = true;
      } else if (key == "theta") {
        q.theta = parse_rat(val);
      } else {
        throw ParseError("unknown key '" + key + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  if (!have_targets) throw ParseError("query has no 'targets'");
  if (!have_init) throw ParseError("query has no 'init'");
  auto errs = validate(m, q);
  if (!errs.empty()) throw ParseError("invalid query: " + errs.front());
  return q;
}

std::string print_query(const Query& q, const OcMdp& m) {
  std::ostringstream os;
  os << "objective = " << (q.objective.kind == ObjectiveKind::Reach ? "reach" : "selterm") << '\n';
  os << "targets =";
  for (size_t i = 0; i < q.objective.targets.size(); ++i)
    os << (i ? ", " : " ") << m.states[static_cast<size_t>(q.objective.targets[i])];
  os << '\n';
  os << "bound = " << counter_str(q.bound) << '\n';
  os << "init = " << m.states[static_cast<size_t>(q.init.state)] << '@' << q.init.counter << '\n';
  os << "theta = " << rat_str(q.theta) << '\n';
  return os.str();
}

OneCounterChain parse_ocmc(std::string_view text) {
  OneCounterChain c;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line = 0;
  auto index = [&](const std::string& n) -> int {
    for (size_t i = 0; i < c.states.size(); ++i)
      if (c.states[i] == n) return static_cast<int>(i);
    return -1;
  };
  std::vector<bool> defined;
  while (std::getline(is, raw)) {
    ++line;
    std::string l = strip_comment(raw);
    if (l.empty()) continue;
    if (l.rfind("states:", 0) == 0) {
      for (const auto& s : split_ws(l.substr(7))) {
        if (index(s) >= 0) throw ParseError("line " + std::to_string(line) + ": duplicate state '" + s + "'");
        c.states.push_back(s);
      }
      c.trans.resize(c.states.size());
      defined.resize(c.states.size(), false);
      continue;
    }
    auto arrow = l.find("->");
    if (arrow == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected '<state> -> ...'");
    std::string qn = trim(l.substr(0, arrow));
    int q = index(qn);
    if (q < 0) throw ParseError("line " + std::to_string(line) + ": unknown state '" + qn + "'");
    if (defined[static_cast<size_t>(q)]) throw ParseError("line " + std::to_string(line) + ": state defined twice");
    defined[static_cast<size_t>(q)] = true;
    for (const auto& tok : split_ws(l.substr(arrow + 2))) {
      // succ,weight:prob
      auto comma = tok.find(',');
      auto colon = tok.find(':');
      if (comma == std::string::npos || colon == std::string::npos || colon < comma)
        throw ParseError("line " + std::to_string(line) + ": expected 'succ,weight:prob', got '" + tok + "'");
      std::string pn = tok.substr(0, comma);
      int p = index(pn);
      if (p < 0) throw ParseError("line " + std::to_string(line) + ": unknown successor '" + pn + "'");
      int w = parse_weight(tok.substr(comma + 1, colon - comma - 1), line);
      c.trans[static_cast<size_t>(q)].push_back({p, w, parse_rat(tok.substr(colon + 1))});
    }
  }
  auto errs = validate(c);
  if (!errs.empty()) throw ParseError("invalid one-counter chain: " + errs.front());
  return c;
}

std::string print_ocmc(const OneCounterChain& c) {
  std::ostringstream os;
  os << "states:";
  for (const auto& s : c.states) os << ' ' << s;
  os << '\n';
  for (int q = 0; q < c.num_states(); ++q) {
    os << c.states[static_cast<size_t>(q)] << " ->";
    for (const auto& e : c.trans[static_cast<size_t>(q)])
      os << ' ' << c.states[static_cast<size_t>(e.to)] << ',' << weight_str(e.weight) << ':' << rat_str(e.prob);
    os << '\n';
  }
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace ocmdp
