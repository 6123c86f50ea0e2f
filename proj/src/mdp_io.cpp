#include "pgbias/mdp_io.hpp"

#include <fstream>
#include <set>
#include <tuple>
#include <sstream>

namespace pgbias {

using nlohmann::json;

namespace {

std::string summarize(const ValidationReport& report) {
  std::ostringstream out;
  out << "MDP failed validation (" << report.violations.size() << " violation(s))";
  for (const auto& v : report.violations) out << "\n  " << v.code << " at " << v.location << ": " << v.message;
  return out.str();
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw MdpFormatError(where, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw MdpFormatError(where + "." + key, "expected a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw MdpFormatError(where + "." + key, "expected a number");
  return v.get<double>();
}

std::vector<std::string> name_list(const json& doc, const char* key) {
  const auto& v = require(doc, key, "document");
  if (!v.is_array() || v.empty()) throw MdpFormatError(key, "expected a non-empty array of names");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw MdpFormatError(std::string(key) + "[" + std::to_string(i) + "]", "expected a string");
    auto name = v[i].get<std::string>();
    if (!seen.insert(name).second) throw MdpFormatError(std::string(key) + "[" + std::to_string(i) + "]", "duplicate name '" + name + "'");
    out.push_back(std::move(name));
  }
  return out;
}

const json& entry_array(const json& doc, const char* key) {
  const auto& v = require(doc, key, "document");
  if (!v.is_array()) throw MdpFormatError(key, "expected an array");
  return v;
}

Index lookup(const TabularMDP& mdp, bool state, const std::string& name, const std::string& where) {
  try {
    return state ? mdp.state_index(name) : mdp.action_index(name);
  } catch (const std::invalid_argument& e) {
    throw MdpFormatError(where, e.what());
  }
}

}  // namespace

ValidationError::ValidationError(ValidationReport report)
    : std::runtime_error(summarize(report)), report_(std::move(report)) {}

TabularMDP mdp_from_json(const json& doc) {
  if (!doc.is_object()) throw MdpFormatError("document", "expected a JSON object");
  auto states = name_list(doc, "states");
  auto actions = name_list(doc, "actions");
  const auto terminal = require_string(doc, "terminal", "document");
  const double gamma = require_number(doc, "gamma", "document");

  TabularMDP mdp;
  mdp.states = std::move(states);
  mdp.actions = std::move(actions);
  mdp.terminal = lookup(mdp, true, terminal, "terminal");
  mdp.gamma = gamma;
  const Index n = mdp.num_states();
  const Index na = mdp.num_actions();
  mdp.transitions.assign(na, Eigen::MatrixXd::Zero(n, n));
  mdp.reward = Eigen::MatrixXd::Zero(n, na);
  mdp.initial = Eigen::VectorXd::Zero(n);

  Eigen::MatrixXi row_seen = Eigen::MatrixXi::Zero(n, na);
  std::set<std::tuple<Index, Index, Index>> seen_entries;
  const auto& transitions = entry_array(doc, "transitions");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string where = "transitions[" + std::to_string(i) + "]";
    const auto& e = transitions[i];
    const Index s = lookup(mdp, true, require_string(e, "s", where), where + ".s");
    const Index a = lookup(mdp, false, require_string(e, "a", where), where + ".a");
    const Index to = lookup(mdp, true, require_string(e, "to", where), where + ".to");
    if (!seen_entries.insert({s, a, to}).second) throw MdpFormatError(where, "duplicate transition entry");
    mdp.transitions[a](s, to) = require_number(e, "p", where);
    row_seen(s, a) = 1;
  }
  for (Index s = 0; s < n; ++s)
    for (Index a = 0; a < na; ++a) {
      if (row_seen(s, a)) continue;
      if (s == mdp.terminal) {
        mdp.transitions[a](s, s) = 1.0;
      } else {
        throw MdpFormatError("transitions", "no transition row for (" + mdp.states[s] + ", " + mdp.actions[a] + ")");
      }
    }

  std::set<std::pair<Index, Index>> seen_rewards;
  const json empty = json::array();
  const auto& rewards = doc.contains("rewards") ? entry_array(doc, "rewards") : empty;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const std::string where = "rewards[" + std::to_string(i) + "]";
    const auto& e = rewards[i];
    const Index s = lookup(mdp, true, require_string(e, "s", where), where + ".s");
    const Index a = lookup(mdp, false, require_string(e, "a", where), where + ".a");
    if (!seen_rewards.insert({s, a}).second) throw MdpFormatError(where, "duplicate reward entry");
    mdp.reward(s, a) = require_number(e, "r", where);
  }

  const auto& d0 = entry_array(doc, "d0");
  std::set<Index> seen_d0;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    const std::string where = "d0[" + std::to_string(i) + "]";
    const Index s = lookup(mdp, true, require_string(d0[i], "s", where), where + ".s");
    if (!seen_d0.insert(s).second) throw MdpFormatError(where, "duplicate d0 entry");
    mdp.initial(s) = require_number(d0[i], "p", where);
  }
  return mdp;
}

json mdp_to_json(const TabularMDP& mdp) {
  json doc;
  doc["states"] = mdp.states;
  doc["actions"] = mdp.actions;
  doc["terminal"] = mdp.states.at(mdp.terminal);
  json transitions = json::array();
  json rewards = json::array();
  for (Index s = 0; s < mdp.num_states(); ++s)
    for (Index a = 0; a < mdp.num_actions(); ++a) {
      for (Index to = 0; to < mdp.num_states(); ++to) {
        const double p = mdp.transitions[a](s, to);
        if (p != 0.0) transitions.push_back({{"s", mdp.states[s]}, {"a", mdp.actions[a]}, {"to", mdp.states[to]}, {"p", p}});
      }
      if (mdp.reward(s, a) != 0.0)
        rewards.push_back({{"s", mdp.states[s]}, {"a", mdp.actions[a]}, {"r", mdp.reward(s, a)}});
    }
  json d0 = json::array();
  for (Index s = 0; s < mdp.num_states(); ++s)
    if (mdp.initial(s) != 0.0) d0.push_back({{"s", mdp.states[s]}, {"p", mdp.initial(s)}});
  doc["transitions"] = std::move(transitions);
  doc["rewards"] = std::move(rewards);
  doc["d0"] = std::move(d0);
  doc["gamma"] = mdp.gamma;
  return doc;
}

TabularMDP read_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MdpFormatError(path.string(), "cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    // The library message carries line and column.
    throw MdpFormatError(path.string(), e.what());
  }
  return mdp_from_json(doc);
}

TabularMDP load_mdp(const std::filesystem::path& path) {
  auto mdp = read_mdp(path);
  auto report = validate_mdp(mdp);
  if (!report.ok()) throw ValidationError(std::move(report));
  return mdp;
}

void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << mdp_to_json(mdp).dump(2) << '\n';
}

json to_json(const ValidationReport& report) {
  auto list = [](const std::vector<Violation>& vs) {
    json arr = json::array();
    for (const auto& v : vs) arr.push_back({{"code", v.code}, {"location", v.location}, {"message", v.message}});
    return arr;
  };
  return {{"ok", report.ok()}, {"violations", list(report.violations)}, {"notices", list(report.notices)}};
}

}  // namespace pgbias
