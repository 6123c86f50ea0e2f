#pragma once

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "pgbias/mdp.hpp"

namespace pgbias {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Document schema:
///   { "states": [...], "actions": [...], "terminal": "sInf",
///     "transitions": [{"s", "a", "to", "p"}...], "rewards": [{"s", "a", "r"}...],
///     "d0": [{"s", "p"}...], "gamma": 0.9 }
/// Terminal rows may be omitted (self-loop); every other (s, a) needs at
/// least one transition entry. Omitted rewards are zero.
TabularMDP mdp_from_json(const nlohmann::json& doc);
nlohmann::json mdp_to_json(const TabularMDP& mdp);

/// Parse only; throws MdpFormatError.
TabularMDP read_mdp(const std::filesystem::path& path);
/// Parse and validate; throws MdpFormatError or ValidationError.
TabularMDP load_mdp(const std::filesystem::path& path);
void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace pgbias
