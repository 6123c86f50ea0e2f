#pragma once

#include <json.hpp>

#include "pgbias/diagnostics.hpp"
#include "pgbias/dynamics.hpp"
#include "pgbias/gallery.hpp"
#include "pgbias/sampling.hpp"

namespace pgbias {

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const Eigen::MatrixXd& m);  // array of rows
nlohmann::json to_json(const SymmetryReport& report);
nlohmann::json to_json(const CirculationReport& report);
nlohmann::json to_json(const PolicyScores& scores);
nlohmann::json to_json(const FlowResult& result);
nlohmann::json to_json(const EstimatorReport& report);
/// One JSON-lines record; state and action names come from the MDP.
nlohmann::json to_json(const Trajectory& trajectory, const TabularMDP& mdp);
nlohmann::json describe(const GalleryEntry& entry);

}  // namespace pgbias
