#pragma once

#include <json.hpp>

#include "gelx/checks.hpp"
#include "gelx/estimators.hpp"
#include "gelx/expansion.hpp"

namespace gelx {

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Check& c);
nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const ExpansionTerms& q);
nlohmann::json to_json(const RDiffReport& r);
nlohmann::json to_json(const StudyReport& s);

}  // namespace gelx
