#ifndef NEMESYS_REPORT_HPP
#define NEMESYS_REPORT_HPP

#include <string>

#include <json.hpp>

#include "nemesys/apps.hpp"
#include "nemesys/grounder.hpp"
#include "nemesys/learn.hpp"

namespace nemesys {

nlohmann::json to_json(const GroundingReport& report);
nlohmann::json to_json(const ScoredProof& proof);
nlohmann::json to_json(const RelevanceReport& report);
nlohmann::json to_json(const CausalRunResult& result);
nlohmann::json to_json(const PlanResult& result);
nlohmann::json to_json(const LossReport& report);
nlohmann::json to_json(const DoLearnResult& result);
nlohmann::json to_json(const StructureLearnResult& result);

// Human-readable rendering of a run report (the --text format).
std::string render_text(const nlohmann::json& report);

}  // namespace nemesys

#endif
