#ifndef EVIDENCED_REPORT_HPP
#define EVIDENCED_REPORT_HPP

#include <string>
#include <vector>

#include "json.hpp"

#include "evidenced/compare.hpp"
#include "evidenced/estimators.hpp"

namespace evd {

nlohmann::json to_json(const EvidenceEstimate& estimate);
nlohmann::json to_json(const KGridResult& grid);
nlohmann::json to_json(const BayesFactorReport& report);
nlohmann::json to_json(const TreeSelectReport& report);

// Aligned-column text table; first row is the header.
std::string format_table(const std::vector<std::vector<std::string>>& rows);

// One row per estimator: method, log c, and the RMSE family.
std::string evidence_table(std::span<const EvidenceEstimate> estimates);

// One row per grid point: k, log c, both RMSEs, CI; the selected row is
// starred.
std::string k_grid_table(const KGridResult& grid);

std::string tree_select_table(const TreeSelectReport& report);

}  // namespace evd

#endif  // EVIDENCED_REPORT_HPP
