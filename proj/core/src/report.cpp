#include "evidenced/report.hpp"

#include <cstdio>

namespace evd {

namespace {

std::string num(double v, const char* fmt = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const EvidenceEstimate& e) {
  nlohmann::json j{
      {"method", evidence_method_name(e.method)},
      {"log_c", e.log_c},
      {"rmse_delta", e.rmse_delta},
      {"rmse_delta_ess", e.rmse_delta_ess},
      {"ci_low", e.ci_low},
      {"ci_high", e.ci_high},
      {"is_surrogate", e.is_surrogate},
      {"packing_version", Packing::kVersion},
  };
  if (e.rmse_boot) j["rmse_boot"] = *e.rmse_boot;
  if (e.rmse_mc) j["rmse_mc"] = *e.rmse_mc;
  if (e.k_opt) j["k_opt"] = *e.k_opt;
  if (!e.data_fingerprint.empty()) j["data_fingerprint"] = e.data_fingerprint;
  return j;
}

nlohmann::json to_json(const KGridResult& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : grid.grid) {
    nlohmann::json r{{"k", row.k}, {"valid", row.valid}};
    if (row.valid)
      r["estimate"] = to_json(row.estimate);
    else
      r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"grid", rows},
                        {"selected_index", grid.selected_index},
                        {"selected", to_json(grid.selected())}};
}

nlohmann::json to_json(const BayesFactorReport& report) {
  nlohmann::json j{
      {"log_bf", report.log_bf},       {"method", report.method},
      {"ci_low", report.ci_low},       {"ci_high", report.ci_high},
      {"category", report.category},
  };
  j["model0"] = to_json(report.model0);
  j["model1"] = to_json(report.model1);
  if (report.sd_pairings) j["sd_pairings"] = *report.sd_pairings;
  if (report.sd_pairings_over_sqrt_r)
    j["sd_pairings_over_sqrt_r"] = *report.sd_pairings_over_sqrt_r;
  if (report.replicate_matrix) {
    nlohmann::json m = nlohmann::json::array();
    for (Eigen::Index i = 0; i < report.replicate_matrix->rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < report.replicate_matrix->cols(); ++k)
        row.push_back((*report.replicate_matrix)(i, k));
      m.push_back(std::move(row));
    }
    j["replicate_log_bf"] = std::move(m);
  }
  return j;
}

nlohmann::json to_json(const TreeSelectReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j{{"ok", e.ok}};
    if (e.ok) {
      j["newick"] = e.newick;
      j["evidence"] = to_json(e.evidence);
      j["posterior_probability"] = e.posterior_probability;
    } else {
      j["error"] = e.error;
    }
    entries.push_back(std::move(j));
  }
  nlohmann::json bf = nlohmann::json::array();
  for (Eigen::Index i = 0; i < report.pairwise_log_bf.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j2 = 0; j2 < report.pairwise_log_bf.cols(); ++j2)
      row.push_back(report.pairwise_log_bf(i, j2));
    bf.push_back(std::move(row));
  }
  return nlohmann::json{{"topologies", entries},
                        {"ranking", report.ranking},
                        {"pairwise_log_bf", bf}};
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "";
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size())
        out.append(widths[i] - row[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string evidence_table(std::span<const EvidenceEstimate> estimates) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"method", "log_c", "rmse", "rmse_mc", "rmse_boot",
                  "rmse_ess", "ci"});
  for (const auto& e : estimates) {
    std::string method = evidence_method_name(e.method);
    if (e.is_surrogate) method += " (surrogate)";
    rows.push_back(
        {method, num(e.log_c, "%.4f"), num(e.rmse_delta),
         e.rmse_mc ? num(*e.rmse_mc) : "-",
         e.rmse_boot ? num(*e.rmse_boot) : "-", num(e.rmse_delta_ess),
         "[" + num(e.ci_low, "%.4f") + ", " + num(e.ci_high, "%.4f") + "]"});
  }
  return format_table(rows);
}

std::string k_grid_table(const KGridResult& grid) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"", "k", "log_c", "rmse", "rmse_ess", "ci"});
  for (std::size_t i = 0; i < grid.grid.size(); ++i) {
    const auto& row = grid.grid[i];
    const std::string star = i == grid.selected_index ? "(*)" : "";
    if (row.valid) {
      rows.push_back({star, num(row.k, "%.3g"),
                      num(row.estimate.log_c, "%.4f"),
                      num(row.estimate.rmse_delta),
                      num(row.estimate.rmse_delta_ess),
                      "[" + num(row.estimate.ci_low, "%.4f") + ", " +
                          num(row.estimate.ci_high, "%.4f") + "]"});
    } else {
      rows.push_back({star, num(row.k, "%.3g"), "undefined", "-", "-", "-"});
    }
  }
  return format_table(rows);
}

std::string tree_select_table(const TreeSelectReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"rank", "topology", "log_c", "rmse_ess", "p(tau|X)"});
  for (std::size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const auto& e = report.entries[report.ranking[rank]];
    rows.push_back({std::to_string(rank + 1), e.newick,
                    num(e.evidence.log_c, "%.4f"),
                    num(e.evidence.rmse_delta_ess),
                    num(e.posterior_probability, "%.4f")});
  }
  for (const auto& e : report.entries)
    if (!e.ok) rows.push_back({"-", "FAILED: " + e.error, "-", "-", "-"});
  return format_table(rows);
}

}  // namespace evd
