#include "evidenced/chain_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace evd {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void write_chain(const Chain& chain, const std::string& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write chain CSV: " + csv_path);
  for (const auto& name : chain.column_names) out << name << ',';
  out << "log_post,log_lik\n";
  for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < chain.draws.cols(); ++j)
      out << fmt17(chain.draws(i, j)) << ',';
    out << fmt17(chain.log_post[i]) << ',' << fmt17(chain.log_lik[i]) << '\n';
  }

  nlohmann::json sidecar{
      {"packing_version", Packing::kVersion},
      {"model", model_kind_name(chain.kind)},
      {"n_categories", chain.n_categories},
      {"seed", chain.seed},
      {"burn_in", chain.burn_in},
      {"thin", chain.thin},
      {"acceptance_rate", chain.acceptance_rate},
      {"priors",
       {{"lambda_branch", chain.priors.lambda_branch},
        {"lambda_alpha", chain.priors.lambda_alpha}}},
      {"columns", chain.column_names},
  };
  if (!chain.topology_newick.empty())
    sidecar["topology"] = chain.topology_newick;
  std::ofstream side(csv_path + ".json", std::ios::binary);
  if (!side)
    throw InvalidInput("cannot write chain sidecar: " + csv_path + ".json");
  side << sidecar.dump(2) << '\n';
}

LoadedChain load_chain(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw InvalidInput("cannot open chain CSV: " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    throw InvalidInput("chain CSV is empty: " + csv_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  int log_post_col = -1, log_lik_col = -1;
  LoadedChain out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "log_post")
      log_post_col = static_cast<int>(i);
    else if (header[i] == "log_lik")
      log_lik_col = static_cast<int>(i);
    else
      out.column_names.push_back(header[i]);
  }
  if (log_post_col < 0)
    throw InvalidInput("chain CSV is missing the log_post column");

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw InvalidInput("chain CSV row " + std::to_string(line_no) +
                         " has " + std::to_string(fields.size()) +
                         " fields, expected " +
                         std::to_string(header.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      try {
        row[j] = std::stod(fields[j]);
      } catch (const std::exception&) {
        throw InvalidInput("chain CSV row " + std::to_string(line_no) +
                           ": bad number '" + fields[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2)
    throw InvalidInput("chain CSV needs at least 2 draws");

  const std::size_t d = out.column_names.size();
  out.draws.resize(rows.size(), d);
  out.log_post.resize(rows.size());
  if (log_lik_col >= 0) out.log_lik = Vector(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (static_cast<int>(j) == log_post_col) {
        out.log_post[i] = rows[i][j];
      } else if (static_cast<int>(j) == log_lik_col) {
        (*out.log_lik)[i] = rows[i][j];
      } else {
        out.draws(i, k++) = rows[i][j];
      }
    }
  }

  std::ifstream side(csv_path + ".json");
  if (side) {
    try {
      nlohmann::json j;
      side >> j;
      Chain chain;
      chain.draws = out.draws;
      chain.log_post = out.log_post;
      chain.log_lik = out.log_lik ? *out.log_lik : Vector();
      chain.column_names = out.column_names;
      chain.kind = model_kind_from_name(j.at("model").get<std::string>());
      chain.n_categories = j.value("n_categories", 1);
      chain.seed = j.value("seed", std::uint64_t{0});
      chain.burn_in = j.value("burn_in", 0);
      chain.thin = j.value("thin", 1);
      chain.acceptance_rate = j.value("acceptance_rate", 0.0);
      if (j.contains("priors")) {
        chain.priors.lambda_branch =
            j["priors"].value("lambda_branch", chain.priors.lambda_branch);
        chain.priors.lambda_alpha =
            j["priors"].value("lambda_alpha", chain.priors.lambda_alpha);
      }
      if (j.contains("topology"))
        chain.topology_newick = j["topology"].get<std::string>();
      out.full = std::move(chain);
    } catch (const std::exception&) {
      // A sidecar we cannot parse is treated as absent.
    }
  }
  return out;
}

LogDensitySample loaded_chain_to_sample(const LoadedChain& chain) {
  LogDensitySample sample;
  sample.draws = chain.draws;
  sample.log_g = chain.log_post;
  double min_ess = double(chain.draws.rows());
  for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) {
    std::vector<double> column(chain.draws.col(j).data(),
                               chain.draws.col(j).data() + chain.draws.rows());
    min_ess = std::min(min_ess, effective_sample_size(column).value);
  }
  std::vector<double> lp(chain.log_post.data(),
                         chain.log_post.data() + chain.log_post.size());
  min_ess = std::min(min_ess, effective_sample_size(lp).value);
  sample.ess = min_ess;
  return sample;
}

}  // namespace evd
