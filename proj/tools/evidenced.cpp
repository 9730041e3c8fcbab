// evidenced: marginal-likelihood estimation from posterior samples, with a
// phylogenetic model pipeline (simulate, sample, evidence, compare, trees)
// and a synthetic validation suite.  Every command writes a manifest JSON
// from which `evidenced rerun` reproduces the outputs byte for byte.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evidenced/chain_io.hpp"
#include "evidenced/compare.hpp"
#include "evidenced/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evd;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------- utilities

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write file: " + path.string());
  out << content;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("EVIDENCED_SEED")) {
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    throw InvalidInput("EVIDENCED_SEED is not an unsigned integer");
  }
  return 1;
}

Alignment parse_alignment_text(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '>' ? parse_fasta(text) : parse_phylip(text);
  }
  throw InvalidInput("alignment text is empty");
}

// "1e-10:1e-2:log[:count]" or "lo:hi:linear[:count]" or a comma list.
std::vector<double> parse_k_grid(const std::string& text) {
  if (text.empty()) return {};
  std::vector<std::string> parts;
  {
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, sep)) parts.push_back(tok);
  }
  auto num = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InvalidInput("k-grid: bad number '" + s + "'");
    }
  };
  std::vector<double> grid;
  if (text.find(':') == std::string::npos) {
    for (const auto& p : parts) grid.push_back(num(p));
  } else {
    if (parts.size() < 3 || parts.size() > 4)
      throw InvalidInput("k-grid: expected lo:hi:{log,linear}[:count]");
    const double lo = num(parts[0]);
    const double hi = num(parts[1]);
    const std::string& scale = parts[2];
    const int count = parts.size() == 4 ? int(num(parts[3])) : 10;
    if (count < 2) throw InvalidInput("k-grid: count must be >= 2");
    if (scale != "log" && scale != "linear")
      throw InvalidInput("k-grid: scale must be log or linear");
    for (int i = 0; i < count; ++i) {
      const double f = double(i) / (count - 1);
      grid.push_back(scale == "log" ? lo * std::pow(hi / lo, f)
                                    : lo + f * (hi - lo));
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw InvalidInput("k-grid: values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw InvalidInput("k-grid: values must be strictly increasing");
  }
  return grid;
}

// Deterministic result ordering regardless of thread schedule: tasks write
// to preassigned slots.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t n_threads = std::min<std::size_t>(std::size_t(jobs), n);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& config) {
  json manifest{{"tool", "evidenced"},
                {"tool_version", kToolVersion},
                {"packing_version", Packing::kVersion},
                {"command", command},
                {"config", config}};
  spit(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate

struct SimulateConfig {
  std::string newick;
  std::string model = "jc69";
  std::vector<double> pi{0.25, 0.25, 0.25, 0.25};
  std::vector<double> rho{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  double alpha = 0.5;
  int categories = 4;
  std::size_t sites = 200;
  std::uint64_t seed = 1;
};

json to_json(const SimulateConfig& c) {
  return json{{"newick", c.newick}, {"model", c.model},   {"pi", c.pi},
              {"rho", c.rho},       {"alpha", c.alpha},   {"categories", c.categories},
              {"sites", c.sites},   {"seed", c.seed}};
}

SimulateConfig simulate_from_json(const json& j) {
  SimulateConfig c;
  c.newick = j.at("newick").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.pi = j.at("pi").get<std::vector<double>>();
  c.rho = j.at("rho").get<std::vector<double>>();
  c.alpha = j.at("alpha").get<double>();
  c.categories = j.at("categories").get<int>();
  c.sites = j.at("sites").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

int run_simulate(const SimulateConfig& c, const fs::path& out_dir) {
  const auto [topology, lengths] = parse_newick(c.newick);
  const ModelKind kind = model_kind_from_name(c.model);
  SubstitutionModel model;
  if (kind == ModelKind::JC69) {
    model = SubstitutionModel::jc69();
  } else {
    if (c.pi.size() != 4 || c.rho.size() != 6)
      throw InvalidInput("simulate: --pi needs 4 values, --rho needs 6");
    std::array<double, 4> pi;
    std::array<double, 6> rho;
    std::copy(c.pi.begin(), c.pi.end(), pi.begin());
    std::copy(c.rho.begin(), c.rho.end(), rho.begin());
    model = SubstitutionModel::gtr_gamma(pi, rho, c.alpha, c.categories);
  }
  const Alignment alignment =
      simulate_alignment(topology, lengths, model, c.sites, c.seed);
  const std::string fasta = to_fasta(alignment);
  spit(out_dir / "alignment.fasta", fasta);
  write_manifest(out_dir, "simulate", to_json(c));
  std::cout << "wrote " << (out_dir / "alignment.fasta").string() << " ("
            << alignment.n_taxa() << " taxa x " << alignment.n_sites()
            << " sites, fingerprint " << fingerprint(fasta) << ")\n";
  return 0;
}

// ------------------------------------------------------------------ sample

struct SampleConfig {
  std::string alignment;  // file contents
  std::string newick;
  std::string model = "jc69";
  double lambda_branch = 10.0;
  double lambda_alpha = 1.0;
  int categories = 4;
  int draws = 2000;
  int burn_in = 1000;
  int thin = 5;
  int replicates = 1;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json to_json(const SampleConfig& c) {
  return json{{"alignment", c.alignment},
              {"newick", c.newick},
              {"model", c.model},
              {"lambda_branch", c.lambda_branch},
              {"lambda_alpha", c.lambda_alpha},
              {"categories", c.categories},
              {"draws", c.draws},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"jobs", c.jobs}};
}

SampleConfig sample_from_json(const json& j) {
  SampleConfig c;
  c.alignment = j.at("alignment").get<std::string>();
  c.newick = j.at("newick").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.lambda_branch = j.at("lambda_branch").get<double>();
  c.lambda_alpha = j.at("lambda_alpha").get<double>();
  c.categories = j.at("categories").get<int>();
  c.draws = j.at("draws").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.thin = j.at("thin").get<int>();
  c.replicates = j.at("replicates").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  return c;
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return master + 1000ull * std::uint64_t(replicate + 1);
}

int run_sample(const SampleConfig& c, const fs::path& out_dir) {
  if (c.replicates < 1) throw InvalidInput("sample: --replicates must be >= 1");
  const Alignment alignment = parse_alignment_text(c.alignment);
  const auto [topology, lengths] = parse_newick(c.newick);
  const ModelKind kind = model_kind_from_name(c.model);
  PriorSpec priors{c.lambda_branch, c.lambda_alpha};
  PhyloPosterior posterior(alignment, topology, kind, priors, c.categories);
  ChainSettings settings;
  settings.n_draws = c.draws;
  settings.burn_in = c.burn_in;
  settings.thin = c.thin;

  std::vector<Chain> chains(c.replicates);
  parallel_for(std::size_t(c.replicates), c.jobs, [&](std::size_t r) {
    chains[r] = run_chain(posterior, settings, replicate_seed(c.seed, int(r)));
    chains[r].topology_newick = emit_newick(topology, lengths);
  });

  fs::create_directories(out_dir);
  for (int r = 0; r < c.replicates; ++r) {
    const std::string name =
        c.replicates == 1 ? "chain.csv" : "chain." + std::to_string(r + 1) + ".csv";
    write_chain(chains[r], (out_dir / name).string());
    std::cout << "wrote " << (out_dir / name).string() << " (acceptance "
              << chains[r].acceptance_rate << ")\n";
  }
  write_manifest(out_dir, "sample", to_json(c));
  return 0;
}

// ---------------------------------------------------------------- evidence

struct EvidenceConfig {
  std::vector<std::string> chains;  // paths, made absolute at parse time
  std::string alignment;            // contents; empty when synthetic
  std::string newick;
  std::string model;  // empty: take from the chain sidecar
  std::string estimators = "idr,hm,am";
  std::string k_grid;  // spec string; empty: automatic grid
  int bootstrap = 0;
  double lambda_branch = 10.0;
  double lambda_alpha = 1.0;
  int categories = 4;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool synthetic_normal = false;
};

json to_json(const EvidenceConfig& c) {
  return json{{"chains", c.chains},
              {"alignment", c.alignment},
              {"newick", c.newick},
              {"model", c.model},
              {"estimators", c.estimators},
              {"k_grid", c.k_grid},
              {"bootstrap", c.bootstrap},
              {"lambda_branch", c.lambda_branch},
              {"lambda_alpha", c.lambda_alpha},
              {"categories", c.categories},
              {"seed", c.seed},
              {"jobs", c.jobs},
              {"synthetic_normal", c.synthetic_normal}};
}

EvidenceConfig evidence_from_json(const json& j) {
  EvidenceConfig c;
  c.chains = j.at("chains").get<std::vector<std::string>>();
  c.alignment = j.at("alignment").get<std::string>();
  c.newick = j.at("newick").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.estimators = j.at("estimators").get<std::string>();
  c.k_grid = j.at("k_grid").get<std::string>();
  c.bootstrap = j.at("bootstrap").get<int>();
  c.lambda_branch = j.at("lambda_branch").get<double>();
  c.lambda_alpha = j.at("lambda_alpha").get<double>();
  c.categories = j.at("categories").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  c.synthetic_normal = j.at("synthetic_normal").get<bool>();
  return c;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(tok);
  return out;
}

double series_ess(const Vector& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  return effective_sample_size(s).value;
}

int run_evidence(const EvidenceConfig& c, const fs::path& out_dir) {
  if (c.chains.empty()) throw InvalidInput("evidence: need at least one --chain");
  std::vector<LoadedChain> loaded;
  for (const auto& path : c.chains) loaded.push_back(load_chain(path));
  for (std::size_t r = 1; r < loaded.size(); ++r)
    if (loaded[r].column_names != loaded[0].column_names)
      throw InvalidInput("evidence: replicate chains have different columns");

  // The IDR inflation needs the target density at new points, so a plain
  // CSV is not enough: either the phylogenetic inputs or the synthetic
  // self-test target must be supplied.
  LogDensityFn log_g;
  std::string fp;
  std::shared_ptr<PhyloPosterior> posterior;
  if (c.synthetic_normal) {
    const double d = double(loaded[0].draws.cols());
    log_g = [d](const Vector& u) {
      return -0.5 * u.squaredNorm() - 0.5 * d * std::log(2.0 * M_PI);
    };
    fp = "synthetic:normal";
  } else if (!c.alignment.empty() && !c.newick.empty()) {
    const Alignment alignment = parse_alignment_text(c.alignment);
    const auto [topology, lengths] = parse_newick(c.newick);
    ModelKind kind;
    PriorSpec priors{c.lambda_branch, c.lambda_alpha};
    int categories = c.categories;
    if (loaded[0].full) {
      kind = loaded[0].full->kind;
      priors = loaded[0].full->priors;
      categories = loaded[0].full->n_categories;
    } else if (!c.model.empty()) {
      kind = model_kind_from_name(c.model);
    } else {
      throw InvalidInput(
          "evidence: no chain sidecar found, specify --model explicitly");
    }
    posterior = std::make_shared<PhyloPosterior>(alignment, topology, kind,
                                                 priors, categories);
    log_g = [posterior](const Vector& u) {
      return posterior->evaluate(u).log_post;
    };
    // Guard against mismatched inputs: the stored log_post must match a
    // fresh evaluation at the first draw.
    const double stored = loaded[0].log_post[0];
    const double fresh = log_g(loaded[0].draws.row(0).transpose());
    if (std::abs(fresh - stored) > 1e-6 * std::max(1.0, std::abs(stored)))
      throw InvalidInput(
          "evidence: chain log_post does not match the supplied "
          "alignment/tree/model (stored " + std::to_string(stored) +
          ", recomputed " + std::to_string(fresh) + ")");
    fp = fingerprint(c.alignment);
  }

  const auto methods = split_list(c.estimators);
  for (const auto& m : methods)
    if (m != "idr" && m != "hm" && m != "am")
      throw InvalidInput("evidence: unknown estimator '" + m +
                         "' (expected idr, hm, am)");

  std::vector<LogDensitySample> samples(loaded.size());
  for (std::size_t r = 0; r < loaded.size(); ++r)
    samples[r] = loaded_chain_to_sample(loaded[r]);

  std::vector<EvidenceEstimate> estimates;
  std::optional<KGridResult> k_grid_result;
  std::vector<std::string> warnings;

  auto log_likelihoods = [&](std::size_t r) {
    if (!loaded[r].log_lik)
      throw InvalidInput(
          "evidence: HM/AM need a log_lik column in the chain CSV");
    return std::vector<double>(loaded[r].log_lik->data(),
                               loaded[r].log_lik->data() +
                                   loaded[r].log_lik->size());
  };

  for (const auto& method : methods) {
    if (method == "idr") {
      if (!log_g)
        throw InvalidInput(
            "evidence: IDR needs --alignment and --tree (or "
            "--synthetic-normal) to evaluate the target density");
      IdrEngine engine(samples[0], log_g);
      const std::vector<double> grid = c.k_grid.empty()
                                           ? engine.auto_k_grid()
                                           : parse_k_grid(c.k_grid);
      KGridResult res = idr_k_search(samples[0], log_g, grid, {}, c.jobs);
      EvidenceEstimate est = res.selected();
      if (c.bootstrap > 0) {
        const double k = *est.k_opt;
        const auto stats = engine.ratios_minus_one(k);
        const auto boot = bootstrap_rmse(
            stats,
            [k](std::span<const double> s) {
              const MeanVar mv = mean_var(s);
              if (!(mv.mean > 0.0))
                throw EstimatorUndefined("idr bootstrap: nonpositive mean");
              return std::log(k) - std::log(mv.mean);
            },
            c.bootstrap, samples[0].effective_size(), c.seed);
        est.rmse_boot = boot.value;
        if (boot.unreliable)
          warnings.push_back("IDR bootstrap unreliable: " +
                             std::to_string(boot.n_failed) + "/" +
                             std::to_string(c.bootstrap) +
                             " replicates failed");
      }
      if (loaded.size() > 1) {
        std::vector<double> logs(loaded.size());
        logs[0] = est.log_c;
        parallel_for(loaded.size() - 1, c.jobs, [&](std::size_t i) {
          const std::size_t r = i + 1;
          logs[r] = idr_k_search(samples[r], log_g, grid, {}, 1)
                        .selected()
                        .log_c;
        });
        est.rmse_mc = mc_replicate_rmse(logs);
      }
      est.data_fingerprint = fp;
      k_grid_result = std::move(res);
      estimates.push_back(est);
    } else if (method == "hm" || method == "am") {
      const auto logl = log_likelihoods(0);
      const double ess = loaded[0].log_lik ? series_ess(*loaded[0].log_lik)
                                           : double(logl.size());
      EvidenceEstimate est =
          method == "hm"
              ? harmonic_mean(logl, ess)
              : arithmetic_mean(logl, SampledFrom::Posterior, ess);
      if (c.bootstrap > 0) {
        const auto boot = bootstrap_rmse(
            logl,
            [&](std::span<const double> s) {
              std::vector<double> v(s.begin(), s.end());
              return method == "hm" ? harmonic_mean(v).log_c
                                    : log_mean_exp(v);
            },
            c.bootstrap, ess, c.seed);
        est.rmse_boot = boot.value;
        if (boot.unreliable)
          warnings.push_back(method + " bootstrap unreliable");
      }
      if (loaded.size() > 1) {
        std::vector<double> logs;
        for (std::size_t r = 0; r < loaded.size(); ++r) {
          const auto lr = log_likelihoods(r);
          logs.push_back(method == "hm" ? harmonic_mean(lr).log_c
                                        : log_mean_exp(lr));
        }
        est.rmse_mc = mc_replicate_rmse(logs);
      }
      est.data_fingerprint = fp;
      estimates.push_back(est);
    }
  }

  json out{{"estimates", json::array()}};
  for (const auto& e : estimates) out["estimates"].push_back(to_json(e));
  if (k_grid_result) out["k_grid"] = to_json(*k_grid_result);
  if (!warnings.empty()) out["warnings"] = warnings;
  spit(out_dir / "evidence.json", out.dump(2) + "\n");

  std::string text;
  if (k_grid_result) text += k_grid_table(*k_grid_result) + "\n";
  text += evidence_table(estimates);
  for (const auto& w : warnings) text += "warning: " + w + "\n";
  spit(out_dir / "evidence.txt", text);
  std::cout << text;
  write_manifest(out_dir, "evidence", to_json(c));
  return 0;
}

// ----------------------------------------------------------------- compare

struct CompareConfig {
  std::string alignment;
  std::string newick;
  std::string model1 = "jc69";
  std::string model0 = "gtr-gamma";
  double lambda_branch = 10.0;
  double lambda_alpha = 1.0;
  int categories = 4;
  int draws = 2000;
  int burn_in = 1000;
  int thin = 5;
  std::string k_grid;
  int replicates = 1;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json to_json(const CompareConfig& c) {
  return json{{"alignment", c.alignment},
              {"newick", c.newick},
              {"model1", c.model1},
              {"model0", c.model0},
              {"lambda_branch", c.lambda_branch},
              {"lambda_alpha", c.lambda_alpha},
              {"categories", c.categories},
              {"draws", c.draws},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"k_grid", c.k_grid},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"jobs", c.jobs}};
}

CompareConfig compare_from_json(const json& j) {
  CompareConfig c;
  c.alignment = j.at("alignment").get<std::string>();
  c.newick = j.at("newick").get<std::string>();
  c.model1 = j.at("model1").get<std::string>();
  c.model0 = j.at("model0").get<std::string>();
  c.lambda_branch = j.at("lambda_branch").get<double>();
  c.lambda_alpha = j.at("lambda_alpha").get<double>();
  c.categories = j.at("categories").get<int>();
  c.draws = j.at("draws").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.thin = j.at("thin").get<int>();
  c.k_grid = j.at("k_grid").get<std::string>();
  c.replicates = j.at("replicates").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  return c;
}

int run_compare(const CompareConfig& c, const fs::path& out_dir) {
  if (c.replicates < 1) throw InvalidInput("compare: --replicates must be >= 1");
  const Alignment alignment = parse_alignment_text(c.alignment);
  const auto [topology, lengths] = parse_newick(c.newick);
  const std::string fp = fingerprint(c.alignment);
  const std::vector<double> grid = parse_k_grid(c.k_grid);
  PriorSpec priors{c.lambda_branch, c.lambda_alpha};
  ChainSettings settings;
  settings.n_draws = c.draws;
  settings.burn_in = c.burn_in;
  settings.thin = c.thin;

  const ModelKind kinds[2] = {model_kind_from_name(c.model0),
                              model_kind_from_name(c.model1)};
  // Task index = model * replicates + replicate; seeds are disjoint by
  // construction so the two models never share a stream.
  const int R = c.replicates;
  std::vector<EvidenceEstimate> results(2 * R);
  parallel_for(std::size_t(2 * R), c.jobs, [&](std::size_t t) {
    const int model = int(t) / R;
    const int r = int(t) % R;
    PhyloPosterior posterior(alignment, topology, kinds[model], priors,
                             c.categories);
    const std::uint64_t seed =
        c.seed + 500000ull * std::uint64_t(model) + 1000ull * std::uint64_t(r + 1);
    const Chain chain = run_chain(posterior, settings, seed);
    const LogDensitySample sample = chain_to_sample(chain);
    const LogDensityFn log_g = [&posterior](const Vector& u) {
      return posterior.evaluate(u).log_post;
    };
    KGridResult res =
        grid.empty()
            ? idr_k_search(sample, log_g,
                           IdrEngine(sample, log_g).auto_k_grid(), {}, 1)
            : idr_k_search(sample, log_g, grid, {}, 1);
    results[t] = res.selected();
    results[t].data_fingerprint = fp;
  });

  BayesFactorReport report;
  if (R == 1) {
    report = bayes_factor(results[R], results[0]);
  } else {
    std::vector<double> logs0(R), logs1(R);
    for (int r = 0; r < R; ++r) {
      logs0[r] = results[r].log_c;
      logs1[r] = results[R + r].log_c;
    }
    report = replicate_bf_ci(logs1, logs0);
    report.model0 = results[0];
    report.model1 = results[R];
  }

  json out = to_json(report);
  out["model1_name"] = c.model1;
  out["model0_name"] = c.model0;
  spit(out_dir / "compare.json", out.dump(2) + "\n");

  std::ostringstream text;
  text << "log BF(" << c.model1 << " vs " << c.model0 << ") = "
       << report.log_bf << "  ci [" << report.ci_low << ", " << report.ci_high
       << "]  (" << report.category << ")\n";
  if (report.sd_pairings)
    text << "replicate pairings sd = " << *report.sd_pairings
         << ", sd/sqrt(R) = " << *report.sd_pairings_over_sqrt_r << "\n";
  text << "\n";
  const EvidenceEstimate per_model[2] = {report.model1, report.model0};
  text << evidence_table(per_model);
  spit(out_dir / "compare.txt", text.str());
  std::cout << text.str();
  write_manifest(out_dir, "compare", to_json(c));
  return 0;
}

// ------------------------------------------------------------------- trees

struct TreesConfig {
  std::string alignment;
  std::vector<std::string> newicks;  // empty: enumerate 4-taxon topologies
  std::string model = "jc69";
  double lambda_branch = 10.0;
  double lambda_alpha = 1.0;
  int categories = 4;
  int draws = 2000;
  int burn_in = 1000;
  int thin = 5;
  std::string k_grid;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json to_json(const TreesConfig& c) {
  return json{{"alignment", c.alignment},
              {"newicks", c.newicks},
              {"model", c.model},
              {"lambda_branch", c.lambda_branch},
              {"lambda_alpha", c.lambda_alpha},
              {"categories", c.categories},
              {"draws", c.draws},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"k_grid", c.k_grid},
              {"seed", c.seed},
              {"jobs", c.jobs}};
}

TreesConfig trees_from_json(const json& j) {
  TreesConfig c;
  c.alignment = j.at("alignment").get<std::string>();
  c.newicks = j.at("newicks").get<std::vector<std::string>>();
  c.model = j.at("model").get<std::string>();
  c.lambda_branch = j.at("lambda_branch").get<double>();
  c.lambda_alpha = j.at("lambda_alpha").get<double>();
  c.categories = j.at("categories").get<int>();
  c.draws = j.at("draws").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.thin = j.at("thin").get<int>();
  c.k_grid = j.at("k_grid").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  return c;
}

int run_trees(const TreesConfig& c, const fs::path& out_dir) {
  const Alignment alignment = parse_alignment_text(c.alignment);
  std::vector<Topology> topologies;
  if (c.newicks.empty()) {
    auto names = alignment.names;
    std::sort(names.begin(), names.end());
    if (names.size() != 4)
      throw InvalidInput(
          "trees: automatic topology enumeration needs exactly 4 taxa; "
          "pass --trees for other sizes");
    topologies = enumerate_topologies(names);
  } else {
    for (const auto& nwk : c.newicks) topologies.push_back(parse_newick(nwk).first);
  }

  TreeSelectConfig tsc;
  tsc.priors = PriorSpec{c.lambda_branch, c.lambda_alpha};
  tsc.chain.n_draws = c.draws;
  tsc.chain.burn_in = c.burn_in;
  tsc.chain.thin = c.thin;
  tsc.n_categories = c.categories;
  tsc.k_grid = parse_k_grid(c.k_grid);
  tsc.seed = c.seed;
  tsc.jobs = c.jobs;

  const TreeSelectReport report =
      tree_select(alignment, topologies, model_kind_from_name(c.model), tsc);

  spit(out_dir / "trees.json", to_json(report).dump(2) + "\n");
  const std::string text = tree_select_table(report);
  spit(out_dir / "trees.txt", text);
  std::cout << text;
  write_manifest(out_dir, "trees", to_json(c));

  const bool any_ok =
      std::any_of(report.entries.begin(), report.entries.end(),
                  [](const TreeSelectEntry& e) { return e.ok; });
  return any_ok ? 0 : 1;
}

// ---------------------------------------------------------------- validate

struct ValidateConfig {
  std::size_t draws = 100000;
  std::uint64_t seed = 1;
  int jobs = 1;
};

json to_json(const ValidateConfig& c) {
  return json{{"draws", c.draws}, {"seed", c.seed}, {"jobs", c.jobs}};
}

ValidateConfig validate_from_json(const json& j) {
  ValidateConfig c;
  c.draws = j.at("draws").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  return c;
}

struct SyntheticTarget {
  std::string name;
  int d = 1;
  double log_c = 0.0;  // injected constant
  LogDensityFn log_g;  // includes log_c
  std::function<Vector(Rng&)> draw;
};

double log_norm_pdf(const Vector& z) {
  return -0.5 * z.squaredNorm() - 0.5 * double(z.size()) * std::log(2.0 * M_PI);
}

std::vector<SyntheticTarget> synthetic_targets() {
  std::vector<SyntheticTarget> targets;

  {
    SyntheticTarget t;
    t.name = "gaussian-1d";
    t.d = 1;
    t.log_c = std::log(10.0);
    const double mu = 1.0, sigma = 2.0, lc = t.log_c;
    t.log_g = [mu, sigma, lc](const Vector& x) {
      const double z = (x[0] - mu) / sigma;
      return lc - 0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
    };
    t.draw = [mu, sigma](Rng& rng) {
      Vector x(1);
      x[0] = mu + sigma * rng.normal();
      return x;
    };
    targets.push_back(std::move(t));
  }

  {
    SyntheticTarget t;
    t.name = "gaussian-100d";
    t.d = 100;
    t.log_c = 23.0 * std::log(10.0);
    const double lc = t.log_c;
    t.log_g = [lc](const Vector& x) { return lc + log_norm_pdf(x); };
    t.draw = [](Rng& rng) {
      Vector x(100);
      for (int i = 0; i < 100; ++i) x[i] = rng.normal();
      return x;
    };
    targets.push_back(std::move(t));
  }

  {
    // Skewed target: skew-normal slant on the first coordinate, standard
    // normal elsewhere; 2 phi(x) Phi(a x) integrates to 1.
    SyntheticTarget t;
    t.name = "skew-5d";
    t.d = 5;
    t.log_c = std::log(5.0);
    const double a = 3.0, lc = t.log_c;
    t.log_g = [a, lc](const Vector& x) {
      const double log_phi = log_norm_pdf(x);
      const double log_cdf =
          std::log(0.5 * std::erfc(-a * x[0] / std::sqrt(2.0)));
      return lc + std::log(2.0) + log_phi + log_cdf;
    };
    const double delta = a / std::sqrt(1.0 + a * a);
    t.draw = [delta](Rng& rng) {
      Vector x(5);
      const double u0 = rng.normal(), u1 = rng.normal();
      x[0] = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
      for (int i = 1; i < 5; ++i) x[i] = rng.normal();
      return x;
    };
    targets.push_back(std::move(t));
  }

  for (const auto& [d, lc] : {std::pair<int, double>{2, std::log(8.0)},
                              {3, std::log(16.0)},
                              {10, std::log(8.0)}}) {
    SyntheticTarget t;
    t.name = "mixture-" + std::to_string(d) + "d";
    t.d = d;
    t.log_c = lc;
    const double sep = 1.5;  // component means at +-sep along e0
    t.log_g = [d, lc, sep](const Vector& x) {
      Vector a = x, b = x;
      a[0] -= sep;
      b[0] += sep;
      const double l0 = log_norm_pdf(a), l1 = log_norm_pdf(b);
      const double m = std::max(l0, l1);
      return lc + std::log(0.5) + m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    };
    t.draw = [d, sep](Rng& rng) {
      Vector x(d);
      for (int i = 0; i < d; ++i) x[i] = rng.normal();
      x[0] += rng.uniform() < 0.5 ? sep : -sep;
      return x;
    };
    targets.push_back(std::move(t));
  }

  return targets;
}

int run_validate(const ValidateConfig& c, const fs::path& out_dir) {
  if (c.draws < 100) throw InvalidInput("validate: need --draws >= 100");
  const auto targets = synthetic_targets();
  const Rng master(c.seed);

  struct Row {
    std::string name;
    int d = 0;
    double log_c_true = 0.0;
    double log_c_hat = 0.0;
    double rmse = 0.0;
    double k = 0.0;
    bool pass = false;
    std::string error;
  };
  std::vector<Row> rows(targets.size());

  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const auto& target = targets[ti];
    Row& row = rows[ti];
    row.name = target.name;
    row.d = target.d;
    row.log_c_true = target.log_c;
    try {
      Rng rng = master.spawn(ti);
      LogDensitySample sample;
      sample.draws.resize(c.draws, target.d);
      sample.log_g.resize(c.draws);
      for (std::size_t i = 0; i < c.draws; ++i) {
        const Vector x = target.draw(rng);
        sample.draws.row(i) = x.transpose();
        sample.log_g[i] = target.log_g(x);
      }
      IdrEngine engine(sample, target.log_g);
      const auto grid = engine.auto_k_grid(15);
      const KGridResult res =
          idr_k_search(sample, target.log_g, grid, {}, c.jobs);
      const EvidenceEstimate& est = res.selected();
      row.log_c_hat = est.log_c;
      row.rmse = est.rmse_delta;
      row.k = *est.k_opt;
      row.pass = std::abs(est.log_c - target.log_c) <= 3.0 * est.rmse_delta;
    } catch (const std::exception& e) {
      row.error = e.what();
      row.pass = false;
    }
  }

  std::vector<std::vector<std::string>> table;
  table.push_back({"target", "d", "log_c", "log_c_hat", "rmse", "k", "status"});
  json jrows = json::array();
  int n_failed = 0;
  auto num = [](double v, const char* fmt) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    if (!row.pass) ++n_failed;
    if (row.error.empty()) {
      table.push_back({row.name, std::to_string(row.d),
                       num(row.log_c_true, "%.4f"), num(row.log_c_hat, "%.4f"),
                       num(row.rmse, "%.3g"), num(row.k, "%.3g"),
                       row.pass ? "pass" : "FAIL"});
    } else {
      table.push_back({row.name, std::to_string(row.d),
                       num(row.log_c_true, "%.4f"), "-", "-", "-",
                       "FAIL: " + row.error});
    }
    json jr{{"target", row.name},       {"d", row.d},
            {"log_c_true", row.log_c_true}, {"pass", row.pass}};
    if (row.error.empty()) {
      jr["log_c_hat"] = row.log_c_hat;
      jr["rmse"] = row.rmse;
      jr["k"] = row.k;
    } else {
      jr["error"] = row.error;
    }
    jrows.push_back(std::move(jr));
  }

  const std::string text = format_table(table);
  std::cout << text;
  spit(out_dir / "validate.txt", text);
  spit(out_dir / "validate.json",
       json{{"targets", jrows}, {"n_failed", n_failed}}.dump(2) + "\n");
  write_manifest(out_dir, "validate", to_json(c));
  return n_failed == 0 ? 0 : 1;
}

// ------------------------------------------------------------------- rerun

int dispatch(const std::string& command, const json& config,
             const fs::path& out_dir) {
  if (command == "simulate") return run_simulate(simulate_from_json(config), out_dir);
  if (command == "sample") return run_sample(sample_from_json(config), out_dir);
  if (command == "evidence") return run_evidence(evidence_from_json(config), out_dir);
  if (command == "compare") return run_compare(compare_from_json(config), out_dir);
  if (command == "trees") return run_trees(trees_from_json(config), out_dir);
  if (command == "validate") return run_validate(validate_from_json(config), out_dir);
  throw InvalidInput("rerun: unknown command '" + command + "' in manifest");
}

int run_rerun(const std::string& manifest_path, const fs::path& out_dir) {
  json manifest;
  try {
    manifest = json::parse(slurp(manifest_path));
  } catch (const json::exception& e) {
    throw InvalidInput("rerun: cannot parse manifest: " + std::string(e.what()));
  }
  if (manifest.value("tool", "") != "evidenced")
    throw InvalidInput("rerun: not an evidenced manifest");
  if (manifest.value("packing_version", "") != Packing::kVersion)
    throw InvalidInput("rerun: manifest packing version mismatch");
  return dispatch(manifest.at("command").get<std::string>(),
                  manifest.at("config"), out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marginal likelihood estimation from posterior samples"};
  app.require_subcommand(1);

  std::string out = ".";
  const std::uint64_t env_seed = [&]() -> std::uint64_t {
    try {
      return default_seed();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      std::exit(2);
    }
  }();

  // simulate
  SimulateConfig sim;
  sim.seed = env_seed;
  std::string sim_tree;
  auto* c_sim = app.add_subcommand("simulate", "Simulate an alignment on a tree");
  c_sim->add_option("--tree", sim_tree, "Newick file with branch lengths")->required();
  c_sim->add_option("--model", sim.model, "jc69 or gtr-gamma");
  c_sim->add_option("--pi", sim.pi, "GTR stationary frequencies (4 values)")->expected(4);
  c_sim->add_option("--rho", sim.rho, "GTR exchangeabilities (6 values)")->expected(6);
  c_sim->add_option("--alpha", sim.alpha, "gamma shape");
  c_sim->add_option("--categories", sim.categories, "discrete gamma categories");
  c_sim->add_option("--sites", sim.sites, "number of sites");
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--out", out, "output directory");

  // sample
  SampleConfig smp;
  smp.seed = env_seed;
  std::string smp_alignment, smp_tree;
  auto* c_smp = app.add_subcommand("sample", "Run MCMC chains on a fixed tree");
  c_smp->add_option("--alignment", smp_alignment, "FASTA or PHYLIP file")->required();
  c_smp->add_option("--tree", smp_tree, "Newick file")->required();
  c_smp->add_option("--model", smp.model, "jc69 or gtr-gamma");
  c_smp->add_option("--lambda-branch", smp.lambda_branch, "branch-length prior rate");
  c_smp->add_option("--lambda-alpha", smp.lambda_alpha, "gamma-shape prior rate");
  c_smp->add_option("--categories", smp.categories, "discrete gamma categories");
  c_smp->add_option("--draws", smp.draws, "recorded draws per chain");
  c_smp->add_option("--burn-in", smp.burn_in, "burn-in sweeps");
  c_smp->add_option("--thin", smp.thin, "sweeps per recorded draw");
  c_smp->add_option("--replicates", smp.replicates, "independent chains");
  c_smp->add_option("--seed", smp.seed, "master RNG seed");
  c_smp->add_option("--jobs", smp.jobs, "parallel chains");
  c_smp->add_option("--out", out, "output directory");

  // evidence
  EvidenceConfig evi;
  evi.seed = env_seed;
  std::vector<std::string> evi_chains;
  std::string evi_alignment, evi_tree;
  auto* c_evi = app.add_subcommand("evidence", "Estimate the marginal likelihood from chains");
  c_evi->add_option("--chain", evi_chains, "chain CSV (repeat for replicates)")->required();
  c_evi->add_option("--alignment", evi_alignment, "FASTA or PHYLIP file");
  c_evi->add_option("--tree", evi_tree, "Newick file");
  c_evi->add_option("--model", evi.model, "jc69 or gtr-gamma (fallback when no sidecar)");
  c_evi->add_option("--estimators", evi.estimators, "comma list from {idr, hm, am}");
  c_evi->add_option("--k-grid", evi.k_grid, "lo:hi:{log,linear}[:count] or comma list");
  c_evi->add_option("--bootstrap", evi.bootstrap, "bootstrap replicates (0 = off)");
  c_evi->add_option("--lambda-branch", evi.lambda_branch, "branch-length prior rate");
  c_evi->add_option("--lambda-alpha", evi.lambda_alpha, "gamma-shape prior rate");
  c_evi->add_option("--categories", evi.categories, "discrete gamma categories");
  c_evi->add_option("--seed", evi.seed, "bootstrap RNG seed");
  c_evi->add_option("--jobs", evi.jobs, "parallel k-grid evaluation");
  c_evi->add_flag("--synthetic-normal", evi.synthetic_normal,
                  "treat the target as an exact standard normal (self-test)");
  c_evi->add_option("--out", out, "output directory");

  // compare
  CompareConfig cmp;
  cmp.seed = env_seed;
  std::string cmp_alignment, cmp_tree;
  auto* c_cmp = app.add_subcommand("compare", "Bayes factor between two substitution models");
  c_cmp->add_option("--alignment", cmp_alignment, "FASTA or PHYLIP file")->required();
  c_cmp->add_option("--tree", cmp_tree, "Newick file")->required();
  c_cmp->add_option("--model1", cmp.model1, "numerator model");
  c_cmp->add_option("--model0", cmp.model0, "denominator model");
  c_cmp->add_option("--lambda-branch", cmp.lambda_branch, "branch-length prior rate");
  c_cmp->add_option("--lambda-alpha", cmp.lambda_alpha, "gamma-shape prior rate");
  c_cmp->add_option("--categories", cmp.categories, "discrete gamma categories");
  c_cmp->add_option("--draws", cmp.draws, "recorded draws per chain");
  c_cmp->add_option("--burn-in", cmp.burn_in, "burn-in sweeps");
  c_cmp->add_option("--thin", cmp.thin, "sweeps per recorded draw");
  c_cmp->add_option("--k-grid", cmp.k_grid, "k grid spec (empty: automatic)");
  c_cmp->add_option("--replicates", cmp.replicates, "chains per model");
  c_cmp->add_option("--seed", cmp.seed, "master RNG seed");
  c_cmp->add_option("--jobs", cmp.jobs, "parallel pipelines");
  c_cmp->add_option("--out", out, "output directory");

  // trees
  TreesConfig trs;
  trs.seed = env_seed;
  std::string trs_alignment, trs_trees;
  auto* c_trs = app.add_subcommand("trees", "Rank candidate topologies by evidence");
  c_trs->add_option("--alignment", trs_alignment, "FASTA or PHYLIP file")->required();
  c_trs->add_option("--trees", trs_trees,
                    "file with one Newick per line (default: all 4-taxon topologies)");
  c_trs->add_option("--model", trs.model, "jc69 or gtr-gamma");
  c_trs->add_option("--lambda-branch", trs.lambda_branch, "branch-length prior rate");
  c_trs->add_option("--lambda-alpha", trs.lambda_alpha, "gamma-shape prior rate");
  c_trs->add_option("--categories", trs.categories, "discrete gamma categories");
  c_trs->add_option("--draws", trs.draws, "recorded draws per chain");
  c_trs->add_option("--burn-in", trs.burn_in, "burn-in sweeps");
  c_trs->add_option("--thin", trs.thin, "sweeps per recorded draw");
  c_trs->add_option("--k-grid", trs.k_grid, "k grid spec (empty: automatic)");
  c_trs->add_option("--seed", trs.seed, "master RNG seed");
  c_trs->add_option("--jobs", trs.jobs, "parallel topologies");
  c_trs->add_option("--out", out, "output directory");

  // validate
  ValidateConfig val;
  val.seed = env_seed;
  auto* c_val = app.add_subcommand("validate", "IDR self-test on known synthetic constants");
  c_val->add_option("--draws", val.draws, "i.i.d. draws per target");
  c_val->add_option("--seed", val.seed, "RNG seed");
  c_val->add_option("--jobs", val.jobs, "parallel k-grid evaluation");
  c_val->add_option("--out", out, "output directory");

  // rerun
  std::string manifest_path;
  auto* c_rerun = app.add_subcommand("rerun", "Reproduce a run from its manifest");
  c_rerun->add_option("manifest", manifest_path, "manifest.json from a previous run")->required();
  c_rerun->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out_dir(out);
    if (c_sim->parsed()) {
      sim.newick = slurp(sim_tree);
      return run_simulate(sim, out_dir);
    }
    if (c_smp->parsed()) {
      smp.alignment = slurp(smp_alignment);
      smp.newick = slurp(smp_tree);
      return run_sample(smp, out_dir);
    }
    if (c_evi->parsed()) {
      for (const auto& p : evi_chains)
        evi.chains.push_back(fs::absolute(p).string());
      if (!evi_alignment.empty()) evi.alignment = slurp(evi_alignment);
      if (!evi_tree.empty()) evi.newick = slurp(evi_tree);
      return run_evidence(evi, out_dir);
    }
    if (c_cmp->parsed()) {
      cmp.alignment = slurp(cmp_alignment);
      cmp.newick = slurp(cmp_tree);
      return run_compare(cmp, out_dir);
    }
    if (c_trs->parsed()) {
      trs.alignment = slurp(trs_alignment);
      if (!trs_trees.empty()) {
        std::istringstream in(slurp(trs_trees));
        std::string line;
        while (std::getline(in, line)) {
          while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
          if (!line.empty()) trs.newicks.push_back(line);
        }
      }
      return run_trees(trs, out_dir);
    }
    if (c_val->parsed()) return run_validate(val, out_dir);
    if (c_rerun->parsed()) return run_rerun(manifest_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
