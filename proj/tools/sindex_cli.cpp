// Command-line front end: fit, simulate, check-lemma1, score-diag.
// Exit codes: 0 success, 2 input/config error, 3 numerical/estimation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sindex/estimator.hpp"
#include "sindex/models.hpp"
#include "sindex/simulate.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEstimation = 3;

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw sindex::IngestError("cannot open output file '" + path + "'");
  out << j.dump(2) << "\n";
}

std::vector<Eigen::Index> parse_grid(const std::string& text) {
  std::vector<Eigen::Index> grid;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    try {
      grid.push_back(static_cast<Eigen::Index>(std::stol(piece)));
    } catch (const std::exception&) {
      throw sindex::IngestError("cannot parse n-grid entry '" + piece + "'");
    }
  }
  if (grid.empty()) throw sindex::IngestError("empty n-grid");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (grid[i] >= grid[i + 1]) throw sindex::IngestError("n-grid must be strictly increasing");
  }
  return grid;
}

struct ModelFlags {
  std::string link = "identity";
  std::string error = "gaussian";
  double sigma = 1.0;
  int t_dof = 5;

  sindex::ModelSpec build() const {
    sindex::ModelSpec model;
    model.link = sindex::link_from_name(link);
    model.error = sindex::error_from_name(error);
    model.sigma_or_scale = sigma;
    model.t_dof = t_dof;
    if (!(model.sigma_or_scale > 0.0)) {
      throw sindex::IngestError("--sigma must be positive");
    }
    return model;
  }
};

sindex::McConfig config_from_json(const json& j) {
  sindex::McConfig config;
  std::vector<std::string> problems;

  const auto get = [&](const json& obj, const char* key) -> const json* {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  };

  try {
    if (const json* m = get(j, "model")) {
      if (const json* v = get(*m, "link")) config.model.link = sindex::link_from_name(*v);
      if (const json* v = get(*m, "error")) config.model.error = sindex::error_from_name(*v);
      if (const json* v = get(*m, "sigma_or_scale")) config.model.sigma_or_scale = *v;
      if (const json* v = get(*m, "t_dof")) config.model.t_dof = *v;
    }
    if (const json* l = get(j, "law")) {
      if (const json* v = get(*l, "kind")) config.law.kind = sindex::law_from_name(*v);
      if (const json* v = get(*l, "p")) config.law.p = *v;
      if (const json* v = get(*l, "t_dof")) config.law.t_dof = *v;
    }
    if (const json* v = get(j, "beta0")) {
      const std::vector<double> raw = *v;
      Eigen::VectorXd b(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) b[i] = raw[i];
      config.beta0 = sindex::retract(b);
    }
    if (const json* v = get(j, "n_grid")) {
      for (const auto& n : *v) config.n_grid.push_back(static_cast<Eigen::Index>(n));
    }
    if (const json* v = get(j, "replications")) config.replications = *v;
    if (const json* v = get(j, "estimators")) {
      for (const auto& name : *v) {
        config.estimators.push_back(sindex::estimator_from_name(name));
      }
    }
    if (const json* f = get(j, "fit")) {
      if (const json* kk = get(*f, "kernel")) {
        if (const json* v = get(*kk, "bandwidth_constant")) {
          config.fit.kernel.bandwidth_constant = *v;
        }
        if (const json* v = get(*kk, "trim_constant")) config.fit.kernel.trim_constant = *v;
        if (const json* v = get(*kk, "trim_exponent")) config.fit.kernel.trim_exponent = *v;
      }
      if (const json* v = get(*f, "use_discretization")) config.fit.use_discretization = *v;
      if (const json* v = get(*f, "discretization_mesh_constant")) {
        config.fit.discretization_mesh_constant = *v;
      }
      if (const json* v = get(*f, "use_sample_splitting")) config.fit.use_sample_splitting = *v;
      if (const json* v = get(*f, "seed")) config.fit.seed = *v;
    }
    if (const json* v = get(j, "seed")) config.seed = *v;
  } catch (const json::exception& e) {
    problems.push_back(std::string("config parse: ") + e.what());
  }

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw sindex::IngestError(msg.str());
  }
  return config;
}

int cmd_fit(const std::string& data_path, const std::string& out_path,
            const sindex::FitConfig& fit) {
  std::ifstream in(data_path);
  if (!in) throw sindex::IngestError("cannot open data file '" + data_path + "'");
  const sindex::Dataset data = sindex::load_dataset(in);
  const sindex::FitResult result = sindex::adaptive_fit(data, fit);
  const json j = sindex::fit_result_to_json(result, fit);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(j, out_path);
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, int threads,
                 std::optional<std::uint64_t> seed_override) {
  std::ifstream in(config_path);
  if (!in) throw sindex::IngestError("cannot open config file '" + config_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw sindex::IngestError(std::string("config is not valid JSON: ") + e.what());
  }
  sindex::McConfig config = config_from_json(j);
  if (seed_override) config.seed = *seed_override;
  sindex::validate_mc_config(config);

  const sindex::McReport report = sindex::run_monte_carlo(config, threads);

  const std::string base = out_path.empty() ? "mc_report" : out_path;
  write_json_file(sindex::report_to_json(report), base + ".json");
  std::ofstream csv(base + ".csv", std::ios::binary);
  if (!csv) throw sindex::IngestError("cannot open output file '" + base + ".csv'");
  sindex::write_report_csv(report, csv);

  // summary table
  std::printf("%-16s %8s %24s %20s\n", "estimator", "n", "median_angular_error",
              "efficiency_vs_mle");
  for (const auto& cell : report.cells) {
    if (cell.efficiency_vs_mle) {
      std::printf("%-16s %8lld %24.6f %20.4f\n", cell.estimator.c_str(),
                  static_cast<long long>(cell.n), cell.median_angular_error,
                  *cell.efficiency_vs_mle);
    } else {
      std::printf("%-16s %8lld %24.6f %20s\n", cell.estimator.c_str(),
                  static_cast<long long>(cell.n), cell.median_angular_error, "-");
    }
  }
  for (const auto& [name, slope] : report.rate_slopes) {
    std::printf("rate slope %-16s %10.4f\n", name.c_str(), slope);
  }
  std::printf("wrote %s.json and %s.csv\n", base.c_str(), base.c_str());
  return kExitOk;
}

int cmd_check_lemma1(const ModelFlags& model_flags, const std::string& law_name_str, int p,
                     int law_dof, const std::string& kappa, std::int64_t n_mc,
                     std::uint64_t seed, const std::string& out_path) {
  const sindex::ModelSpec model = model_flags.build();
  sindex::PredictorLaw law;
  law.kind = sindex::law_from_name(law_name_str);
  law.p = p;
  law.t_dof = law_dof;
  if (p < 2) throw sindex::IngestError("--p must be at least 2");
  if (n_mc < 1000) throw sindex::IngestError("--nmc must be at least 1000");

  std::vector<std::string> kappas;
  if (kappa.empty() || kappa == "all") {
    kappas = sindex::kappa_names();
  } else {
    sindex::kappa_by_name(kappa, model);  // validates the name
    kappas.push_back(kappa);
  }

  const sindex::Direction beta0 =
      sindex::Direction(Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p))));

  json results = json::array();
  for (const auto& name : kappas) {
    sindex::Rng rng(sindex::stream_seed(seed, std::hash<std::string>{}(name), 0));
    const sindex::Lemma1Result r =
        sindex::lemma1_residual(sindex::kappa_by_name(name, model), beta0, model, law, n_mc, rng);
    results.push_back({{"kappa", name},
                       {"residual_norm", r.residual_norm},
                       {"mc_se", r.mc_se},
                       {"ratio", r.ratio()},
                       {"clipped", r.clipped}});
    std::printf("kappa=%-12s residual=%.3e mc_se=%.3e ratio=%.2f\n", name.c_str(),
                r.residual_norm, r.mc_se, r.ratio());
  }

  json j;
  j["model"] = {{"link", sindex::link_name(model.link)},
                {"error", sindex::error_name(model.error)},
                {"sigma_or_scale", model.sigma_or_scale},
                {"t_dof", model.t_dof}};
  j["law"] = {{"kind", sindex::law_name(law.kind)}, {"p", law.p}, {"t_dof", law.t_dof}};
  j["n_mc"] = n_mc;
  j["seed"] = seed;
  j["results"] = results;
  if (!out_path.empty()) write_json_file(j, out_path);
  return kExitOk;
}

int cmd_score_diag(const ModelFlags& model_flags, const std::string& law_name_str, int p,
                   int law_dof, const std::string& grid_text, Eigen::Index n_eval,
                   const sindex::KernelSpec& kernel, std::uint64_t seed,
                   const std::string& out_path) {
  const sindex::ModelSpec model = model_flags.build();
  sindex::PredictorLaw law;
  law.kind = sindex::law_from_name(law_name_str);
  law.p = p;
  law.t_dof = law_dof;
  if (p < 2) throw sindex::IngestError("--p must be at least 2");
  if (n_eval < 10) throw sindex::IngestError("--n-eval must be at least 10");
  const auto grid = parse_grid(grid_text);

  const sindex::Direction beta0 =
      sindex::Direction(Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p))));
  const sindex::ScoreDiagReport report =
      sindex::score_diag(model, law, beta0, grid, n_eval, kernel, seed);

  json points = json::array();
  for (const auto& pt : report.points) {
    points.push_back({{"n", pt.n}, {"diagnostic", pt.diagnostic}});
    std::printf("n=%-8lld diagnostic=%.6f\n", static_cast<long long>(pt.n), pt.diagnostic);
  }
  json j;
  j["points"] = points;
  if (report.slope) {
    j["slope"] = *report.slope;
    std::printf("log-log slope=%.4f\n", *report.slope);
  }
  j["seed"] = seed;
  if (!out_path.empty()) write_json_file(j, out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive direction estimation for single-index regressions"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit the adaptive estimator to a CSV dataset");
  std::string fit_data;
  std::string fit_out;
  sindex::FitConfig fit_config;
  bool no_split = false;
  fit_cmd->add_option("--data", fit_data, "CSV file: header x1..xp,y")->required();
  fit_cmd->add_option("--out", fit_out, "output JSON path (default: stdout)");
  fit_cmd->add_option("--seed", fit_config.seed, "sample-splitting seed");
  fit_cmd->add_flag("--no-split", no_split, "disable sample splitting");
  fit_cmd->add_flag("--discretize", fit_config.use_discretization,
                    "round the initial estimate to an n^{-1/2} grid");
  fit_cmd->add_option("--bandwidth-constant", fit_config.kernel.bandwidth_constant,
                      "kernel bandwidth constant");
  fit_cmd->add_option("--trim-constant", fit_config.kernel.trim_constant,
                      "density trim constant");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run the Monte Carlo comparison harness");
  std::string sim_config;
  std::string sim_out;
  int sim_threads = 0;
  std::uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  sim_cmd->add_option("--config", sim_config, "experiment config JSON")->required();
  sim_cmd->add_option("--out", sim_out, "output base path (writes .json and .csv)");
  sim_cmd->add_option("--threads", sim_threads, "worker threads (0 = all cores)");
  sim_cmd->add_option("--seed", sim_seed, "override the config seed")
      ->each([&](const std::string&) { sim_seed_set = true; });

  // check-lemma1
  auto* lemma_cmd =
      app.add_subcommand("check-lemma1", "Monte Carlo check of the population score equation");
  ModelFlags lemma_model;
  std::string lemma_law = "gaussian";
  int lemma_p = 3;
  int lemma_law_dof = 5;
  std::string lemma_kappa;
  std::int64_t lemma_nmc = 1000000;
  std::uint64_t lemma_seed = 0;
  std::string lemma_out;
  lemma_cmd->add_option("--model", lemma_model.link, "link: identity|sine|cubic-smooth");
  lemma_cmd->add_option("--error", lemma_model.error, "error law: gaussian|laplace|student-t");
  lemma_cmd->add_option("--sigma", lemma_model.sigma, "error scale");
  lemma_cmd->add_option("--law", lemma_law, "predictor law: gaussian|elliptical_t|uniform_cube");
  lemma_cmd->add_option("--p", lemma_p, "predictor dimension");
  lemma_cmd->add_option("--nu", lemma_law_dof, "elliptical_t degrees of freedom");
  lemma_cmd->add_option("--kappa", lemma_kappa, "kappa name (default: all built-ins)");
  lemma_cmd->add_option("--nmc", lemma_nmc, "Monte Carlo sample size");
  lemma_cmd->add_option("--seed", lemma_seed, "seed");
  lemma_cmd->add_option("--out", lemma_out, "output JSON path");

  // score-diag
  auto* diag_cmd =
      app.add_subcommand("score-diag", "Score-estimate convergence diagnostic over an n grid");
  ModelFlags diag_model;
  std::string diag_law = "gaussian";
  int diag_p = 3;
  int diag_law_dof = 5;
  std::string diag_grid = "500,1000,2000,4000";
  Eigen::Index diag_eval = 4000;
  sindex::KernelSpec diag_kernel;
  std::uint64_t diag_seed = 0;
  std::string diag_out;
  diag_cmd->add_option("--model", diag_model.link, "link: identity|sine|cubic-smooth");
  diag_cmd->add_option("--error", diag_model.error, "error law: gaussian|laplace|student-t");
  diag_cmd->add_option("--sigma", diag_model.sigma, "error scale");
  diag_cmd->add_option("--law", diag_law, "predictor law");
  diag_cmd->add_option("--p", diag_p, "predictor dimension");
  diag_cmd->add_option("--nu", diag_law_dof, "elliptical_t degrees of freedom");
  diag_cmd->add_option("--n-grid", diag_grid, "comma-separated training sizes");
  diag_cmd->add_option("--n-eval", diag_eval, "evaluation sample size");
  diag_cmd->add_option("--bandwidth-constant", diag_kernel.bandwidth_constant,
                       "kernel bandwidth constant");
  diag_cmd->add_option("--trim-constant", diag_kernel.trim_constant, "density trim constant");
  diag_cmd->add_option("--seed", diag_seed, "seed");
  diag_cmd->add_option("--out", diag_out, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit_cmd->parsed()) {
      fit_config.use_sample_splitting = !no_split;
      return cmd_fit(fit_data, fit_out, fit_config);
    }
    if (sim_cmd->parsed()) {
      return cmd_simulate(sim_config, sim_out, sim_threads,
                          sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt);
    }
    if (lemma_cmd->parsed()) {
      return cmd_check_lemma1(lemma_model, lemma_law, lemma_p, lemma_law_dof, lemma_kappa,
                              lemma_nmc, lemma_seed, lemma_out);
    }
    if (diag_cmd->parsed()) {
      return cmd_score_diag(diag_model, diag_law, diag_p, diag_law_dof, diag_grid, diag_eval,
                            diag_kernel, diag_seed, diag_out);
    }
  } catch (const sindex::IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const sindex::EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitOk;
}
