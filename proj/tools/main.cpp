#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pertboot/boot.hpp"
#include "pertboot/diagnostics.hpp"
#include "pertboot/edgeworth.hpp"
#include "pertboot/errors.hpp"
#include "pertboot/io.hpp"
#include "pertboot/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pertboot;

namespace {

constexpr const char* kVersion = "pertboot 0.1.0";

std::string join_argv(int argc, char** argv) {
  std::ostringstream out;
  for (int i = 0; i < argc; ++i) {
    if (i) out << ' ';
    out << argv[i];
  }
  return out.str();
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_text, std::uint64_t seed) {
  fs::create_directories(out_dir);
  const RunManifest m = make_manifest(command, config_text, seed);
  std::ofstream f(fs::path(out_dir) / "manifest.json");
  f << m.to_json();
}

std::uint64_t resolve_seed(bool seed_set, std::uint64_t seed, bool entropy) {
  if (seed_set) return seed;
  if (!entropy)
    throw CLI::ValidationError(
        "--seed", "a seed is required; pass --entropy to draw one");
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json fit_to_json(const MFit& fit) {
  json j;
  j["beta"] = std::vector<double>(fit.beta_bar.data(),
                                  fit.beta_bar.data() + fit.beta_bar.size());
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  j["iterations"] = fit.iterations;
  j["eq_norm"] = fit.eq_norm;
  j["tau_n"] = fit.tau_n;
  j["s_n2"] = fit.s_n2;
  j["sigma_hat"] = fit.sigma_hat;
  return j;
}

PivotKind pivot_by_name(const std::string& name) {
  if (name == "f") return PivotKind::standardized_f;
  if (name == "h") return PivotKind::naive_studentized_h;
  if (name == "htilde") return PivotKind::modified_studentized_htilde;
  if (name == "hbreve") return PivotKind::hetero_studentized_hbreve;
  throw invalid_parameter_error("unknown pivot '" + name + "'");
}

Scenario scenario_from_config(const Config& cfg) {
  Scenario s;
  s.n = static_cast<Eigen::Index>(cfg.get_int("scenario.n"));
  s.p = static_cast<Eigen::Index>(cfg.get_or("scenario.p", "1") == "1"
                                      ? 1
                                      : std::stoll(cfg.get("scenario.p")));
  const std::string design = cfg.get_or("scenario.design", "ones");
  if (design == "ones")
    s.design_gen = DesignGen::ones;
  else if (design == "iid-gaussian")
    s.design_gen = DesignGen::iid_gaussian;
  else if (design == "fixed-csv")
    s.design_gen = DesignGen::fixed_csv;
  else
    throw parse_error("unknown design '" + design + "'");
  if (s.design_gen == DesignGen::fixed_csv) {
    const RegressionData d =
        load_csv(cfg.get("scenario.design_csv"), "y", false);
    s.fixed_design = d.X;
  }
  const std::string law = cfg.get_or("scenario.error_law", "normal");
  if (law == "normal")
    s.error_law = ErrorLaw::normal;
  else if (law == "centered-exponential")
    s.error_law = ErrorLaw::centered_exponential;
  else if (law == "scaled-t")
    s.error_law = ErrorLaw::scaled_t;
  else if (law == "hetero")
    s.error_law = ErrorLaw::hetero;
  else
    throw parse_error("unknown error_law '" + law + "'");
  if (cfg.has("scenario.error_param"))
    s.error_param = cfg.get_real("scenario.error_param");
  s.score_name = cfg.get_or("scenario.score", "ls");
  if (cfg.has("scenario.tuning")) s.tuning = cfg.get_real("scenario.tuning");
  if (cfg.has("scenario.beta_true")) {
    std::istringstream bs(cfg.get("scenario.beta_true"));
    std::vector<double> b;
    double v;
    while (bs >> v) b.push_back(v);
    s.beta_true = Eigen::Map<Eigen::VectorXd>(b.data(),
                                              static_cast<Eigen::Index>(b.size()));
  }
  if (cfg.has("scenario.M")) s.M = cfg.get_u64("scenario.M");
  if (cfg.has("scenario.B")) s.B = cfg.get_u64("scenario.B");
  if (cfg.has("scenario.truth_draws"))
    s.truth_draws = cfg.get_u64("scenario.truth_draws");
  if (cfg.has("scenario.seed")) s.seed = cfg.get_u64("scenario.seed");
  if (cfg.has("scenario.level")) s.ci_level = cfg.get_real("scenario.level");
  return s;
}

json report_to_json(const SimReport& r) {
  json j;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["partial"] = r.partial;
  j["methods"] = json::array();
  for (const auto& m : r.methods) {
    json mj;
    mj["method"] = m.method;
    mj["median_sup_distance"] = m.median_sup;
    mj["scaled_distance"] = m.scaled_distance;
    mj["sup_mc_se"] = m.sup_mc_se;
    mj["coverage"] = m.coverage;
    mj["coverage_mc_se"] = m.coverage_mc_se;
    j["methods"].push_back(std::move(mj));
  }
  return j;
}

void write_report_csv(std::ostream& out, const SimReport& r) {
  for (const auto& m : r.methods)
    for (std::size_t k = 0; k < m.sup_distances.size(); ++k)
      out << m.method << ',' << r.n << ',' << r.seed << ','
          << m.sup_distances[k] << ','
          << (k < m.covered.size() ? static_cast<int>(m.covered[k]) : 0)
          << '\n';
}

struct DataArgs {
  std::string path;
  std::string response = "y";
  bool intercept = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "CSV file with a header row")->required();
    cmd->add_option("--response", response, "response column name");
    cmd->add_flag("--intercept", intercept, "prepend a ones column");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbation bootstrap for regression M-estimators"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  const std::string command_line = join_argv(argc, argv);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit an M-estimator");
  DataArgs fit_data;
  fit_data.attach(fit_cmd);
  std::string score_name = "ls";
  double tuning = 1.345;
  std::string out_dir;
  fit_cmd->add_option("--score", score_name, "ls | pseudo-huber");
  fit_cmd->add_option("--tuning", tuning, "pseudo-huber tuning constant");
  fit_cmd->add_option("--out", out_dir, "output directory (with manifest)");

  // bootstrap
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap confidence intervals");
  DataArgs boot_data;
  boot_data.attach(boot_cmd);
  std::string b_score = "ls", pivot_name = "htilde", engine = "perturb";
  std::string weights_name = "scaled-beta-half";
  double b_tuning = 1.345, weight_scale = 4.0, level = 0.95;
  std::uint64_t B = 2000, seed = 0;
  bool entropy = false, dump_pivots = false;
  std::string b_out;
  boot_cmd->add_option("--score", b_score, "ls | pseudo-huber");
  boot_cmd->add_option("--tuning", b_tuning, "pseudo-huber tuning constant");
  boot_cmd->add_option("--pivot", pivot_name, "f | h | htilde | hbreve");
  boot_cmd->add_option("--engine", engine, "perturb | residual | wild");
  boot_cmd->add_option("--weights", weights_name, "beta-half | scaled-beta-half");
  boot_cmd->add_option("--weight-scale", weight_scale, "scale for scaled-beta-half");
  boot_cmd->add_option("--B", B, "bootstrap replicates");
  boot_cmd->add_option("--level", level, "confidence level");
  auto* seed_opt = boot_cmd->add_option("--seed", seed, "RNG seed");
  boot_cmd->add_flag("--entropy", entropy, "draw the seed from the OS");
  boot_cmd->add_flag("--dump-pivots", dump_pivots, "write the pivot sample as CSV");
  boot_cmd->add_option("--out", b_out, "output directory (with manifest)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study");
  std::string config_path, s_out;
  std::uint64_t s_seed = 0;
  bool s_entropy = false;
  sim_cmd->add_option("--config", config_path, "scenario config file")->required();
  auto* s_seed_opt = sim_cmd->add_option("--seed", s_seed, "override config seed");
  sim_cmd->add_flag("--entropy", s_entropy, "draw the seed from the OS");
  sim_cmd->add_option("--out", s_out, "output directory (with manifest)");

  // edgeworth
  auto* edge_cmd = app.add_subcommand("edgeworth", "Two-term expansion curves");
  double e_b11 = 0.0, e_b31 = 0.0, e_sigma = 0.0, e_m3 = 0.0;
  std::uint64_t e_n = 100;
  bool from_moments = false;
  std::string e_out;
  int e_grid = 0;
  edge_cmd->add_option("--b11", e_b11, "first-order coefficient");
  edge_cmd->add_option("--b31", e_b31, "third-order coefficient");
  edge_cmd->add_option("--n", e_n, "sample size in the n^{-1/2} factor");
  edge_cmd->add_flag("--from-moments", from_moments,
                     "derive location-model coefficients from --sigma/--third-moment");
  edge_cmd->add_option("--sigma", e_sigma, "error standard deviation");
  edge_cmd->add_option("--third-moment", e_m3, "error third central moment");
  edge_cmd->add_option("--grid", e_grid, "write an N-point curve CSV to --out");
  edge_cmd->add_option("--out", e_out, "output directory (with manifest)");

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "Design diagnostics");
  DataArgs diag_data;
  diag_data.attach(diag_cmd);
  double alpha = 0.5;
  std::string d_out;
  diag_cmd->add_option("--alpha", alpha, "exponent in (0, 1/2]");
  diag_cmd->add_option("--out", d_out, "output directory (with manifest)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*fit_cmd) {
      const RegressionData data =
          load_csv(fit_data.path, fit_data.response, fit_data.intercept);
      const ScoreFunction score = make_score_by_name(score_name, tuning);
      const MFit fit = m_estimate(data, score);
      const json j = fit_to_json(fit);
      std::cout << j.dump(2) << "\n";
      if (!out_dir.empty()) {
        write_manifest(out_dir, command_line, "", 0);
        std::ofstream f(fs::path(out_dir) / "fit.json");
        f << j.dump(2) << "\n";
      }
    } else if (*boot_cmd) {
      const std::uint64_t use_seed = resolve_seed(seed_opt->count() > 0, seed, entropy);
      const RegressionData data =
          load_csv(boot_data.path, boot_data.response, boot_data.intercept);
      const ScoreFunction score = make_score_by_name(b_score, b_tuning);
      const MFit fit = m_estimate(data, score);
      const PivotKind kind = pivot_by_name(pivot_name);

      PivotSample sample;
      if (engine == "perturb") {
        const WeightScheme scheme = make_scheme_by_name(weights_name, weight_scale);
        sample = run_perturbation_bootstrap(data, score, fit, scheme, kind, B, use_seed);
      } else if (engine == "residual") {
        if (kind != PivotKind::naive_studentized_h)
          throw invalid_parameter_error("residual engine produces the h pivot");
        sample = run_residual_bootstrap(data, score, fit, B, use_seed);
      } else if (engine == "wild") {
        if (kind != PivotKind::hetero_studentized_hbreve)
          throw invalid_parameter_error("wild engine produces the hbreve pivot");
        sample = run_wild_bootstrap(data, fit, B, use_seed);
      } else {
        throw invalid_parameter_error("unknown engine '" + engine + "'");
      }

      const ConfidenceIntervals ci = bootstrap_ci(sample, fit, level, kind);
      json j;
      j["fit"] = fit_to_json(fit);
      j["pivot"] = pivot_name;
      j["engine"] = engine;
      j["B"] = B;
      j["seed"] = use_seed;
      j["level"] = level;
      j["n_rejected"] = sample.n_rejected;
      j["unreliable"] = sample.unreliable;
      j["extrapolation_warning"] = ci.extrapolation_warning;
      j["lower"] = std::vector<double>(ci.lower.data(), ci.lower.data() + ci.lower.size());
      j["upper"] = std::vector<double>(ci.upper.data(), ci.upper.data() + ci.upper.size());
      std::cout << j.dump(2) << "\n";
      if (!b_out.empty()) {
        write_manifest(b_out, command_line, "", use_seed);
        std::ofstream f(fs::path(b_out) / "ci.json");
        f << j.dump(2) << "\n";
        if (dump_pivots) {
          std::ofstream pf(fs::path(b_out) / "pivots.csv");
          for (Eigen::Index r = 0; r < sample.pivots.rows(); ++r) {
            for (Eigen::Index c = 0; c < sample.pivots.cols(); ++c)
              pf << (c ? "," : "") << sample.pivots(r, c);
            pf << "\n";
          }
        }
      } else if (dump_pivots) {
        throw invalid_parameter_error("--dump-pivots requires --out");
      }
    } else if (*sim_cmd) {
      std::ifstream cf(config_path);
      if (!cf) throw parse_error("cannot open '" + config_path + "'");
      std::stringstream buf;
      buf << cf.rdbuf();
      const std::string config_text = buf.str();
      const Config cfg = Config::parse_string(config_text);
      Scenario s = scenario_from_config(cfg);
      if (s_seed_opt->count() > 0 || s_entropy)
        s.seed = resolve_seed(s_seed_opt->count() > 0, s_seed, s_entropy);
      else if (!cfg.entries().count("scenario.seed"))
        throw invalid_parameter_error(
            "a seed is required (config scenario.seed, --seed, or --entropy)");

      std::vector<Eigen::Index> n_grid;
      if (cfg.has("sweep.n_grid")) {
        std::istringstream gs(cfg.get("sweep.n_grid"));
        long long v;
        while (gs >> v) n_grid.push_back(static_cast<Eigen::Index>(v));
      }
      const auto unused = cfg.unused_keys();
      if (!unused.empty())
        throw parse_error("unknown config key '" + unused.front() + "'");

      std::vector<SimReport> reports;
      if (n_grid.empty())
        reports.push_back(run_scenario(s));
      else
        reports = rate_sweep(s, n_grid);

      json j = json::array();
      for (const auto& r : reports) j.push_back(report_to_json(r));
      std::cout << j.dump(2) << "\n";
      if (!s_out.empty()) {
        write_manifest(s_out, command_line, config_text, s.seed);
        std::ofstream jf(fs::path(s_out) / "report.json");
        jf << j.dump(2) << "\n";
        std::ofstream cfout(fs::path(s_out) / "report.csv");
        cfout << "method,n,seed,sup_distance,covered\n";
        for (const auto& r : reports) write_report_csv(cfout, r);
      }
    } else if (*edge_cmd) {
      Edgeworth1D e;
      if (from_moments) {
        e = location_model_original(e_sigma, e_m3, e_n);
      } else {
        e.b11 = e_b11;
        e.b31 = e_b31;
        e.n = e_n;
      }
      json j;
      j["b11"] = e.b11;
      j["b31"] = e.b31;
      j["n"] = e.n;
      j["density_at_0"] = edgeworth_density(e, 0.0);
      j["cdf_at_0"] = edgeworth_cdf(e, 0.0);
      std::cout << j.dump(2) << "\n";
      if (!e_out.empty()) {
        write_manifest(e_out, command_line, "", 0);
        std::ofstream jf(fs::path(e_out) / "edgeworth.json");
        jf << j.dump(2) << "\n";
        if (e_grid > 1) {
          std::ofstream gf(fs::path(e_out) / "curve.csv");
          gf << "x,density,cdf\n";
          gf << std::setprecision(17);
          for (int i = 0; i < e_grid; ++i) {
            const double x = -4.0 + 8.0 * i / (e_grid - 1);
            gf << x << ',' << edgeworth_density(e, x) << ','
               << edgeworth_cdf(e, x) << '\n';
          }
        }
      }
    } else if (*diag_cmd) {
      const RegressionData data =
          load_csv(diag_data.path, diag_data.response, diag_data.intercept);
      const DesignDiagnostics d = design_diagnostics(data.X, alpha);
      json j;
      j["alpha"] = d.alpha;
      j["d_norm_sum"] = d.d_norm_sum;
      j["ztilde_norm_sum"] = d.ztilde_norm_sum;
      j["n_times_sum"] = d.n_times_sum;
      j["rank_z"] = d.rank_z;
      std::cout << j.dump(2) << "\n";
      if (!d_out.empty()) {
        write_manifest(d_out, command_line, "", 0);
        std::ofstream jf(fs::path(d_out) / "diagnostics.json");
        jf << j.dump(2) << "\n";
      }
    }
  } catch (const invalid_parameter_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
