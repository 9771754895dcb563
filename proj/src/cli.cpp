#include "msenc/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "msenc/errors.hpp"
#include "msenc/estimators.hpp"
#include "msenc/evaluation.hpp"
#include "msenc/json_io.hpp"
#include "msenc/nowcast.hpp"
#include "msenc/simulation.hpp"
#include "msenc/tables.hpp"
#include "msenc/uncertainty.hpp"
#include "msenc/version.hpp"

namespace msenc {

namespace {

struct RunConfig {
  std::string command;
  std::string input;
  std::string base;
  std::string current;
  std::string config_file;
  std::string model = "saturated";
  std::string stage = "b";
  bool stage_set = false;
  std::string estimator;
  std::string order = "abc";
  double tolerance = 1e-8;
  int max_iterations = 10000;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int boot = 1000;
  double level = 0.95;
  int threads = 1;
  std::string out_path;
};

std::string canonical_invocation(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["model"] = cfg.model;
  kv["stage"] = cfg.stage;
  kv["order"] = cfg.order;
  kv["tol"] = std::to_string(cfg.tolerance);
  kv["max-iter"] = std::to_string(cfg.max_iterations);
  kv["seed"] = std::to_string(cfg.seed);
  kv["boot"] = std::to_string(cfg.boot);
  kv["level"] = std::to_string(cfg.level);
  kv["threads"] = std::to_string(cfg.threads);
  if (!cfg.input.empty()) kv["input"] = cfg.input;
  if (!cfg.base.empty()) kv["base"] = cfg.base;
  if (!cfg.current.empty()) kv["current"] = cfg.current;
  if (!cfg.config_file.empty()) kv["config"] = cfg.config_file;
  if (!cfg.estimator.empty()) kv["estimator"] = cfg.estimator;
  if (!cfg.out_path.empty()) kv["out"] = cfg.out_path;
  std::string canonical = cfg.command;
  for (const auto& [k, v] : kv) canonical += '\n' + k + '=' + v;
  return canonical;
}

nlohmann::json metadata(const RunConfig& cfg, nlohmann::json convergence) {
  nlohmann::json meta;
  meta["version"] = kVersion;
  meta["command"] = cfg.command;
  meta["config_hash"] = config_hash(canonical_invocation(cfg));
  if (cfg.seed_set || cfg.command == "bootstrap" || cfg.command == "simulate")
    meta["seed"] = cfg.seed;
  if (!convergence.is_null()) meta["convergence"] = std::move(convergence);
  return meta;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read file '" + path + "'");
  return in;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << content;
}

nlohmann::json fit_details(const FitResult& fit) {
  nlohmann::json j;
  auto ic = information_criteria(fit);
  j["loglik"] = fit.loglik;
  j["likelihood"] = "poisson";  // fitted values match the multinomial ML fit
  j["deviance"] = fit.deviance;
  j["df"] = fit.df;
  j["aic"] = ic.aic;
  j["bic"] = ic.bic;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  nlohmann::json params;
  for (std::size_t i = 0; i < fit.param_labels.size(); ++i)
    params[fit.param_labels[i]] = fit.parameters(Eigen::Index(i));
  j["parameters"] = std::move(params);
  return j;
}

nlohmann::json estimate_to_json(const PopulationEstimate& est) {
  nlohmann::json j;
  j["method"] = est.method;
  if (!est.period.empty()) j["period"] = est.period;
  j["n"] = est.n_observed;
  j["m000"] = est.m_unobserved;
  j["nhat"] = est.nhat;
  if (est.variance) j["variance"] = *est.variance;
  if (est.ci) {
    j["ci"] = {{"level", est.ci->level}, {"lower", est.ci->lower}, {"upper", est.ci->upper}};
  }
  if (est.fit) j["fit"] = fit_details(*est.fit);
  return j;
}

nlohmann::json dependence_to_json(const DependenceEstimate& dep) {
  auto pair = [](const PairDependence& p) {
    return nlohmann::json{{"paper_formula", p.paper_formula}, {"collapsed", p.collapsed}};
  };
  return {{"ab", pair(dep.ab)}, {"ac", pair(dep.ac)}, {"bc", pair(dep.bc)}};
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  auto in = open_input(cfg.input);
  PeriodTable table = parse_period_csv(in);
  if (cfg.order != "abc") table = relabel(table, cfg.order);
  Family family = family_from_label(cfg.model);
  PopulationEstimate est = tse(table, family, /*want_variance=*/true, cfg.level);

  nlohmann::json doc;
  doc["estimate"] = estimate_to_json(est);
  if (family == Family::Saturated) doc["dependence"] = dependence_to_json(pairwise_dependence(*est.fit));
  doc["metadata"] = metadata(
      cfg, {{"converged", est.fit->converged}, {"iterations", est.fit->iterations}});
  std::string text = dump_json(doc);
  out << text;
  if (!cfg.out_path.empty()) write_file(cfg.out_path, text);
  return 0;
}

int cmd_nowcast(const RunConfig& cfg, std::ostream& out) {
  auto base_in = open_input(cfg.base);
  PeriodTable base = parse_period_csv(base_in);
  auto current_in = open_input(cfg.current);
  auto current = parse_current_csv(current_in);

  if (cfg.order != "abc") {
    base = relabel(base, cfg.order);
    if (auto* complete = std::get_if<PeriodTable>(&current))
      *complete = relabel(*complete, cfg.order);
    else
      throw DataError("--order cannot relabel an already aggregated current period");
  }

  Stage stage = std::holds_alternative<PeriodTable>(current)
                    ? Stage::Complete
                    : std::get<AggregatedCounts>(current).stage();
  if (cfg.stage_set && stage_from_label(cfg.stage) != stage)
    throw DataError("current period is at stage " + stage_label(stage) +
                    " but --stage requested " + stage_label(stage_from_label(cfg.stage)));

  EmOptions options;
  options.tolerance = cfg.tolerance;
  options.max_iterations = cfg.max_iterations;

  Family family = family_from_label(cfg.model);
  StackedModel model = build_stacked_model(family, stage);
  NowcastResult result =
      std::holds_alternative<PeriodTable>(current)
          ? em_fit(StackedTable(base, std::get<PeriodTable>(current)), model, options)
          : em_fit(StackedTable(base, std::get<AggregatedCounts>(current)), model, options);

  nlohmann::json res;
  res["stage"] = stage_label(stage);
  res["family"] = family_label(family);
  res["base_period"] = result.base_period;
  res["current_period"] = result.current_period;
  res["nhat_nc"] = result.nhat_nc;
  nlohmann::json m_nc;
  for (int idx = 7; idx >= 0; --idx)
    m_nc[Pattern::from_index(idx).str()] = result.m_nc[std::size_t(idx)];
  res["m_nc_t1"] = std::move(m_nc);
  nlohmann::json completed;
  for (const auto& [pat, v] : result.completed.completed) completed[pat.str()] = v;
  res["completed"] = std::move(completed);
  res["loglik_trace"] = result.loglik_trace;
  res["fit"] = fit_details(result.fit);

  nlohmann::json doc;
  doc["result"] = std::move(res);
  doc["metadata"] = metadata(cfg, {{"converged", true},
                                   {"em_iterations", result.em_iterations},
                                   {"final_fit_iterations", result.fit.iterations}});
  std::string text = dump_json(doc);
  out << text;
  if (!cfg.out_path.empty()) write_file(cfg.out_path, text);
  return 0;
}

int cmd_bootstrap(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::ifstream file = open_input(cfg.input);
  std::stringstream buffer;
  buffer << file.rdbuf();

  BootstrapConfig boot;
  boot.replications = cfg.boot;
  boot.level = cfg.level;
  boot.seed = cfg.seed;
  boot.threads = cfg.threads;

  EstimatorConfig estimator;
  estimator.family = family_from_label(cfg.model);
  estimator.em.tolerance = cfg.tolerance;
  estimator.em.max_iterations = cfg.max_iterations;

  // Shape of the input decides the default estimator.
  std::optional<StackedTable> stacked;
  std::optional<PeriodTable> single;
  try {
    std::istringstream pass(buffer.str());
    stacked = parse_counts_csv(pass);
  } catch (const DataError&) {
    std::istringstream pass(buffer.str());
    single = parse_period_csv(pass);
  }

  BootstrapResult result;
  std::string estimator_name;
  if (stacked) {
    if (cfg.order != "abc") {
      auto* complete = std::get_if<PeriodTable>(&stacked->current);
      if (complete == nullptr)
        throw DataError("--order cannot relabel an already aggregated current period");
      stacked = StackedTable(relabel(stacked->base, cfg.order), relabel(*complete, cfg.order));
    }
    if (!cfg.estimator.empty() && cfg.estimator != "dse" && cfg.estimator != "nowcast")
      throw DataError("estimator '" + cfg.estimator + "' does not apply to a stacked table");
    estimator.kind = cfg.estimator == "dse" ? EstimatorKind::Dse : EstimatorKind::Nowcast;
    estimator_name = estimator_kind_label(estimator.kind);
    result = bootstrap(*stacked, estimator, boot);
  } else {
    if (cfg.order != "abc") single = relabel(*single, cfg.order);
    if (!cfg.estimator.empty() && cfg.estimator != "dse" && cfg.estimator != "tse")
      throw DataError("estimator '" + cfg.estimator + "' does not apply to a single period");
    estimator.kind = cfg.estimator == "dse" ? EstimatorKind::Dse : EstimatorKind::Tse;
    estimator_name = estimator_kind_label(estimator.kind);
    result = bootstrap(*single, estimator, boot);
  }

  if (!result.warning.empty()) err << "warning: " << result.warning << "\n";

  nlohmann::json doc;
  doc["estimator"] = estimator_name;
  doc["interval"] = {{"point", result.point},
                     {"lower", result.lower},
                     {"upper", result.upper},
                     {"level", result.level}};
  nlohmann::json reps;
  reps["requested"] = result.requested;
  reps["used"] = result.used;
  reps["failed"] = result.failed;
  reps["mean"] = result.replicate_mean;
  reps["sd"] = result.replicate_sd;
  reps["contains_point"] = result.contains_point;
  if (!result.warning.empty()) reps["warning"] = result.warning;
  doc["replicates"] = std::move(reps);
  doc["metadata"] = metadata(cfg, nullptr);
  std::string text = dump_json(doc);
  out << text;
  if (!cfg.out_path.empty()) write_file(cfg.out_path, text);
  return 0;
}

MuVector mu_from_json(const nlohmann::json& j) {
  MuVector mu;
  mu.a = j.value("a", 0.0);
  mu.b = j.value("b", 0.0);
  mu.c = j.value("c", 0.0);
  mu.ab = j.value("ab", 0.0);
  mu.ac = j.value("ac", 0.0);
  mu.bc = j.value("bc", 0.0);
  return mu;
}

nlohmann::json mu_to_json(const MuVector& mu) {
  return {{"a", mu.a}, {"b", mu.b}, {"c", mu.c}, {"ab", mu.ab}, {"ac", mu.ac}, {"bc", mu.bc}};
}

std::string fmt10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

int cmd_simulate(RunConfig& cfg, std::ostream& out) {
  auto in = open_input(cfg.config_file);
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad simulation config: " + std::string(e.what()));
  }

  SimConfig sim;
  if (!spec.contains("n_base") || !spec.contains("n_current"))
    throw DataError("simulation config requires n_base and n_current");
  sim.n_base = spec["n_base"].get<std::int64_t>();
  sim.n_current = spec["n_current"].get<std::int64_t>();
  sim.mu_base = mu_from_json(spec.value("mu_base", nlohmann::json::object()));
  sim.mu_current =
      spec.contains("mu_current") ? mu_from_json(spec["mu_current"]) : sim.mu_base;
  sim.replications = spec.value("replications", 100);
  sim.seed = cfg.seed_set ? cfg.seed : spec.value("seed", std::uint64_t{0});
  cfg.seed = sim.seed;
  sim.threads = cfg.threads;

  BiasReport report = run_bias_study(sim);

  nlohmann::json doc;
  doc["scenario"] = {{"n_base", sim.n_base},
                     {"n_current", sim.n_current},
                     {"mu_base", mu_to_json(sim.mu_base)},
                     {"mu_current", mu_to_json(sim.mu_current)},
                     {"replications", sim.replications},
                     {"seed", sim.seed}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& stats : report.estimators) {
    nlohmann::json row;
    row["name"] = stats.name;
    row["mean_rel_bias"] = stats.mean_rel_bias;
    row["rmse_rel"] = stats.rmse_rel;
    if (stats.ci_coverage) row["ci_coverage"] = *stats.ci_coverage;
    row["used"] = stats.used;
    row["failures"] = stats.failures;
    rows.push_back(std::move(row));
  }
  doc["estimators"] = std::move(rows);
  doc["metadata"] = metadata(cfg, nullptr);
  std::string text = dump_json(doc);
  out << text;

  if (!cfg.out_path.empty()) {
    std::string hash = config_hash(canonical_invocation(cfg));
    std::string csv =
        "estimator,mean_rel_bias,rmse_rel,ci_coverage,used,failures,n_base,n_current,"
        "replications,seed,config_hash\n";
    for (const auto& stats : report.estimators) {
      csv += stats.name;
      csv += ',' + fmt10(stats.mean_rel_bias);
      csv += ',' + fmt10(stats.rmse_rel);
      csv += ',';
      if (stats.ci_coverage) csv += fmt10(*stats.ci_coverage);
      csv += ',' + std::to_string(stats.used);
      csv += ',' + std::to_string(stats.failures);
      csv += ',' + std::to_string(sim.n_base);
      csv += ',' + std::to_string(sim.n_current);
      csv += ',' + std::to_string(sim.replications);
      csv += ',' + std::to_string(sim.seed);
      csv += ',' + hash;
      csv += '\n';
    }
    write_file(cfg.out_path + ".json", text);
    write_file(cfg.out_path + ".csv", csv);
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  auto in = open_input(cfg.input);
  auto years = parse_year_tables_csv(in);

  SeriesOptions options;
  options.base_family = family_from_label(cfg.model);
  options.level = cfg.level;
  options.em.tolerance = cfg.tolerance;
  options.em.max_iterations = cfg.max_iterations;

  YearSeries series = build_year_series(years, options);
  ErrorTable errors = error_table(series);
  SingletonComparison singles = singleton_comparison(series);
  auto lambdas = lambda_series(series);

  nlohmann::json doc;
  nlohmann::json table_rows = nlohmann::json::array();
  for (const auto& row : errors.rows) {
    nlohmann::json r;
    r["year"] = row.year;
    r["lagged"] = row.lagged_minus_tse;
    for (const auto& [variant, diff] : row.nc_minus_tse) r["nc_" + variant] = diff;
    table_rows.push_back(std::move(r));
  }
  doc["error_table"] = std::move(table_rows);

  nlohmann::json maes;
  if (!errors.rows.empty()) {
    maes["lagged"] = mae(errors.column("lagged"));
    for (const char* variant : kOrderVariants)
      maes[std::string("nc_") + variant] = mae(errors.column(variant));
  }
  doc["mae"] = std::move(maes);

  nlohmann::json singleton_mae;
  for (const auto& [cell, value] : singles.nowcast_mae) {
    singleton_mae[cell]["nowcast"] = value;
    auto it = singles.lagged_mae.find(cell);
    if (it != singles.lagged_mae.end()) singleton_mae[cell]["lagged"] = it->second;
  }
  doc["singleton_mae"] = std::move(singleton_mae);

  nlohmann::json dm_rows = nlohmann::json::array();
  if (!errors.rows.empty()) {
    std::vector<std::string> names = {"lagged", "bc", "ac", "ab"};
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        nlohmann::json r;
        r["series_1"] = names[i] == "lagged" ? names[i] : "nc_" + names[i];
        r["series_2"] = "nc_" + names[j];
        try {
          DmResult dm = dm_test(errors.column(names[i]), errors.column(names[j]));
          r["statistic"] = dm.statistic;
          r["p"] = dm.p_value;
        } catch (const DataError& e) {
          r["error"] = e.what();
        }
        dm_rows.push_back(std::move(r));
      }
    }
  }
  doc["dm_tests"] = std::move(dm_rows);
  doc["metadata"] = metadata(cfg, nullptr);

  std::string summary = dump_json(doc);
  out << summary;

  std::filesystem::path dir(cfg.out_path);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + cfg.out_path + "'");
  int year_min = series.years.empty() ? 0 : series.years.front().year;
  int year_max = series.years.empty() ? 0 : series.years.back().year;
  write_file((dir / "estimates.csv").string(), emit_estimates_csv(series));
  write_file((dir / "singletons.csv").string(), emit_singletons_csv(singles, year_min, year_max));
  write_file((dir / "lambda.csv").string(), emit_lambda_csv(lambdas));
  write_file((dir / "summary.json").string(), summary);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"multiple systems estimation with nowcasting"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", cfg.model,
                    "model family: saturated|2pd-i|2pd-ii|2pd-iii|1pd-i|1pd-ii|1pd-iii|indep");
    cmd->add_option("--tol", cfg.tolerance, "EM convergence tolerance");
    cmd->add_option("--max-iter", cfg.max_iterations, "maximum EM iterations");
    cmd->add_option("--level", cfg.level, "confidence level");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit a single complete period");
  fit->add_option("--input", cfg.input, "counts CSV with one complete period")->required();
  fit->add_option("--order", cfg.order, "sample arrival order, e.g. acb");
  fit->add_option("--out", cfg.out_path, "also write the JSON result here");
  add_common(fit);

  CLI::App* nowcast = app.add_subcommand("nowcast", "nowcast from a partial current period");
  nowcast->add_option("--base", cfg.base, "counts CSV with the complete base period")->required();
  nowcast->add_option("--current", cfg.current, "counts CSV with the current period")->required();
  auto* stage_opt = nowcast->add_option("--stage", cfg.stage, "availability stage: a|b|c");
  nowcast->add_option("--order", cfg.order, "sample arrival order, e.g. acb");
  nowcast->add_option("--out", cfg.out_path, "also write the JSON result here");
  add_common(nowcast);

  CLI::App* boot = app.add_subcommand("bootstrap", "percentile bootstrap interval");
  boot->add_option("--input", cfg.input, "counts CSV (one period or a stacked pair)")->required();
  boot->add_option("--estimator", cfg.estimator, "estimator: dse|tse|nowcast (default by input)");
  boot->add_option("--boot", cfg.boot, "bootstrap replications");
  boot->add_option("--seed", cfg.seed, "RNG seed")->required();
  boot->add_option("--order", cfg.order, "sample arrival order, e.g. acb");
  boot->add_option("--threads", cfg.threads, "worker threads");
  boot->add_option("--out", cfg.out_path, "also write the JSON result here");
  add_common(boot);

  CLI::App* simulate = app.add_subcommand("simulate", "replicated bias study");
  simulate->add_option("--config", cfg.config_file, "JSON study configuration")->required();
  auto* seed_opt = simulate->add_option("--seed", cfg.seed, "RNG seed (overrides config)");
  simulate->add_option("--threads", cfg.threads, "worker threads");
  simulate->add_option("--out", cfg.out_path, "output path prefix for .json and .csv");

  CLI::App* evaluate = app.add_subcommand("evaluate", "multi-year nowcast evaluation");
  evaluate->add_option("--input", cfg.input, "counts CSV with complete yearly periods")
      ->required();
  evaluate->add_option("--out", cfg.out_path, "output directory for plot CSVs")->required();
  add_common(evaluate);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  cfg.seed_set = seed_opt->count() > 0 || boot->count("--seed") > 0;
  cfg.stage_set = stage_opt->count() > 0;

  try {
    if (fit->parsed()) {
      cfg.command = "fit";
      return cmd_fit(cfg, out);
    }
    if (nowcast->parsed()) {
      cfg.command = "nowcast";
      return cmd_nowcast(cfg, out);
    }
    if (boot->parsed()) {
      cfg.command = "bootstrap";
      return cmd_bootstrap(cfg, out, err);
    }
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return cmd_simulate(cfg, out);
    }
    cfg.command = "evaluate";
    return cmd_evaluate(cfg, out);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace msenc
