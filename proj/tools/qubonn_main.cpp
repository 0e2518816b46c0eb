#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qubonn/common.hpp"
#include "qubonn/dataio.hpp"
#include "qubonn/pipeline.hpp"
#include "qubonn/pwl.hpp"
#include "qubonn/qcbo.hpp"
#include "qubonn/qcgd.hpp"
#include "qubonn/qnet.hpp"
#include "qubonn/qubo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qubonn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct GlobalOpts {
  std::string config_path;
  uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
};

json load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return json::object();
  return json::parse(pipeline::read_file(g.config_path));
}

// config value with CLI override taking precedence
template <typename T>
T cfg_get(const json& cfg, const std::string& key, T fallback) {
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

std::vector<double> breakpoints_from(const json& cfg) {
  std::vector<double> bp = {-8.0, -4.0, 0.0, 4.0, 8.0};
  if (cfg.contains("breakpoints")) bp = cfg.at("breakpoints").get<std::vector<double>>();
  return bp;
}

qubo::AnnealSchedule schedule_from(const json& cfg) {
  qubo::AnnealSchedule s;
  s.t_init = cfg_get(cfg, "sa_t_init", 0.0);
  s.t_final = cfg_get(cfg, "sa_t_final", 1e-3);
  s.sweeps = cfg_get(cfg, "sa_sweeps", 0);
  return s;
}

json run_config_json(const GlobalOpts& g, const json& cfg) {
  json j = cfg;
  j["seed"] = g.seed;
  j["workers"] = g.workers;
  return j;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) {
    throw CLI::ValidationError("file", "missing input file: " + path);
  }
}

int cmd_prepare(const GlobalOpts& g, const json& cfg, const std::vector<std::string>& paths) {
  for (const auto& p : paths) require_file(p);
  auto prep = pipeline::prepare(paths[0], paths[1], paths[2], paths[3],
                                cfg_get(cfg, "keep", std::vector<int>{4, 5}));
  pipeline::write_prepare_outputs(prep, g.out_dir, paths, run_config_json(g, cfg).dump());
  std::cout << "prepared " << prep.train_count << " train / " << prep.test_count
            << " test samples, " << prep.train_prototypes.size() << " prototypes -> " << g.out_dir
            << "\n";
  return kExitOk;
}

int cmd_build(const GlobalOpts& g, const json& cfg, const std::string& dataset_csv) {
  require_file(dataset_csv);
  auto samples = dataio::read_feature_csv(dataset_csv);
  qcbo::NetSpec spec = pipeline::experiment_netspec(breakpoints_from(cfg),
                                                    cfg_get(cfg, "dims", std::vector<int>{3, 2, 1}));
  qcbo::QcboModel model = qcbo::build_fip_model(spec, samples);

  fs::create_directories(g.out_dir);
  pipeline::write_file_atomic(g.out_dir + "/model.json", model.to_json());
  pipeline::write_file_atomic(g.out_dir + "/netspec.json", spec.to_json() + "\n");
  dataio::write_feature_csv(samples, g.out_dir + "/train.csv");

  qcbo::QcboModel linear = qcbo::linearize_all(model, qcbo::LinearizeStrategy::Rosenberg);
  qcbo::PenaltyForm form = qcbo::penalty_qubo(linear);
  qubo::write_qubo_text_file(form.qubo, g.out_dir + "/model.qubo");

  qcbo::SpinReport report = qcbo::spin_report(form.model);
  json rj = json::parse(qcbo::spin_report_json(report));
  rj["penalty_weight"] = form.weight;
  rj["config"] = run_config_json(g, cfg);
  rj["dataset_hash"] = fnv1a_file_hex(dataset_csv);
  pipeline::write_file_atomic(g.out_dir + "/spin_report.json", rj.dump(2) + "\n");

  std::cout << "built model: " << model.var_count() << " model vars, penalty QUBO "
            << form.qubo.size() << " vars -> " << g.out_dir << "\n";
  return kExitOk;
}

int cmd_solve(const GlobalOpts& g, const json& cfg, const std::string& model_dir,
              const std::string& mode, const std::string& oracle) {
  require_file(model_dir + "/model.json");
  require_file(model_dir + "/netspec.json");
  qcbo::QcboModel model = qcbo::QcboModel::from_json(
      pipeline::read_file(model_dir + "/model.json"));
  qcbo::NetSpec spec = qcbo::NetSpec::from_json(pipeline::read_file(model_dir + "/netspec.json"));
  fs::create_directories(g.out_dir);

  if (mode == "direct") {
    pipeline::DirectResult solved;
    if (oracle == "enumerate") {
      require_file(model_dir + "/train.csv");
      auto samples = dataio::read_feature_csv(model_dir + "/train.csv");
      solved = pipeline::exhaustive_direct_solve(model, spec, samples);
    } else {
      pipeline::DirectConfig dc;
      dc.schedule = schedule_from(cfg);
      dc.restarts = cfg_get(cfg, "restarts", 5);
      dc.seed = g.seed;
      dc.oracle = oracle;
      solved = pipeline::direct_solve(model, dc);
    }

    const auto& best = solved.restarts[solved.best_index];
    std::string bits(best.assignment.size(), '0');
    for (std::size_t i = 0; i < best.assignment.size(); ++i) {
      if (best.assignment[i]) bits[i] = '1';
    }
    pipeline::write_file_atomic(g.out_dir + "/solution.bits", bits + "\n");

    qnet::QuantNet net = qnet::decode(best.assignment, solved.form.model, spec);
    pipeline::write_file_atomic(g.out_dir + "/net.json", net.to_json() + "\n");

    json result;
    result["mode"] = "direct";
    result["objective"] = best.objective;
    result["restarts"] = solved.restarts.size();
    result["wall_seconds"] = solved.wall_seconds;
    result["config"] = run_config_json(g, cfg);
    pipeline::write_file_atomic(g.out_dir + "/solve.json", result.dump(2) + "\n");
    std::cout << "direct solve: objective " << best.objective << " -> " << g.out_dir << "\n";
    return kExitOk;
  }
  if (mode == "qcgd") {
    qcgd::RunConfig rc;
    rc.iterations = cfg_get(cfg, "iterations", 1000);
    rc.delta = cfg_get(cfg, "delta", 1.0);
    rc.alpha0 = cfg_get(cfg, "alpha0", 1.0);
    rc.p0 = cfg_get(cfg, "p0", 0.5);
    rc.truncation_digits = cfg_get(cfg, "truncation_digits", 0);
    rc.lazy = cfg_get(cfg, "lazy", false);
    rc.tol_infeasibility = cfg_get(cfg, "tol_infeasibility", 1e-4);
    rc.tol_objective = cfg_get(cfg, "tol_objective", 1e-4);
    rc.seed = g.seed;
    pipeline::QcgdSolveResult solved = pipeline::qcgd_solve(model, rc, oracle, schedule_from(cfg));

    qcgd::write_trace_csv(solved.run.trace, g.out_dir + "/trace.csv");
    std::string bits(solved.run.solution.size(), '0');
    for (std::size_t i = 0; i < solved.run.solution.size(); ++i) {
      if (solved.run.solution[i]) bits[i] = '1';
    }
    pipeline::write_file_atomic(g.out_dir + "/solution.bits", bits + "\n");

    qnet::QuantNet net = qnet::decode(solved.run.solution, solved.linearized, spec);
    pipeline::write_file_atomic(g.out_dir + "/net.json", net.to_json() + "\n");

    json result;
    result["mode"] = "qcgd";
    result["iterations"] = solved.run.trace.size();
    result["converged_at"] = solved.run.converged_at;
    result["extraction_feasible"] = solved.run.extraction_feasible;
    result["samples_per_iteration"] = solved.run.samples_per_iteration;
    result["config"] = run_config_json(g, cfg);
    pipeline::write_file_atomic(g.out_dir + "/solve.json", result.dump(2) + "\n");
    std::cout << "qcgd solve: " << solved.run.trace.size() << " iterations -> " << g.out_dir
              << "\n";
    return kExitOk;
  }
  throw CLI::ValidationError("mode", "unknown solve mode: " + mode);
}

int cmd_eval(const GlobalOpts& g, const json& cfg, const std::string& net_path,
             const std::string& dataset_csv) {
  require_file(net_path);
  require_file(dataset_csv);
  qnet::QuantNet net = qnet::QuantNet::from_json(pipeline::read_file(net_path));
  auto samples = dataio::read_feature_csv(dataset_csv);
  auto labeled = pipeline::to_labeled(samples);
  pipeline::EvalReport report = pipeline::evaluate(net, labeled, cfg_get(cfg, "threshold", 0.5),
                                                   cfg_get(cfg, "latency_passes", 10000));

  json j;
  j["accuracy"] = report.accuracy;
  j["resources"] = json::parse(qnet::resource_report_json(report.resources));
  j["net_hash"] = fnv1a_file_hex(net_path);
  j["dataset_hash"] = fnv1a_file_hex(dataset_csv);
  j["config"] = run_config_json(g, cfg);
  fs::create_directories(g.out_dir);
  pipeline::write_file_atomic(g.out_dir + "/eval.json", j.dump(2) + "\n");
  std::cout << "accuracy " << report.accuracy << ", " << report.resources.bytes << " bytes -> "
            << g.out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const GlobalOpts& g, const json& cfg, const std::string& kind,
              const std::string& dataset_csv, const std::string& test_csv, int lo, int hi) {
  if (lo > hi) {
    throw CLI::ValidationError("range", "empty sweep range");
  }
  std::vector<int> grid;
  for (int v = lo; v <= hi; ++v) grid.push_back(v);
  fs::create_directories(g.out_dir);

  std::vector<pipeline::SweepRow> rows;
  if (kind == "breakpoint_c") {
    if (dataset_csv.empty() || test_csv.empty()) {
      throw CLI::ValidationError("dataset", "breakpoint_c sweep needs --train and --test");
    }
    require_file(dataset_csv);
    require_file(test_csv);
    auto train = dataio::read_feature_csv(dataset_csv);
    auto test = dataio::read_feature_csv(test_csv);
    pipeline::DirectConfig dc;
    dc.schedule = schedule_from(cfg);
    dc.restarts = cfg_get(cfg, "restarts", 5);
    dc.seed = g.seed;
    dc.oracle = cfg_get(cfg, "oracle", std::string("sa"));
    rows = pipeline::sweep_breakpoint_c(train, test, grid, dc, g.workers);
  } else if (kind == "precision_digits") {
    qcgd::RunConfig rc;
    rc.iterations = cfg_get(cfg, "iterations", 20000);
    rc.p0 = cfg_get(cfg, "p0", 0.5);
    rc.tol_infeasibility = cfg_get(cfg, "tol_infeasibility", 1e-4);
    rc.tol_objective = cfg_get(cfg, "tol_objective", 1e-4);
    rc.seed = g.seed;
    rc.objective_reference = 1.0;  // toy fixture optimum
    rows = pipeline::sweep_precision_digits(grid, rc, g.workers);
  } else {
    throw CLI::ValidationError("kind", "unknown sweep kind: " + kind);
  }

  pipeline::write_sweep_csv(rows, kind, g.out_dir + "/sweep.csv");
  json manifest;
  manifest["kind"] = kind;
  manifest["range"] = {lo, hi};
  manifest["config"] = run_config_json(g, cfg);
  pipeline::write_file_atomic(g.out_dir + "/sweep_manifest.json", manifest.dump(2) + "\n");

  int failures = 0;
  for (const auto& r : rows) {
    if (!r.ok) ++failures;
  }
  std::cout << "sweep " << kind << ": " << rows.size() << " rows, " << failures
            << " failures -> " << g.out_dir << "/sweep.csv\n";
  return kExitOk;
}

int cmd_report(const GlobalOpts& g) {
  json report = json::object();
  for (const auto& entry : fs::recursive_directory_iterator(g.out_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "eval.json" || name == "solve.json" || name == "sweep_manifest.json" ||
        name == "manifest.json" || name == "spin_report.json") {
      report[fs::relative(entry.path(), g.out_dir).string()] =
          json::parse(pipeline::read_file(entry.path().string()));
    }
  }
  std::string text = report.dump(2) + "\n";
  pipeline::write_file_atomic(g.out_dir + "/report.json", text);
  std::cout << text;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FIP-encoded quantized network training over QUBO oracles"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "root seed; all randomness derives from it");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--workers", g.workers, "sweep worker limit");

  auto* prepare = app.add_subcommand("prepare", "featurize an IDX dataset");
  std::vector<std::string> idx_paths(4);
  prepare->add_option("--train-images", idx_paths[0], "training images (IDX or .gz)")->required();
  prepare->add_option("--train-labels", idx_paths[1], "training labels")->required();
  prepare->add_option("--test-images", idx_paths[2], "test images")->required();
  prepare->add_option("--test-labels", idx_paths[3], "test labels")->required();

  auto* build = app.add_subcommand("build", "build the QCBO model for a featurized dataset");
  std::string dataset_csv;
  build->add_option("--train", dataset_csv, "featurized training CSV")->required();

  auto* solve = app.add_subcommand("solve", "solve a built model");
  std::string solve_model_dir, solve_mode = "direct", solve_oracle = "sa";
  solve->add_option("--model", solve_model_dir, "directory produced by build")->required();
  solve->add_option("--mode", solve_mode, "direct | qcgd");
  solve->add_option("--oracle", solve_oracle, "sa | exact | enumerate (direct mode)");

  auto* eval = app.add_subcommand("eval", "evaluate a decoded network");
  std::string net_path, eval_dataset;
  eval->add_option("--net", net_path, "net.json produced by solve")->required();
  eval->add_option("--data", eval_dataset, "featurized CSV to evaluate on")->required();

  auto* sweep = app.add_subcommand("sweep", "grid sweeps (breakpoint_c, precision_digits)");
  std::string sweep_kind, sweep_train, sweep_test;
  int sweep_lo = 1, sweep_hi = 7;
  sweep->add_option("--kind", sweep_kind, "breakpoint_c | precision_digits")->required();
  sweep->add_option("--train", sweep_train, "featurized training CSV (breakpoint_c)");
  sweep->add_option("--test", sweep_test, "featurized test CSV (breakpoint_c)");
  sweep->add_option("--lo", sweep_lo, "range start (inclusive)");
  sweep->add_option("--hi", sweep_hi, "range end (inclusive)");

  auto* report = app.add_subcommand("report", "collect result files under --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    json cfg = load_config(g);
    if (prepare->parsed()) return cmd_prepare(g, cfg, idx_paths);
    if (build->parsed()) return cmd_build(g, cfg, dataset_csv);
    if (solve->parsed()) return cmd_solve(g, cfg, solve_model_dir, solve_mode, solve_oracle);
    if (eval->parsed()) return cmd_eval(g, cfg, net_path, eval_dataset);
    if (sweep->parsed()) return cmd_sweep(g, cfg, sweep_kind, sweep_train, sweep_test, sweep_lo,
                                          sweep_hi);
    if (report->parsed()) return cmd_report(g);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
