#include "qubonn/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "qubonn/common.hpp"
#include "qubonn/pwl.hpp"

namespace qubonn::pipeline {

namespace fs = std::filesystem;

qcbo::NetSpec experiment_netspec(const std::vector<double>& breakpoints,
                                 const std::vector<int>& dims) {
  auto activation = pwl::build_midpoint_constant([](double x) { return pwl::sigmoid(x); },
                                                 breakpoints);
  qcbo::NetSpec spec(dims, std::move(activation));
  spec.weight_bits = 1;
  spec.weight_code = qcbo::WeightCode::PlusMinusOne;
  spec.bias_bits = 1;
  spec.bias_code = qcbo::WeightCode::PlusMinusOne;
  spec.feature_bound = 1.0;
  return spec;
}

PrepareResult prepare(const std::string& train_images, const std::string& train_labels,
                      const std::string& test_images, const std::string& test_labels,
                      const std::vector<int>& keep) {
  PrepareResult out;
  auto train_raw = dataio::load_idx(train_images, train_labels);
  auto test_raw = dataio::load_idx(test_images, test_labels);
  auto train = dataio::filter_classes(train_raw, keep);
  auto test = dataio::filter_classes(test_raw, keep);
  if (train.empty() || test.empty()) {
    throw std::invalid_argument("kept classes are absent from the dataset");
  }
  out.train_count = train.size();
  out.test_count = test.size();
  out.thresholds = dataio::fit_thresholds(train);

  std::vector<dataio::FeatVec> train_feat, test_feat;
  train_feat.reserve(train.size());
  for (const auto& im : train) train_feat.push_back(dataio::featurize(im, out.thresholds));
  test_feat.reserve(test.size());
  for (const auto& im : test) test_feat.push_back(dataio::featurize(im, out.thresholds));

  out.train_full = dataio::to_samples(train_feat);
  out.train_prototypes = dataio::to_samples(dataio::prototypes(train_feat));
  out.test = dataio::to_samples(test_feat);
  return out;
}

std::string write_prepare_outputs(const PrepareResult& prep, const std::string& out_dir,
                                  const std::vector<std::string>& input_paths,
                                  const std::string& config_json) {
  fs::create_directories(out_dir);
  dataio::write_feature_csv(prep.train_prototypes, out_dir + "/train_prototypes.csv");
  dataio::write_feature_csv(prep.train_full, out_dir + "/train_full.csv");
  dataio::write_feature_csv(prep.test, out_dir + "/test.csv");

  nlohmann::json manifest;
  manifest["thresholds"] = {{"low", prep.thresholds.low},
                            {"high", prep.thresholds.high},
                            {"degenerate", prep.thresholds.degenerate}};
  manifest["train_count"] = prep.train_count;
  manifest["test_count"] = prep.test_count;
  manifest["prototype_count"] = prep.train_prototypes.size();
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& p : input_paths) {
    hashes[fs::path(p).filename().string()] = fnv1a_file_hex(p);
  }
  manifest["input_hashes"] = std::move(hashes);
  manifest["config"] = config_json.empty() ? nlohmann::json::object()
                                           : nlohmann::json::parse(config_json);
  std::string text = manifest.dump(2) + "\n";
  write_file_atomic(out_dir + "/manifest.json", text);
  return text;
}

DirectResult direct_solve(const qcbo::QcboModel& raw_model, const DirectConfig& cfg) {
  if (cfg.restarts < 1) {
    throw std::invalid_argument("need at least one restart");
  }
  if (cfg.oracle != "sa" && cfg.oracle != "exact") {
    throw std::invalid_argument("unknown oracle: " + cfg.oracle);
  }
  auto t0 = std::chrono::steady_clock::now();

  qcbo::QcboModel presolved = qcbo::presolve_activations(raw_model);
  qcbo::QcboModel linear = qcbo::linearize_all(presolved, qcbo::LinearizeStrategy::Rosenberg);
  qcbo::PenaltyOptions popts;
  popts.quantized_slack_levels = cfg.quantized_slack_levels;

  DirectResult res;
  res.form = qcbo::penalty_qubo(linear, popts);

  if (cfg.continuation.empty() || std::abs(cfg.continuation.back().factor - 1.0) > 1e-12) {
    throw std::invalid_argument("continuation must end at factor 1");
  }

  // staged instances shared across restarts
  std::vector<qubo::QuboInstance> staged;
  for (const auto& stage : cfg.continuation) {
    staged.push_back(stage.factor == 1.0
                         ? res.form.qubo
                         : qubo::combine(res.form.objective_part, res.form.penalty_part,
                                         stage.factor));
  }

  for (int r = 0; r < cfg.restarts; ++r) {
    uint64_t seed = mix_seed(cfg.seed, static_cast<uint64_t>(r));
    RestartOutcome o;
    o.seed = seed;
    if (cfg.oracle == "exact") {
      qubo::OracleSample s = qubo::make_exact_oracle()(res.form.qubo, seed);
      o.objective = s.objective;
      o.assignment = std::move(s.assignment);
    } else {
      // penalty continuation, each stage warm-started from the previous one
      std::vector<uint8_t> state;
      for (std::size_t stage = 0; stage < cfg.continuation.size(); ++stage) {
        qubo::AnnealSchedule sched = cfg.schedule;
        sched.t_init = cfg.continuation[stage].t_init;
        sched.t_final = cfg.continuation[stage].t_final;
        qubo::OracleSample s = qubo::sa_solve(staged[stage], sched, mix_seed(seed, stage),
                                              state.empty() ? nullptr : &state);
        state = std::move(s.assignment);
      }
      o.objective = res.form.qubo.value(state);  // exact form value
      o.assignment = std::move(state);
    }
    res.restarts.push_back(std::move(o));
  }
  res.best_index = 0;
  for (int r = 1; r < cfg.restarts; ++r) {
    if (res.restarts[r].objective < res.restarts[res.best_index].objective) {
      res.best_index = r;
    }
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

DirectResult exhaustive_direct_solve(const qcbo::QcboModel& raw_model, const qcbo::NetSpec& spec,
                                     const std::vector<qcbo::Sample>& data,
                                     int quantized_slack_levels, int max_param_bits) {
  auto t0 = std::chrono::steady_clock::now();
  const int depth = spec.depth();
  const int wb = spec.weight_code == qcbo::WeightCode::PlusMinusOne ? 1 : spec.weight_bits;
  const int bb = spec.bias_code == qcbo::WeightCode::PlusMinusOne ? 1 : spec.bias_bits;
  int param_bits = 0;
  for (int l = 1; l <= depth; ++l) {
    param_bits += spec.dims[l] * spec.dims[l - 1] * wb + spec.dims[l] * bb;
  }
  if (param_bits > max_param_bits) {
    throw std::invalid_argument("parameter space too large to enumerate: " +
                                std::to_string(param_bits) + " bits");
  }

  qcbo::QcboModel presolved = qcbo::presolve_activations(raw_model);
  qcbo::QcboModel linear = qcbo::linearize_all(presolved, qcbo::LinearizeStrategy::Rosenberg);
  qcbo::PenaltyOptions popts;
  popts.quantized_slack_levels = quantized_slack_levels;

  DirectResult res;
  res.form = qcbo::penalty_qubo(linear, popts);

  auto decode_value = [&](int64_t code, qcbo::WeightCode wc, int bits) {
    if (wc == qcbo::WeightCode::PlusMinusOne) return (code & 1) ? 1 : -1;
    return static_cast<int>(code) - (1 << (bits - 1));
  };

  RestartOutcome best;
  bool have = false;
  for (uint64_t config = 0; config < (uint64_t(1) << param_bits); ++config) {
    std::vector<std::vector<std::vector<int>>> w(depth);
    std::vector<std::vector<int>> b(depth);
    uint64_t cursor = config;
    for (int l = 0; l < depth; ++l) {
      w[l].assign(spec.dims[l + 1], std::vector<int>(spec.dims[l], 0));
      b[l].assign(spec.dims[l + 1], 0);
      for (int j = 0; j < spec.dims[l + 1]; ++j) {
        for (int k = 0; k < spec.dims[l]; ++k) {
          w[l][j][k] = decode_value(cursor & ((1 << wb) - 1), spec.weight_code, wb);
          cursor >>= wb;
        }
        b[l][j] = decode_value(cursor & ((1 << bb) - 1), spec.bias_code, bb);
        cursor >>= bb;
      }
    }
    auto x = qcbo::feasible_completion(res.form.model, spec, data, w, b);
    qcbo::optimize_slack_bits(res.form.qubo, res.form.model, x);
    double e = res.form.qubo.value(x);
    if (!have || e < best.objective) {
      best.objective = e;
      best.assignment = std::move(x);
      best.seed = config;
      have = true;
    }
  }
  res.restarts.push_back(std::move(best));
  res.best_index = 0;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

QcgdSolveResult qcgd_solve(const qcbo::QcboModel& raw_model, const qcgd::RunConfig& cfg,
                           const std::string& oracle_name, const qubo::AnnealSchedule& sa_schedule) {
  QcgdSolveResult out;
  out.linearized = qcbo::linearize_all(raw_model, qcbo::LinearizeStrategy::Constraints);
  out.prog = qcgd::lift(out.linearized);
  qubo::OracleFn oracle;
  if (oracle_name == "exact") {
    oracle = qubo::make_exact_oracle();
  } else if (oracle_name == "sa") {
    oracle = qubo::make_sa_oracle(sa_schedule);
  } else {
    throw std::invalid_argument("unknown oracle: " + oracle_name);
  }
  qcgd::RunConfig cfg_used = cfg;
  if (cfg.lazy && oracle_name != "exact") {
    cfg_used.lazy = false;  // spectral gap needs the exact second-best
  }
  out.run = qcgd::run(out.prog, oracle, cfg_used);
  return out;
}

namespace {

qcbo::QcboModel two_var_equality(double c1, double c2) {
  qcbo::QcboModel m;
  int x1 = m.vars.add({qcbo::VarTag::SlackBit, {0, 0, -1, -1}});
  int x2 = m.vars.add({qcbo::VarTag::SlackBit, {0, 1, -1, -1}});
  m.objective.add_lin(x1, c1);
  m.objective.add_lin(x2, c2);
  qcbo::LinConstraint c;
  c.expr.add(x1, 1.0);
  c.expr.add(x2, 1.0);
  c.rhs = 1.0;
  m.eq.push_back(std::move(c));
  m.objective_abs_sum_hint = std::abs(c1) + std::abs(c2);
  return m;
}

}  // namespace

qcbo::QcboModel toy_equality_model() { return two_var_equality(1.0, 1.0); }

qcbo::QcboModel toy_unique_model() { return two_var_equality(1.0, 2.0); }

qcbo::QcboModel toy_tension_model() { return two_var_equality(-1.0, -1.0); }

std::vector<qnet::LabeledVec> to_labeled(const std::vector<qcbo::Sample>& samples) {
  std::vector<qnet::LabeledVec> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back({s.features, s.label, s.weight});
  }
  return out;
}

EvalReport evaluate(const qnet::QuantNet& net, const std::vector<qnet::LabeledVec>& dataset,
                    double threshold, int latency_passes) {
  EvalReport r;
  r.accuracy = qnet::accuracy(net, dataset, threshold);
  r.resources = qnet::resource_report(net, latency_passes);
  return r;
}

namespace {

template <typename Job>
void run_jobs(int count, int workers, Job job) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<SweepRow> sweep_breakpoint_c(const std::vector<qcbo::Sample>& train_prototypes,
                                         const std::vector<qcbo::Sample>& test,
                                         const std::vector<int>& c_values,
                                         const DirectConfig& base, int workers) {
  if (c_values.empty()) {
    throw std::invalid_argument("empty sweep range");
  }
  std::vector<SweepRow> rows(c_values.size());
  auto test_labeled = to_labeled(test);

  run_jobs(static_cast<int>(c_values.size()), workers, [&](int i) {
    SweepRow& row = rows[i];
    row.grid_value = c_values[i];
    try {
      int c = c_values[i];
      if (c <= 0 || c >= 8) {
        throw std::invalid_argument("c must lie strictly between 0 and 8");
      }
      std::vector<double> bp = {-8.0, -static_cast<double>(c), 0.0, static_cast<double>(c), 8.0};
      qcbo::NetSpec spec = experiment_netspec(bp);
      qcbo::QcboModel model = qcbo::build_fip_model(spec, train_prototypes);
      DirectConfig cfg = base;
      cfg.seed = mix_seed(base.seed, 1000 + static_cast<uint64_t>(c));
      DirectResult solved = direct_solve(model, cfg);
      double best_acc = 0.0, best_obj = 0.0;
      for (const auto& restart : solved.restarts) {
        qnet::QuantNet net = qnet::decode(restart.assignment, solved.form.model, spec);
        double acc = qnet::accuracy(net, test_labeled, 0.5);
        if (acc > best_acc) best_acc = acc;
      }
      best_obj = solved.restarts[solved.best_index].objective;
      row.best_accuracy = best_acc;
      row.best_objective = best_obj;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

std::vector<SweepRow> sweep_precision_digits(const std::vector<int>& digit_values,
                                             const qcgd::RunConfig& base, int workers) {
  if (digit_values.empty()) {
    throw std::invalid_argument("empty sweep range");
  }
  std::vector<SweepRow> rows(digit_values.size());
  run_jobs(static_cast<int>(digit_values.size()), workers, [&](int i) {
    SweepRow& row = rows[i];
    row.grid_value = digit_values[i];
    try {
      qcbo::QcboModel toy = toy_unique_model();
      qcgd::RunConfig cfg = base;
      cfg.truncation_digits = digit_values[i];
      cfg.seed = mix_seed(base.seed, 2000 + static_cast<uint64_t>(digit_values[i]));
      QcgdSolveResult solved = qcgd_solve(toy, cfg, "exact");
      row.best_objective = toy.objective_value(solved.run.solution);
      row.best_accuracy = solved.run.extraction_feasible ? 1.0 : 0.0;
      row.iterations = solved.run.converged_at > 0 ? solved.run.converged_at
                                                   : static_cast<int>(solved.run.trace.size());
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& kind,
                     const std::string& path) {
  std::ostringstream out;
  out << kind << ",ok,best_accuracy,best_objective,iterations,error\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%g,%d,%.6f,%.17g,%d,", r.grid_value, r.ok ? 1 : 0,
                  r.best_accuracy, r.best_objective, r.iterations);
    out << buf << '"' << r.error << '"' << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace qubonn::pipeline
