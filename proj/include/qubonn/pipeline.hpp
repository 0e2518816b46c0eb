#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qubonn/dataio.hpp"
#include "qubonn/qcbo.hpp"
#include "qubonn/qcgd.hpp"
#include "qubonn/qnet.hpp"
#include "qubonn/qubo.hpp"

namespace qubonn::pipeline {

/// NetSpec for the coat/sandal experiment family: sigmoid surrogate on the
/// given breakpoints, +-1 weights and biases, ternary features.
qcbo::NetSpec experiment_netspec(const std::vector<double>& breakpoints,
                                 const std::vector<int>& dims = {3, 2, 1});

struct PrepareResult {
  dataio::Thresholds thresholds;
  std::vector<qcbo::Sample> train_full;
  std::vector<qcbo::Sample> train_prototypes;
  std::vector<qcbo::Sample> test;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

PrepareResult prepare(const std::string& train_images, const std::string& train_labels,
                      const std::string& test_images, const std::string& test_labels,
                      const std::vector<int>& keep = {4, 5});

/// Writes train/test CSVs plus a manifest with thresholds, counts, config and
/// input hashes. Returns the manifest JSON text.
std::string write_prepare_outputs(const PrepareResult& prep, const std::string& out_dir,
                                  const std::vector<std::string>& input_paths,
                                  const std::string& config_json);

struct ContinuationStage {
  double factor = 1.0;   // penalty weight multiplier; the last stage must be 1
  double t_init = 0.0;   // 0 = auto (max |coefficient| of the staged QUBO)
  double t_final = 1e-3;
};

struct DirectConfig {
  qubo::AnnealSchedule schedule;  // sweeps per stage; t_* used when stages leave 0
  int restarts = 5;
  uint64_t seed = 1;
  std::string oracle = "sa";  // "sa" or "exact"
  int quantized_slack_levels = 16;
  // penalty continuation: a soft stage where the loss still steers the weight
  // search, then the exact penalty form started cool enough to keep the
  // warm start. {{1,0,1e-3}} disables the continuation.
  std::vector<ContinuationStage> continuation = {{0.25, 0.0, 0.05}, {1.0, 1.2, 0.005}};
};

struct RestartOutcome {
  double objective = 0.0;
  std::vector<uint8_t> assignment;
  uint64_t seed = 0;
};

struct DirectResult {
  qcbo::PenaltyForm form;
  std::vector<RestartOutcome> restarts;
  int best_index = 0;
  double wall_seconds = 0.0;
};

/// Direct mode: Rosenberg linearization, penalty-form QUBO, one oracle call
/// per restart, best objective wins.
DirectResult direct_solve(const qcbo::QcboModel& raw_model, const DirectConfig& cfg);

/// Exact direct solve at desk scale: enumerates every weight/bias
/// configuration (feasible while the parameter bits stay small), extends each
/// to its unique feasible completion with optimal slacks, and returns the
/// penalty-form optimum. The exact counterpart of the SA oracle.
DirectResult exhaustive_direct_solve(const qcbo::QcboModel& raw_model, const qcbo::NetSpec& spec,
                                     const std::vector<qcbo::Sample>& data,
                                     int quantized_slack_levels = 16, int max_param_bits = 24);

struct QcgdSolveResult {
  qcbo::QcboModel linearized;
  qcgd::CopositiveProgram prog;
  qcgd::RunResult run;
};

QcgdSolveResult qcgd_solve(const qcbo::QcboModel& raw_model, const qcgd::RunConfig& cfg,
                           const std::string& oracle_name = "exact",
                           const qubo::AnnealSchedule& sa_schedule = {});

/// min x1 + x2 subject to x1 + x2 = 1; optimum 1 (two optima). The reference
/// problem for convergence experiments.
qcbo::QcboModel toy_equality_model();

/// min x1 + 2 x2 subject to x1 + x2 = 1; unique optimum (1,0), value 1.
/// Used where a stable extracted solution is required (precision sweeps).
qcbo::QcboModel toy_unique_model();

/// min -(x1 + x2) subject to x1 + x2 = 1; optimum -1. The objective pulls
/// against the constraint, so the iterate balances at the augmented-Lagrangian
/// equilibrium and the residuals decay at the theoretical 1/sqrt(t) rate.
qcbo::QcboModel toy_tension_model();

struct EvalReport {
  double accuracy = 0.0;
  qnet::ResourceReport resources;
};

EvalReport evaluate(const qnet::QuantNet& net, const std::vector<qnet::LabeledVec>& dataset,
                    double threshold = 0.5, int latency_passes = 10000);

std::vector<qnet::LabeledVec> to_labeled(const std::vector<qcbo::Sample>& samples);

struct SweepRow {
  double grid_value = 0.0;
  bool ok = false;
  double best_accuracy = 0.0;
  double best_objective = 0.0;
  int iterations = 0;  // digits sweep: converged-at iteration
  std::string error;
};

/// Breakpoint sweep: grids [-8, -c, 0, c, 8]; accuracy is the best over the
/// per-restart decoded networks.
std::vector<SweepRow> sweep_breakpoint_c(const std::vector<qcbo::Sample>& train_prototypes,
                                         const std::vector<qcbo::Sample>& test,
                                         const std::vector<int>& c_values,
                                         const DirectConfig& base, int workers = 1);

/// Precision sweep on the toy fixture: one QCGD run per digit count.
std::vector<SweepRow> sweep_precision_digits(const std::vector<int>& digit_values,
                                             const qcgd::RunConfig& base, int workers = 1);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& kind,
                     const std::string& path);

/// Atomic file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace qubonn::pipeline
