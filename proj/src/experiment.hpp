#pragma once

#include <map>
#include <string>
#include <vector>

#include "config.hpp"

namespace genlab {

struct CellToggles {
  bool hsm = false;
  bool ds = false;
  bool bna = false;
};

std::string cell_name(const CellToggles& t);  // "baseline", "hsm+bna", ...

// Trains one toggle combination end to end and evaluates on the real test
// split. BNA runs as a post-training adaptation on the unlabeled real train
// split. Returns both the adapted and unadapted accuracy so an ablation can
// fill two table cells from one training run.
struct TrainedCellResult {
  double accuracy_raw = 0.0;
  double accuracy_bna = 0.0;
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;
};

TrainedCellResult run_trained_cell(const ExperimentConfig& cfg, bool use_hsm,
                                   bool use_ds, uint64_t seed,
                                   Classifier* out_model = nullptr,
                                   Classifier* out_model_bna = nullptr);

// accuracy of a classifier trained on real data, same budget (the reference row)
double run_real_reference(const ExperimentConfig& cfg, uint64_t seed);

struct CellSummary {
  CellToggles toggles;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AblationResult {
  std::vector<CellSummary> cells;  // 8 toggle combinations
  CellSummary real_reference;
  std::vector<std::string> failures;  // cells that errored, with messages

  const CellSummary& cell(bool hsm, bool ds, bool bna) const;
};

AblationResult run_ablation(const ExperimentConfig& cfg, const std::string& out_dir,
                            int threads = 1);
std::string ablation_summary_text(const AblationResult& result);

struct SweepPoint {
  double r = 0.0;
  std::vector<double> per_seed_raw;   // DS without BNA
  std::vector<double> per_seed_bna;   // DS with BNA
  double mean_raw = 0.0, std_raw = 0.0;
  double mean_bna = 0.0, std_bna = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<std::string> failures;
};

SweepResult run_r_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                        int threads = 1);
std::string sweep_summary_text(const SweepResult& result);

// ---- gradient verification ------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckOptions {
  std::string corrupt;  // fault-injection hook: name of a check to poison
  uint64_t seed = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass = false;
  double worst = 0.0;
};

GradCheckReport gradcheck_command(const GradCheckOptions& options = {});
std::string gradcheck_report_text(const GradCheckReport& report);

// ---- inspection -----------------------------------------------------------

std::string world_inspect(const ExperimentConfig& cfg, const std::string& dump_path);

}  // namespace genlab
