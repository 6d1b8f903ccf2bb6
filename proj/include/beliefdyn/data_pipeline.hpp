#pragma once
// Behavioral record files, aggregation into grids, synthetic grids, and the
// emitted tables (heatmap, phase boundary, per-cell predictions).
//
// Record CSV header (count form):
//   dataset_id,model_id,layer,magnitude,shots,trials,concept_consistent
// or (probability form):
//   dataset_id,model_id,layer,magnitude,shots,trials,mean_p
// JSON-lines files carry the same keys, one object per line.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beliefdyn/behavior_grid.hpp"
#include "beliefdyn/belief_core.hpp"

namespace beliefdyn {

struct BehaviorRecord {
  std::string dataset_id;
  std::string model_id;
  std::int64_t layer = 0;
  double magnitude = 0.0;
  std::int64_t shots = 0;
  std::int64_t trials = 1;
  // Exactly one of these carries the observation.
  std::optional<std::int64_t> concept_consistent;
  std::optional<double> mean_p;

  double probability() const;
  // Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const BehaviorRecord&, const BehaviorRecord&) = default;
};

enum class RecordFormat { kCsv, kJsonLines };

// Picks the format from the extension: .jsonl / .ndjson, otherwise CSV.
RecordFormat format_for_path(const std::filesystem::path& path);

struct LoadResult {
  std::vector<BehaviorRecord> records;
  std::vector<std::string> warnings;
};

// Errors name the 1-based data row and the field.
LoadResult load_records(const std::filesystem::path& source, RecordFormat format);
LoadResult parse_records(const std::string& text, RecordFormat format);

// Count form when every record has a count, probability form otherwise.
std::string format_records(std::span<const BehaviorRecord> records, RecordFormat format);
void write_records(const std::filesystem::path& destination,
                   std::span<const BehaviorRecord> records, RecordFormat format);

using GridKey = std::pair<std::string, std::string>;  // (dataset_id, model_id)

std::map<GridKey, BehaviorGrid> aggregate(std::span<const BehaviorRecord> records);

// Records in probability form that reproduce `grid` under aggregate().
std::vector<BehaviorRecord> grid_to_records(const BehaviorGrid& grid,
                                            const std::string& dataset_id,
                                            const std::string& model_id,
                                            std::int64_t layer = 0);

enum class SimulationMode { kBinomial, kExact };

struct SimulationSpec {
  std::string dataset_id = "synthetic";
  std::string model_id = "belief-model";
  std::int64_t layer = 0;
  std::int64_t trials = 100;
  std::uint64_t seed = 0;
  SimulationMode mode = SimulationMode::kBinomial;
};

// One record per (magnitude, shots). Binomial draws come from a stream keyed
// by (seed, dataset, model, m, N); exact mode stores the posterior as mean_p.
std::vector<BehaviorRecord> simulate_grid(const BeliefParams& true_params,
                                          std::span<const double> magnitudes,
                                          std::span<const std::int64_t> shot_values,
                                          const SimulationSpec& spec);

// Magnitude and shot grids of the reference persona experiments: 33 magnitudes
// (0.1 steps over [-1, 1] plus +/-{1.5, 2, 2.5, 3, 5, 10}) and 25 shot counts.
std::vector<double> reference_magnitudes();
std::vector<std::int64_t> reference_shot_values();

struct PhaseBoundary {
  struct Entry {
    double magnitude;
    double n_star;
  };
  std::vector<Entry> entries;  // sorted by magnitude
};

PhaseBoundary phase_boundary(const BeliefParams& params, std::span<const double> magnitudes);

// 17 significant digits, shortest "%.17g" form.
std::string format_real(double x);

std::string format_heatmap(const BeliefParams& params, std::span<const double> magnitudes,
                           std::span<const std::int64_t> shot_values);
void emit_heatmap(const BeliefParams& params, std::span<const double> magnitudes,
                  std::span<const std::int64_t> shot_values,
                  const std::filesystem::path& destination);

std::string format_phase_boundary(const PhaseBoundary& boundary);
PhaseBoundary emit_phase_boundary(const BeliefParams& params, std::span<const double> magnitudes,
                                  const std::filesystem::path& destination);

// Per-cell observed vs predicted table. Carries raw shots plus the plotting
// surrogate (0 shots -> 0.6) and its log2.
std::string format_predictions(std::span<const GridCell> cells,
                               std::span<const double> predictions);

// Writes text with LF line endings; throws ValidationError when unwritable.
void write_text_file(const std::filesystem::path& destination, const std::string& text);

}  // namespace beliefdyn
