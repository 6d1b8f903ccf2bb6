#include "beliefdyn/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "beliefdyn/errors.hpp"
#include "beliefdyn/fit_engine.hpp"
#include "beliefdyn/kernels.hpp"
#include "beliefdyn/rng.hpp"

namespace beliefdyn {

namespace {

constexpr const char* kCountHeader =
    "dataset_id,model_id,layer,magnitude,shots,trials,concept_consistent";
constexpr const char* kProbabilityHeader =
    "dataset_id,model_id,layer,magnitude,shots,trials,mean_p";
constexpr std::size_t kFieldCount = 7;
constexpr const char* kFieldNames[kFieldCount] = {
    "dataset_id", "model_id", "layer", "magnitude", "shots", "trials", "observation"};

std::string row_error(std::size_t row, const std::string& field, const std::string& what) {
  return "row " + std::to_string(row) + ", field '" + field + "': " + what;
}

std::int64_t parse_int(std::string_view s, std::size_t row, const char* field) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ValidationError(row_error(row, field, "not an integer: '" + std::string(s) + "'"));
  return v;
}

double parse_real(std::string_view s, std::size_t row, const char* field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw ValidationError(row_error(row, field, "not a finite number: '" + std::string(s) + "'"));
  return v == 0.0 ? 0.0 : v;
}

void validate_id(const std::string& id, const char* field) {
  if (id.empty()) throw ValidationError(std::string(field) + " must be non-empty");
  if (id.find_first_of(",\"\r\n") != std::string::npos)
    throw ValidationError(std::string(field) + " may not contain commas, quotes or newlines");
}

std::vector<std::string_view> split_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

LoadResult parse_csv(const std::string& text) {
  LoadResult out;
  auto lines = split_lines(text);
  while (!lines.empty() && is_blank(lines.back())) lines.pop_back();
  if (lines.empty()) {
    out.warnings.push_back("empty file: no records");
    return out;
  }
  bool counts;
  if (lines.front() == kCountHeader) {
    counts = true;
  } else if (lines.front() == kProbabilityHeader) {
    counts = false;
  } else {
    throw ValidationError("unrecognized CSV header '" + std::string(lines.front()) +
                          "'; expected '" + kCountHeader + "' or '" + kProbabilityHeader + "'");
  }

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;
    std::vector<std::string_view> f;
    std::string_view rest = lines[li];
    while (true) {
      auto c = rest.find(',');
      f.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (f.size() != kFieldCount)
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(kFieldCount) + " fields, found " +
                            std::to_string(f.size()));
    BehaviorRecord r;
    r.dataset_id = std::string(f[0]);
    r.model_id = std::string(f[1]);
    if (r.dataset_id.empty()) throw ValidationError(row_error(row, "dataset_id", "empty"));
    if (r.model_id.empty()) throw ValidationError(row_error(row, "model_id", "empty"));
    r.layer = parse_int(f[2], row, "layer");
    r.magnitude = parse_real(f[3], row, "magnitude");
    r.shots = parse_int(f[4], row, "shots");
    r.trials = parse_int(f[5], row, "trials");
    if (counts)
      r.concept_consistent = parse_int(f[6], row, "concept_consistent");
    else
      r.mean_p = parse_real(f[6], row, "mean_p");
    try {
      r.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(row) + ", " + e.what());
    }
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) out.warnings.push_back("header only: no records");
  return out;
}

template <typename T>
T json_field(const nlohmann::json& obj, const char* key, std::size_t row) {
  if (!obj.contains(key)) throw ValidationError(row_error(row, key, "missing"));
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(row_error(row, key, "wrong type"));
  }
}

LoadResult parse_jsonl(const std::string& text) {
  LoadResult out;
  std::size_t row = 0;
  for (auto line : split_lines(text)) {
    if (is_blank(line)) continue;
    ++row;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("row " + std::to_string(row) + ": malformed JSON");
    }
    if (!obj.is_object()) throw ValidationError("row " + std::to_string(row) + ": not an object");
    BehaviorRecord r;
    r.dataset_id = json_field<std::string>(obj, "dataset_id", row);
    r.model_id = json_field<std::string>(obj, "model_id", row);
    r.layer = json_field<std::int64_t>(obj, "layer", row);
    r.magnitude = json_field<double>(obj, "magnitude", row);
    if (r.magnitude == 0.0) r.magnitude = 0.0;
    r.shots = json_field<std::int64_t>(obj, "shots", row);
    r.trials = json_field<std::int64_t>(obj, "trials", row);
    const bool has_count = obj.contains("concept_consistent");
    const bool has_p = obj.contains("mean_p");
    if (has_count == has_p)
      throw ValidationError(row_error(row, "concept_consistent",
                                      "exactly one of concept_consistent / mean_p required"));
    if (has_count)
      r.concept_consistent = json_field<std::int64_t>(obj, "concept_consistent", row);
    else
      r.mean_p = json_field<double>(obj, "mean_p", row);
    try {
      r.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(row) + ", " + e.what());
    }
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) out.warnings.push_back("empty file: no records");
  return out;
}

}  // namespace

double BehaviorRecord::probability() const {
  if (concept_consistent)
    return static_cast<double>(*concept_consistent) / static_cast<double>(trials);
  return mean_p.value_or(0.0);
}

void BehaviorRecord::validate() const {
  auto fail = [](const char* field, const std::string& what) {
    throw ValidationError(std::string("field '") + field + "': " + what);
  };
  if (dataset_id.empty()) fail("dataset_id", "empty");
  if (model_id.empty()) fail("model_id", "empty");
  if (!std::isfinite(magnitude)) fail("magnitude", "not finite");
  if (shots < 0) fail("shots", "must be >= 0");
  if (trials < 1) fail("trials", "must be >= 1");
  if (concept_consistent.has_value() == mean_p.has_value())
    fail("concept_consistent", "exactly one of concept_consistent / mean_p required");
  if (concept_consistent && (*concept_consistent < 0 || *concept_consistent > trials))
    fail("concept_consistent", "must lie in [0, trials]");
  if (mean_p && !(*mean_p >= 0.0 && *mean_p <= 1.0)) fail("mean_p", "must lie in [0, 1]");
}

RecordFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return RecordFormat::kJsonLines;
  return RecordFormat::kCsv;
}

LoadResult parse_records(const std::string& text, RecordFormat format) {
  return format == RecordFormat::kCsv ? parse_csv(text) : parse_jsonl(text);
}

LoadResult load_records(const std::filesystem::path& source, RecordFormat format) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + source.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_records(buf.str(), format);
  } catch (const ValidationError& e) {
    throw ValidationError(source.string() + ": " + e.what());
  }
}

std::string format_real(double x) {
  char buf[40];
  if (x == 0.0) x = 0.0;  // no "-0" in output
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_records(std::span<const BehaviorRecord> records, RecordFormat format) {
  const bool counts = std::all_of(records.begin(), records.end(), [](const BehaviorRecord& r) {
    return r.concept_consistent.has_value();
  });
  std::string out;
  if (format == RecordFormat::kCsv) out += std::string(counts ? kCountHeader : kProbabilityHeader) + "\n";
  for (const auto& r : records) {
    r.validate();
    validate_id(r.dataset_id, "dataset_id");
    validate_id(r.model_id, "model_id");
    if (format == RecordFormat::kCsv) {
      out += r.dataset_id + "," + r.model_id + "," + std::to_string(r.layer) + "," +
             format_real(r.magnitude) + "," + std::to_string(r.shots) + "," +
             std::to_string(r.trials) + ",";
      out += counts ? std::to_string(*r.concept_consistent) : format_real(r.probability());
      out += "\n";
    } else {
      nlohmann::ordered_json j;
      j["dataset_id"] = r.dataset_id;
      j["model_id"] = r.model_id;
      j["layer"] = r.layer;
      j["magnitude"] = r.magnitude;
      j["shots"] = r.shots;
      j["trials"] = r.trials;
      if (r.concept_consistent)
        j["concept_consistent"] = *r.concept_consistent;
      else
        j["mean_p"] = *r.mean_p;
      out += j.dump() + "\n";
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& destination, const std::string& text) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + destination.string());
  out << text;
  out.flush();
  if (!out) throw ValidationError("failed writing " + destination.string());
}

void write_records(const std::filesystem::path& destination,
                   std::span<const BehaviorRecord> records, RecordFormat format) {
  write_text_file(destination, format_records(records, format));
}

std::map<GridKey, BehaviorGrid> aggregate(std::span<const BehaviorRecord> records) {
  struct Contribution {
    std::int64_t trials;
    std::optional<std::int64_t> count;
    double p;
  };
  using CellKey = std::pair<double, std::int64_t>;
  std::map<GridKey, std::map<CellKey, std::vector<Contribution>>> pooled;
  for (const auto& r : records) {
    r.validate();
    pooled[{r.dataset_id, r.model_id}][{r.magnitude, r.shots}].push_back(
        {r.trials, r.concept_consistent, r.probability()});
  }

  std::map<GridKey, BehaviorGrid> out;
  for (auto& [key, cells] : pooled) {
    std::vector<GridCell> grid_cells;
    grid_cells.reserve(cells.size());
    for (auto& [cell, parts] : cells) {
      std::int64_t trials = 0;
      for (const auto& c : parts) trials += c.trials;
      double mean_p;
      const bool all_counts = std::all_of(parts.begin(), parts.end(),
                                          [](const Contribution& c) { return c.count.has_value(); });
      if (parts.size() == 1) {
        mean_p = parts.front().p;
      } else if (all_counts) {
        std::int64_t successes = 0;
        for (const auto& c : parts) successes += *c.count;
        mean_p = static_cast<double>(successes) / static_cast<double>(trials);
      } else {
        // Fixed summation order keeps pooling independent of record order.
        std::sort(parts.begin(), parts.end(), [](const Contribution& x, const Contribution& y) {
          return std::tie(x.p, x.trials) < std::tie(y.p, y.trials);
        });
        double weighted = 0.0;
        for (const auto& c : parts) weighted += c.p * static_cast<double>(c.trials);
        mean_p = std::clamp(weighted / static_cast<double>(trials), 0.0, 1.0);
      }
      grid_cells.push_back({cell.first, cell.second, mean_p, trials});
    }
    out.emplace(key, BehaviorGrid(std::move(grid_cells)));
  }
  return out;
}

std::vector<BehaviorRecord> grid_to_records(const BehaviorGrid& grid,
                                            const std::string& dataset_id,
                                            const std::string& model_id, std::int64_t layer) {
  std::vector<BehaviorRecord> out;
  out.reserve(grid.size());
  for (const auto& c : grid.cells()) {
    BehaviorRecord r;
    r.dataset_id = dataset_id;
    r.model_id = model_id;
    r.layer = layer;
    r.magnitude = c.magnitude;
    r.shots = c.shots;
    r.trials = c.total_trials;
    r.mean_p = c.mean_p;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BehaviorRecord> simulate_grid(const BeliefParams& true_params,
                                          std::span<const double> magnitudes,
                                          std::span<const std::int64_t> shot_values,
                                          const SimulationSpec& spec) {
  if (spec.trials < 1) throw ValidationError("simulate_grid: trials must be >= 1");
  validate_id(spec.dataset_id, "dataset_id");
  validate_id(spec.model_id, "model_id");
  for (auto n : shot_values)
    if (n < 0) throw ValidationError("simulate_grid: shot values must be >= 0");
  for (double m : magnitudes)
    if (!std::isfinite(m)) throw ValidationError("simulate_grid: magnitudes must be finite");

  const std::vector<double> p =
      kernels::posterior_surface_parallel(true_params, magnitudes, shot_values);

  std::vector<std::int64_t> counts;
  if (spec.mode == SimulationMode::kBinomial) {
    const std::uint64_t base = hash_combine(
        hash_combine(spec.seed, hash_string(spec.dataset_id)), hash_string(spec.model_id));
    std::vector<std::uint64_t> keys;
    keys.reserve(p.size());
    for (double m : magnitudes)
      for (auto n : shot_values)
        keys.push_back(hash_combine(hash_combine(base, hash_double(m)),
                                    static_cast<std::uint64_t>(n)));
    counts = kernels::binomial_draws_parallel(p, keys, spec.trials);
  }

  std::vector<BehaviorRecord> out;
  out.reserve(p.size());
  std::size_t i = 0;
  for (double m : magnitudes)
    for (auto n : shot_values) {
      BehaviorRecord r;
      r.dataset_id = spec.dataset_id;
      r.model_id = spec.model_id;
      r.layer = spec.layer;
      r.magnitude = m == 0.0 ? 0.0 : m;
      r.shots = n;
      r.trials = spec.trials;
      if (spec.mode == SimulationMode::kBinomial)
        r.concept_consistent = counts[i];
      else
        r.mean_p = p[i];
      out.push_back(std::move(r));
      ++i;
    }
  return out;
}

std::vector<double> reference_magnitudes() {
  std::vector<double> m = {-10.0, -5.0, -3.0, -2.5, -2.0, -1.5};
  for (int i = -10; i <= 10; ++i) m.push_back(i / 10.0);
  for (double x : {1.5, 2.0, 2.5, 3.0, 5.0, 10.0}) m.push_back(x);
  return m;
}

std::vector<std::int64_t> reference_shot_values() {
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 16, 20, 24, 28, 32, 40, 48, 56, 64, 80, 96, 112, 128};
}

PhaseBoundary phase_boundary(const BeliefParams& params, std::span<const double> magnitudes) {
  PhaseBoundary pb;
  for (double m : magnitudes) pb.entries.push_back({m, transition_point(params, m)});
  std::stable_sort(pb.entries.begin(), pb.entries.end(),
                   [](const auto& x, const auto& y) { return x.magnitude < y.magnitude; });
  return pb;
}

std::string format_heatmap(const BeliefParams& params, std::span<const double> magnitudes,
                           std::span<const std::int64_t> shot_values) {
  const auto surface = kernels::posterior_surface_parallel(params, magnitudes, shot_values);
  std::string out = "magnitude";
  for (auto n : shot_values) out += "," + std::to_string(n);
  out += "\n";
  for (std::size_t r = 0; r < magnitudes.size(); ++r) {
    out += format_real(magnitudes[r]);
    for (std::size_t c = 0; c < shot_values.size(); ++c)
      out += "," + format_real(surface[r * shot_values.size() + c]);
    out += "\n";
  }
  return out;
}

void emit_heatmap(const BeliefParams& params, std::span<const double> magnitudes,
                  std::span<const std::int64_t> shot_values,
                  const std::filesystem::path& destination) {
  write_text_file(destination, format_heatmap(params, magnitudes, shot_values));
}

std::string format_phase_boundary(const PhaseBoundary& boundary) {
  std::string out = "magnitude,n_star\n";
  for (const auto& e : boundary.entries)
    out += format_real(e.magnitude) + "," + format_real(e.n_star) + "\n";
  return out;
}

PhaseBoundary emit_phase_boundary(const BeliefParams& params, std::span<const double> magnitudes,
                                  const std::filesystem::path& destination) {
  PhaseBoundary pb = phase_boundary(params, magnitudes);
  write_text_file(destination, format_phase_boundary(pb));
  return pb;
}

std::string format_predictions(std::span<const GridCell> cells,
                               std::span<const double> predictions) {
  if (cells.size() != predictions.size())
    throw ValidationError("format_predictions: cells and predictions differ in length");
  std::string out = "magnitude,shots,shots_plot,log2_shots_plot,observed,predicted\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const double plot = c.shots == 0 ? kZeroShotSurrogate : static_cast<double>(c.shots);
    out += format_real(c.magnitude) + "," + std::to_string(c.shots) + "," + format_real(plot) +
           "," + format_real(std::log2(plot)) + "," + format_real(c.mean_p) + "," +
           format_real(predictions[i]) + "\n";
  }
  return out;
}

}  // namespace beliefdyn
