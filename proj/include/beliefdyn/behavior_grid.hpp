#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace beliefdyn {

struct GridCell {
  double magnitude = 0.0;
  std::int64_t shots = 0;
  double mean_p = 0.0;          // mean concept-consistent probability
  std::int64_t total_trials = 0;
};

// Mean concept-consistent probability per (magnitude, shots) cell. Cells are
// kept sorted by magnitude, then shots.
class BehaviorGrid {
 public:
  BehaviorGrid() = default;
  // Throws ValidationError on duplicate keys, mean_p outside [0, 1],
  // non-finite magnitudes, negative shots or trials < 1.
  explicit BehaviorGrid(std::vector<GridCell> cells);

  std::span<const GridCell> cells() const { return cells_; }
  const std::vector<double>& magnitudes() const { return magnitudes_; }
  const std::vector<std::int64_t>& shot_values() const { return shot_values_; }
  bool empty() const { return cells_.empty(); }
  std::size_t size() const { return cells_.size(); }

  const GridCell* find(double magnitude, std::int64_t shots) const;

  // Sub-grid holding only cells whose magnitude is (or is not) in `keep`.
  BehaviorGrid with_magnitudes(std::span<const double> keep) const;
  BehaviorGrid without_magnitudes(std::span<const double> drop) const;

  friend bool operator==(const BehaviorGrid& x, const BehaviorGrid& y);

 private:
  std::vector<GridCell> cells_;
  std::vector<double> magnitudes_;
  std::vector<std::int64_t> shot_values_;
};

}  // namespace beliefdyn
