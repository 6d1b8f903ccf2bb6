#include "beliefdyn/behavior_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "beliefdyn/errors.hpp"

namespace beliefdyn {

namespace {
bool key_less(const GridCell& x, const GridCell& y) {
  if (x.magnitude != y.magnitude) return x.magnitude < y.magnitude;
  return x.shots < y.shots;
}

bool contains(std::span<const double> set, double m) {
  return std::find(set.begin(), set.end(), m) != set.end();
}
}  // namespace

BehaviorGrid::BehaviorGrid(std::vector<GridCell> cells) : cells_(std::move(cells)) {
  for (const auto& c : cells_) {
    std::ostringstream where;
    where << "cell (m=" << c.magnitude << ", N=" << c.shots << ")";
    if (!std::isfinite(c.magnitude))
      throw ValidationError("BehaviorGrid: non-finite magnitude");
    if (c.shots < 0) throw ValidationError("BehaviorGrid: negative shots in " + where.str());
    if (!(c.mean_p >= 0.0 && c.mean_p <= 1.0))
      throw ValidationError("BehaviorGrid: mean_p outside [0, 1] in " + where.str());
    if (c.total_trials < 1)
      throw ValidationError("BehaviorGrid: total_trials < 1 in " + where.str());
  }
  std::sort(cells_.begin(), cells_.end(), key_less);
  for (std::size_t i = 1; i < cells_.size(); ++i) {
    if (!key_less(cells_[i - 1], cells_[i])) {
      std::ostringstream msg;
      msg << "BehaviorGrid: duplicate cell (m=" << cells_[i].magnitude
          << ", N=" << cells_[i].shots << ")";
      throw ValidationError(msg.str());
    }
  }
  for (const auto& c : cells_) {
    if (magnitudes_.empty() || magnitudes_.back() != c.magnitude)
      magnitudes_.push_back(c.magnitude);
    shot_values_.push_back(c.shots);
  }
  std::sort(shot_values_.begin(), shot_values_.end());
  shot_values_.erase(std::unique(shot_values_.begin(), shot_values_.end()), shot_values_.end());
}

const GridCell* BehaviorGrid::find(double magnitude, std::int64_t shots) const {
  GridCell probe{magnitude, shots, 0.0, 0};
  auto it = std::lower_bound(cells_.begin(), cells_.end(), probe, key_less);
  if (it == cells_.end() || it->magnitude != magnitude || it->shots != shots) return nullptr;
  return &*it;
}

BehaviorGrid BehaviorGrid::with_magnitudes(std::span<const double> keep) const {
  std::vector<GridCell> out;
  for (const auto& c : cells_)
    if (contains(keep, c.magnitude)) out.push_back(c);
  return BehaviorGrid(std::move(out));
}

BehaviorGrid BehaviorGrid::without_magnitudes(std::span<const double> drop) const {
  std::vector<GridCell> out;
  for (const auto& c : cells_)
    if (!contains(drop, c.magnitude)) out.push_back(c);
  return BehaviorGrid(std::move(out));
}

bool operator==(const BehaviorGrid& x, const BehaviorGrid& y) {
  if (x.cells_.size() != y.cells_.size()) return false;
  for (std::size_t i = 0; i < x.cells_.size(); ++i) {
    const auto& p = x.cells_[i];
    const auto& q = y.cells_[i];
    if (p.magnitude != q.magnitude || p.shots != q.shots || p.mean_p != q.mean_p ||
        p.total_trials != q.total_trials)
      return false;
  }
  return true;
}

}  // namespace beliefdyn
