#include "beliefdyn/bounded_lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "beliefdyn/errors.hpp"

namespace beliefdyn {

namespace {

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

double masked_dot(std::span<const double> a, std::span<const double> b,
                  const std::vector<char>& free) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (free[i]) sum += a[i] * b[i];
  return sum;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void project(std::vector<double>& x, std::span<const double> lo, std::span<const double> hi) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

// -H * g restricted to the free variables (two-loop recursion).
std::vector<double> quasi_newton_direction(const std::deque<Correction>& memory,
                                           std::span<const double> g,
                                           const std::vector<char>& free) {
  const std::size_t n = g.size();
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (free[i]) q[i] = g[i];

  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * masked_dot(memory[k].s, q, free);
    for (std::size_t i = 0; i < n; ++i)
      if (free[i]) q[i] -= alpha[k] * memory[k].y[i];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double scale = dot(last.s, last.y) / dot(last.y, last.y);
    for (auto& v : q) v *= scale;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * masked_dot(memory[k].y, q, free);
    for (std::size_t i = 0; i < n; ++i)
      if (free[i]) q[i] += memory[k].s[i] * (alpha[k] - beta);
  }
  for (auto& v : q) v = -v;
  return q;
}

}  // namespace

double projected_gradient_norm(std::span<const double> x, std::span<const double> grad,
                               std::span<const double> lower, std::span<const double> upper) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - grad[i], lower[i], upper[i]);
    norm = std::max(norm, std::abs(moved - x[i]));
  }
  return norm;
}

LbfgsResult minimize_bounded(const ObjectiveFn& objective, std::vector<double> x0,
                             std::span<const double> lower, std::span<const double> upper,
                             const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw ValidationError("minimize_bounded: bounds do not match the dimension");
  for (std::size_t i = 0; i < n; ++i)
    if (!(lower[i] <= upper[i])) throw ValidationError("minimize_bounded: lower > upper");

  LbfgsResult res;
  std::vector<double> x = std::move(x0);
  project(x, lower, upper);
  std::vector<double> g(n);
  double f = objective(x, g);
  res.evaluations = 1;

  auto finish = [&](LbfgsStop stop) {
    res.x = x;
    res.value = f;
    res.stop = stop;
    res.projected_gradient_norm = projected_gradient_norm(x, g, lower, upper);
    return res;
  };

  if (!std::isfinite(f) || !all_finite(g)) return finish(LbfgsStop::kNonFinite);

  std::deque<Correction> memory;
  std::vector<char> free(n);
  std::vector<double> xt(n), gt(n), step(n);
  int polish_left = -1;

  while (res.iterations < options.max_iterations) {
    if (projected_gradient_norm(x, g, lower, upper) <= options.gradient_tolerance)
      return finish(LbfgsStop::kGradientTolerance);

    for (std::size_t i = 0; i < n; ++i)
      free[i] = !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0));

    std::vector<double> d = quasi_newton_direction(memory, g, free);
    if (!(dot(g, d) < 0.0) || !all_finite(d)) {
      memory.clear();
      d = quasi_newton_direction(memory, g, free);
    }

    double t = 1.0;
    if (memory.empty()) {
      double dn = 0.0;
      for (double v : d) dn = std::max(dn, std::abs(v));
      if (dn > 1.0) t = 1.0 / dn;
    }

    bool accepted = false;
    bool sufficient_decrease = false;
    double ft = f;
    for (int bt = 0; bt < options.max_backtracks; ++bt, t *= 0.5) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        xt[i] = std::clamp(x[i] + t * d[i], lower[i], upper[i]);
        step[i] = xt[i] - x[i];
        moved = moved || step[i] != 0.0;
      }
      if (!moved) break;
      ft = objective(xt, gt);
      ++res.evaluations;
      if (!std::isfinite(ft) || !all_finite(gt)) continue;
      // Armijo, or, once f changes sit at rounding level, a step that still
      // shrinks the projected gradient.
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
      sufficient_decrease = ft <= f + 1e-4 * dot(g, step);
      if (sufficient_decrease ||
          (ft <= f + noise && projected_gradient_norm(xt, gt, lower, upper) <
                                  projected_gradient_norm(x, g, lower, upper))) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      return finish(polish_left >= 0 ? LbfgsStop::kFunctionTolerance
                                     : LbfgsStop::kLineSearchFailure);
    }

    Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = xt[i] - x[i];
      c.y[i] = gt[i] - g[i];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-12 * dot(c.y, c.y) && sy > 0.0) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }

    const double f_prev = f;
    x = xt;
    g = gt;
    f = ft;
    ++res.iterations;

    const double scale = std::max({std::abs(f_prev), std::abs(f), 1.0});
    if (polish_left >= 0) {
      if (--polish_left < 0) return finish(LbfgsStop::kFunctionTolerance);
    } else if (sufficient_decrease && f_prev - f <= options.function_tolerance * scale) {
      // Relative decrease has stalled. Keep going for a few gradient-driven
      // steps so the returned point also meets the gradient tolerance when
      // rounding allows it.
      if (options.polish_iterations <= 0) return finish(LbfgsStop::kFunctionTolerance);
      polish_left = options.polish_iterations;
    }
  }
  if (projected_gradient_norm(x, g, lower, upper) <= options.gradient_tolerance)
    return finish(LbfgsStop::kGradientTolerance);
  return finish(LbfgsStop::kMaxIterations);
}

}  // namespace beliefdyn
