// Copyright 2026 The branch_mpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "branch_mpc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace branch_mpc
{

namespace
{

double dot(std::span<const double> a, std::span<const double> b)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

struct Correction
{
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

BoxLbfgsResult minimize_box(
  const GradientObjective & objective, std::span<const double> lower,
  std::span<const double> upper, std::vector<double> & x, const BoxLbfgsSettings & settings)
{
  const std::size_t n = x.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("minimize_box: bound dimensions do not match x");
  }
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::clamp(x[i], lower[i], upper[i]);
  }

  BoxLbfgsResult result;
  std::vector<double> g(n), g_new(n), d(n), x_new(n), q(n), alpha(settings.memory);
  std::vector<bool> free_var(n);
  std::deque<Correction> memory;

  double f = objective(x, g);
  ++result.evaluations;
  int stalled = 0;

  for (int it = 0; it < settings.max_iterations; ++it) {
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = std::clamp(x[i] - g[i], lower[i], upper[i]);
      pg = std::max(pg, std::abs(x[i] - xi));
      const bool at_lower = x[i] <= lower[i] && g[i] > 0.0;
      const bool at_upper = x[i] >= upper[i] && g[i] < 0.0;
      free_var[i] = !(at_lower || at_upper);
    }
    result.projected_gradient = pg;
    result.iterations = it;
    if (pg <= settings.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion restricted to the free variables.
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = free_var[i] ? g[i] : 0.0;
    }
    const auto m = static_cast<int>(memory.size());
    for (int k = m - 1; k >= 0; --k) {
      const auto & c = memory[k];
      double a = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) a += c.s[i] * q[i];
      }
      alpha[k] = c.rho * a;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] -= alpha[k] * c.y[i];
      }
    }
    double gamma = 1.0;
    if (m > 0) {
      const auto & c = memory.back();
      gamma = dot(c.s, c.y) / dot(c.y, c.y);
    } else {
      double gmax = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) gmax = std::max(gmax, std::abs(g[i]));
      }
      gamma = gmax > 1.0 ? 1.0 / gmax : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      q[i] *= gamma;
    }
    for (int k = 0; k < m; ++k) {
      const auto & c = memory[k];
      double b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) b += c.y[i] * q[i];
      }
      b *= c.rho;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) q[i] += c.s[i] * (alpha[k] - b);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = free_var[i] ? -q[i] : 0.0;
    }
    double slope = dot(d, g);
    if (!(slope < 0.0)) {
      // Curvature information is stale; fall back to scaled steepest descent.
      memory.clear();
      double gmax = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (free_var[i]) gmax = std::max(gmax, std::abs(g[i]));
      }
      const double scale = gmax > 1.0 ? 1.0 / gmax : 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = free_var[i] ? -scale * g[i] : 0.0;
      }
      slope = dot(d, g);
      if (!(slope < 0.0)) {
        result.converged = true;
        break;
      }
    }

    // Armijo backtracking along the projection arc.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x_new[i] = std::clamp(x[i] + step * d[i], lower[i], upper[i]);
        decrease += g[i] * (x_new[i] - x[i]);
      }
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      break;
    }

    Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = x_new[i] - x[i];
      c.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-12 * std::sqrt(dot(c.y, c.y) * dot(c.s, c.s))) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (static_cast<int>(memory.size()) > settings.memory) {
        memory.pop_front();
      }
    }

    const double rel = (f - f_new) / std::max({1.0, std::abs(f), std::abs(f_new)});
    stalled = rel < settings.function_tolerance ? stalled + 1 : 0;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    result.iterations = it + 1;
    if (stalled >= 3) {
      result.converged = true;
      break;
    }
  }
  result.value = f;
  return result;
}

}  // namespace branch_mpc
