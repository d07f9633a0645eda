// Copyright 2026 The rlclass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Finite-difference gradient checks: analytic float gradients from the tape
// against central differences of the double-precision reference.

#ifndef RLCLASS_TESTS_ORACLE_GRADCHECK_HPP_
#define RLCLASS_TESTS_ORACLE_GRADCHECK_HPP_

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/reference_ops.hpp"
#include "rlclass/autodiff.hpp"
#include "rlclass/network.hpp"

namespace rlclass::oracle {

struct GradReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::size_t refined = 0;  // coordinates re-checked at a smaller step
  double worst_abs = 0.0;
  std::string first_failure;

  bool ok() const { return failures == 0 && checked > 0; }
  void add(const std::string& where, double analytic, double numeric) {
    ++checked;
    worst_abs = std::max(worst_abs, std::fabs(analytic - numeric));
    if (!grad_close(analytic, numeric)) {
      if (failures++ == 0) {
        std::ostringstream os;
        os << where << ": analytic " << analytic << " vs numeric " << numeric;
        first_failure = os.str();
      }
    }
  }
  void merge(const GradReport& other) {
    checked += other.checked;
    refined += other.refined;
    if (failures == 0 && other.failures) first_failure = other.first_failure;
    failures += other.failures;
    worst_abs = std::max(worst_abs, other.worst_abs);
  }
};

inline Tensor uniform_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline std::vector<std::size_t> sample_coords(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, n));
  return idx;
}

// One op under test: `build` records a scalar loss from differentiable input
// Vars; `reference` evaluates the same loss in double.
struct OpCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Var(Tape&, const std::vector<Var>&)> build;
  std::function<double(const std::vector<Vec<double>>&)> reference;
};

inline GradReport check_op(const OpCase& c, Rng& rng, std::size_t coords = 10, double h = 1e-3) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : c.inputs) vars.push_back(tape.input(t));
  tape.backward(c.build(tape, vars));

  std::vector<Vec<double>> x;
  for (const auto& t : c.inputs) x.push_back(cast<double>(t));
  GradReport report;
  for (std::size_t a = 0; a < c.inputs.size(); ++a) {
    const Tensor& g = vars[a].grad();
    for (std::size_t i : sample_coords(c.inputs[a].size(), coords, rng)) {
      const double numeric = central_difference(x[a], i, h, [&] { return c.reference(x); });
      report.add(c.name + " input " + std::to_string(a) + "[" + std::to_string(i) + "]",
                 g.empty() ? 0.0 : g[i], numeric);
    }
  }
  return report;
}

// Central difference at `h`. When the two one-sided quotients disagree, a
// relu or pooling kink lies within the step, so the step shrinks by 100x
// (down to 1e-8) until they agree. `refined` counts coordinates that needed it.
template <typename F>
double kink_aware_difference(std::vector<double>& x, std::size_t i, double h, F&& f,
                             bool* refined) {
  const double f0 = f();
  while (true) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f();
    x[i] = orig - h;
    const double fm = f();
    x[i] = orig;
    const double forward = (fp - f0) / h, backward = (f0 - fm) / h;
    if (grad_close(forward, backward) || h <= 1e-8) return (fp - fm) / (2.0 * h);
    h *= 1e-2;
    *refined = true;
  }
}

// Mean cross-entropy of `net` on a batch: tape gradients for every parameter
// tensor against central differences of the double reference network. The
// default step is small because a step of 1e-3 moves thousands of relu and
// pooling decisions in a deep stack; the few kinks closer than that are
// handled by kink_aware_difference.
inline GradReport check_network(Network& net, const Tensor& images, const std::vector<int>& labels,
                                Rng& rng, std::size_t coords = 10, double h = 1e-6) {
  net.zero_grad();
  {
    Tape tape;
    Var probs = net.forward(tape, tape.constant_view(images));
    const std::vector<float> coeff(labels.size(), -1.0f / static_cast<float>(labels.size()));
    tape.backward(ops::weighted_log_pick(probs, labels, coeff, 1e-12f));
  }
  auto params = network_params<double>(net);
  const Vec<double> x = cast<double>(images);
  GradReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& param = net.parameters()[p];
    for (std::size_t i : sample_coords(param.value.size(), coords, rng)) {
      bool refined = false;
      const double numeric = kink_aware_difference(
          params[p], i, h, [&] { return network_ce(net.config(), params, x, labels); }, &refined);
      report.refined += refined;
      report.add(param.name + "[" + std::to_string(i) + "]", param.grad[i], numeric);
    }
  }
  return report;
}

}  // namespace rlclass::oracle

#endif  // RLCLASS_TESTS_ORACLE_GRADCHECK_HPP_
