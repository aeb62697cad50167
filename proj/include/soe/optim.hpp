#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "soe/params.hpp"
#include "soe/rng.hpp"
#include "soe/tape.hpp"

namespace soe {

// SGD with classical momentum: v <- m*v + g; p <- p - lr*v.
template <typename T>
class BasicSgd {
public:
  explicit BasicSgd(double momentum = 0.9) : momentum_(momentum) {}

  void step(const std::vector<BasicParameter<T>*>& params, double lr) {
    for (auto* p : params) {
      if (!p->trainable) continue;
      auto& v = velocity_[p];
      if (v.size() != p->value.numel()) v.assign(p->value.numel(), T(0));
      const T m = static_cast<T>(momentum_);
      const T step_size = static_cast<T>(lr);
      for (size_t i = 0; i < v.size(); ++i) {
        v[i] = m * v[i] + p->grad[i];
        p->value[i] -= step_size * v[i];
      }
    }
  }

  void zero_grad(const std::vector<BasicParameter<T>*>& params) {
    for (auto* p : params) p->zero_grad();
  }

private:
  double momentum_;
  std::map<BasicParameter<T>*, std::vector<T>> velocity_;
};

using Sgd = BasicSgd<float>;

// Logarithmic decay: one decade every `decade_epochs` epochs, applied as a
// per-epoch factor 10^(-1/S). epoch is 0-based.
inline double lr_schedule(double lr_init, int epoch, int decade_epochs) {
  if (decade_epochs <= 0) return lr_init;
  return lr_init * std::pow(10.0, -static_cast<double>(epoch) / decade_epochs);
}

// Central finite differences against tape gradients. `build` must construct
// the full forward graph on a fresh tape (deterministic: dropout off,
// batchnorm in eval mode) and return the scalar loss node. Returns
// max over sampled coordinates of |g_ad - g_fd| / (|g_ad| + |g_fd| + 1e-8).
template <typename T>
double grad_check(const std::function<int(BasicTape<T>&)>& build,
                  const std::vector<BasicParameter<T>*>& params, double eps = 1e-3,
                  int n_samples = 0, Rng* rng = nullptr) {
  for (auto* p : params) p->zero_grad();
  {
    BasicTape<T> tape;
    const int loss = build(tape);
    tape.backward(loss);
  }

  auto eval = [&]() -> double {
    BasicTape<T> tape;
    const int loss = build(tape);
    return static_cast<double>(tape.value(loss).item());
  };

  // (param index, coordinate) pairs to probe
  std::vector<std::pair<size_t, size_t>> coords;
  if (n_samples > 0 && rng) {
    size_t total = 0;
    for (auto* p : params) total += p->value.numel();
    for (int s = 0; s < n_samples; ++s) {
      size_t pick = static_cast<size_t>(rng->uniform() * static_cast<double>(total));
      if (pick >= total) pick = total - 1;
      for (size_t pi = 0; pi < params.size(); ++pi) {
        if (pick < params[pi]->value.numel()) {
          coords.emplace_back(pi, pick);
          break;
        }
        pick -= params[pi]->value.numel();
      }
    }
  } else {
    for (size_t pi = 0; pi < params.size(); ++pi)
      for (size_t i = 0; i < params[pi]->value.numel(); ++i) coords.emplace_back(pi, i);
  }

  double worst = 0.0;
  for (auto [pi, i] : coords) {
    BasicParameter<T>* p = params[pi];
    const T saved = p->value[i];
    p->value[i] = saved + static_cast<T>(eps);
    const double up = eval();
    p->value[i] = saved - static_cast<T>(eps);
    const double dn = eval();
    p->value[i] = saved;
    const double fd = (up - dn) / (2.0 * eps);
    const double ad = static_cast<double>(p->grad[i]);
    const double rel = std::abs(ad - fd) / (std::abs(ad) + std::abs(fd) + 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

} // namespace soe
