#include "mfrbp/nn/adam.hpp"

#include <cmath>

namespace mfrbp::nn {

void adam_step(ParameterStore& store, AdamState& state) {
  ++state.step;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (const auto& name : store.names()) {
    Tensor& w = store.value(name);
    const Tensor& g = store.grad(name);
    auto [mi, m_new] = state.first_moment.try_emplace(name, w.shape());
    auto [vi, v_new] = state.second_moment.try_emplace(name, w.shape());
    (void)m_new;
    (void)v_new;
    Tensor& m = mi->second;
    Tensor& v = vi->second;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

}  // namespace mfrbp::nn
