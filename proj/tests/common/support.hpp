// Helpers shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mfrbp/engine/mfrbp.hpp"
#include "mfrbp/nn/grad_check.hpp"
#include "mfrbp/nn/layers.hpp"
#include "mfrbp/nn/losses.hpp"
#include "mfrbp/nn/tensor.hpp"
#include "mfrbp/policies/config.hpp"
#include "mfrbp/policies/cv.hpp"
#include "mfrbp/policies/social_model.hpp"
#include "mfrbp/scene.hpp"

namespace mfrbp::testkit {

inline nn::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                                double lo = -1.0, double hi = 1.0) {
  nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---- layer gradient cases ---------------------------------------------------
// Each case builds a store whose entries are the layer's inputs and
// parameters, fills the analytic gradients of a random linear read-out of the
// layer's output and runs the finite-difference check.

inline nn::GradCheckReport fc_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t in = 2 + rng() % 6, out = 1 + rng() % 6;
  nn::ParameterStore s;
  s.add("x", random_tensor({in}, rng));
  s.add("w", random_tensor({out, in}, rng));
  s.add("b", random_tensor({out}, rng));
  const auto c = random_vector(out, rng);
  auto loss = [&] {
    std::vector<double> y(out);
    nn::linear(s.value("x").values(), s.value("w"), s.value("b"), y);
    nn::leaky_relu_inplace(y);
    return dot(c, y);
  };
  std::vector<double> pre(out);
  nn::linear(s.value("x").values(), s.value("w"), s.value("b"), pre);
  std::vector<double> g = c;
  nn::leaky_relu_backward_inplace(pre, g);
  nn::linear_backward(s.value("x").values(), s.value("w"), g, s.grad("w"), s.grad("b"),
                      s.grad("x").values());
  return nn::finite_difference_check(s, loss);
}

inline nn::GradCheckReport conv_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t ch = 1 + rng() % 3, f = 1 + rng() % 3;
  const std::size_t h = 4 + rng() % 5, w = 3 + rng() % 3;
  nn::ParameterStore s;
  s.add("x", random_tensor({ch, h, w}, rng));
  s.add("k", random_tensor({f, ch, 3, 3}, rng));
  s.add("b", random_tensor({f}, rng));
  const auto out_shape = nn::conv2d(s.value("x"), s.value("k"), s.value("b")).shape();
  const auto c = random_tensor(out_shape, rng);
  auto loss = [&] {
    const auto y = nn::conv2d(s.value("x"), s.value("k"), s.value("b"));
    return dot(c.values(), y.values());
  };
  nn::Tensor gx;
  nn::conv2d_backward(s.value("x"), s.value("k"), c, {}, s.grad("k"), s.grad("b"), &gx);
  s.grad("x") = gx;
  return nn::finite_difference_check(s, loss);
}

inline nn::GradCheckReport maxpool_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t ch = 1 + rng() % 3, h = 4 + rng() % 6, w = 2 + rng() % 4;
  const std::size_t wh = 1 + rng() % 3, ww = 1 + rng() % 2;
  nn::ParameterStore s;
  // Distinct values spaced well beyond the probe step, so no window's
  // maximum changes hands during the check.
  std::vector<double> vals(ch * h * w);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.01 * static_cast<double>(i);
  std::shuffle(vals.begin(), vals.end(), rng);
  s.add("x", nn::Tensor({ch, h, w}, vals));
  const auto pooled = nn::max_pool2d(s.value("x"), wh, ww);
  const auto c = random_tensor(pooled.output.shape(), rng);
  auto loss = [&] {
    return dot(c.values(), nn::max_pool2d(s.value("x"), wh, ww).output.values());
  };
  s.grad("x") = nn::max_pool2d_backward(s.value("x").shape(), pooled.argmax, c);
  return nn::finite_difference_check(s, loss);
}

inline nn::GradCheckReport lstm_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t in = 1 + rng() % 4, hid = 1 + rng() % 4, steps = 1 + rng() % 5;
  nn::ParameterStore s;
  s.add("w_ih", random_tensor({4 * hid, in}, rng));
  s.add("w_hh", random_tensor({4 * hid, hid}, rng));
  s.add("b", random_tensor({4 * hid}, rng));
  s.add("x", random_tensor({steps, in}, rng));
  std::vector<std::vector<double>> c(steps);
  for (auto& v : c) v = random_vector(hid, rng);
  auto inputs = [&] {
    std::vector<std::vector<double>> xs(steps);
    const auto& x = s.value("x");
    for (std::size_t t = 0; t < steps; ++t) xs[t].assign(x.data() + t * in, x.data() + (t + 1) * in);
    return xs;
  };
  auto loss = [&] {
    nn::LstmWeights w{s.value("w_ih"), s.value("w_hh"), s.value("b")};
    const auto trace = nn::lstm_unroll(w, inputs());
    double l = 0.0;
    for (std::size_t t = 0; t < steps; ++t) l += dot(c[t], trace.steps[t].h);
    return l;
  };
  nn::LstmWeights w{s.value("w_ih"), s.value("w_hh"), s.value("b")};
  const auto trace = nn::lstm_unroll(w, inputs());
  nn::LstmGrads g{s.grad("w_ih"), s.grad("w_hh"), s.grad("b")};
  const auto dx = nn::lstm_unroll_backward(trace, w, c, g);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(dx[t].begin(), dx[t].end(), s.grad("x").data() + t * in);
  }
  return nn::finite_difference_check(s, loss);
}

inline nn::GradCheckReport gaussian_nll_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t steps = 1 + rng() % 6;
  std::uniform_real_distribution<double> u(-2.0, 2.0), sig(0.4, 2.0), rho(-0.8, 0.8);
  std::vector<Vec2> targets(steps);
  for (auto& t : targets) t = {u(rng), u(rng)};
  nn::ParameterStore s;
  auto& p = s.add("p", nn::Tensor({steps, 5}));
  for (std::size_t i = 0; i < steps; ++i) {
    p.at(i, 0) = u(rng);
    p.at(i, 1) = u(rng);
    p.at(i, 2) = sig(rng);
    p.at(i, 3) = sig(rng);
    p.at(i, 4) = rho(rng);
  }
  auto unpack = [&] {
    std::vector<nn::GaussianStep> g(steps);
    const auto& v = s.value("p");
    for (std::size_t i = 0; i < steps; ++i) {
      g[i] = {v.at(i, 0), v.at(i, 1), v.at(i, 2), v.at(i, 3), v.at(i, 4)};
    }
    return g;
  };
  auto loss = [&] { return nn::bivariate_gaussian_nll(targets, unpack()); };
  std::vector<nn::GaussianStep> grad(steps);
  nn::bivariate_gaussian_nll(targets, unpack(), grad);
  auto& gp = s.grad("p");
  for (std::size_t i = 0; i < steps; ++i) {
    gp.at(i, 0) = grad[i].mu_x;
    gp.at(i, 1) = grad[i].mu_y;
    gp.at(i, 2) = grad[i].sigma_x;
    gp.at(i, 3) = grad[i].sigma_y;
    gp.at(i, 4) = grad[i].rho;
  }
  return nn::finite_difference_check(s, loss);
}

inline nn::GradCheckReport softmax_ce_grad_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 2 + rng() % 6;
  const std::size_t cls = rng() % n;
  nn::ParameterStore s;
  s.add("logits", random_tensor({n}, rng, -3.0, 3.0));
  auto loss = [&] { return nn::softmax_cross_entropy(s.value("logits").values(), cls); };
  nn::softmax_cross_entropy(s.value("logits").values(), cls, s.grad("logits").values());
  return nn::finite_difference_check(s, loss);
}

// ---- scenes -----------------------------------------------------------------

/// Very small model for gradient and consistency checks.
inline policies::CspConfig tiny_config() {
  policies::CspConfig c;
  c.embed_size = 3;
  c.encoder_hidden = 4;
  c.dyn_embed_size = 3;
  c.conv_filters = 2;
  c.decoder_hidden = 4;
  return c;
}

/// Target 0 near the origin plus `neighbors` vehicles scattered over three
/// lanes, all moving forward with a little curvature and noise.
inline SceneHistory random_scene(std::mt19937_64& rng, std::size_t neighbors,
                                 const policies::CspConfig& config) {
  const std::size_t steps = config.history_steps();
  const double dt = 1.0 / config.sample_rate;
  std::uniform_real_distribution<double> speed(8.0, 16.0), ahead(-25.0, 25.0), acc(-1.0, 1.0),
      drift(-0.3, 0.3), noise(-0.03, 0.03);
  std::uniform_int_distribution<int> lane(-1, 1);
  std::vector<TrackHistory> tracks;
  for (std::size_t a = 0; a <= neighbors; ++a) {
    const double x0 = a == 0 ? 0.0 : ahead(rng);
    const double y0 = a == 0 ? 0.0 : lane(rng) * config.cell_width + noise(rng);
    const double v = speed(rng), ax = acc(rng), vy = drift(rng);
    std::vector<AgentState> s;
    for (std::size_t i = 0; i < steps; ++i) {
      const double t = (static_cast<double>(i) - static_cast<double>(steps - 1)) * dt;
      s.push_back({x0 + v * t + 0.5 * ax * t * t + noise(rng), y0 + vy * t + noise(rng),
                   static_cast<Frame>(100 + i)});
    }
    tracks.emplace_back(static_cast<AgentId>(a), std::move(s));
  }
  return SceneHistory(std::move(tracks), config.sample_rate);
}

/// Perturbed constant-velocity futures for every agent but `target`.
inline policies::NeighborFutures random_futures(const SceneHistory& scene, AgentId target,
                                                std::mt19937_64& rng,
                                                const policies::CspConfig& config) {
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  policies::NeighborFutures out;
  for (const auto& t : scene.tracks()) {
    if (t.id() == target) continue;
    auto f = policies::cv_predict(t, config.horizon_steps(), config.sample_rate);
    const double bend = jitter(rng);
    for (std::size_t s = 0; s < f.means.size(); ++s) f.means[s].y += bend * 0.02 * s;
    out.emplace(t.id(), std::move(f));
  }
  return out;
}

/// Future positions of `track` continuing with a slight deceleration.
inline std::vector<Vec2> plausible_truth(const TrackHistory& track,
                                         const policies::CspConfig& config) {
  const auto cv = policies::cv_predict(track, config.horizon_steps(), config.sample_rate);
  std::vector<Vec2> out = cv.means;
  for (std::size_t s = 0; s < out.size(); ++s) {
    const double t = static_cast<double>(s + 1) / config.sample_rate;
    out[s].x -= 0.3 * t * t;
    out[s].y += 0.05 * t;
  }
  return out;
}

/// End-to-end check of CSP or FC-CSP: analytic gradients of model_loss
/// against central differences over every parameter.
inline nn::GradCheckReport model_grad_case(policies::PolicyKind kind, std::uint64_t seed) {
  const auto config = tiny_config();
  std::mt19937_64 rng(seed);
  const auto scene = random_scene(rng, 4, config);
  auto params = policies::init_parameters(kind, config, seed);
  const auto futures = random_futures(scene, 0, rng, config);
  const policies::NeighborFutures* fut = kind == policies::PolicyKind::FCCSP ? &futures : nullptr;
  const auto truth = plausible_truth(scene.track(0), config);
  const std::size_t maneuver = rng() % config.num_modes;
  params.zero_grad();
  policies::model_loss(kind, scene, 0, fut, truth, maneuver, params, config, 1.0, 1.0);
  auto loss = [&] {
    return policies::model_loss(kind, scene, 0, fut, truth, maneuver, params, config, 1.0, 0.0)
        .total();
  };
  return nn::finite_difference_check(params, loss);
}

// ---- instrumented policies --------------------------------------------------

/// Records every call. Its prediction encodes (agent, rung) in the first
/// mean so that a conditioned caller can tell which level it was handed.
struct CallLog {
  struct Call {
    AgentId agent;
    std::size_t rung;
    bool conditioned;
    std::map<AgentId, std::size_t> seen_levels;
  };
  std::vector<Call> calls;
};

class StubPolicy : public engine::Policy {
 public:
  StubPolicy(std::size_t rung, std::shared_ptr<CallLog> log, std::size_t horizon = 3)
      : rung_(rung), log_(std::move(log)), horizon_(horizon) {}

  std::string name() const override { return "stub" + std::to_string(rung_); }
  bool future_conditional() const override { return rung_ > 0; }
  TrajectoryGaussian predict(const SceneHistory& scene, AgentId target,
                             const engine::Conditioning* others) const override {
    CallLog::Call call{target, rung_, others != nullptr, {}};
    if (others) {
      for (const auto& [id, t] : *others) call.seen_levels[id] = level_of(t);
    }
    log_->calls.push_back(std::move(call));
    (void)scene;
    TrajectoryGaussian out;
    out.agent_id = target;
    for (std::size_t s = 0; s < horizon_; ++s) {
      out.means.push_back({static_cast<double>(target), static_cast<double>(rung_)});
      out.covariances.push_back(Cov2::diagonal(1.0, 1.0));
    }
    return out;
  }

  static std::size_t level_of(const TrajectoryGaussian& t) {
    return static_cast<std::size_t>(t.means.front().y);
  }

 private:
  std::size_t rung_;
  std::shared_ptr<CallLog> log_;
  std::size_t horizon_;
};

inline SceneHistory line_scene(std::size_t agents) {
  std::vector<TrackHistory> tracks;
  for (std::size_t a = 0; a < agents; ++a) {
    std::vector<AgentState> s;
    for (int f = 0; f < 5; ++f) s.push_back({10.0 * a + f, 0.0, f});
    tracks.emplace_back(static_cast<AgentId>(a + 1), std::move(s));
  }
  return SceneHistory(std::move(tracks), 10.0);
}

/// Stub ladders for the given levels (agent ids 1..n).
inline engine::ReasoningAssignment stub_assignment(const std::vector<std::size_t>& levels,
                                                   const std::shared_ptr<CallLog>& log) {
  engine::ReasoningAssignment a;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    engine::AgentLadder ladder{levels[i], {}};
    for (std::size_t r = 0; r <= levels[i]; ++r) {
      ladder.ladder.push_back(std::make_shared<StubPolicy>(r, log));
    }
    a.agents.emplace(static_cast<AgentId>(i + 1), std::move(ladder));
  }
  return a;
}

/// Verifies the conditioning rule on a logged run: every level-k call of
/// agent i saw each other agent j at level min(k_j, k - 1), every agent ran
/// rungs 0..k_i exactly once, and the result equals the trace at k_i.
/// Returns an empty string on success, otherwise the first violation.
inline std::string check_recursion(const std::vector<std::size_t>& levels) {
  auto log = std::make_shared<CallLog>();
  const auto scene = line_scene(levels.size());
  const auto result = engine::run_mfrbp(scene, stub_assignment(levels, log));
  std::map<AgentId, std::vector<std::size_t>> rungs;
  for (const auto& c : log->calls) {
    rungs[c.agent].push_back(c.rung);
    if (c.rung == 0) {
      if (c.conditioned) return "level-0 call was conditioned";
      continue;
    }
    if (!c.conditioned) return "level-" + std::to_string(c.rung) + " call was not conditioned";
    if (c.seen_levels.size() != levels.size() - 1) return "conditioning is missing agents";
    for (const auto& [j, seen] : c.seen_levels) {
      if (j == c.agent) return "agent conditioned on itself";
      const std::size_t expect = std::min(levels[j - 1], c.rung - 1);
      if (seen != expect) {
        return "agent " + std::to_string(c.agent) + " level " + std::to_string(c.rung) +
               " saw agent " + std::to_string(j) + " at level " + std::to_string(seen) +
               ", expected " + std::to_string(expect);
      }
    }
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const AgentId id = static_cast<AgentId>(i + 1);
    std::vector<std::size_t> expect;
    for (std::size_t r = 0; r <= levels[i]; ++r) expect.push_back(r);
    if (rungs[id] != expect) return "agent " + std::to_string(id) + " ran the wrong rungs";
    if (result.trace.levels(id) != levels[i] + 1) return "trace depth mismatch";
    if (!(result.predictions.at(id) == result.trace.at(id, levels[i]))) {
      return "output differs from the trace at k_i";
    }
  }
  return {};
}

/// Brute-force constant-velocity extrapolation: average the last `window`
/// per-frame displacements and step forward from the last position.
inline std::vector<Vec2> cv_oracle(const TrackHistory& track, std::size_t horizon,
                                   std::size_t window) {
  const auto s = track.states();
  const std::size_t w = std::min(window, s.size() - 1);
  double dx = 0.0, dy = 0.0;
  for (std::size_t i = s.size() - w; i < s.size(); ++i) {
    dx += s[i].x - s[i - 1].x;
    dy += s[i].y - s[i - 1].y;
  }
  dx /= static_cast<double>(w);
  dy /= static_cast<double>(w);
  std::vector<Vec2> out;
  for (std::size_t k = 1; k <= horizon; ++k) {
    out.push_back({s.back().x + dx * static_cast<double>(k), s.back().y + dy * static_cast<double>(k)});
  }
  return out;
}

}  // namespace mfrbp::testkit
