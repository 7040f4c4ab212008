#include "mfrbp/policies/social_model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "mfrbp/error.hpp"
#include "mfrbp/nn/layers.hpp"
#include "mfrbp/nn/losses.hpp"
#include "mfrbp/policies/social_grid.hpp"

namespace mfrbp::policies {
namespace {

using nn::Tensor;
using Vec = std::vector<double>;

constexpr double kSigmaRawLimit = 12.0;
constexpr double kRhoRawLimit = 8.0;

struct BranchNames {
  const char* emb_w;
  const char* emb_b;
  const char* lstm_ih;
  const char* lstm_hh;
  const char* lstm_b;
  const char* conv_w;
  const char* conv_b;
};

constexpr BranchNames kHistoryBranch{"hist_emb.w",    "hist_emb.b",   "hist_lstm.w_ih",
                                     "hist_lstm.w_hh", "hist_lstm.b", "soc_conv.w",
                                     "soc_conv.b"};
constexpr BranchNames kFutureBranch{"fut_emb.w",    "fut_emb.b",   "fut_lstm.w_ih",
                                    "fut_lstm.w_hh", "fut_lstm.b", "fut_conv.w",
                                    "fut_conv.b"};

struct ParamSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t fan_in;
};

void add_branch_specs(std::vector<ParamSpec>& specs, const BranchNames& n, const CspConfig& c) {
  const std::size_t F = CspConfig::kInputFeatures, E = c.embed_size, H = c.encoder_hidden;
  const std::size_t K = c.conv_kernel;
  specs.push_back({n.emb_w, {E, F}, F});
  specs.push_back({n.emb_b, {E}, F});
  specs.push_back({n.lstm_ih, {4 * H, E}, H});
  specs.push_back({n.lstm_hh, {4 * H, H}, H});
  specs.push_back({n.lstm_b, {4 * H}, H});
  specs.push_back({n.conv_w, {c.conv_filters, H, K, K}, H * K * K});
  specs.push_back({n.conv_b, {c.conv_filters}, H * K * K});
}

std::vector<ParamSpec> parameter_specs(PolicyKind kind, const CspConfig& c) {
  if (kind == PolicyKind::CV) throw Error("the constant-velocity policy has no parameters");
  const bool fut = kind == PolicyKind::FCCSP;
  const std::size_t C = c.context_size(fut), M = c.num_modes, Hd = c.decoder_hidden;
  std::vector<ParamSpec> specs;
  add_branch_specs(specs, kHistoryBranch, c);
  if (fut) add_branch_specs(specs, kFutureBranch, c);
  specs.push_back({"dyn.w", {c.dyn_embed_size, c.encoder_hidden}, c.encoder_hidden});
  specs.push_back({"dyn.b", {c.dyn_embed_size}, c.encoder_hidden});
  specs.push_back({"man.w", {M, C}, C});
  specs.push_back({"man.b", {M}, C});
  specs.push_back({"dec_lstm.w_ih", {4 * Hd, C + M}, Hd});
  specs.push_back({"dec_lstm.w_hh", {4 * Hd, Hd}, Hd});
  specs.push_back({"dec_lstm.b", {4 * Hd}, Hd});
  specs.push_back({"out.w", {CspConfig::kOutputParams, Hd}, Hd});
  specs.push_back({"out.b", {CspConfig::kOutputParams}, Hd});
  return specs;
}

nn::LstmWeights lstm_weights(const nn::ParameterStore& p, const char* ih, const char* hh,
                             const char* b) {
  return {p.value(ih), p.value(hh), p.value(b)};
}

// ---- forward caches ---------------------------------------------------------

struct Encoded {
  std::vector<Vec> features;
  std::vector<Vec> pre;
  nn::LstmTrace lstm;
};

struct PooledBranch {
  std::vector<GridSlot> slots;
  std::vector<Encoded> encodings;
  Tensor grid;
  Tensor conv_pre;
  Tensor conv_act;
  nn::MaxPoolResult pool;
};

struct ContextPass {
  TargetFrame frame;
  Encoded target;
  Vec dyn_pre;
  PooledBranch history;
  std::optional<PooledBranch> future;
  Vec context;
  Vec logits;
};

struct DecodePass {
  std::size_t mode = 0;
  Vec input;
  std::vector<nn::LstmStep> steps;
  std::vector<nn::GaussianStep> gaussians;  // target-relative frame
  std::vector<Vec> raw;
};

Encoded encode(const std::vector<Features>& features, const BranchNames& names,
               const nn::ParameterStore& p, const CspConfig& c) {
  Encoded e;
  const Tensor& w = p.value(names.emb_w);
  const Tensor& b = p.value(names.emb_b);
  std::vector<Vec> inputs;
  inputs.reserve(features.size());
  for (const auto& f : features) {
    e.features.emplace_back(f.begin(), f.end());
    Vec pre(c.embed_size);
    nn::linear(e.features.back(), w, b, pre);
    Vec act = pre;
    nn::leaky_relu_inplace(act, c.leaky_slope);
    e.pre.push_back(std::move(pre));
    inputs.push_back(std::move(act));
  }
  e.lstm = nn::lstm_unroll(lstm_weights(p, names.lstm_ih, names.lstm_hh, names.lstm_b),
                           std::move(inputs));
  return e;
}

void encode_backward(const Encoded& e, const Vec& dh_final, const BranchNames& names,
                     nn::ParameterStore& p, const CspConfig& c) {
  const auto w = lstm_weights(p, names.lstm_ih, names.lstm_hh, names.lstm_b);
  nn::LstmGrads g{p.grad(names.lstm_ih), p.grad(names.lstm_hh), p.grad(names.lstm_b)};
  std::vector<Vec> dh(e.lstm.steps.size());
  dh.back() = dh_final;
  auto dx = nn::lstm_unroll_backward(e.lstm, w, dh, g);
  for (std::size_t t = 0; t < dx.size(); ++t) {
    nn::leaky_relu_backward_inplace(e.pre[t], dx[t], c.leaky_slope);
    nn::linear_backward(e.features[t], p.value(names.emb_w), dx[t], p.grad(names.emb_w),
                        p.grad(names.emb_b), {});
  }
}

PooledBranch pool_branch(std::vector<GridSlot> slots, std::vector<Encoded> encodings,
                         const BranchNames& names, const nn::ParameterStore& p,
                         const CspConfig& c) {
  PooledBranch b;
  b.slots = std::move(slots);
  b.encodings = std::move(encodings);
  b.grid = Tensor({c.encoder_hidden, c.grid_rows, c.grid_cols});
  const std::size_t plane = c.grid_rows * c.grid_cols;
  for (std::size_t i = 0; i < b.slots.size(); ++i) {
    const auto& h = b.encodings[i].lstm.final_hidden();
    const std::size_t idx = b.slots[i].cell.row * c.grid_cols + b.slots[i].cell.col;
    for (std::size_t ch = 0; ch < c.encoder_hidden; ++ch) b.grid[ch * plane + idx] = h[ch];
  }
  b.conv_pre = nn::conv2d(b.grid, p.value(names.conv_w), p.value(names.conv_b));
  b.conv_act = nn::leaky_relu(b.conv_pre, c.leaky_slope);
  b.pool = nn::max_pool2d(b.conv_act, c.pool_rows, 1);
  return b;
}

void pool_backward(const PooledBranch& b, std::span<const double> d_pooled,
                   const BranchNames& names, nn::ParameterStore& p, const CspConfig& c) {
  Tensor d_out(b.pool.output.shape(), Vec(d_pooled.begin(), d_pooled.end()));
  Tensor d_act = nn::max_pool2d_backward(b.conv_act.shape(), b.pool.argmax, d_out);
  Tensor d_pre = nn::leaky_relu_backward(b.conv_pre, d_act, c.leaky_slope);
  Tensor d_grid;
  nn::conv2d_backward(b.grid, p.value(names.conv_w), d_pre, {}, p.grad(names.conv_w),
                      p.grad(names.conv_b), b.slots.empty() ? nullptr : &d_grid);
  const std::size_t plane = c.grid_rows * c.grid_cols;
  for (std::size_t i = 0; i < b.slots.size(); ++i) {
    const std::size_t idx = b.slots[i].cell.row * c.grid_cols + b.slots[i].cell.col;
    Vec dh(c.encoder_hidden);
    for (std::size_t ch = 0; ch < c.encoder_hidden; ++ch) dh[ch] = d_grid[ch * plane + idx];
    encode_backward(b.encodings[i], dh, names, p, c);
  }
}

ContextPass context_forward(PolicyKind kind, const SceneHistory& scene, AgentId target,
                            const NeighborFutures* futures, const nn::ParameterStore& p,
                            const CspConfig& c) {
  const auto& track = scene.track(target);
  if (track.size() < c.history_steps()) {
    throw Error("insufficient history for agent " + std::to_string(target) + ": " +
                std::to_string(track.size()) + " states, need " +
                std::to_string(c.history_steps()));
  }
  ContextPass ctx;
  ctx.frame = make_target_frame(track, c);
  ctx.target = encode(history_features(track, ctx.frame, c), kHistoryBranch, p, c);

  ctx.dyn_pre.resize(c.dyn_embed_size);
  nn::linear(ctx.target.lstm.final_hidden(), p.value("dyn.w"), p.value("dyn.b"), ctx.dyn_pre);

  auto slots = assign_grid(scene, target, c);
  {
    std::vector<Encoded> enc;
    enc.reserve(slots.size());
    for (const auto& s : slots) {
      enc.push_back(encode(history_features(scene.track(s.agent), ctx.frame, c), kHistoryBranch,
                           p, c));
    }
    ctx.history = pool_branch(slots, std::move(enc), kHistoryBranch, p, c);
  }

  if (kind == PolicyKind::FCCSP) {
    std::vector<GridSlot> fslots;
    std::vector<Encoded> enc;
    if (futures != nullptr) {
      std::size_t horizon = 0;
      for (const auto& [id, f] : *futures) {
        if (horizon == 0) horizon = f.horizon();
        if (f.horizon() != horizon) throw Error("neighbour futures disagree on horizon length");
      }
      for (const auto& s : slots) {
        auto it = futures->find(s.agent);
        if (it == futures->end()) continue;
        fslots.push_back(s);
        enc.push_back(encode(future_features(it->second,
                                             scene.track(s.agent).last().position(), ctx.frame,
                                             c),
                             kFutureBranch, p, c));
      }
    }
    ctx.future = pool_branch(std::move(fslots), std::move(enc), kFutureBranch, p, c);
  }

  Vec dyn = ctx.dyn_pre;
  nn::leaky_relu_inplace(dyn, c.leaky_slope);
  const auto hist = ctx.history.pool.output.values();
  ctx.context.assign(hist.begin(), hist.end());
  ctx.context.insert(ctx.context.end(), dyn.begin(), dyn.end());
  if (ctx.future) {
    const auto fut = ctx.future->pool.output.values();
    ctx.context.insert(ctx.context.end(), fut.begin(), fut.end());
  }
  ctx.logits.resize(c.num_modes);
  nn::linear(ctx.context, p.value("man.w"), p.value("man.b"), ctx.logits);
  return ctx;
}

DecodePass decode(const ContextPass& ctx, std::size_t mode, const nn::ParameterStore& p,
                  const CspConfig& c) {
  DecodePass d;
  d.mode = mode;
  d.input = ctx.context;
  d.input.resize(ctx.context.size() + c.num_modes, 0.0);
  d.input[ctx.context.size() + mode] = 1.0;

  const auto w = lstm_weights(p, "dec_lstm.w_ih", "dec_lstm.w_hh", "dec_lstm.b");
  const std::size_t Hd = c.decoder_hidden;
  Vec proj(4 * Hd);
  nn::lstm_input_projection(d.input, w, proj);

  const std::size_t T = c.horizon_steps();
  d.steps.resize(T);
  d.gaussians.resize(T);
  d.raw.assign(T, Vec(CspConfig::kOutputParams));
  Vec h(Hd, 0.0), cell(Hd, 0.0);
  for (std::size_t s = 0; s < T; ++s) {
    nn::lstm_cell_forward_projected(proj, h, cell, w, d.steps[s]);
    h = d.steps[s].h;
    cell = d.steps[s].c;
    auto& raw = d.raw[s];
    nn::linear(h, p.value("out.w"), p.value("out.b"), raw);
    auto& g = d.gaussians[s];
    g.mu_x = ctx.frame.anchor[s].x + c.position_scale * raw[0];
    g.mu_y = ctx.frame.anchor[s].y + c.position_scale * raw[1];
    g.sigma_x = std::exp(std::clamp(raw[2], -kSigmaRawLimit, kSigmaRawLimit));
    g.sigma_y = std::exp(std::clamp(raw[3], -kSigmaRawLimit, kSigmaRawLimit));
    g.rho = std::tanh(std::clamp(raw[4], -kRhoRawLimit, kRhoRawLimit));
  }
  return d;
}

TrajectoryGaussian to_trajectory(const DecodePass& d, const ContextPass& ctx, AgentId agent) {
  TrajectoryGaussian t;
  t.agent_id = agent;
  t.means.reserve(d.gaussians.size());
  t.covariances.reserve(d.gaussians.size());
  for (const auto& g : d.gaussians) {
    t.means.push_back({ctx.frame.origin.x + g.mu_x, ctx.frame.origin.y + g.mu_y});
    t.covariances.push_back(Cov2::from_sigma_rho(g.sigma_x, g.sigma_y, g.rho));
  }
  return t;
}

double clamp_derivative(double raw, double limit) {
  return raw > -limit && raw < limit ? 1.0 : 0.0;
}

/// Backward through the decoder for upstream gaussian gradients; returns
/// dL/dcontext.
Vec decode_backward(const DecodePass& d, std::span<const nn::GaussianStep> dg,
                    std::size_t context_size, nn::ParameterStore& p, const CspConfig& c) {
  const auto w = lstm_weights(p, "dec_lstm.w_ih", "dec_lstm.w_hh", "dec_lstm.b");
  nn::LstmGrads lg{p.grad("dec_lstm.w_ih"), p.grad("dec_lstm.w_hh"), p.grad("dec_lstm.b")};
  const std::size_t Hd = c.decoder_hidden;
  const Tensor& out_w = p.value("out.w");
  Vec dh_next(Hd, 0.0), dc_next(Hd, 0.0), dh_prev(Hd), dc_prev(Hd), dproj(4 * Hd);
  Vec dproj_sum(4 * Hd, 0.0), draw(CspConfig::kOutputParams), dh(Hd);
  for (std::size_t s = d.steps.size(); s-- > 0;) {
    const auto& g = d.gaussians[s];
    const auto& raw = d.raw[s];
    draw[0] = c.position_scale * dg[s].mu_x;
    draw[1] = c.position_scale * dg[s].mu_y;
    draw[2] = dg[s].sigma_x * g.sigma_x * clamp_derivative(raw[2], kSigmaRawLimit);
    draw[3] = dg[s].sigma_y * g.sigma_y * clamp_derivative(raw[3], kSigmaRawLimit);
    draw[4] = dg[s].rho * (1.0 - g.rho * g.rho) * clamp_derivative(raw[4], kRhoRawLimit);
    dh = dh_next;
    nn::linear_backward(d.steps[s].h, out_w, draw, p.grad("out.w"), p.grad("out.b"), dh);
    nn::lstm_cell_backward_projected(d.steps[s], w, dh, dc_next, lg.w_hh, dproj, dh_prev,
                                     dc_prev);
    for (std::size_t r = 0; r < dproj.size(); ++r) dproj_sum[r] += dproj[r];
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
  Vec dinput(d.input.size(), 0.0);
  nn::lstm_projection_backward(d.input, w, dproj_sum, lg, dinput);
  dinput.resize(context_size);
  return dinput;
}

void context_backward(const ContextPass& ctx, Vec dcontext, std::span<const double> dlogits,
                      nn::ParameterStore& p, const CspConfig& c) {
  nn::linear_backward(ctx.context, p.value("man.w"), dlogits, p.grad("man.w"), p.grad("man.b"),
                      dcontext);
  const std::size_t S = c.social_features(), D = c.dyn_embed_size;
  std::span<const double> all(dcontext);
  pool_backward(ctx.history, all.subspan(0, S), kHistoryBranch, p, c);
  if (ctx.future) pool_backward(*ctx.future, all.subspan(S + D, S), kFutureBranch, p, c);

  Vec ddyn(all.begin() + S, all.begin() + S + D);
  nn::leaky_relu_backward_inplace(ctx.dyn_pre, ddyn, c.leaky_slope);
  Vec dh_target(c.encoder_hidden, 0.0);
  nn::linear_backward(ctx.target.lstm.final_hidden(), p.value("dyn.w"), ddyn, p.grad("dyn.w"),
                      p.grad("dyn.b"), dh_target);
  encode_backward(ctx.target, dh_target, kHistoryBranch, p, c);
}

MixturePrediction full_forward(PolicyKind kind, const SceneHistory& scene, AgentId target,
                               const NeighborFutures* futures, const nn::ParameterStore& p,
                               const CspConfig& c) {
  const auto ctx = context_forward(kind, scene, target, futures, p, c);
  const auto weights = nn::softmax(ctx.logits);
  MixturePrediction out;
  out.modes.reserve(c.num_modes);
  for (std::size_t m = 0; m < c.num_modes; ++m) {
    out.modes.push_back({weights[m], to_trajectory(decode(ctx, m, p, c), ctx, target)});
  }
  return out;
}

}  // namespace

nn::ParameterStore init_parameters(PolicyKind kind, const CspConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  nn::ParameterStore store;
  for (const auto& spec : parameter_specs(kind, config)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(spec.shape);
    for (double& v : t.values()) v = dist(rng);
    store.add(spec.name, std::move(t));
  }
  return store;
}

void check_parameters(PolicyKind kind, const nn::ParameterStore& params, const CspConfig& config) {
  for (const auto& spec : parameter_specs(kind, config)) {
    if (!params.contains(spec.name)) {
      throw Error(std::string(to_string(kind)) + " parameters are missing " + spec.name);
    }
    params.value(spec.name).expect_shape(spec.shape, spec.name);
  }
}

std::vector<std::string> future_branch_parameter_names() {
  const auto& n = kFutureBranch;
  return {n.emb_w, n.emb_b, n.lstm_ih, n.lstm_hh, n.lstm_b, n.conv_w, n.conv_b};
}

void zero_future_branch(nn::ParameterStore& fccsp, const CspConfig& config) {
  for (const auto& name : future_branch_parameter_names()) fccsp.value(name).fill(0.0);
  const std::size_t S = config.social_features(), D = config.dyn_embed_size;
  Tensor& man = fccsp.value("man.w");
  for (std::size_t r = 0; r < man.dim(0); ++r) {
    for (std::size_t k = S + D; k < S + D + S; ++k) man.at(r, k) = 0.0;
  }
  Tensor& dec = fccsp.value("dec_lstm.w_ih");
  for (std::size_t r = 0; r < dec.dim(0); ++r) {
    for (std::size_t k = S + D; k < S + D + S; ++k) dec.at(r, k) = 0.0;
  }
}

void copy_history_branch(const nn::ParameterStore& csp, nn::ParameterStore& fccsp,
                         const CspConfig& config) {
  check_parameters(PolicyKind::CSP, csp, config);
  check_parameters(PolicyKind::FCCSP, fccsp, config);
  const std::size_t C = config.context_size(false), Cf = config.context_size(true);
  for (const auto& name : csp.names()) {
    const Tensor& src = csp.value(name);
    Tensor& dst = fccsp.value(name);
    if (src.shape() == dst.shape()) {
      dst = src;
    } else if (name == "man.w") {
      for (std::size_t r = 0; r < src.dim(0); ++r) {
        for (std::size_t k = 0; k < C; ++k) dst.at(r, k) = src.at(r, k);
      }
    } else if (name == "dec_lstm.w_ih") {
      for (std::size_t r = 0; r < src.dim(0); ++r) {
        for (std::size_t k = 0; k < C; ++k) dst.at(r, k) = src.at(r, k);
        for (std::size_t m = 0; m < config.num_modes; ++m) dst.at(r, Cf + m) = src.at(r, C + m);
      }
    } else {
      throw Error("cannot map CSP parameter " + name + " onto FC-CSP");
    }
  }
}

MixturePrediction csp_forward(const SceneHistory& scene, AgentId target,
                              const nn::ParameterStore& params, const CspConfig& config) {
  return full_forward(PolicyKind::CSP, scene, target, nullptr, params, config);
}

MixturePrediction fccsp_forward(const SceneHistory& scene, AgentId target,
                                const NeighborFutures& neighbor_futures,
                                const nn::ParameterStore& params, const CspConfig& config) {
  return full_forward(PolicyKind::FCCSP, scene, target, &neighbor_futures, params, config);
}

TrajectoryGaussian predict_top_mode(PolicyKind kind, const SceneHistory& scene, AgentId target,
                                    const NeighborFutures* neighbor_futures,
                                    const nn::ParameterStore& params, const CspConfig& config) {
  const auto ctx = context_forward(kind, scene, target, neighbor_futures, params, config);
  const auto weights = nn::softmax(ctx.logits);
  const std::size_t m = top_mode_index(weights);
  return to_trajectory(decode(ctx, m, params, config), ctx, target);
}

std::size_t label_maneuver(const TrackHistory& target, std::span<const Vec2> future,
                           const CspConfig& config) {
  if (future.empty()) throw Error("cannot label a maneuver without a future");
  const Vec2 now = target.last().position();
  const double dy = future.back().y - now.y;
  std::size_t lateral = 0;
  if (dy > config.lateral_threshold_lanes * config.cell_width) {
    lateral = 1;
  } else if (dy < -config.lateral_threshold_lanes * config.cell_width) {
    lateral = 2;
  }
  const double current_speed =
      target.size() >= 2 ? velocity_estimate(target, config.sample_rate, config.cv_window_s).norm()
                         : 0.0;
  const double horizon_s = static_cast<double>(future.size()) / config.sample_rate;
  const double mean_future_speed = (future.back() - now).norm() / horizon_s;
  const bool braking =
      current_speed > 0.0 && mean_future_speed < config.braking_speed_ratio * current_speed;
  return lateral + (braking ? 3 : 0);
}

LossTerms model_loss(PolicyKind kind, const SceneHistory& scene, AgentId target,
                     const NeighborFutures* neighbor_futures, std::span<const Vec2> truth,
                     std::size_t maneuver, nn::ParameterStore& params, const CspConfig& config,
                     double maneuver_weight, double grad_scale) {
  if (truth.size() != config.horizon_steps()) {
    throw Error("ground truth has " + std::to_string(truth.size()) + " steps, expected " +
                std::to_string(config.horizon_steps()));
  }
  if (maneuver >= config.num_modes) throw Error("maneuver class out of range");
  const auto ctx = context_forward(kind, scene, target, neighbor_futures, params, config);
  const auto dec = decode(ctx, maneuver, params, config);

  std::vector<Vec2> rel_truth(truth.size());
  for (std::size_t s = 0; s < truth.size(); ++s) rel_truth[s] = truth[s] - ctx.frame.origin;

  LossTerms terms;
  terms.maneuver_weight = maneuver_weight;
  std::vector<nn::GaussianStep> dg(grad_scale != 0.0 ? truth.size() : 0);
  terms.nll = nn::bivariate_gaussian_nll(rel_truth, dec.gaussians, dg);
  Vec dlogits(grad_scale != 0.0 ? config.num_modes : 0);
  terms.maneuver = nn::softmax_cross_entropy(ctx.logits, maneuver, dlogits);
  if (grad_scale == 0.0) return terms;

  for (auto& g : dg) {
    g.mu_x *= grad_scale;
    g.mu_y *= grad_scale;
    g.sigma_x *= grad_scale;
    g.sigma_y *= grad_scale;
    g.rho *= grad_scale;
  }
  for (double& v : dlogits) v *= grad_scale * maneuver_weight;
  Vec dcontext = decode_backward(dec, dg, ctx.context.size(), params, config);
  context_backward(ctx, std::move(dcontext), dlogits, params, config);
  return terms;
}

}  // namespace mfrbp::policies
