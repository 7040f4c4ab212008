#include "mfrbp/nn/layers.hpp"

#include <cmath>

#include "mfrbp/error.hpp"

namespace mfrbp::nn {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor leaky_relu(const Tensor& x, double alpha) {
  Tensor y = x;
  leaky_relu_inplace(y.values(), alpha);
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& grad_out, double alpha) {
  x.expect_shape(grad_out.shape(), "leaky_relu_backward");
  Tensor g = grad_out;
  leaky_relu_backward_inplace(x.values(), g.values(), alpha);
  return g;
}

void leaky_relu_inplace(std::span<double> x, double alpha) {
  for (double& v : x) {
    if (!(v > 0.0)) v *= alpha;
  }
}

void leaky_relu_backward_inplace(std::span<const double> pre_activation, std::span<double> grad,
                                 double alpha) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(pre_activation[i] > 0.0)) grad[i] *= alpha;
  }
}

void linear(std::span<const double> x, const Tensor& weight, const Tensor& bias,
            std::span<double> y) {
  const std::size_t out = weight.dim(0);
  const std::size_t in = weight.dim(1);
  if (x.size() != in || y.size() != out || bias.size() != out) {
    throw ShapeError("linear: input " + std::to_string(x.size()) + " / output " +
                     std::to_string(y.size()) + " do not match weight " +
                     shape_string(weight.shape()));
  }
  const double* w = weight.data();
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w + o * in;
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc + bias[o];
  }
}

void linear_backward(std::span<const double> x, const Tensor& weight,
                     std::span<const double> grad_out, Tensor& grad_weight, Tensor& grad_bias,
                     std::span<double> grad_x) {
  const std::size_t out = weight.dim(0);
  const std::size_t in = weight.dim(1);
  const double* w = weight.data();
  double* gw = grad_weight.data();
  for (std::size_t o = 0; o < out; ++o) {
    const double g = grad_out[o];
    grad_bias[o] += g;
    if (g == 0.0) continue;
    double* grow = gw + o * in;
    for (std::size_t i = 0; i < in; ++i) grow[i] += g * x[i];
    if (!grad_x.empty()) {
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) grad_x[i] += g * row[i];
    }
  }
}

Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("fully_connected: weight must be 2-D");
  const std::size_t in = weight.dim(1);
  const std::size_t out = weight.dim(0);
  bias.expect_shape({out}, "fully_connected bias");
  const bool batched = input.rank() == 2;
  const std::size_t batch = batched ? input.dim(0) : 1;
  if ((batched ? input.dim(1) : input.size()) != in || input.rank() > 2) {
    throw ShapeError("fully_connected: input " + shape_string(input.shape()) +
                     " does not match weight " + shape_string(weight.shape()));
  }
  Tensor y(batched ? std::vector<std::size_t>{batch, out} : std::vector<std::size_t>{out});
  for (std::size_t n = 0; n < batch; ++n) {
    linear(input.values().subspan(n * in, in), weight, bias, y.values().subspan(n * out, out));
  }
  return y;
}

FullyConnectedGrads fully_connected_backward(const Tensor& input, const Tensor& weight,
                                             const Tensor& grad_out) {
  const std::size_t in = weight.dim(1);
  const std::size_t out = weight.dim(0);
  const std::size_t batch = input.size() / in;
  FullyConnectedGrads g{Tensor(input.shape()), Tensor(weight.shape()), Tensor({out})};
  for (std::size_t n = 0; n < batch; ++n) {
    linear_backward(input.values().subspan(n * in, in), weight,
                    grad_out.values().subspan(n * out, out), g.weight, g.bias,
                    g.input.values().subspan(n * in, in));
  }
  return g;
}

namespace {

struct ConvGeometry {
  std::size_t c, h, w, f, kh, kw, oh, ow;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, Conv2dSpec spec) {
  if (input.rank() != 3 || kernels.rank() != 4) {
    throw ShapeError("conv2d expects input [C,H,W] and kernels [F,C,KH,KW]");
  }
  if (spec.stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), kernels.dim(0),
                 kernels.dim(2), kernels.dim(3), 0, 0};
  if (kernels.dim(1) != g.c) {
    throw ShapeError("conv2d: kernel channels " + std::to_string(kernels.dim(1)) +
                     " != input channels " + std::to_string(g.c));
  }
  if (g.kh > g.h + 2 * spec.pad || g.kw > g.w + 2 * spec.pad) {
    throw ShapeError("conv2d: kernel " + shape_string(kernels.shape()) +
                     " does not fit padded input " + shape_string(input.shape()));
  }
  g.oh = (g.h + 2 * spec.pad - g.kh) / spec.stride + 1;
  g.ow = (g.w + 2 * spec.pad - g.kw) / spec.stride + 1;
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, Conv2dSpec spec) {
  const auto g = conv_geometry(input, kernels, spec);
  bias.expect_shape({g.f}, "conv2d bias");
  Tensor out({g.f, g.oh, g.ow});
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t f = 0; f < g.f; ++f) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.c; ++c) {
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              auto ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
              acc += kernels[((f * g.c + c) * g.kh + ky) * g.kw + kx] *
                     input[(c * g.h + static_cast<std::size_t>(iy)) * g.w +
                           static_cast<std::size_t>(ix)];
            }
          }
        }
        out[(f * g.oh + oy) * g.ow + ox] = acc + bias[f];
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Conv2dSpec spec, Tensor& grad_kernels, Tensor& grad_bias,
                     Tensor* grad_input) {
  const auto g = conv_geometry(input, kernels, spec);
  grad_out.expect_shape({g.f, g.oh, g.ow}, "conv2d_backward grad_out");
  if (grad_input != nullptr) *grad_input = Tensor(input.shape());
  const auto pad = static_cast<std::ptrdiff_t>(spec.pad);
  for (std::size_t f = 0; f < g.f; ++f) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        const double go = grad_out[(f * g.oh + oy) * g.ow + ox];
        grad_bias[f] += go;
        if (go == 0.0) continue;
        for (std::size_t c = 0; c < g.c; ++c) {
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            auto iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              auto ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
              const std::size_t ki = ((f * g.c + c) * g.kh + ky) * g.kw + kx;
              const std::size_t ii = (c * g.h + static_cast<std::size_t>(iy)) * g.w +
                                     static_cast<std::size_t>(ix);
              grad_kernels[ki] += go * input[ii];
              if (grad_input != nullptr) (*grad_input)[ii] += go * kernels[ki];
            }
          }
        }
      }
    }
  }
}

MaxPoolResult max_pool2d(const Tensor& input, std::size_t window_h, std::size_t window_w) {
  if (input.rank() != 3) throw ShapeError("max_pool2d expects [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (window_h == 0 || window_w == 0 || window_h > h || window_w > w) {
    throw ShapeError("max_pool2d: window " + std::to_string(window_h) + "x" +
                     std::to_string(window_w) + " larger than input " +
                     shape_string(input.shape()));
  }
  const std::size_t oh = h / window_h, ow = w / window_w;
  MaxPoolResult r{Tensor({c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (ch * h + oy * window_h) * w + ox * window_w;
        for (std::size_t dy = 0; dy < window_h; ++dy) {
          for (std::size_t dx = 0; dx < window_w; ++dx) {
            const std::size_t idx = (ch * h + oy * window_h + dy) * w + ox * window_w + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + oy) * ow + ox;
        r.output[o] = input[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor max_pool2d_backward(const std::vector<std::size_t>& input_shape,
                           const std::vector<std::size_t>& argmax, const Tensor& grad_out) {
  Tensor g(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_out[o];
  return g;
}

void lstm_input_projection(std::span<const double> x, const LstmWeights& w,
                           std::span<double> proj) {
  linear(x, w.w_ih, w.bias, proj);
}

void lstm_cell_forward_projected(std::span<const double> proj, std::span<const double> h_prev,
                                 std::span<const double> c_prev, const LstmWeights& w,
                                 LstmStep& step) {
  const std::size_t H = w.hidden();
  if (proj.size() != 4 * H || h_prev.size() != H || c_prev.size() != H ||
      w.w_hh.dim(0) != 4 * H) {
    throw ShapeError("lstm cell: state sizes do not match hidden size " + std::to_string(H));
  }
  step.h_prev.assign(h_prev.begin(), h_prev.end());
  step.c_prev.assign(c_prev.begin(), c_prev.end());
  step.gates.resize(4 * H);
  const double* whh = w.w_hh.data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double* row = whh + r * H;
    double acc = 0.0;
    for (std::size_t j = 0; j < H; ++j) acc += row[j] * h_prev[j];
    step.gates[r] = proj[r] + acc;
  }
  step.c.resize(H);
  step.tanh_c.resize(H);
  step.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(step.gates[j]);
    const double f = sigmoid(step.gates[H + j]);
    const double g = std::tanh(step.gates[2 * H + j]);
    const double o = sigmoid(step.gates[3 * H + j]);
    step.gates[j] = i;
    step.gates[H + j] = f;
    step.gates[2 * H + j] = g;
    step.gates[3 * H + j] = o;
    step.c[j] = f * c_prev[j] + i * g;
    step.tanh_c[j] = std::tanh(step.c[j]);
    step.h[j] = o * step.tanh_c[j];
  }
}

void lstm_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, const LstmWeights& w, LstmStep& step) {
  if (x.size() != w.input()) {
    throw ShapeError("lstm cell: input size " + std::to_string(x.size()) + " != " +
                     std::to_string(w.input()));
  }
  std::vector<double> proj(4 * w.hidden());
  lstm_input_projection(x, w, proj);
  lstm_cell_forward_projected(proj, h_prev, c_prev, w, step);
}

void lstm_cell_backward_projected(const LstmStep& step, const LstmWeights& w,
                                  std::span<const double> dh, std::span<const double> dc,
                                  Tensor& grad_w_hh, std::span<double> dproj,
                                  std::span<double> dh_prev, std::span<double> dc_prev) {
  const std::size_t H = w.hidden();
  for (std::size_t j = 0; j < H; ++j) {
    const double i = step.gates[j];
    const double f = step.gates[H + j];
    const double g = step.gates[2 * H + j];
    const double o = step.gates[3 * H + j];
    const double dhj = dh.empty() ? 0.0 : dh[j];
    const double dcj = (dc.empty() ? 0.0 : dc[j]) +
                       dhj * o * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
    dproj[j] = dcj * g * i * (1.0 - i);
    dproj[H + j] = dcj * step.c_prev[j] * f * (1.0 - f);
    dproj[2 * H + j] = dcj * i * (1.0 - g * g);
    dproj[3 * H + j] = dhj * step.tanh_c[j] * o * (1.0 - o);
    dc_prev[j] = dcj * f;
  }
  std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
  const double* whh = w.w_hh.data();
  double* gwhh = grad_w_hh.data();
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double d = dproj[r];
    if (d == 0.0) continue;
    const double* row = whh + r * H;
    double* grow = gwhh + r * H;
    for (std::size_t k = 0; k < H; ++k) {
      grow[k] += d * step.h_prev[k];
      dh_prev[k] += d * row[k];
    }
  }
}

void lstm_projection_backward(std::span<const double> x, const LstmWeights& w,
                              std::span<const double> dproj, LstmGrads& grads,
                              std::span<double> dx) {
  linear_backward(x, w.w_ih, dproj, grads.w_ih, grads.bias, dx);
}

LstmTrace lstm_unroll(const LstmWeights& w, std::vector<std::vector<double>> inputs) {
  LstmTrace trace;
  trace.inputs = std::move(inputs);
  trace.steps.resize(trace.inputs.size());
  const std::size_t H = w.hidden();
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (std::size_t t = 0; t < trace.inputs.size(); ++t) {
    lstm_cell_forward(trace.inputs[t], h, c, w, trace.steps[t]);
    h = trace.steps[t].h;
    c = trace.steps[t].c;
  }
  return trace;
}

std::vector<std::vector<double>> lstm_unroll_backward(
    const LstmTrace& trace, const LstmWeights& w,
    const std::vector<std::vector<double>>& grad_hidden, LstmGrads& grads) {
  const std::size_t H = w.hidden();
  const std::size_t T = trace.steps.size();
  std::vector<std::vector<double>> dx(T, std::vector<double>(w.input(), 0.0));
  std::vector<double> dh(H, 0.0), dc(H, 0.0), dh_prev(H), dc_prev(H), dproj(4 * H);
  for (std::size_t t = T; t-- > 0;) {
    if (t < grad_hidden.size() && !grad_hidden[t].empty()) {
      for (std::size_t j = 0; j < H; ++j) dh[j] += grad_hidden[t][j];
    }
    lstm_cell_backward_projected(trace.steps[t], w, dh, dc, grads.w_hh, dproj, dh_prev, dc_prev);
    lstm_projection_backward(trace.inputs[t], w, dproj, grads, dx[t]);
    dh.swap(dh_prev);
    dc.swap(dc_prev);
  }
  return dx;
}

}  // namespace mfrbp::nn
