#include "mfgirl/nn.hpp"

#include <cmath>

namespace mfg {

std::size_t param_count(const MlpSpec& spec) {
  auto w = spec.layer_widths();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l)
    n += static_cast<std::size_t>(w[l + 1]) * w[l] + w[l + 1];
  return n;
}

std::vector<double> init_params_glorot(const MlpSpec& spec, std::mt19937_64& rng) {
  auto widths = spec.layer_widths();
  std::vector<double> params;
  params.reserve(param_count(spec));
  auto unif = [&rng](double a) {
    return (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0) * a;
  };
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i) params.push_back(unif(a));
    for (int i = 0; i < fan_out; ++i) params.push_back(0.0);
  }
  return params;
}

std::vector<double> init_params_uniform(const MlpSpec& spec, double scale,
                                        std::mt19937_64& rng) {
  std::vector<double> params(param_count(spec));
  for (auto& x : params)
    x = (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0) * scale;
  return params;
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input, MlpWorkspace& ws) {
  auto widths = spec.layer_widths();
  if (static_cast<int>(input.size()) != spec.input)
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (params.size() != param_count(spec))
    throw std::invalid_argument("mlp_forward: parameter count mismatch");

  const std::size_t n_layers = widths.size() - 1;
  ws.pre.resize(n_layers);
  ws.post.resize(n_layers + 1);
  ws.post[0].assign(input.begin(), input.end());

  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int nin = widths[l], nout = widths[l + 1];
    const double* W = params.data() + off;
    const double* b = W + static_cast<std::size_t>(nout) * nin;
    ws.pre[l].assign(nout, 0.0);
    const auto& x = ws.post[l];
    for (int i = 0; i < nout; ++i) {
      double acc = b[i];
      const double* wrow = W + static_cast<std::size_t>(i) * nin;
      for (int j = 0; j < nin; ++j) acc += wrow[j] * x[j];
      ws.pre[l][i] = acc;
    }
    const bool last = (l + 1 == n_layers);
    ws.post[l + 1].resize(nout);
    for (int i = 0; i < nout; ++i) {
      double z = ws.pre[l][i];
      ws.post[l + 1][i] = last ? z : (z >= 0.0 ? z : spec.leak * z);
    }
    off += static_cast<std::size_t>(nout) * nin + nout;
  }
  return ws.post.back();
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input) {
  MlpWorkspace ws;
  return mlp_forward(spec, params, input, ws);
}

void mlp_accumulate_grad(const MlpSpec& spec, std::span<const double> params,
                         const MlpWorkspace& ws, std::span<const double> cotangent,
                         std::span<double> grad) {
  auto widths = spec.layer_widths();
  const std::size_t n_layers = widths.size() - 1;
  if (static_cast<int>(cotangent.size()) != spec.output)
    throw std::invalid_argument("mlp_accumulate_grad: cotangent width mismatch");
  if (grad.size() != params.size())
    throw std::invalid_argument("mlp_accumulate_grad: gradient length mismatch");

  // Parameter offsets per layer.
  std::vector<std::size_t> offs(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(widths[l + 1]) * widths[l] + widths[l + 1];
  }

  std::vector<double> delta(cotangent.begin(), cotangent.end());
  for (std::size_t li = n_layers; li-- > 0;) {
    const int nin = widths[li], nout = widths[li + 1];
    const bool last = (li + 1 == n_layers);
    if (!last) {
      for (int i = 0; i < nout; ++i)
        if (ws.pre[li][i] < 0.0) delta[i] *= spec.leak;
    }
    const auto& x = ws.post[li];
    double* gW = grad.data() + offs[li];
    double* gb = gW + static_cast<std::size_t>(nout) * nin;
    for (int i = 0; i < nout; ++i) {
      double d = delta[i];
      gb[i] += d;
      double* grow = gW + static_cast<std::size_t>(i) * nin;
      for (int j = 0; j < nin; ++j) grow[j] += d * x[j];
    }
    if (li > 0) {
      const double* W = params.data() + offs[li];
      std::vector<double> prev(nin, 0.0);
      for (int i = 0; i < nout; ++i) {
        double d = delta[i];
        const double* wrow = W + static_cast<std::size_t>(i) * nin;
        for (int j = 0; j < nin; ++j) prev[j] += d * wrow[j];
      }
      delta = std::move(prev);
    }
  }
}

std::vector<double> mlp_value_and_grad(const MlpSpec& spec, std::span<const double> params,
                                       std::span<const double> input,
                                       std::span<const double> cotangent,
                                       std::span<double> grad) {
  MlpWorkspace ws;
  auto out = mlp_forward(spec, params, input, ws);
  mlp_accumulate_grad(spec, params, ws, cotangent, grad);
  return out;
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad) {
  if (params.size() != grad.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: length mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace mfg
