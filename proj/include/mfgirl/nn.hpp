#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mfgirl/types.hpp"

namespace mfg {

/// Feed-forward network shape: input -> hidden... -> output, leaky-rectifier
/// between layers, linear output. hidden = {} gives a single linear layer.
struct MlpSpec {
  int input = 1;
  std::vector<int> hidden = {64, 64};
  int output = 1;
  double leak = 0.01;

  std::vector<int> layer_widths() const {
    std::vector<int> w;
    w.push_back(input);
    for (int h : hidden) w.push_back(h);
    w.push_back(output);
    return w;
  }
};

std::size_t param_count(const MlpSpec& spec);

/// Glorot-style uniform init: each weight in [-a, a], a = sqrt(6/(fan_in+fan_out)).
std::vector<double> init_params_glorot(const MlpSpec& spec, std::mt19937_64& rng);

/// Uniform init in [-scale, scale] for every parameter.
std::vector<double> init_params_uniform(const MlpSpec& spec, double scale,
                                        std::mt19937_64& rng);

/// Scratch space reused across evaluations of one network.
struct MlpWorkspace {
  std::vector<std::vector<double>> pre;   // pre-activation per non-input layer
  std::vector<std::vector<double>> post;  // post-activation per layer (incl. input)
};

/// Deterministic forward pass. Throws on width mismatch.
std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input);

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input, MlpWorkspace& ws);

/// Accumulates d<output, cotangent>/dparams into `grad` (same length as params).
/// Exact reverse mode; reuses the activations recorded by the paired forward.
void mlp_accumulate_grad(const MlpSpec& spec, std::span<const double> params,
                         const MlpWorkspace& ws, std::span<const double> cotangent,
                         std::span<double> grad);

/// Convenience: forward + reverse in one call, accumulating into `grad`.
std::vector<double> mlp_value_and_grad(const MlpSpec& spec, std::span<const double> params,
                                       std::span<const double> input,
                                       std::span<const double> cotangent,
                                       std::span<double> grad);

/// Bias-corrected Adam.
struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0, double learning_rate = 1e-4)
      : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

/// One descent step along `grad`; negate the gradient for ascent.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad);

}  // namespace mfg
