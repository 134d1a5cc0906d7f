#pragma once

#include <cstdint>
#include <vector>

#include "fauno/rng.hpp"

namespace fauno {

enum class Act { kIdentity, kTanh };

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;  // out
  Act act = Act::kIdentity;
};

// Gradients aligned with an Mlp's layers.
struct MlpGrad {
  std::vector<std::vector<double>> dw;
  std::vector<std::vector<double>> db;

  void scale(double s);
  void add(const MlpGrad& other);
};

// Small dense network with exact analytic gradients. All math is double
// precision and loop-based; the networks here are tiny and the finite
// difference suites need bit-stable arithmetic more than they need speed.
class Mlp {
 public:
  Mlp() = default;
  // dims = {input, hidden..., output}; hidden layers use `hidden`, the last
  // layer uses `output`. Xavier-uniform init, zero biases.
  static Mlp make(const std::vector<int>& dims, Act hidden, Act output, Rng& rng);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::vector<double> forward(const std::vector<double>& input) const;

  // Forward pass keeping every activation for the backward pass.
  struct Trace {
    std::vector<std::vector<double>> acts;  // acts[0] = input, acts[i] = layer i-1 output
  };
  Trace forward_trace(const std::vector<double>& input) const;

  // Accumulates dL/dparams into `grad` given dL/d(output); returns dL/d(input).
  std::vector<double> backward(const Trace& trace, std::vector<double> dout,
                               MlpGrad& grad) const;

  MlpGrad zero_grad() const;

  // Parameter tensors in declaration order: w0, b0, w1, b1, ...
  std::vector<const std::vector<double>*> tensors() const;
  std::vector<std::vector<double>*> tensors();
  std::int64_t param_count() const;

 private:
  std::vector<DenseLayer> layers_;
};

// Element-wise delta between two identically shaped nets, in tensor order.
using ModelDelta = std::vector<std::vector<double>>;
ModelDelta subtract_params(const Mlp& a, const Mlp& b);     // a - b
void add_delta(Mlp& net, const ModelDelta& delta, double scale);
bool same_shape(const Mlp& a, const Mlp& b);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Mlp& net, const MlpGrad& grad);
  double lr() const { return lr_; }

  // Serialized state (moments + step counter) for checkpoints.
  struct State {
    std::int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
  };
  State state() const;
  void restore(const State& s);

 private:
  void ensure_buffers(const Mlp& net);

  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;  // tensor order
};

}  // namespace fauno
