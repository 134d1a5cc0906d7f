#include "fauno/mlp.hpp"

#include <cmath>

#include "fauno/errors.hpp"

namespace fauno {

void MlpGrad::scale(double s) {
  for (auto& t : dw)
    for (auto& x : t) x *= s;
  for (auto& t : db)
    for (auto& x : t) x *= s;
}

void MlpGrad::add(const MlpGrad& other) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    for (std::size_t i = 0; i < dw[l].size(); ++i) dw[l][i] += other.dw[l][i];
    for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += other.db[l][i];
  }
}

Mlp Mlp::make(const std::vector<int>& dims, Act hidden, Act output, Rng& rng) {
  if (dims.size() < 2) throw InvalidArgumentError("mlp: need at least input and output dims");
  Mlp net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.in = dims[i];
    layer.out = dims[i + 1];
    if (layer.in <= 0 || layer.out <= 0) throw InvalidArgumentError("mlp: non-positive dim");
    layer.act = (i + 2 == dims.size()) ? output : hidden;
    layer.w.resize(static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out));
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    for (auto& x : layer.w) x = rng.uniform(-limit, limit);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::vector<double> Mlp::forward(const std::vector<double>& input) const {
  return forward_trace(input).acts.back();
}

Mlp::Trace Mlp::forward_trace(const std::vector<double>& input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw ContractViolation("mlp: input dimension mismatch");
  }
  Trace trace;
  trace.acts.push_back(input);
  for (const auto& layer : layers_) {
    const auto& x = trace.acts.back();
    std::vector<double> y(static_cast<std::size_t>(layer.out));
    for (int o = 0; o < layer.out; ++o) {
      double acc = layer.b[static_cast<std::size_t>(o)];
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = layer.act == Act::kTanh ? std::tanh(acc) : acc;
    }
    trace.acts.push_back(std::move(y));
  }
  return trace;
}

std::vector<double> Mlp::backward(const Trace& trace, std::vector<double> dout,
                                  MlpGrad& grad) const {
  if (trace.acts.size() != layers_.size() + 1) {
    throw ContractViolation("mlp: trace does not match network");
  }
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    const auto& layer = layers_[static_cast<std::size_t>(l)];
    const auto& x = trace.acts[static_cast<std::size_t>(l)];
    const auto& y = trace.acts[static_cast<std::size_t>(l) + 1];
    // d(pre-activation) from d(post-activation)
    if (layer.act == Act::kTanh) {
      for (int o = 0; o < layer.out; ++o) {
        const double t = y[static_cast<std::size_t>(o)];
        dout[static_cast<std::size_t>(o)] *= 1.0 - t * t;
      }
    }
    auto& dw = grad.dw[static_cast<std::size_t>(l)];
    auto& db = grad.db[static_cast<std::size_t>(l)];
    std::vector<double> dx(static_cast<std::size_t>(layer.in), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double g = dout[static_cast<std::size_t>(o)];
      db[static_cast<std::size_t>(o)] += g;
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      double* drow = dw.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) {
        drow[i] += g * x[static_cast<std::size_t>(i)];
        dx[static_cast<std::size_t>(i)] += g * row[i];
      }
    }
    dout = std::move(dx);
  }
  return dout;
}

MlpGrad Mlp::zero_grad() const {
  MlpGrad g;
  for (const auto& layer : layers_) {
    g.dw.emplace_back(layer.w.size(), 0.0);
    g.db.emplace_back(layer.b.size(), 0.0);
  }
  return g;
}

std::vector<const std::vector<double>*> Mlp::tensors() const {
  std::vector<const std::vector<double>*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  return out;
}

std::vector<std::vector<double>*> Mlp::tensors() {
  std::vector<std::vector<double>*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.w);
    out.push_back(&layer.b);
  }
  return out;
}

std::int64_t Mlp::param_count() const {
  std::int64_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::int64_t>(layer.w.size() + layer.b.size());
  }
  return n;
}

bool same_shape(const Mlp& a, const Mlp& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    if (a.layers()[l].in != b.layers()[l].in || a.layers()[l].out != b.layers()[l].out) {
      return false;
    }
  }
  return true;
}

ModelDelta subtract_params(const Mlp& a, const Mlp& b) {
  if (!same_shape(a, b)) throw ProtocolError("subtract_params: shape mismatch");
  ModelDelta delta;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    std::vector<double> d(ta[i]->size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = (*ta[i])[j] - (*tb[i])[j];
    delta.push_back(std::move(d));
  }
  return delta;
}

void add_delta(Mlp& net, const ModelDelta& delta, double scale) {
  auto ts = net.tensors();
  if (ts.size() != delta.size()) throw ProtocolError("add_delta: tensor count mismatch");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i]->size() != delta[i].size()) throw ProtocolError("add_delta: shape mismatch");
    for (std::size_t j = 0; j < delta[i].size(); ++j) (*ts[i])[j] += scale * delta[i][j];
  }
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr <= 0.0) throw InvalidArgumentError("adam: lr must be positive");
}

void Adam::ensure_buffers(const Mlp& net) {
  if (!m_.empty()) return;
  for (const auto* t : net.tensors()) {
    m_.emplace_back(t->size(), 0.0);
    v_.emplace_back(t->size(), 0.0);
  }
}

void Adam::step(Mlp& net, const MlpGrad& grad) {
  ensure_buffers(net);
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto ts = net.tensors();
  std::size_t idx = 0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    for (const auto* g : {&grad.dw[l], &grad.db[l]}) {
      auto& m = m_[idx];
      auto& v = v_[idx];
      auto& p = *ts[idx];
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = (*g)[j];
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
      ++idx;
    }
  }
}

Adam::State Adam::state() const { return State{t_, m_, v_}; }

void Adam::restore(const State& s) {
  t_ = s.t;
  m_ = s.m;
  v_ = s.v;
}

}  // namespace fauno
