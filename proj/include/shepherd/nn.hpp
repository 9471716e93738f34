#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shepherd/rng.hpp"

namespace shepherd::nn {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, linear = 2, softmax = 3 };

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Dense network parameters. log_std (state-independent) is present only for
// Gaussian actors and has the output dimension.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Mat> weights;               // weights[l]: sizes[l+1] x sizes[l]
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::linear;
  std::vector<double> log_std;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

// Shape-congruent gradient (and Adam moment) storage.
struct Gradients {
  std::vector<Mat> weights;
  std::vector<std::vector<double>> biases;
  std::vector<double> log_std;

  static Gradients zeros_like(const MlpParams& p) {
    Gradients g;
    for (const Mat& w : p.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
    g.log_std.assign(p.log_std.size(), 0.0);
    return g;
  }

  void scale(double s) {
    for (Mat& w : weights)
      for (double& v : w.a) v *= s;
    for (auto& b : biases)
      for (double& v : b) v *= s;
    for (double& v : log_std) v *= s;
  }

  void add(const Gradients& o) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (std::size_t i = 0; i < weights[l].a.size(); ++i) weights[l].a[i] += o.weights[l].a[i];
      for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += o.biases[l][i];
    }
    for (std::size_t i = 0; i < log_std.size(); ++i) log_std[i] += o.log_std[i];
  }
};

namespace detail {

inline double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::relu: return z > 0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    default: return z;
  }
}

inline double act_derivative(Activation act, double z, double a) {
  switch (act) {
    case Activation::relu: return z > 0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - a * a;
    default: return 1.0;
  }
}

inline void softmax_inplace(std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace detail

// Pre-activations and activations per layer, cached for backprop.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // pre[l]: layer l+1 pre-activation
  std::vector<std::vector<double>> act;   // act[0] = input, act[l+1] = layer output
};

inline std::vector<double> forward_traced(const MlpParams& p, std::span<const double> input,
                                          ForwardTrace& trace) {
  if (static_cast<int>(input.size()) != p.input_size())
    throw std::invalid_argument("forward: input length does not match layer_sizes[0]");
  trace.pre.assign(p.num_layers(), {});
  trace.act.assign(p.num_layers() + 1, {});
  trace.act[0].assign(input.begin(), input.end());
  for (int l = 0; l < p.num_layers(); ++l) {
    const Mat& w = p.weights[l];
    const auto& b = p.biases[l];
    const auto& x = trace.act[l];
    std::vector<double> z(w.rows);
    for (int r = 0; r < w.rows; ++r) {
      double s = b[r];
      const double* row = &w.a[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) s += row[c] * x[c];
      z[r] = s;
    }
    trace.pre[l] = z;
    const bool last = l == p.num_layers() - 1;
    const Activation act = last ? p.output_activation : p.hidden_activation;
    if (act == Activation::softmax) {
      detail::softmax_inplace(z);
      trace.act[l + 1] = std::move(z);
    } else {
      for (double& v : z) v = detail::apply_act(act, v);
      trace.act[l + 1] = std::move(z);
    }
  }
  return trace.act.back();
}

inline std::vector<double> forward(const MlpParams& p, std::span<const double> input) {
  ForwardTrace trace;
  return forward_traced(p, input, trace);
}

/// Reverse-mode gradients of the network given dL/doutput, accumulated into
/// `grads` (caller zeroes or averages). Returns nothing for log_std; the
/// distribution heads own those gradients.
inline void backward(const MlpParams& p, const ForwardTrace& trace,
                     std::span<const double> upstream, Gradients& grads) {
  if (static_cast<int>(upstream.size()) != p.output_size())
    throw std::invalid_argument("backward: upstream gradient length mismatch");
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (int l = p.num_layers() - 1; l >= 0; --l) {
    const bool last = l == p.num_layers() - 1;
    const Activation act = last ? p.output_activation : p.hidden_activation;
    const auto& z = trace.pre[l];
    const auto& a = trace.act[l + 1];
    if (act == Activation::softmax) {
      // dL/dz_j = s_j (g_j - sum_k g_k s_k)
      double mix = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) mix += delta[k] * a[k];
      for (std::size_t j = 0; j < a.size(); ++j) delta[j] = a[j] * (delta[j] - mix);
    } else {
      for (std::size_t j = 0; j < a.size(); ++j)
        delta[j] *= detail::act_derivative(act, z[j], a[j]);
    }
    const Mat& w = p.weights[l];
    const auto& x = trace.act[l];
    Mat& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    std::vector<double> prev(x.size(), 0.0);
    for (int r = 0; r < w.rows; ++r) {
      const double d = delta[r];
      gb[r] += d;
      double* grow = &gw.a[static_cast<std::size_t>(r) * w.cols];
      const double* wrow = &w.a[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) {
        grow[c] += d * x[c];
        prev[c] += d * wrow[c];
      }
    }
    delta = std::move(prev);
  }
}

/// Convenience single-call form: fresh forward pass, returns fresh gradients.
inline Gradients backward(const MlpParams& p, std::span<const double> input,
                          std::span<const double> upstream) {
  ForwardTrace trace;
  forward_traced(p, input, trace);
  Gradients g = Gradients::zeros_like(p);
  backward(p, trace, upstream, g);
  return g;
}

/// Diagonal Gaussian log density, summed over components.
inline double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                                std::span<const double> action) {
  constexpr double half_log_2pi = 0.9189385332046727;
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double s = std::exp(log_std[j]);
    const double z = (action[j] - mean[j]) / s;
    lp += -log_std[j] - half_log_2pi - 0.5 * z * z;
  }
  return lp;
}

/// d log p / d mean_j and d log p / d log_std_j.
inline void gaussian_log_prob_grads(std::span<const double> mean, std::span<const double> log_std,
                                    std::span<const double> action, std::span<double> d_mean,
                                    std::span<double> d_log_std) {
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double s2 = std::exp(2.0 * log_std[j]);
    const double diff = action[j] - mean[j];
    d_mean[j] = diff / s2;
    d_log_std[j] = diff * diff / s2 - 1.0;
  }
}

/// Entropy of the diagonal Gaussian (d entropy / d log_std_j = 1).
inline double gaussian_entropy(std::span<const double> log_std) {
  constexpr double half_log_2pi_e = 1.4189385332046727;
  double h = 0.0;
  for (double ls : log_std) h += ls + half_log_2pi_e;
  return h;
}

/// Numerically stable softmax.
inline std::vector<double> categorical_probs(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  detail::softmax_inplace(p);
  return p;
}

struct AdamState {
  Gradients m;
  Gradients v;
  std::int64_t t = 0;
  double stepsize = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const MlpParams& p, double stepsize) {
    AdamState s;
    s.m = Gradients::zeros_like(p);
    s.v = Gradients::zeros_like(p);
    s.stepsize = stepsize;
    return s;
  }
};

namespace detail {

inline void adam_update_span(std::span<double> param, std::span<const double> grad,
                             std::span<double> m, std::span<double> v, const AdamState& s,
                             double corr1, double corr2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / corr1;
    const double vhat = v[i] / corr2;
    param[i] -= s.stepsize * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace detail

/// Bias-corrected Adam step; `grads` is the gradient of the loss to minimize.
inline void adam_step(MlpParams& p, const Gradients& grads, AdamState& s) {
  ++s.t;
  const double corr1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double corr2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (int l = 0; l < p.num_layers(); ++l) {
    detail::adam_update_span(p.weights[l].a, grads.weights[l].a, s.m.weights[l].a,
                             s.v.weights[l].a, s, corr1, corr2);
    detail::adam_update_span(p.biases[l], grads.biases[l], s.m.biases[l], s.v.biases[l], s,
                             corr1, corr2);
  }
  detail::adam_update_span(p.log_std, grads.log_std, s.m.log_std, s.v.log_std, s, corr1, corr2);
}

namespace detail {

// Orthogonal-style init: Gram-Schmidt over Gaussian rows (or columns when
// rows > cols), then scaled.
inline void orthogonal_init(Mat& w, double gain, RngStream& rng) {
  const bool wide = w.rows <= w.cols;
  const int n = wide ? w.rows : w.cols;
  const int d = wide ? w.cols : w.rows;
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& row : rows)
    for (double& v : row) v = rng.normal();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += rows[i][k] * rows[j][k];
      for (int k = 0; k < d; ++k) rows[i][k] -= dot * rows[j][k];
    }
    double norm = 0.0;
    for (double v : rows[i]) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (double& v : rows[i]) v /= norm;
  }
  for (int r = 0; r < w.rows; ++r)
    for (int c = 0; c < w.cols; ++c) w(r, c) = gain * (wide ? rows[r][c] : rows[c][r]);
}

}  // namespace detail

/// Fresh network with orthogonal hidden layers (gain sqrt(2) for relu) and a
/// small-scale final layer; log_std starts at zero when requested.
inline MlpParams init_mlp(std::vector<int> sizes, Activation hidden, Activation output,
                          double final_gain, bool with_log_std, RngStream& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("init_mlp: need at least two layer sizes");
  MlpParams p;
  p.layer_sizes = std::move(sizes);
  p.hidden_activation = hidden;
  p.output_activation = output;
  const int layers = static_cast<int>(p.layer_sizes.size()) - 1;
  const double hidden_gain = hidden == Activation::relu ? std::numbers::sqrt2 : 1.0;
  for (int l = 0; l < layers; ++l) {
    Mat w(p.layer_sizes[l + 1], p.layer_sizes[l]);
    detail::orthogonal_init(w, l == layers - 1 ? final_gain : hidden_gain, rng);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(p.layer_sizes[l + 1], 0.0);
  }
  if (with_log_std) p.log_std.assign(p.layer_sizes.back(), 0.0);
  return p;
}

// ---- checkpoint I/O: header + flat little-endian float64 parameter list ----

inline constexpr std::uint32_t kCheckpointMagic = 0x4e4e4853;  // "SHNN"
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const MlpParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put8 = [&](std::uint8_t v) { out.write(reinterpret_cast<const char*>(&v), 1); };
  put32(kCheckpointMagic);
  put32(kCheckpointVersion);
  put32(static_cast<std::uint32_t>(p.layer_sizes.size()));
  for (int s : p.layer_sizes) put32(static_cast<std::uint32_t>(s));
  put8(static_cast<std::uint8_t>(p.hidden_activation));
  put8(static_cast<std::uint8_t>(p.output_activation));
  put8(p.log_std.empty() ? 0 : 1);
  auto put_doubles = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  for (int l = 0; l < p.num_layers(); ++l) {
    put_doubles(p.weights[l].a);
    put_doubles(p.biases[l]);
  }
  put_doubles(p.log_std);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  auto get32 = [&]() {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get8 = [&]() {
    std::uint8_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 1);
    return v;
  };
  if (get32() != kCheckpointMagic) throw std::runtime_error("load_checkpoint: bad magic in " + path);
  if (get32() != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version in " + path);
  MlpParams p;
  const std::uint32_t n = get32();
  p.layer_sizes.resize(n);
  for (auto& s : p.layer_sizes) s = static_cast<int>(get32());
  p.hidden_activation = static_cast<Activation>(get8());
  p.output_activation = static_cast<Activation>(get8());
  const bool has_log_std = get8() != 0;
  auto get_doubles = [&](std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    Mat w(p.layer_sizes[l + 1], p.layer_sizes[l]);
    get_doubles(w.a);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(p.layer_sizes[l + 1], 0.0);
    get_doubles(p.biases.back());
  }
  if (has_log_std) {
    p.log_std.assign(p.layer_sizes.back(), 0.0);
    get_doubles(p.log_std);
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return p;
}

}  // namespace shepherd::nn
