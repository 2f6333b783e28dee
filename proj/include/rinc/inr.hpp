#ifndef RINC_INR_HPP
#define RINC_INR_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/projection.hpp"

namespace rinc {

enum class OutputActivation { kSigmoid, kIdentity };
enum class LossKind { kBce, kMse };

/// Fixed MLP topology: input_dim -> V x L (sine hidden layers) -> 1.
/// The first hidden layer applies the frequency scale omega0 inside the sine.
struct MlpArchitecture {
  uint32_t input_dim = 2;
  uint32_t hidden_layers = 6;  // L
  uint32_t hidden_width = 40;  // V
  OutputActivation output = OutputActivation::kSigmoid;
  double omega0 = 30.0;

  void validate() const {
    if (input_dim < 1 || input_dim > 3) throw ConfigError("input_dim must be 1..3");
    if (hidden_layers < 1) throw ConfigError("need at least one hidden layer");
    if (hidden_width < 1) throw ConfigError("hidden width must be positive");
    if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");
  }

  uint32_t layer_count() const { return hidden_layers + 1; }
  uint32_t fan_in(uint32_t layer) const { return layer == 0 ? input_dim : hidden_width; }
  uint32_t fan_out(uint32_t layer) const { return layer == hidden_layers ? 1 : hidden_width; }
  double frequency(uint32_t layer) const { return layer == 0 ? omega0 : 1.0; }

  size_t param_count() const {
    size_t n = 0;
    for (uint32_t k = 0; k < layer_count(); ++k) {
      n += static_cast<size_t>(fan_in(k)) * fan_out(k) + fan_out(k);
    }
    return n;
  }

  bool operator==(const MlpArchitecture&) const = default;
};

using Gradients = std::vector<double>;

/// MLP with parameters stored flat as [W0, b0, W1, b1, ...]; weight matrices
/// are row-major (out x in). An optional prune mask pins weights to zero.
struct Mlp {
  MlpArchitecture arch;
  std::vector<double> params;
  std::vector<uint8_t> pruned;  // empty, or params.size(); 1 pins the entry to 0

  bool has_prune_mask() const { return !pruned.empty(); }

  size_t weight_offset(uint32_t layer) const {
    size_t off = 0;
    for (uint32_t k = 0; k < layer; ++k) {
      off += static_cast<size_t>(arch.fan_in(k)) * arch.fan_out(k) + arch.fan_out(k);
    }
    return off;
  }
  size_t bias_offset(uint32_t layer) const {
    return weight_offset(layer) + static_cast<size_t>(arch.fan_in(layer)) * arch.fan_out(layer);
  }
  /// [begin, end) of layer's full parameter slice (weights then biases).
  std::pair<size_t, size_t> layer_span(uint32_t layer) const {
    const size_t begin = weight_offset(layer);
    return {begin, bias_offset(layer) + arch.fan_out(layer)};
  }

  void enforce_prune_mask() {
    if (!has_prune_mask()) return;
    for (size_t i = 0; i < params.size(); ++i) {
      if (pruned[i]) params[i] = 0.0;
    }
  }
};

namespace detail {

/// Uniform double in [0, 1) built from the raw engine output, so the stream
/// is identical across standard library implementations.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline int env_thread_cap() {
  if (const char* s = std::getenv("RINC_THREADS")) {
    const int n = std::atoi(s);
    if (n >= 1) return std::min(n, 64);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 64u));
}

/// Runs fn(chunk_index) for chunk_index in [0, chunks). The chunk partition
/// is fixed by the caller, so results are reduction-order stable no matter
/// how many threads execute. The first worker exception is rethrown here.
template <typename Fn>
void parallel_chunks(size_t chunks, const Fn& fn) {
  const size_t threads = std::min(static_cast<size_t>(env_thread_cap()), chunks);
  if (threads <= 1) {
    for (size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) fn(c);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

constexpr size_t kChunkSamples = 2048;

}  // namespace detail

/// Fresh network with SIREN-style uniform init: weights in
/// [-sqrt(6/fan_in)/w, +sqrt(6/fan_in)/w], w = omega0 on the first layer and
/// 1 elsewhere; biases zero. Bit-reproducible for a given seed.
inline Mlp make_mlp(const MlpArchitecture& arch, uint64_t seed) {
  arch.validate();
  Mlp mlp;
  mlp.arch = arch;
  mlp.params.assign(arch.param_count(), 0.0);
  std::mt19937_64 eng(seed);
  for (uint32_t k = 0; k < arch.layer_count(); ++k) {
    const double bound = std::sqrt(6.0 / arch.fan_in(k)) / arch.frequency(k);
    const size_t w0 = mlp.weight_offset(k);
    const size_t nw = static_cast<size_t>(arch.fan_in(k)) * arch.fan_out(k);
    for (size_t i = 0; i < nw; ++i) {
      mlp.params[w0 + i] = bound * (2.0 * detail::uniform01(eng) - 1.0);
    }
  }
  return mlp;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Single-sample evaluation.
inline double forward(const Mlp& mlp, std::span<const double> input) {
  const MlpArchitecture& a = mlp.arch;
  if (input.size() != a.input_dim) {
    throw InvalidInput("forward: expected " + std::to_string(a.input_dim) + " inputs, got " +
                       std::to_string(input.size()));
  }
  std::vector<double> act(input.begin(), input.end());
  std::vector<double> next;
  for (uint32_t k = 0; k < a.layer_count(); ++k) {
    const uint32_t in = a.fan_in(k), out = a.fan_out(k);
    const double* w = mlp.params.data() + mlp.weight_offset(k);
    const double* b = mlp.params.data() + mlp.bias_offset(k);
    next.assign(out, 0.0);
    for (uint32_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (uint32_t i = 0; i < in; ++i) acc += w[static_cast<size_t>(o) * in + i] * act[i];
      next[o] = acc;
    }
    if (k < a.hidden_layers) {
      const double freq = a.frequency(k);
      for (double& z : next) z = std::sin(freq * z);
    }
    act.swap(next);
  }
  const double z = act[0];
  return a.output == OutputActivation::kSigmoid ? sigmoid(z) : z;
}

/// Binary cross entropy, mean over all entries; probabilities are clipped to
/// [1e-7, 1 - 1e-7] before the logs.
inline double bce_loss(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.size() != targets.size()) {
    throw InvalidInput("bce_loss: size mismatch");
  }
  constexpr double kEps = 1e-7;
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kEps, 1.0 - kEps);
    sum += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(predictions.size());
}

/// Sum of squared errors divided by an explicit normalizer (the full pixel
/// count W*H, even when only assigned pixels contribute terms).
inline double mse_loss(const std::vector<double>& predictions, const std::vector<double>& targets,
                       double normalizer) {
  if (predictions.size() != targets.size()) {
    throw InvalidInput("mse_loss: size mismatch");
  }
  double sum = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - targets[i];
    sum += e * e;
  }
  return sum / normalizer;
}

namespace detail {

/// Scratch for one block of samples inside the batched forward/backward.
struct BlockScratch {
  std::vector<double> pre;   // pre-activations per layer, blocked
  std::vector<double> act;   // activations per layer (incl. input copy)
  std::vector<double> grad;  // dL/d(pre-activation) scratch
};

/// Weights transposed to (in x out) per layer; lets the forward inner loop
/// run over contiguous output slots.
inline std::vector<std::vector<double>> transpose_weights(const Mlp& mlp) {
  const MlpArchitecture& a = mlp.arch;
  std::vector<std::vector<double>> wt(a.layer_count());
  for (uint32_t k = 0; k < a.layer_count(); ++k) {
    const uint32_t in = a.fan_in(k), out = a.fan_out(k);
    const double* w = mlp.params.data() + mlp.weight_offset(k);
    wt[k].resize(static_cast<size_t>(in) * out);
    for (uint32_t o = 0; o < out; ++o) {
      for (uint32_t i = 0; i < in; ++i) {
        wt[k][static_cast<size_t>(i) * out + o] = w[static_cast<size_t>(o) * in + i];
      }
    }
  }
  return wt;
}

/// Forward for samples [s0, s0+n) of the flat input matrix. Writes
/// per-layer activations/pre-activations into scratch and the head outputs
/// into out[0..n).
inline void forward_block(const Mlp& mlp, const std::vector<std::vector<double>>& wt,
                          const double* inputs, size_t n, BlockScratch& sc, double* out) {
  const MlpArchitecture& a = mlp.arch;
  const uint32_t width = a.hidden_width;
  const uint32_t layers = a.layer_count();
  sc.pre.assign(static_cast<size_t>(layers) * n * width, 0.0);
  sc.act.assign(static_cast<size_t>(layers) * n * width, 0.0);

  const double* prev = inputs;
  uint32_t prev_dim = a.input_dim;
  for (uint32_t k = 0; k < layers; ++k) {
    const uint32_t out_dim = a.fan_out(k);
    const double* b = mlp.params.data() + mlp.bias_offset(k);
    double* z = sc.pre.data() + static_cast<size_t>(k) * n * width;
    double* h = sc.act.data() + static_cast<size_t>(k) * n * width;
    const double freq = a.frequency(k);
    for (size_t s = 0; s < n; ++s) {
      double* zs = z + s * out_dim;
      for (uint32_t o = 0; o < out_dim; ++o) zs[o] = b[o];
      const double* xs = prev + s * prev_dim;
      for (uint32_t i = 0; i < prev_dim; ++i) {
        const double xi = xs[i];
        const double* wrow = wt[k].data() + static_cast<size_t>(i) * out_dim;
        for (uint32_t o = 0; o < out_dim; ++o) zs[o] += xi * wrow[o];
      }
      double* hs = h + s * out_dim;
      if (k < a.hidden_layers) {
        for (uint32_t o = 0; o < out_dim; ++o) hs[o] = std::sin(freq * zs[o]);
      } else {
        out[s] = a.output == OutputActivation::kSigmoid ? sigmoid(zs[0]) : zs[0];
      }
    }
    prev = h;
    prev_dim = out_dim;
  }
}

}  // namespace detail

/// Batched evaluation of the network on a flat (n x input_dim) matrix.
inline std::vector<double> forward_batch(const Mlp& mlp, const std::vector<double>& inputs) {
  const uint32_t d = mlp.arch.input_dim;
  if (inputs.size() % d != 0) throw InvalidInput("forward_batch: ragged input matrix");
  const size_t n = inputs.size() / d;
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const auto wt = detail::transpose_weights(mlp);
  const size_t chunks = (n + detail::kChunkSamples - 1) / detail::kChunkSamples;
  detail::parallel_chunks(chunks, [&](size_t c) {
    detail::BlockScratch sc;
    const size_t s0 = c * detail::kChunkSamples;
    const size_t len = std::min(detail::kChunkSamples, n - s0);
    detail::forward_block(mlp, wt, inputs.data() + s0 * d, len, sc, out.data() + s0);
  });
  return out;
}

struct BatchGradResult {
  double loss = 0.0;
  Gradients grads;
};

/// Loss and exact parameter gradients over a full batch. The chunk partition
/// is fixed by the batch size, and partial results are reduced in chunk
/// order, so the result is identical for any worker count. Gradients at
/// pruned positions are zeroed when a prune mask is present.
inline BatchGradResult backward(const Mlp& mlp, const std::vector<double>& inputs,
                                const std::vector<double>& targets, LossKind loss_kind,
                                double normalizer) {
  const MlpArchitecture& a = mlp.arch;
  const uint32_t d = a.input_dim;
  if (inputs.size() % d != 0) throw InvalidInput("backward: ragged input matrix");
  const size_t n = inputs.size() / d;
  if (n == 0) throw InvalidInput("backward: empty batch");
  if (targets.size() != n) throw InvalidInput("backward: target count mismatch");

  const auto wt = detail::transpose_weights(mlp);
  const size_t chunks = (n + detail::kChunkSamples - 1) / detail::kChunkSamples;
  const size_t np = mlp.params.size();
  std::vector<Gradients> partial_grads(chunks);
  std::vector<double> partial_loss(chunks, 0.0);

  detail::parallel_chunks(chunks, [&](size_t c) {
    detail::BlockScratch sc;
    const size_t s0 = c * detail::kChunkSamples;
    const size_t len = std::min(detail::kChunkSamples, n - s0);
    std::vector<double> preds(len);
    detail::forward_block(mlp, wt, inputs.data() + s0 * d, len, sc, preds.data());

    Gradients& g = partial_grads[c];
    g.assign(np, 0.0);
    const uint32_t width = a.hidden_width;
    const uint32_t layers = a.layer_count();

    // dL/d(pre-activation) of the output layer, folding in the head.
    double loss = 0.0;
    std::vector<double> dz(len);
    constexpr double kEps = 1e-7;
    for (size_t s = 0; s < len; ++s) {
      const double t = targets[s0 + s];
      const double y = preds[s];
      if (loss_kind == LossKind::kBce) {
        const double p = std::clamp(y, kEps, 1.0 - kEps);
        loss += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        dz[s] = (y - t) / normalizer;  // sigmoid & BCE combined
      } else {
        const double e = y - t;
        loss += e * e;
        dz[s] = 2.0 * e / normalizer;
      }
    }
    partial_loss[c] = loss;

    // Walk layers backwards; delta holds dL/d(pre) of the current layer.
    std::vector<double> delta(static_cast<size_t>(len) * width);
    std::vector<double> delta_prev(static_cast<size_t>(len) * width);
    std::copy(dz.begin(), dz.end(), delta.begin());  // output layer width is 1
    for (int k = static_cast<int>(layers) - 1; k >= 0; --k) {
      const uint32_t in = a.fan_in(k), out = a.fan_out(k);
      const double* w = mlp.params.data() + mlp.weight_offset(k);
      double* gw = g.data() + mlp.weight_offset(k);
      double* gb = g.data() + mlp.bias_offset(k);
      const double* below =
          k == 0 ? inputs.data() + s0 * d
                 : sc.act.data() + static_cast<size_t>(k - 1) * len * width;
      // Parameter gradients.
      for (size_t s = 0; s < len; ++s) {
        const double* xs = below + s * in;
        const double* ds = delta.data() + s * out;
        for (uint32_t o = 0; o < out; ++o) {
          const double dv = ds[o];
          gb[o] += dv;
          double* grow = gw + static_cast<size_t>(o) * in;
          for (uint32_t i = 0; i < in; ++i) grow[i] += dv * xs[i];
        }
      }
      if (k == 0) break;
      // Propagate to the layer below through the sine activation.
      const double freq = a.frequency(k - 1);
      const double* zprev = sc.pre.data() + static_cast<size_t>(k - 1) * len * width;
      std::fill(delta_prev.begin(), delta_prev.begin() + static_cast<size_t>(len) * in, 0.0);
      for (size_t s = 0; s < len; ++s) {
        const double* ds = delta.data() + s * out;
        double* dp = delta_prev.data() + s * in;
        for (uint32_t o = 0; o < out; ++o) {
          const double dv = ds[o];
          const double* wrow = w + static_cast<size_t>(o) * in;
          for (uint32_t i = 0; i < in; ++i) dp[i] += dv * wrow[i];
        }
        const double* zs = zprev + s * in;
        for (uint32_t i = 0; i < in; ++i) dp[i] *= freq * std::cos(freq * zs[i]);
      }
      delta.swap(delta_prev);
    }
  });

  BatchGradResult result;
  result.grads.assign(np, 0.0);
  for (size_t c = 0; c < chunks; ++c) {
    result.loss += partial_loss[c];
    const Gradients& g = partial_grads[c];
    for (size_t i = 0; i < np; ++i) result.grads[i] += g[i];
  }
  result.loss /= (loss_kind == LossKind::kBce ? static_cast<double>(n) : normalizer);
  if (mlp.has_prune_mask()) {
    for (size_t i = 0; i < np; ++i) {
      if (mlp.pruned[i]) result.grads[i] = 0.0;
    }
  }
  return result;
}

struct LrSchedule {
  enum class Kind { kConstant, kCosineWarmup };
  Kind kind = Kind::kConstant;
  double lr0 = 1e-3;
  uint32_t warmup_epochs = 0;
  double lr_min = 0.0;

  static LrSchedule constant(double lr) { return LrSchedule{Kind::kConstant, lr, 0, 0.0}; }
  static LrSchedule cosine_warmup(double lr, uint32_t warmup, double lr_min) {
    return LrSchedule{Kind::kCosineWarmup, lr, warmup, lr_min};
  }
};

/// Learning rate for one epoch: linear ramp 0 -> lr0 over the warmup span,
/// then cosine decay to lr_min at the final epoch.
inline double lr_at(const LrSchedule& sched, uint32_t epoch, uint32_t total_epochs) {
  if (epoch >= total_epochs) {
    throw ConfigError("lr_at: epoch out of range");
  }
  if (sched.kind == LrSchedule::Kind::kConstant) return sched.lr0;
  if (epoch < sched.warmup_epochs) {
    return sched.lr0 * static_cast<double>(epoch) / static_cast<double>(sched.warmup_epochs);
  }
  const double span = static_cast<double>(total_epochs) - 1.0 - sched.warmup_epochs;
  const double progress =
      span > 0.0 ? (static_cast<double>(epoch) - sched.warmup_epochs) / span : 0.0;
  return sched.lr_min +
         (sched.lr0 - sched.lr_min) * (1.0 + std::cos(std::numbers::pi * progress)) / 2.0;
}

struct TrainConfig {
  uint32_t epochs = 3000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LrSchedule schedule = LrSchedule::constant(1e-3);
  uint64_t seed = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t step = 0;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update; pruned positions stay exactly zero.
inline void adam_step(Mlp& mlp, const Gradients& grads, AdamState& state, double lr,
                      const TrainConfig& cfg) {
  const size_t n = mlp.params.size();
  if (grads.size() != n || state.m.size() != n) {
    throw ConfigError("adam_step: state/gradient shape mismatch");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    mlp.params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
  mlp.enforce_prune_mask();
}

/// Maps integer indices to [-1, 1] per input dimension and depths to [0, 1].
struct NormalizationSpec {
  std::array<double, 3> scale{0.0, 0.0, 0.0};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  uint32_t dims = 2;
  double d_min = 0.0;
  double d_max = 1.0;

  double coord(uint32_t dim, double index) const { return scale[dim] * index + offset[dim]; }
  double normalize_depth(double d) const { return (d - d_min) / (d_max - d_min); }
  double denormalize_depth(double nd) const { return nd * (d_max - d_min) + d_min; }

  static void axis(NormalizationSpec& spec, uint32_t dim, uint32_t count) {
    if (count > 1) {
      spec.scale[dim] = 2.0 / (count - 1.0);
      spec.offset[dim] = -1.0;
    } else {
      spec.scale[dim] = 0.0;
      spec.offset[dim] = 0.0;
    }
  }
};

inline NormalizationSpec mask_normalization(uint32_t width, uint32_t height) {
  NormalizationSpec spec;
  spec.dims = 2;
  NormalizationSpec::axis(spec, 0, width);
  NormalizationSpec::axis(spec, 1, height);
  return spec;
}

/// Depth normalization over (patch, in-patch u, in-patch v) plus the depth
/// affine map. A constant-depth image gets a unit-width depth range so the
/// map stays invertible.
inline NormalizationSpec depth_normalization(uint32_t width, uint32_t height,
                                             uint32_t patch_factor, double d_min, double d_max) {
  NormalizationSpec spec;
  spec.dims = 3;
  NormalizationSpec::axis(spec, 0, patch_factor * patch_factor);
  NormalizationSpec::axis(spec, 1, width / patch_factor);
  NormalizationSpec::axis(spec, 2, height / patch_factor);
  spec.d_min = d_min;
  spec.d_max = d_max > d_min ? d_max : d_min + 1.0;
  return spec;
}

inline NormalizationSpec depth_normalization_for(const DepthDataset& ds) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const DepthSample& s : ds.samples) {
    lo = std::min(lo, s.depth);
    hi = std::max(hi, s.depth);
  }
  if (ds.samples.empty()) {
    lo = 0.0;
    hi = 1.0;
  }
  return depth_normalization(ds.width, ds.height, ds.patch_factor, lo, hi);
}

struct TrainStats {
  double best_loss = std::numeric_limits<double>::infinity();
  double final_loss = 0.0;
};

namespace detail {

/// Full-batch training loop shared by both INRs and by fine-tuning. Leaves
/// the best-observed parameters in the network.
inline TrainStats train_loop(Mlp& mlp, const std::vector<double>& inputs,
                             const std::vector<double>& targets, LossKind loss_kind,
                             double normalizer, const TrainConfig& cfg) {
  TrainStats stats;
  AdamState adam(mlp.params.size());
  std::vector<double> best = mlp.params;
  for (uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchGradResult r = backward(mlp, inputs, targets, loss_kind, normalizer);
    if (r.loss < stats.best_loss) {
      stats.best_loss = r.loss;
      best = mlp.params;
    }
    adam_step(mlp, r.grads, adam, lr_at(cfg.schedule, epoch, cfg.epochs), cfg);
  }
  // The loop observes the loss before each step; check the final point too.
  std::vector<double> preds = forward_batch(mlp, inputs);
  stats.final_loss = loss_kind == LossKind::kBce ? bce_loss(preds, targets)
                                                 : mse_loss(preds, targets, normalizer);
  if (stats.final_loss < stats.best_loss) {
    stats.best_loss = stats.final_loss;
  } else {
    mlp.params = best;
    mlp.enforce_prune_mask();
  }
  return stats;
}

inline std::vector<double> mask_inputs(const MaskDataset& ds, const NormalizationSpec& norm) {
  std::vector<double> inputs;
  inputs.reserve(ds.samples.size() * 2);
  for (const MaskSample& s : ds.samples) {
    inputs.push_back(norm.coord(0, s.u));
    inputs.push_back(norm.coord(1, s.v));
  }
  return inputs;
}

inline std::vector<double> depth_inputs(const DepthDataset& ds, const NormalizationSpec& norm) {
  std::vector<double> inputs;
  inputs.reserve(ds.samples.size() * 3);
  for (const DepthSample& s : ds.samples) {
    inputs.push_back(norm.coord(0, s.patch));
    inputs.push_back(norm.coord(1, s.iu));
    inputs.push_back(norm.coord(2, s.iv));
  }
  return inputs;
}

}  // namespace detail

/// Overfits the pixel-wise mask INR (BCE loss over every pixel).
inline Mlp train_mask_inr(const MaskDataset& ds, const MlpArchitecture& arch,
                          const TrainConfig& cfg, TrainStats* stats = nullptr) {
  if (ds.samples.empty()) throw InvalidInput("train_mask_inr: empty dataset");
  const NormalizationSpec norm = mask_normalization(ds.width, ds.height);
  const std::vector<double> inputs = detail::mask_inputs(ds, norm);
  std::vector<double> targets;
  targets.reserve(ds.samples.size());
  for (const MaskSample& s : ds.samples) targets.push_back(static_cast<double>(s.bit));

  Mlp mlp = make_mlp(arch, cfg.seed);
  TrainStats st = detail::train_loop(mlp, inputs, targets, LossKind::kBce,
                                     static_cast<double>(ds.samples.size()), cfg);
  if (stats) *stats = st;
  return mlp;
}

/// Overfits the patch-wise depth INR (MSE loss normalized by W*H).
inline Mlp train_depth_inr(const DepthDataset& ds, const MlpArchitecture& arch,
                           const TrainConfig& cfg, const NormalizationSpec& norm,
                           TrainStats* stats = nullptr) {
  if (ds.samples.empty()) throw InvalidInput("train_depth_inr: empty dataset");
  const std::vector<double> inputs = detail::depth_inputs(ds, norm);
  std::vector<double> targets;
  targets.reserve(ds.samples.size());
  for (const DepthSample& s : ds.samples) targets.push_back(norm.normalize_depth(s.depth));

  Mlp mlp = make_mlp(arch, cfg.seed);
  TrainStats st = detail::train_loop(mlp, inputs, targets, LossKind::kMse,
                                     static_cast<double>(ds.width) * ds.height, cfg);
  if (stats) *stats = st;
  return mlp;
}

}  // namespace rinc

#endif  // RINC_INR_HPP
