#ifndef RINC_CODEC_HPP
#define RINC_CODEC_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/inr.hpp"
#include "rinc/model_compress.hpp"
#include "rinc/pointcloud.hpp"
#include "rinc/projection.hpp"

namespace rinc {

struct EncodeConfig {
  uint32_t width = 1024;
  uint32_t height = 64;
  double rho_null = -1.0;
  /// Elevation bounds (up, down); derived from the input cloud when unset.
  std::optional<std::pair<double, double>> phi_override;
  uint32_t patch_factor = 16;

  MlpArchitecture mask_arch{2, 6, 40, OutputActivation::kSigmoid, 30.0};
  MlpArchitecture depth_arch{3, 6, 40, OutputActivation::kIdentity, 30.0};

  TrainConfig mask_train{3000, 0.9, 0.999, 1e-8, LrSchedule::constant(1e-3), 0};
  TrainConfig depth_train{3000, 0.9, 0.999, 1e-8, LrSchedule::cosine_warmup(1e-4, 300, 1e-12), 0};

  double mask_sparsity = 0.0;
  double depth_sparsity = 0.0;
  uint8_t mask_bits = 16;
  uint8_t depth_bits = 16;

  /// Post-pruning retraining budget; 10% of the main epochs when unset.
  std::optional<uint32_t> fine_tune_epochs;
  double fine_tune_lr = 1e-4;

  uint64_t seed = 0;

  void validate() const {
    mask_arch.validate();
    depth_arch.validate();
    if (mask_arch.input_dim != 2 || depth_arch.input_dim != 3) {
      throw ConfigError("mask INR takes 2 inputs, depth INR takes 3");
    }
    PruneSpec{mask_sparsity}.validate();
    PruneSpec{depth_sparsity}.validate();
    if (width > 0xffff || height > 0xffff || patch_factor > 0xff) {
      throw ConfigError("dimensions exceed the bitstream header range");
    }
  }
};

struct EncodeStats {
  TrainStats mask_train;
  TrainStats depth_train;
  TrainStats mask_fine_tune;
  TrainStats depth_fine_tune;
  size_t stream_bits = 0;
  size_t input_points = 0;
  size_t occupied_pixels = 0;
};

/// Continues training a pruned mask INR with gradients masked at the pruned
/// positions. Returns the best-loss parameters observed, so the result is
/// never worse on the training loss than the pruned input.
inline Mlp fine_tune(const Mlp& pruned_mlp, const MaskDataset& ds, const TrainConfig& cfg,
                     TrainStats* stats = nullptr) {
  if (!pruned_mlp.has_prune_mask()) {
    throw ConfigError("fine_tune: prune mask not set");
  }
  const NormalizationSpec norm = mask_normalization(ds.width, ds.height);
  const std::vector<double> inputs = detail::mask_inputs(ds, norm);
  std::vector<double> targets;
  targets.reserve(ds.samples.size());
  for (const MaskSample& s : ds.samples) targets.push_back(static_cast<double>(s.bit));
  Mlp mlp = pruned_mlp;
  TrainStats st = detail::train_loop(mlp, inputs, targets, LossKind::kBce,
                                     static_cast<double>(ds.samples.size()), cfg);
  if (stats) *stats = st;
  return mlp;
}

inline Mlp fine_tune(const Mlp& pruned_mlp, const DepthDataset& ds, const TrainConfig& cfg,
                     const NormalizationSpec& norm, TrainStats* stats = nullptr) {
  if (!pruned_mlp.has_prune_mask()) {
    throw ConfigError("fine_tune: prune mask not set");
  }
  const std::vector<double> inputs = detail::depth_inputs(ds, norm);
  std::vector<double> targets;
  targets.reserve(ds.samples.size());
  for (const DepthSample& s : ds.samples) targets.push_back(norm.normalize_depth(s.depth));
  Mlp mlp = pruned_mlp;
  TrainStats st = detail::train_loop(mlp, inputs, targets, LossKind::kMse,
                                     static_cast<double>(ds.width) * ds.height, cfg);
  if (stats) *stats = st;
  return mlp;
}

/// Full encode pipeline: project, split, overfit both INRs, prune,
/// fine-tune, quantize, entropy-code, serialize. Deterministic for a fixed
/// (cloud, config).
inline ModelBitstream encode(const PointCloud& cloud, const EncodeConfig& cfg,
                             EncodeStats* stats = nullptr) {
  cfg.validate();
  if (cloud.empty()) {
    throw InvalidInput("encode: empty point cloud");
  }

  ProjectionParams params;
  params.width = cfg.width;
  params.height = cfg.height;
  params.rho_null = cfg.rho_null;
  if (cfg.phi_override) {
    params.phi_up = cfg.phi_override->first;
    params.phi_down = cfg.phi_override->second;
  } else {
    const auto [up, down] = phi_bounds(cloud);
    params.phi_up = up;
    params.phi_down = down;
  }
  // Snap the header floats now so encoder and decoder use identical geometry.
  params.phi_up = static_cast<double>(static_cast<float>(params.phi_up));
  params.phi_down = static_cast<double>(static_cast<float>(params.phi_down));
  params.rho_null = static_cast<double>(static_cast<float>(params.rho_null));
  params.validate();

  const RangeImage ri = project(cloud, params);
  const auto [mask_img, depth_img] = split(ri, cfg.patch_factor);
  const auto [mask_ds, depth_ds] = make_datasets(mask_img, depth_img);
  if (depth_ds.samples.empty()) {
    throw InvalidInput("encode: no point projects onto the range image");
  }

  // Snap the depth range to the float32 header fields up front (keeping it
  // nonempty), so training and decoding share the exact affine map.
  NormalizationSpec depth_norm = depth_normalization_for(depth_ds);
  const float fmin = static_cast<float>(depth_norm.d_min);
  float fmax = detail::snap_up(depth_norm.d_max);
  if (!(fmax > fmin)) {
    fmax = fmin + 1.0f;
    if (!(fmax > fmin)) fmax = std::nextafterf(fmin, std::numeric_limits<float>::infinity());
  }
  depth_norm.d_min = fmin;
  depth_norm.d_max = fmax;

  TrainConfig mask_cfg = cfg.mask_train;
  mask_cfg.seed = cfg.seed;
  TrainConfig depth_cfg = cfg.depth_train;
  depth_cfg.seed = cfg.seed + 1;

  EncodeStats local;
  EncodeStats& st = stats ? *stats : local;
  st.input_points = cloud.size();
  st.occupied_pixels = mask_img.ones_count();

  Mlp mask_mlp = train_mask_inr(mask_ds, cfg.mask_arch, mask_cfg, &st.mask_train);
  Mlp depth_mlp =
      train_depth_inr(depth_ds, cfg.depth_arch, depth_cfg, depth_norm, &st.depth_train);

  mask_mlp = prune_global(mask_mlp, PruneSpec{cfg.mask_sparsity});
  depth_mlp = prune_global(depth_mlp, PruneSpec{cfg.depth_sparsity});

  TrainConfig ft_cfg;
  ft_cfg.beta1 = mask_cfg.beta1;
  ft_cfg.beta2 = mask_cfg.beta2;
  ft_cfg.adam_eps = mask_cfg.adam_eps;
  ft_cfg.schedule = LrSchedule::constant(cfg.fine_tune_lr);
  ft_cfg.epochs = cfg.fine_tune_epochs ? *cfg.fine_tune_epochs
                                       : std::max<uint32_t>(1, cfg.mask_train.epochs / 10);
  mask_mlp = fine_tune(mask_mlp, mask_ds, ft_cfg, &st.mask_fine_tune);
  ft_cfg.epochs = cfg.fine_tune_epochs ? *cfg.fine_tune_epochs
                                       : std::max<uint32_t>(1, cfg.depth_train.epochs / 10);
  depth_mlp = fine_tune(depth_mlp, depth_ds, ft_cfg, depth_norm, &st.depth_fine_tune);

  StreamInfo info;
  info.width = static_cast<uint16_t>(cfg.width);
  info.height = static_cast<uint16_t>(cfg.height);
  info.patch_factor = static_cast<uint8_t>(cfg.patch_factor);
  info.phi_up = static_cast<float>(params.phi_up);
  info.phi_down = static_cast<float>(params.phi_down);
  info.rho_null = static_cast<float>(params.rho_null);
  info.d_min = static_cast<float>(depth_norm.d_min);
  info.d_max = static_cast<float>(depth_norm.d_max);

  ModelBitstream stream = serialize_model(quantize_model(mask_mlp, cfg.mask_bits),
                                          quantize_model(depth_mlp, cfg.depth_bits), info);
  st.stream_bits = stream.bit_size();
  return stream;
}

struct DecodeResult {
  RangeImage range_image;
  PointCloud cloud;
  size_t stream_bits = 0;
  double network_ms = 0.0;    // INR evaluation
  double unproject_ms = 0.0;  // 2D-to-3D mapping
};

/// Decode: evaluate both INRs on the full coordinate grids, gate the depth
/// image by the thresholded mask, back-project to 3D.
inline DecodeResult decode(const ModelBitstream& stream) {
  const DeserializedModels models = deserialize_model(stream);
  const StreamInfo& info = models.info;

  ProjectionParams params;
  params.width = info.width;
  params.height = info.height;
  params.phi_up = info.phi_up;
  params.phi_down = info.phi_down;
  params.rho_null = info.rho_null;
  params.validate();

  const Mlp mask_mlp = dequantize_model(models.mask_model);
  const Mlp depth_mlp = dequantize_model(models.depth_model);
  const uint32_t w = info.width, h = info.height, np = info.patch_factor;
  if (np == 0 || w % np != 0 || h % np != 0) {
    throw FormatError("patch factor does not divide the image dimensions");
  }
  if (!(info.d_min > 0.0f) || !(info.d_max > info.d_min)) {
    throw FormatError("invalid depth range in stream header");
  }

  const auto t0 = std::chrono::steady_clock::now();

  // Mask INR over every pixel, row-major.
  const NormalizationSpec mask_norm = mask_normalization(w, h);
  std::vector<double> mask_in;
  mask_in.reserve(static_cast<size_t>(w) * h * 2);
  for (uint32_t v = 0; v < h; ++v) {
    for (uint32_t u = 0; u < w; ++u) {
      mask_in.push_back(mask_norm.coord(0, u));
      mask_in.push_back(mask_norm.coord(1, v));
    }
  }
  const std::vector<double> mask_out = forward_batch(mask_mlp, mask_in);

  // Depth INR over every (patch, in-patch) coordinate.
  const NormalizationSpec depth_norm = depth_normalization(w, h, np, info.d_min, info.d_max);
  DepthImage layout;
  layout.params = params;
  layout.patch_factor = np;
  const uint32_t pw = w / np, ph = h / np;
  std::vector<double> depth_in;
  depth_in.reserve(static_cast<size_t>(w) * h * 3);
  for (uint32_t i = 0; i < np * np; ++i) {
    for (uint32_t iv = 0; iv < ph; ++iv) {
      for (uint32_t iu = 0; iu < pw; ++iu) {
        depth_in.push_back(depth_norm.coord(0, i));
        depth_in.push_back(depth_norm.coord(1, iu));
        depth_in.push_back(depth_norm.coord(2, iv));
      }
    }
  }
  const std::vector<double> depth_out = forward_batch(depth_mlp, depth_in);

  // Gate: valid depth where the mask fires, rho_null elsewhere. Network
  // outputs are clamped to the trained [0, 1] range before denormalization
  // so every surviving pixel carries a positive depth.
  DecodeResult result;
  result.range_image = RangeImage(params);
  size_t flat = 0;
  for (uint32_t i = 0; i < np * np; ++i) {
    for (uint32_t iv = 0; iv < ph; ++iv) {
      for (uint32_t iu = 0; iu < pw; ++iu, ++flat) {
        uint32_t u, v;
        layout.absolute_coords(i, iu, iv, u, v);
        if (mask_out[static_cast<size_t>(v) * w + u] >= 0.5) {
          const double nd = std::clamp(depth_out[flat], 0.0, 1.0);
          result.range_image.at(u, v) = depth_norm.denormalize_depth(nd);
        }
      }
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  result.cloud = unproject(result.range_image);
  const auto t2 = std::chrono::steady_clock::now();

  result.stream_bits = stream.bit_size();
  result.network_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.unproject_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
  return result;
}

}  // namespace rinc

#endif  // RINC_CODEC_HPP
