#ifndef RINC_CLI_HPP
#define RINC_CLI_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rinc/rinc.hpp"

namespace rinc {
namespace cli {

inline PointCloud load_cloud(const std::string& path) {
  if (path.ends_with(".bin")) {
    return read_kitti_bin(path);
  }
  return read_xyz(path);
}

/// Shared encoder flags; every EncodeConfig field is reachable from the
/// command line, and a key=value config file can preset any of them.
struct EncodeFlags {
  uint32_t width = 1024;
  uint32_t height = 64;
  uint32_t np = 16;
  uint32_t mask_v = 40;
  uint32_t depth_v = 40;
  uint32_t layers = 6;
  uint32_t epochs = 3000;
  std::optional<uint32_t> fine_tune_epochs;
  double sparsity_mask = 0.0;
  double sparsity_depth = 0.0;
  uint32_t nb_mask = 16;
  uint32_t nb_depth = 16;
  uint64_t seed = 0;
  double rho_null = -1.0;
  std::optional<double> phi_up;
  std::optional<double> phi_down;

  void add_to(CLI::App& app) {
    app.add_option("--width", width, "range image width");
    app.add_option("--height", height, "range image height");
    app.add_option("--np", np, "patch scaling factor");
    app.add_option("--mask-v", mask_v, "mask INR hidden width");
    app.add_option("--depth-v", depth_v, "depth INR hidden width");
    app.add_option("--layers", layers, "hidden layer count for both INRs");
    app.add_option("--epochs", epochs, "training epochs for both INRs");
    app.add_option("--fine-tune-epochs", fine_tune_epochs,
                   "post-pruning epochs (default: epochs/10)");
    app.add_option("--sparsity-mask", sparsity_mask, "mask INR pruning ratio in [0,1]");
    app.add_option("--sparsity-depth", sparsity_depth, "depth INR pruning ratio in [0,1]");
    app.add_option("--nb-mask", nb_mask, "mask INR quantization bits (4..32)");
    app.add_option("--nb-depth", nb_depth, "depth INR quantization bits (4..32)");
    app.add_option("--seed", seed, "training seed");
    app.add_option("--rho-null", rho_null, "empty-pixel sentinel depth");
    app.add_option("--phi-up", phi_up, "upper elevation bound (radians)");
    app.add_option("--phi-down", phi_down, "lower elevation bound (radians)");
  }

  EncodeConfig to_config() const {
    EncodeConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.patch_factor = np;
    cfg.rho_null = rho_null;
    if (phi_up.has_value() != phi_down.has_value()) {
      throw ConfigError("--phi-up and --phi-down must be given together");
    }
    if (phi_up) cfg.phi_override = {*phi_up, *phi_down};
    cfg.mask_arch.hidden_width = mask_v;
    cfg.mask_arch.hidden_layers = layers;
    cfg.depth_arch.hidden_width = depth_v;
    cfg.depth_arch.hidden_layers = layers;
    cfg.mask_train.epochs = epochs;
    cfg.depth_train.epochs = epochs;
    // Keep the warmup at a tenth of the budget when epochs shrink.
    cfg.depth_train.schedule.warmup_epochs = std::min<uint32_t>(300, epochs / 10);
    cfg.fine_tune_epochs = fine_tune_epochs;
    cfg.mask_sparsity = sparsity_mask;
    cfg.depth_sparsity = sparsity_depth;
    if (nb_mask < 4 || nb_mask > 32 || nb_depth < 4 || nb_depth > 32) {
      throw ConfigError("quantization bits must lie in 4..32");
    }
    cfg.mask_bits = static_cast<uint8_t>(nb_mask);
    cfg.depth_bits = static_cast<uint8_t>(nb_depth);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

inline ProjectionParams projection_params(const EncodeFlags& flags, const PointCloud& cloud) {
  ProjectionParams params;
  params.width = flags.width;
  params.height = flags.height;
  params.rho_null = flags.rho_null;
  if (flags.phi_up && flags.phi_down) {
    params.phi_up = *flags.phi_up;
    params.phi_down = *flags.phi_down;
  } else {
    const auto [up, down] = phi_bounds(cloud);
    params.phi_up = up;
    params.phi_down = down;
  }
  params.validate();
  return params;
}

inline int cmd_project(const std::string& input, const std::string& output,
                       const EncodeFlags& flags, std::ostream& out) {
  out << std::setprecision(12);
  const PointCloud cloud = load_cloud(input);
  if (cloud.empty()) {
    throw InvalidInput(input + ": empty point cloud");
  }
  const ProjectionParams params = projection_params(flags, cloud);
  const RangeImage ri = project(cloud, params);
  save_range_image(ri, flags.np, output);
  const size_t occupied = ri.occupied_count();
  out << "W=" << params.width << " H=" << params.height << " occupied=" << occupied
      << " retention=" << retention_ratio(cloud, unproject(ri)) << "\n";
  return 0;
}

inline int cmd_encode(const std::string& input, const std::string& output,
                      const EncodeFlags& flags, std::ostream& out) {
  const PointCloud cloud = load_cloud(input);
  const EncodeConfig cfg = flags.to_config();
  EncodeStats stats;
  const ModelBitstream stream = encode(cloud, cfg, &stats);
  std::ofstream f(output, std::ios::binary);
  if (!f) {
    throw IoError("cannot open " + output + " for writing");
  }
  f.write(reinterpret_cast<const char*>(stream.bytes.data()),
          static_cast<std::streamsize>(stream.bytes.size()));
  if (!f.good()) {
    throw IoError("write failed for " + output);
  }
  out << std::setprecision(12) << "mask_loss=" << stats.mask_fine_tune.best_loss
      << " depth_loss=" << stats.depth_fine_tune.best_loss << " stream_bits=" << stats.stream_bits
      << " bpp=" << bpp(stats.stream_bits, cloud.size()) << "\n";
  return 0;
}

inline ModelBitstream load_stream(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw FormatError("cannot open " + path);
  }
  ModelBitstream stream;
  stream.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  return stream;
}

inline int cmd_decode(const std::string& input, const std::string& output, std::ostream& out) {
  const DecodeResult result = decode(load_stream(input));
  write_xyz(result.cloud, output);
  out << std::setprecision(12) << "points=" << result.cloud.size()
      << " network_ms=" << result.network_ms
      << " unproject_ms=" << result.unproject_ms
      << " total_ms=" << result.network_ms + result.unproject_ms << "\n";
  return 0;
}

inline int cmd_eval(const std::string& original, const std::string& reconstructed,
                    const std::string& stream_path, std::ostream& out) {
  const PointCloud p = load_cloud(original);
  const PointCloud q = load_cloud(reconstructed);
  double rate = 0.0;
  if (!stream_path.empty()) {
    rate = bpp(load_stream(stream_path).bit_size(), p.size());
  }
  const std::string frame = std::filesystem::path(original).stem().string();
  out << std::setprecision(12) << "frame,bpp,cd,retention\n";
  out << frame << "," << rate << "," << chamfer(p, q) << "," << retention_ratio(p, q) << "\n";
  return 0;
}

struct SweepPoint {
  uint32_t mask_v = 40;
  uint32_t depth_v = 40;
  double sparsity = 0.0;
  uint32_t nb = 16;
};

inline SweepPoint parse_sweep_point(const std::string& text) {
  SweepPoint pt;
  char c1, c2, c3;
  std::istringstream ss(text);
  if (!(ss >> pt.mask_v >> c1 >> pt.depth_v >> c2 >> pt.sparsity >> c3 >> pt.nb) || c1 != ',' ||
      c2 != ',' || c3 != ',' || !(ss >> std::ws).eof()) {
    throw ConfigError("bad sweep point \"" + text + "\": expected MASK_V,DEPTH_V,SPARSITY,NB");
  }
  return pt;
}

inline RdCurve read_curve_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw FormatError("cannot open " + path);
  }
  RdCurve curve;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    RdPoint pt;
    char comma;
    if (ss >> pt.bpp >> comma >> pt.cd) {
      curve.points.push_back(pt);
    }
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return curve;
}

inline int cmd_sweep(const std::string& input, const std::vector<std::string>& point_specs,
                     const EncodeFlags& flags, uint32_t jobs, const std::string& csv_path,
                     const std::string& bd_against, std::ostream& out) {
  if (point_specs.empty()) {
    throw ConfigError("sweep needs at least one --point");
  }
  std::vector<SweepPoint> points;
  points.reserve(point_specs.size());
  for (const std::string& s : point_specs) points.push_back(parse_sweep_point(s));

  const PointCloud cloud = load_cloud(input);
  struct Row {
    double bpp = 0.0, cd = 0.0, retention = 0.0;
    SweepPoint pt;
  };
  std::vector<Row> rows(points.size());

  auto run_point = [&](size_t i) {
    EncodeFlags f = flags;
    f.mask_v = points[i].mask_v;
    f.depth_v = points[i].depth_v;
    f.sparsity_mask = points[i].sparsity;
    f.sparsity_depth = points[i].sparsity;
    f.nb_mask = points[i].nb;
    f.nb_depth = points[i].nb;
    const ModelBitstream stream = encode(cloud, f.to_config());
    const DecodeResult decoded = decode(stream);
    rows[i] = Row{bpp(stream.bit_size(), cloud.size()), chamfer(cloud, decoded.cloud),
                  retention_ratio(cloud, decoded.cloud), points[i]};
  };

  const uint32_t workers =
      std::min<uint32_t>({jobs == 0 ? 1 : jobs, static_cast<uint32_t>(points.size()),
                          static_cast<uint32_t>(detail::env_thread_cap())});
  if (workers <= 1) {
    for (size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (uint32_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        try {
          for (size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
            run_point(i);
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }

  std::ostringstream csv;
  csv << std::setprecision(12) << "bpp,cd,retention,mask_v,depth_v,sparsity,nb\n";
  for (const Row& r : rows) {
    csv << r.bpp << "," << r.cd << "," << r.retention << "," << r.pt.mask_v << "," << r.pt.depth_v
        << "," << r.pt.sparsity << "," << r.pt.nb << "\n";
  }
  if (csv_path.empty()) {
    out << csv.str();
  } else {
    std::ofstream f(csv_path);
    if (!f) {
      throw IoError("cannot open " + csv_path + " for writing");
    }
    f << csv.str();
  }

  if (!bd_against.empty()) {
    RdCurve ours;
    for (const Row& r : rows) ours.points.push_back(RdPoint{r.bpp, r.cd});
    std::sort(ours.points.begin(), ours.points.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
    out << std::setprecision(12) << "bd_cd=" << bd_cd(ours, read_curve_csv(bd_against)) << "\n";
  }
  return 0;
}

/// Expands `--config FILE` into individual flags: each `key=value` line
/// becomes `--key value`, appended only when the command line does not
/// already carry that flag, so explicit flags always win.
inline std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const std::string path = args[i + 1];
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    std::ifstream f(path);
    if (!f) {
      throw ConfigError("cannot open config file " + path);
    }
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      const size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos || eq <= start) {
        throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        const size_t a = s.find_first_not_of(" \t\r");
        const size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string flag = "--" + trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      bool given = false;
      for (const std::string& a : args) {
        if (a == flag || a.starts_with(flag + "=")) {
          given = true;
          break;
        }
      }
      if (!given) {
        args.push_back(flag);
        args.push_back(value);
      }
    }
    break;
  }
  return args;
}

/// Parses and dispatches one invocation. Diagnostics go to `err`,
/// machine-readable output to `out` or the -o path.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"LiDAR range-image neural codec"};
  app.require_subcommand(1);

  std::string input, output, stream_path, bd_against;
  std::vector<std::string> point_specs;
  uint32_t jobs = 1;
  EncodeFlags flags;

  CLI::App* project = app.add_subcommand("project", "project a cloud to a range image dump");
  project->add_option("input", input, "input cloud (.bin or .xyz)")->required();
  project->add_option("-o,--output", output, "range image dump path")->required();
  project->add_option("--config", "key=value configuration file (flags override it)");
  flags.add_to(*project);

  CLI::App* enc = app.add_subcommand("encode", "compress a cloud to a model bitstream");
  enc->add_option("input", input, "input cloud (.bin or .xyz)")->required();
  enc->add_option("-o,--output", output, "bitstream path (.rinc)")->required();
  enc->add_option("--config", "key=value configuration file (flags override it)");
  flags.add_to(*enc);

  CLI::App* dec = app.add_subcommand("decode", "reconstruct a cloud from a bitstream");
  dec->add_option("input", input, "bitstream path (.rinc)")->required();
  dec->add_option("-o,--output", output, "output cloud (.xyz)")->required();

  CLI::App* ev = app.add_subcommand("eval", "compare two clouds (CSV to stdout)");
  ev->add_option("original", input, "original cloud")->required();
  ev->add_option("reconstructed", output, "reconstructed cloud")->required();
  ev->add_option("--stream", stream_path, "bitstream whose size sets bpp");

  CLI::App* sw = app.add_subcommand("sweep", "encode/decode/eval a list of rate points");
  sw->add_option("input", input, "input cloud")->required();
  sw->add_option("--point", point_specs, "rate point as MASK_V,DEPTH_V,SPARSITY,NB")
      ->take_all()
      ->required();
  sw->add_option("-o,--output", output, "CSV output path (default: stdout)");
  sw->add_option("--jobs", jobs, "parallel rate points");
  sw->add_option("--bd-against", bd_against, "CSV curve to compare via BD-CD");
  sw->add_option("--config", "key=value configuration file (flags override it)");
  flags.add_to(*sw);

  try {
    args = apply_config_file(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
    if (project->parsed()) return cmd_project(input, output, flags, out);
    if (enc->parsed()) return cmd_encode(input, output, flags, out);
    if (dec->parsed()) return cmd_decode(input, output, out);
    if (ev->parsed()) return cmd_eval(input, output, stream_path, out);
    if (sw->parsed()) return cmd_sweep(input, point_specs, flags, jobs, output, bd_against, out);
    err << "no subcommand given\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cli
}  // namespace rinc

#endif  // RINC_CLI_HPP
