#ifndef RINC_MODEL_COMPRESS_HPP
#define RINC_MODEL_COMPRESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rinc/error.hpp"
#include "rinc/inr.hpp"
#include "rinc/io_util.hpp"

namespace rinc {

struct PruneSpec {
  double sparsity = 0.0;

  void validate() const {
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
      throw ConfigError("sparsity must lie in [0, 1]");
    }
  }
};

/// Global unstructured magnitude pruning across all weight matrices jointly;
/// biases are exempt. The ceil(sparsity * weight_count) smallest-magnitude
/// weights are zeroed and pinned via the prune mask; on magnitude ties the
/// earlier-indexed weight is kept.
inline Mlp prune_global(const Mlp& mlp, const PruneSpec& spec) {
  spec.validate();
  Mlp out = mlp;
  out.pruned.assign(out.params.size(), 0);

  std::vector<size_t> weight_positions;
  weight_positions.reserve(out.params.size());
  for (uint32_t k = 0; k < out.arch.layer_count(); ++k) {
    const size_t w0 = out.weight_offset(k);
    const size_t nw = static_cast<size_t>(out.arch.fan_in(k)) * out.arch.fan_out(k);
    for (size_t i = 0; i < nw; ++i) weight_positions.push_back(w0 + i);
  }

  const size_t count = weight_positions.size();
  const size_t k = std::min(count, static_cast<size_t>(std::ceil(spec.sparsity * count)));
  if (k == 0) return out;

  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double ma = std::abs(out.params[weight_positions[a]]);
    const double mb = std::abs(out.params[weight_positions[b]]);
    if (ma != mb) return ma < mb;
    return a > b;
  });
  for (size_t i = 0; i < k; ++i) {
    const size_t pos = weight_positions[order[i]];
    out.params[pos] = 0.0;
    out.pruned[pos] = 1;
  }
  return out;
}

/// Uniformly quantized parameter slice. Endpoints are snapped outward to
/// float32 so the serialized header reproduces the exact range the codes were
/// computed against.
struct QuantizedLayer {
  std::vector<uint32_t> codes;
  uint8_t n_b = 8;
  float mu_min = 0.0f;
  float mu_max = 0.0f;

  double step() const {
    if (mu_max == mu_min) return 0.0;
    const double levels = std::ldexp(1.0, n_b) - 1.0;  // 2^n_b - 1
    return (static_cast<double>(mu_max) - static_cast<double>(mu_min)) / levels;
  }
};

namespace detail {

inline float snap_down(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) > x) f = std::nextafterf(f, -std::numeric_limits<float>::infinity());
  return f;
}

inline float snap_up(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) < x) f = std::nextafterf(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace detail

inline QuantizedLayer quantize_layer(std::span<const double> values, uint8_t n_b) {
  if (n_b < 4 || n_b > 32) throw ConfigError("quantization bit depth must be 4..32");
  if (values.empty()) throw ConfigError("cannot quantize an empty layer");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  QuantizedLayer q;
  q.n_b = n_b;
  q.codes.assign(values.size(), 0u);
  if (*lo_it == *hi_it) {
    // Degenerate layer: single level, step recorded as 0.
    q.mu_min = q.mu_max = static_cast<float>(*lo_it);
    return q;
  }
  q.mu_min = detail::snap_down(*lo_it);
  q.mu_max = detail::snap_up(*hi_it);
  const double s = q.step();
  const int64_t max_code = static_cast<int64_t>(std::ldexp(1.0, n_b) - 1.0);
  for (size_t i = 0; i < values.size(); ++i) {
    const int64_t c = std::llround((values[i] - static_cast<double>(q.mu_min)) / s);
    q.codes[i] = static_cast<uint32_t>(std::clamp<int64_t>(c, 0, max_code));
  }
  return q;
}

/// Inverse map; codes 0 and 2^n_b - 1 reproduce mu_min / mu_max exactly.
inline std::vector<double> dequantize_layer(const QuantizedLayer& q) {
  std::vector<double> out(q.codes.size());
  const double s = q.step();
  const uint32_t max_code = static_cast<uint32_t>(std::ldexp(1.0, q.n_b) - 1.0);
  for (size_t i = 0; i < q.codes.size(); ++i) {
    const uint32_t c = q.codes[i];
    if (c == 0) {
      out[i] = q.mu_min;
    } else if (c == max_code) {
      out[i] = q.mu_max;
    } else {
      out[i] = static_cast<double>(q.mu_min) + c * s;
    }
  }
  return out;
}

/// Canonical Huffman table: code lengths per symbol, serialized as
/// (symbol, length) pairs sorted by (length, symbol).
struct HuffmanTable {
  std::vector<std::pair<uint32_t, uint8_t>> entries;
};

inline HuffmanTable huffman_build(const std::vector<uint32_t>& codes) {
  if (codes.empty()) throw ConfigError("cannot build a Huffman table from an empty sequence");

  std::map<uint32_t, uint64_t> freq;
  for (uint32_t c : codes) ++freq[c];

  HuffmanTable table;
  if (freq.size() == 1) {
    table.entries.push_back({freq.begin()->first, 1});
    return table;
  }

  // Tree construction with deterministic tie-breaking on creation order.
  struct Node {
    uint64_t freq;
    uint32_t tick;
    int left, right;  // -1 for leaves
    uint32_t symbol;
  };
  std::vector<Node> nodes;
  nodes.reserve(2 * freq.size());
  auto cmp = [&](int a, int b) {
    if (nodes[a].freq != nodes[b].freq) return nodes[a].freq > nodes[b].freq;
    return nodes[a].tick > nodes[b].tick;
  };
  std::vector<int> heap;
  for (const auto& [sym, f] : freq) {
    nodes.push_back(Node{f, static_cast<uint32_t>(nodes.size()), -1, -1, sym});
    heap.push_back(static_cast<int>(nodes.size()) - 1);
  }
  std::make_heap(heap.begin(), heap.end(), cmp);
  while (heap.size() > 1) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    const int a = heap.back();
    heap.pop_back();
    std::pop_heap(heap.begin(), heap.end(), cmp);
    const int b = heap.back();
    heap.pop_back();
    nodes.push_back(
        Node{nodes[a].freq + nodes[b].freq, static_cast<uint32_t>(nodes.size()), a, b, 0});
    heap.push_back(static_cast<int>(nodes.size()) - 1);
    std::push_heap(heap.begin(), heap.end(), cmp);
  }

  // Depth-first walk to collect code lengths.
  std::vector<std::pair<int, uint8_t>> stack{{heap.front(), 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const Node& n = nodes[id];
    if (n.left < 0) {
      table.entries.push_back({n.symbol, depth});
    } else {
      stack.push_back({n.left, static_cast<uint8_t>(depth + 1)});
      stack.push_back({n.right, static_cast<uint8_t>(depth + 1)});
    }
  }
  std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  return table;
}

namespace detail {

/// Canonical codeword assignment in (length, symbol) order.
inline std::vector<std::pair<uint64_t, uint8_t>> canonical_codes(const HuffmanTable& table) {
  std::vector<std::pair<uint64_t, uint8_t>> out;
  out.reserve(table.entries.size());
  uint64_t code = 0;
  uint8_t prev_len = table.entries.empty() ? 0 : table.entries.front().second;
  for (const auto& [sym, len] : table.entries) {
    code <<= (len - prev_len);
    out.push_back({code, len});
    ++code;
    prev_len = len;
  }
  return out;
}

}  // namespace detail

class BitWriter {
 public:
  void append(uint64_t code, uint8_t len) {
    for (int i = len - 1; i >= 0; --i) {
      push_bit((code >> i) & 1u);
    }
  }

  size_t bit_count() const { return bit_count_; }
  const std::vector<uint8_t>& bytes() const { return bytes_; }

 private:
  void push_bit(uint64_t b) {
    if (bit_count_ % 8 == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<uint8_t>(0x80u >> (bit_count_ % 8));
    ++bit_count_;
  }

  std::vector<uint8_t> bytes_;
  size_t bit_count_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* data, size_t bit_count) : data_(data), bit_count_(bit_count) {}

  bool next() {
    if (pos_ >= bit_count_) {
      throw FormatError("corrupt stream: bit payload exhausted");
    }
    const bool b = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return b;
  }

  size_t consumed() const { return pos_; }

 private:
  const uint8_t* data_;
  size_t bit_count_;
  size_t pos_ = 0;
};

inline std::pair<std::vector<uint8_t>, size_t> huffman_encode(const std::vector<uint32_t>& codes,
                                                              const HuffmanTable& table) {
  std::map<uint32_t, std::pair<uint64_t, uint8_t>> codebook;
  const auto canon = detail::canonical_codes(table);
  for (size_t i = 0; i < table.entries.size(); ++i) {
    codebook[table.entries[i].first] = canon[i];
  }
  BitWriter w;
  for (uint32_t c : codes) {
    const auto it = codebook.find(c);
    if (it == codebook.end()) {
      throw ConfigError("symbol " + std::to_string(c) + " missing from Huffman table");
    }
    w.append(it->second.first, it->second.second);
  }
  return {w.bytes(), w.bit_count()};
}

inline std::vector<uint32_t> huffman_decode(const std::vector<uint8_t>& bits, size_t bit_count,
                                            const HuffmanTable& table, size_t symbol_count) {
  if (table.entries.empty() && symbol_count > 0) {
    throw FormatError("corrupt stream: empty Huffman table");
  }
  // first_code/first_index per length for canonical decoding.
  uint8_t max_len = 0;
  for (const auto& e : table.entries) max_len = std::max(max_len, e.second);
  std::vector<uint64_t> first_code(max_len + 1, 0);
  std::vector<size_t> first_index(max_len + 1, 0), count(max_len + 1, 0);
  {
    const auto canon = detail::canonical_codes(table);
    for (size_t i = 0; i < table.entries.size(); ++i) {
      const uint8_t len = table.entries[i].second;
      if (count[len] == 0) {
        first_code[len] = canon[i].first;
        first_index[len] = i;
      }
      ++count[len];
    }
  }

  BitReader r(bits.data(), bit_count);
  std::vector<uint32_t> out;
  out.reserve(symbol_count);
  for (size_t s = 0; s < symbol_count; ++s) {
    uint64_t acc = 0;
    uint8_t len = 0;
    for (;;) {
      acc = (acc << 1) | (r.next() ? 1u : 0u);
      ++len;
      if (len > max_len) {
        throw FormatError("corrupt stream: no codeword matches");
      }
      if (count[len] != 0 && acc >= first_code[len] && acc - first_code[len] < count[len]) {
        out.push_back(table.entries[first_index[len] + (acc - first_code[len])].first);
        break;
      }
    }
  }
  return out;
}

/// One INR after quantization: architecture plus per-layer code slices
/// (weights then biases of each layer, network order).
struct QuantizedModel {
  MlpArchitecture arch;
  std::vector<QuantizedLayer> layers;
};

inline QuantizedModel quantize_model(const Mlp& mlp, uint8_t n_b) {
  QuantizedModel qm;
  qm.arch = mlp.arch;
  qm.layers.reserve(mlp.arch.layer_count());
  for (uint32_t k = 0; k < mlp.arch.layer_count(); ++k) {
    const auto [begin, end] = mlp.layer_span(k);
    qm.layers.push_back(
        quantize_layer(std::span<const double>(mlp.params.data() + begin, end - begin), n_b));
  }
  return qm;
}

inline Mlp dequantize_model(const QuantizedModel& qm) {
  Mlp mlp;
  mlp.arch = qm.arch;
  mlp.params.reserve(qm.arch.param_count());
  for (const QuantizedLayer& layer : qm.layers) {
    const std::vector<double> values = dequantize_layer(layer);
    mlp.params.insert(mlp.params.end(), values.begin(), values.end());
  }
  return mlp;
}

/// Scene metadata carried in the bitstream header.
struct StreamInfo {
  uint16_t width = 0;
  uint16_t height = 0;
  uint8_t patch_factor = 16;
  float phi_up = 0.0f;
  float phi_down = 0.0f;
  float rho_null = -1.0f;
  float d_min = 0.0f;
  float d_max = 1.0f;

  bool operator==(const StreamInfo&) const = default;
};

struct ModelBitstream {
  std::vector<uint8_t> bytes;

  size_t bit_size() const { return bytes.size() * 8; }
};

constexpr uint8_t kStreamVersion = 1;
constexpr char kStreamMagic[4] = {'R', 'I', 'N', 'C'};

namespace detail {

inline void serialize_quantized_model(std::vector<uint8_t>& out, const QuantizedModel& qm) {
  put_u8(out, static_cast<uint8_t>(qm.arch.input_dim));
  put_u8(out, static_cast<uint8_t>(qm.arch.hidden_layers));
  put_u16(out, static_cast<uint16_t>(qm.arch.hidden_width));
  put_f32(out, static_cast<float>(qm.arch.omega0));
  for (const QuantizedLayer& layer : qm.layers) {
    put_u8(out, layer.n_b);
    put_f32(out, layer.mu_min);
    put_f32(out, layer.mu_max);
    const HuffmanTable table = huffman_build(layer.codes);
    if (table.entries.size() > 0xffff) {
      throw ConfigError("layer alphabet exceeds the bitstream's u16 symbol count");
    }
    put_u16(out, static_cast<uint16_t>(table.entries.size()));
    for (const auto& [sym, len] : table.entries) {
      put_u32(out, sym);
      put_u8(out, len);
    }
    const auto [payload, bit_count] = huffman_encode(layer.codes, table);
    if (bit_count > 0xffffffffull) {
      throw ConfigError("layer payload exceeds the bitstream's u32 bit count");
    }
    put_u32(out, static_cast<uint32_t>(bit_count));
    out.insert(out.end(), payload.begin(), payload.end());
  }
}

inline QuantizedModel deserialize_quantized_model(ByteReader& r, OutputActivation head) {
  QuantizedModel qm;
  qm.arch.input_dim = r.u8();
  qm.arch.hidden_layers = r.u8();
  qm.arch.hidden_width = r.u16();
  qm.arch.omega0 = r.f32();
  qm.arch.output = head;
  qm.arch.validate();
  if (qm.arch.hidden_layers > 64 || qm.arch.hidden_width > 8192) {
    throw FormatError("architecture in stream exceeds supported size");
  }
  for (uint32_t k = 0; k < qm.arch.layer_count(); ++k) {
    QuantizedLayer layer;
    layer.n_b = r.u8();
    if (layer.n_b < 4 || layer.n_b > 32) {
      throw FormatError("invalid bit depth at offset " + std::to_string(r.offset()));
    }
    layer.mu_min = r.f32();
    layer.mu_max = r.f32();
    if (!(layer.mu_max >= layer.mu_min)) {
      throw FormatError("invalid quantization range at offset " + std::to_string(r.offset()));
    }
    const uint16_t symbol_count = r.u16();
    HuffmanTable table;
    table.entries.reserve(symbol_count);
    for (uint16_t i = 0; i < symbol_count; ++i) {
      const uint32_t sym = r.u32();
      const uint8_t len = r.u8();
      if (len < 1 || len > 58) {
        throw FormatError("invalid code length at offset " + std::to_string(r.offset()));
      }
      if (!table.entries.empty()) {
        const auto& prev = table.entries.back();
        const bool ordered = len > prev.second || (len == prev.second && sym > prev.first);
        if (!ordered) {
          throw FormatError("Huffman table not canonical at offset " + std::to_string(r.offset()));
        }
      }
      table.entries.push_back({sym, len});
    }
    const uint32_t payload_bits = r.u32();
    const size_t payload_bytes = (payload_bits + 7) / 8;
    const uint8_t* payload = r.bytes(payload_bytes);
    const size_t value_count =
        static_cast<size_t>(qm.arch.fan_in(k)) * qm.arch.fan_out(k) + qm.arch.fan_out(k);
    std::vector<uint8_t> bits(payload, payload + payload_bytes);
    layer.codes = huffman_decode(bits, payload_bits, table, value_count);
    qm.layers.push_back(std::move(layer));
  }
  return qm;
}

}  // namespace detail

/// Serializes the two quantized INRs plus scene metadata. Layout (all
/// little-endian): "RINC" | version | W | H | Np | phi_up | phi_down |
/// rho_null | d_min | d_max | mask model | depth model.
inline ModelBitstream serialize_model(const QuantizedModel& mask_model,
                                      const QuantizedModel& depth_model, const StreamInfo& info) {
  ModelBitstream stream;
  std::vector<uint8_t>& out = stream.bytes;
  out.insert(out.end(), kStreamMagic, kStreamMagic + 4);
  put_u8(out, kStreamVersion);
  put_u16(out, info.width);
  put_u16(out, info.height);
  put_u8(out, info.patch_factor);
  put_f32(out, info.phi_up);
  put_f32(out, info.phi_down);
  put_f32(out, info.rho_null);
  put_f32(out, info.d_min);
  put_f32(out, info.d_max);
  detail::serialize_quantized_model(out, mask_model);
  detail::serialize_quantized_model(out, depth_model);
  return stream;
}

struct DeserializedModels {
  QuantizedModel mask_model;
  QuantizedModel depth_model;
  StreamInfo info;
};

inline DeserializedModels deserialize_model(const ModelBitstream& stream) {
  ByteReader r(stream.bytes.data(), stream.bytes.size());
  const uint8_t* magic = r.bytes(4);
  if (std::memcmp(magic, kStreamMagic, 4) != 0) {
    throw FormatError("bad magic at offset 0");
  }
  const uint8_t version = r.u8();
  if (version != kStreamVersion) {
    throw FormatError("unsupported stream version " + std::to_string(version) + " at offset 4");
  }
  DeserializedModels m;
  m.info.width = r.u16();
  m.info.height = r.u16();
  m.info.patch_factor = r.u8();
  m.info.phi_up = r.f32();
  m.info.phi_down = r.f32();
  m.info.rho_null = r.f32();
  m.info.d_min = r.f32();
  m.info.d_max = r.f32();
  m.mask_model = detail::deserialize_quantized_model(r, OutputActivation::kSigmoid);
  m.depth_model = detail::deserialize_quantized_model(r, OutputActivation::kIdentity);
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes at offset " + std::to_string(r.offset()));
  }
  return m;
}

}  // namespace rinc

#endif  // RINC_MODEL_COMPRESS_HPP
