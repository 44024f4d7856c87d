#include "mfmo/nas_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mfmo::nas {

namespace {

constexpr std::int64_t kSeReduction = 16;

int set_size(OpSet s) { return static_cast<int>(operator_table().set(s).size()); }

OpSet cell_input_set(CellKind k) { return k == CellKind::Down ? OpSet::Downsampling : OpSet::Upsampling; }

int widest_set(CellKind k) { return std::max(set_size(cell_input_set(k)), set_size(OpSet::Normal)); }

std::string cell_tag(int k) { return "c" + std::to_string(k); }

}  // namespace

std::string_view op_name(OpKind k) {
  switch (k) {
    case OpKind::Identity: return "identity";
    case OpKind::SqueezeExcite: return "se_conv_3x3";
    case OpKind::DilatedConv: return "dil_conv_3x3";
    case OpKind::SepConv: return "sep_conv_3x3";
    case OpKind::Conv: return "conv_3x3";
    case OpKind::AvgPool: return "avg_pool_2x2";
    case OpKind::MaxPool: return "max_pool_2x2";
    case OpKind::TransSqueezeExcite: return "trans_se_conv_3x3";
    case OpKind::TransDilatedConv: return "trans_dil_conv_3x3";
    case OpKind::TransSepConv: return "trans_sep_conv_3x3";
    case OpKind::TransConv: return "trans_conv_3x3";
    case OpKind::Conv1x1: return "conv_1x1";
    case OpKind::TransConv1x1: return "trans_conv_1x1";
  }
  return "?";
}

std::string_view op_label(OpKind k) {
  switch (k) {
    case OpKind::Identity: return "Identity";
    case OpKind::SqueezeExcite: return "3x3 SE convolution";
    case OpKind::DilatedConv: return "3x3 dilated convolution";
    case OpKind::SepConv: return "3x3 depthwise-separable convolution";
    case OpKind::Conv: return "3x3 convolution";
    case OpKind::AvgPool: return "2x2 average pooling";
    case OpKind::MaxPool: return "2x2 max pooling";
    case OpKind::TransSqueezeExcite: return "3x3 transposed SE convolution";
    case OpKind::TransDilatedConv: return "3x3 transposed dilated convolution";
    case OpKind::TransSepConv: return "3x3 transposed depthwise-separable convolution";
    case OpKind::TransConv: return "3x3 transposed convolution";
    case OpKind::Conv1x1: return "1x1 convolution";
    case OpKind::TransConv1x1: return "1x1 transposed convolution";
  }
  return "?";
}

std::string_view to_string(OpSet s) {
  switch (s) {
    case OpSet::Downsampling: return "downsampling";
    case OpSet::Upsampling: return "upsampling";
    case OpSet::Normal: return "normal";
  }
  return "?";
}

std::string_view to_string(CellKind k) { return k == CellKind::Down ? "down" : "up"; }

std::string_view to_string(Encoding e) { return e == Encoding::Continuous ? "continuous" : "discrete"; }

Encoding encoding_from_string(std::string_view s) {
  if (s == "continuous") return Encoding::Continuous;
  if (s == "discrete") return Encoding::Discrete;
  throw Error("unknown encoding '" + std::string(s) + "' (expected continuous or discrete)");
}

std::string_view to_string(OpRole r) {
  switch (r) {
    case OpRole::Stem: return "stem";
    case OpRole::Preprocess: return "preprocess";
    case OpRole::Reduce: return "reduce";
    case OpRole::Expand: return "expand";
    case OpRole::Encoded: return "encoded";
    case OpRole::Project: return "project";
    case OpRole::Head: return "head";
  }
  return "?";
}

std::span<const OpKind> OperatorTable::set(OpSet s) const {
  switch (s) {
    case OpSet::Downsampling: return downsampling;
    case OpSet::Upsampling: return upsampling;
    case OpSet::Normal: return normal;
  }
  return {};
}

const OperatorTable& operator_table() {
  static const OperatorTable table{
      {OpKind::SqueezeExcite, OpKind::DilatedConv, OpKind::SepConv, OpKind::Conv, OpKind::AvgPool, OpKind::MaxPool},
      {OpKind::TransSqueezeExcite, OpKind::TransDilatedConv, OpKind::TransSepConv, OpKind::TransConv},
      {OpKind::Identity, OpKind::SqueezeExcite, OpKind::DilatedConv, OpKind::SepConv, OpKind::Conv},
  };
  return table;
}

OpSet CellGraph::op_set(const Slot& s) const { return s.predecessor <= 2 ? cell_input_set(kind) : OpSet::Normal; }

OpKind CellGraph::op_kind(const Slot& s) const {
  return operator_table().set(op_set(s))[static_cast<std::size_t>(s.op - 1)];
}

void CellGraph::validate() const {
  if (nodes.empty()) throw Error("cell has no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int self = node_index(i);
    for (std::size_t s = 0; s < 2; ++s) {
      const Slot& slot = nodes[i].inputs[s];
      if (slot.predecessor < 1 || slot.predecessor >= self) {
        throw Error("node " + std::to_string(self) + " slot " + std::to_string(s + 1) + ": predecessor " +
                    std::to_string(slot.predecessor) + " must be in [1, " + std::to_string(self - 1) + "]");
      }
      const int n_o = set_size(op_set(slot));
      if (slot.op < 1 || slot.op > n_o) {
        throw Error("node " + std::to_string(self) + " slot " + std::to_string(s + 1) + ": operator " +
                    std::to_string(slot.op) + " must be in [1, " + std::to_string(n_o) + "]");
      }
    }
  }
}

Bounds continuous_schema(const EncodingConfig& cfg) {
  if (cfg.n_nodes < 1) throw Error("n_nodes must be >= 1");
  std::vector<double> lo, hi;
  for (int c = 0; c < cfg.cell_structures(); ++c) {
    for (int i = 3; i < cfg.n_nodes + 3; ++i) {
      for (int s = 0; s < 2; ++s) {
        lo.push_back(1.0);
        hi.push_back(static_cast<double>(i) - kEncodingEpsilon);
      }
    }
  }
  return Bounds(std::move(lo), std::move(hi));
}

Bounds discrete_schema(const EncodingConfig& cfg) {
  if (cfg.n_nodes < 1) throw Error("n_nodes must be >= 1");
  std::vector<double> lo, hi;
  for (int c = 0; c < cfg.cell_structures(); ++c) {
    const CellKind kind = (cfg.shared ? c == 0 : c < cfg.n_down) ? CellKind::Down : CellKind::Up;
    for (int i = 3; i < cfg.n_nodes + 3; ++i) {
      for (int s = 0; s < 2; ++s) {
        lo.push_back(1.0);
        hi.push_back(static_cast<double>(i) - kEncodingEpsilon);
        lo.push_back(1.0);
        hi.push_back(static_cast<double>(widest_set(kind) + 1) - kEncodingEpsilon);
      }
    }
  }
  return Bounds(std::move(lo), std::move(hi));
}

std::size_t dimension(const EncodingConfig& cfg, Encoding enc) {
  const auto per_node = static_cast<std::size_t>(enc == Encoding::Continuous ? 2 : 4);
  return per_node * static_cast<std::size_t>(cfg.n_nodes) * static_cast<std::size_t>(cfg.cell_structures());
}

CellGraph decode_continuous(std::span<const double> values, CellKind kind, int n_nodes) {
  if (n_nodes < 1) throw Error("n_nodes must be >= 1");
  if (values.size() != static_cast<std::size_t>(2 * n_nodes)) {
    throw Error("continuous cell vector needs " + std::to_string(2 * n_nodes) + " values, got " +
                std::to_string(values.size()));
  }
  CellGraph g{kind, std::vector<NodeSpec>(static_cast<std::size_t>(n_nodes))};
  for (int n = 0; n < n_nodes; ++n) {
    const int self = n + 3;
    for (int s = 0; s < 2; ++s) {
      const std::size_t coord = static_cast<std::size_t>(2 * n + s);
      const double v = values[coord];
      if (!std::isfinite(v) || v < 1.0 || v > static_cast<double>(self) - kEncodingEpsilon) {
        throw Error("coordinate " + std::to_string(coord) + " = " + std::to_string(v) + " outside [1, " +
                    std::to_string(self) + " - eps]");
      }
      const double fl = std::floor(v);
      const int p = std::min(static_cast<int>(fl), self - 1);
      const double r = v - fl;
      Slot slot{p, 1};
      const int n_o = set_size(g.op_set(slot));
      slot.op = std::min(static_cast<int>(std::floor(r * n_o)) + 1, n_o);
      g.nodes[static_cast<std::size_t>(n)].inputs[static_cast<std::size_t>(s)] = slot;
    }
  }
  return g;
}

CellGraph decode_discrete(std::span<const int> indices, CellKind kind, int n_nodes) {
  if (n_nodes < 1) throw Error("n_nodes must be >= 1");
  if (indices.size() != static_cast<std::size_t>(4 * n_nodes)) {
    throw Error("discrete cell vector needs " + std::to_string(4 * n_nodes) + " values, got " +
                std::to_string(indices.size()));
  }
  CellGraph g{kind, std::vector<NodeSpec>(static_cast<std::size_t>(n_nodes))};
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    for (std::size_t s = 0; s < 2; ++s) {
      g.nodes[n].inputs[s] = Slot{indices[4 * n + 2 * s], indices[4 * n + 2 * s + 1]};
    }
  }
  g.validate();
  return g;
}

std::vector<int> discretize_genes(std::span<const double> genes, CellKind kind, int n_nodes) {
  if (genes.size() != static_cast<std::size_t>(4 * n_nodes)) throw Error("discrete gene vector has wrong length");
  const int wide = widest_set(kind);
  std::vector<int> out(genes.size());
  for (int n = 0; n < n_nodes; ++n) {
    const int self = n + 3;
    for (int s = 0; s < 2; ++s) {
      const auto at = static_cast<std::size_t>(4 * n + 2 * s);
      const int p = std::clamp(static_cast<int>(std::floor(genes[at])), 1, self - 1);
      const int raw = std::clamp(static_cast<int>(std::floor(genes[at + 1])), 1, wide);
      const int n_o = set_size(p <= 2 ? cell_input_set(kind) : OpSet::Normal);
      out[at] = p;
      // Integer rescale of [1, wide] onto [1, n_o].
      out[at + 1] = (raw - 1) * n_o / wide + 1;
    }
  }
  return out;
}

std::vector<int> encode_discrete(const CellGraph& g) {
  g.validate();
  std::vector<int> out;
  for (const auto& node : g.nodes) {
    for (const auto& slot : node.inputs) {
      out.push_back(slot.predecessor);
      out.push_back(slot.op);
    }
  }
  return out;
}

std::vector<double> encode_continuous(const CellGraph& g) {
  g.validate();
  std::vector<double> out;
  for (const auto& node : g.nodes) {
    for (const auto& slot : node.inputs) {
      const int n_o = set_size(g.op_set(slot));
      out.push_back(slot.predecessor + (slot.op - 0.5) / n_o);
    }
  }
  return out;
}

Genotype decode_genotype(std::span<const double> x, const EncodingConfig& cfg, Encoding enc) {
  const std::size_t dim = dimension(cfg, enc);
  if (x.size() != dim) {
    throw Error("design vector has " + std::to_string(x.size()) + " values, expected " + std::to_string(dim));
  }
  const auto per_cell = dim / static_cast<std::size_t>(cfg.cell_structures());
  Genotype out;
  for (int c = 0; c < cfg.cell_structures(); ++c) {
    const CellKind kind = (cfg.shared ? c == 0 : c < cfg.n_down) ? CellKind::Down : CellKind::Up;
    const auto slice = x.subspan(static_cast<std::size_t>(c) * per_cell, per_cell);
    CellGraph g;
    if (enc == Encoding::Continuous) {
      try {
        g = decode_continuous(slice, kind, cfg.n_nodes);
      } catch (const Error& e) {
        throw Error("cell structure " + std::to_string(c + 1) + ": " + e.what());
      }
    } else {
      const auto idx = discretize_genes(slice, kind, cfg.n_nodes);
      g = decode_discrete(idx, kind, cfg.n_nodes);
    }
    (kind == CellKind::Down ? out.down : out.up).push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::int64_t operator_flops(OpKind kind, const Shape& in, const Shape& out) {
  const std::int64_t hw = out.height * out.width;
  const std::int64_t conv3 = 2 * 9 * in.channels * out.channels * hw;
  const std::int64_t se_extra = 2 * (out.channels * out.channels / kSeReduction * 2);
  switch (kind) {
    case OpKind::Identity: return 0;
    case OpKind::Conv:
    case OpKind::DilatedConv:
    case OpKind::TransConv:
    case OpKind::TransDilatedConv: return conv3;
    case OpKind::SqueezeExcite:
    case OpKind::TransSqueezeExcite: return conv3 + se_extra;
    case OpKind::SepConv:
    case OpKind::TransSepConv: return 2 * (9 * in.channels + in.channels * out.channels) * hw;
    case OpKind::AvgPool:
    case OpKind::MaxPool: return 4 * hw * out.channels;
    case OpKind::Conv1x1:
    case OpKind::TransConv1x1: return 2 * in.channels * out.channels * hw;
  }
  return 0;
}

namespace {

class Builder {
 public:
  explicit Builder(const ArchitectureConfig& cfg) { spec_.config = cfg; }

  const Shape& shape(const std::string& t) const { return shapes_.at(t); }

  std::string op(std::string id, const std::string& from, OpRole role, OpKind kind, Shape out, int stride,
                 bool transposed, int cell, int node = 0, int slot = 0, bool bn = true) {
    OpInstance o;
    o.id = std::move(id);
    o.from = from;
    o.role = role;
    o.kind = kind;
    o.cell = cell;
    o.node = node;
    o.slot = slot;
    o.stride = stride;
    o.transposed = transposed;
    o.batch_norm_relu = bn && kind != OpKind::Identity;
    o.in = shape(from);
    o.out = out;
    shapes_[o.id] = out;
    spec_.ops.push_back(o);
    return o.id;
  }

  std::string join(std::string id, JoinKind kind, std::vector<std::string> inputs, int cell) {
    Shape out = shape(inputs.front());
    if (kind == JoinKind::Concat) out.channels = 0;
    for (const auto& t : inputs) {
      const Shape& s = shape(t);
      if (s.height != out.height || s.width != out.width) {
        throw Error("join '" + id + "': resolution mismatch at input '" + t + "'");
      }
      if (kind == JoinKind::Add && s.channels != out.channels) {
        throw Error("join '" + id + "': channel mismatch at input '" + t + "'");
      }
      if (kind == JoinKind::Concat) out.channels += s.channels;
    }
    shapes_[id] = out;
    spec_.joins.push_back(Join{id, kind, std::move(inputs), cell, out});
    return id;
  }

  void input(const Shape& s) {
    spec_.input = s;
    shapes_["input"] = s;
  }

  ArchitectureSpec finish(std::string out_tensor) {
    spec_.output = shape(out_tensor);
    spec_.output_tensor = std::move(out_tensor);
    return std::move(spec_);
  }

  ArchitectureSpec& spec() { return spec_; }

 private:
  ArchitectureSpec spec_;
  std::map<std::string, Shape> shapes_;
};

/// Brings `from` to (channels, height) at the resolution of the cell's
/// k-1 input. Returns the tensor name to use.
std::string adapt_input(Builder& b, const std::string& from, const Shape& target, const std::string& name, int cell) {
  const Shape s = b.shape(from);
  if (s.height == target.height) {
    if (s.channels == target.channels) return from;
    return b.op(name, from, OpRole::Preprocess, OpKind::Conv1x1, target, 1, false, cell);
  }
  if (s.height == 2 * target.height) {
    return b.op(name, from, OpRole::Reduce, OpKind::Conv1x1, target, 2, false, cell);
  }
  if (2 * s.height == target.height) {
    return b.op(name, from, OpRole::Expand, OpKind::TransConv1x1, target, 2, true, cell);
  }
  throw Error("cannot adapt tensor '" + from + "' to the cell input resolution");
}

void build_cell(Builder& b, int k, const CellGraph& g, const std::string& in1_raw, const std::string& in2_raw,
                std::int64_t width, const std::string& skip) {
  const std::string tag = cell_tag(k);
  const Shape s2 = b.shape(in2_raw);
  const Shape cell_in{width, s2.height, s2.width};
  const std::string in2 = adapt_input(b, in2_raw, cell_in, tag + ".in2", k);
  const std::string in1 = adapt_input(b, in1_raw, cell_in, tag + ".in1", k);

  const bool down = g.kind == CellKind::Down;
  const Shape out_shape = down ? Shape{width, s2.height / 2, s2.width / 2} : Shape{width, s2.height * 2, s2.width * 2};

  std::vector<std::string> node_out;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const int self = CellGraph::node_index(n);
    std::vector<std::string> terms;
    for (std::size_t s = 0; s < 2; ++s) {
      const Slot& slot = g.nodes[n].inputs[s];
      const std::string src = slot.predecessor == 1   ? in1
                              : slot.predecessor == 2 ? in2
                                                      : node_out[static_cast<std::size_t>(slot.predecessor - 3)];
      const bool from_input = slot.predecessor <= 2;
      const std::string id = tag + ".n" + std::to_string(self) + ".s" + std::to_string(s + 1);
      terms.push_back(b.op(id, src, OpRole::Encoded, g.op_kind(slot), out_shape, from_input ? 2 : 1,
                           from_input && !down, k, self, static_cast<int>(s) + 1));
    }
    node_out.push_back(b.join(tag + ".n" + std::to_string(self), JoinKind::Add, terms, k));
  }
  const std::string cat = b.join(tag + ".concat", JoinKind::Concat, node_out, k);
  std::string out = b.op(tag + ".out", cat, OpRole::Project, OpKind::Conv1x1, out_shape, 1, false, k);
  if (!skip.empty()) out = b.join(tag + ".skipcat", JoinKind::Concat, {out, skip}, k);

  CellInstance ci;
  ci.index = k;
  ci.kind = g.kind;
  ci.graph = g;
  ci.input1 = in1;
  ci.input2 = in2;
  ci.output = out;
  ci.out = b.shape(out);
  b.spec().cells.push_back(std::move(ci));
}

const CellGraph& pick(std::span<const CellGraph> cells, int i, CellKind kind, int count) {
  if (cells.size() != 1 && cells.size() != static_cast<std::size_t>(count)) {
    throw Error(std::string("expected 1 or ") + std::to_string(count) + " " + std::string(to_string(kind)) +
                " cell graphs, got " + std::to_string(cells.size()));
  }
  const CellGraph& g = cells.size() == 1 ? cells[0] : cells[static_cast<std::size_t>(i)];
  if (g.kind != kind) throw Error("cell graph kind mismatch");
  g.validate();
  return g;
}

}  // namespace

ArchitectureSpec assemble_architecture(std::span<const CellGraph> down, std::span<const CellGraph> up,
                                       const ArchitectureConfig& config) {
  const auto& enc = config.encoding;
  if (enc.n_down < 1 || enc.n_up < 0 || enc.n_up >= enc.n_down) {
    throw Error("need n_down >= 1 and 0 <= n_up < n_down");
  }
  if (config.base_channels < 1 || config.input_channels < 1 || config.output_channels < 1) {
    throw Error("channel counts must be positive");
  }
  const std::int64_t factor = std::int64_t{1} << enc.n_down;
  const std::int64_t res = config.input_resolution;
  if (res < factor || res % factor != 0) {
    throw ResolutionError("input resolution " + std::to_string(res) + " cannot be halved " +
                          std::to_string(enc.n_down) + " times; use a multiple of " + std::to_string(factor) +
                          " (minimum " + std::to_string(factor) + ")");
  }

  Builder b(config);
  b.input(Shape{config.input_channels, res, res});
  const std::int64_t c0 = config.base_channels;
  b.op("stem", "input", OpRole::Stem, OpKind::Conv, Shape{c0, res, res}, 1, false, 0);

  std::vector<std::string> outputs{"stem", "stem"};  // cell k reads outputs[k-1], outputs[k]
  std::vector<std::string> down_out;
  for (int k = 1; k <= enc.n_down; ++k) {
    const CellGraph& g = pick(down, k - 1, CellKind::Down, enc.n_down);
    const std::int64_t width = c0 << (k - 1);
    build_cell(b, k, g, outputs[outputs.size() - 2], outputs.back(), width, "");
    outputs.push_back(b.spec().cells.back().output);
    down_out.push_back(outputs.back());
  }
  for (int j = 1; j <= enc.n_up; ++j) {
    const CellGraph& g = pick(up, j - 1, CellKind::Up, enc.n_up);
    const int matched = enc.n_down - j;  // down cell with the same output resolution
    const std::int64_t width = c0 << (matched - 1);
    build_cell(b, enc.n_down + j, g, outputs[outputs.size() - 2], outputs.back(), width,
               down_out[static_cast<std::size_t>(matched - 1)]);
    outputs.push_back(b.spec().cells.back().output);
  }

  // Up-projection back to the input resolution.
  std::string cur = outputs.back();
  const int steps = enc.n_down - enc.n_up;
  for (int s = 1; s <= steps; ++s) {
    const Shape prev = b.shape(cur);
    const bool last = s == steps;
    const Shape out{last ? config.output_channels : prev.channels, prev.height * 2, prev.width * 2};
    cur = b.op(last ? "head" : "head" + std::to_string(s), cur, OpRole::Head, OpKind::TransConv, out, 2, true, 0, 0,
               0, !last);
  }
  return b.finish(cur);
}

ArchitectureSpec assemble_architecture(const Genotype& genotype, const ArchitectureConfig& config) {
  return assemble_architecture(genotype.down, genotype.up, config);
}

FlopsEstimate estimate_flops(const ArchitectureSpec& spec) {
  FlopsEstimate est;
  auto key = [](int cell, OpRole role) {
    if (cell == 0) return std::string(role == OpRole::Stem ? "stem" : "head");
    return "cell_" + std::to_string(cell);
  };
  for (const auto& o : spec.ops) {
    std::int64_t f = operator_flops(o.kind, o.in, o.out);
    if (o.batch_norm_relu) f += 4 * o.out.height * o.out.width * o.out.channels;
    est.per_cell[key(o.cell, o.role)] += f;
    est.total += f;
  }
  for (const auto& j : spec.joins) {
    if (j.kind != JoinKind::Add) continue;
    // n inputs -> n-1 elementwise additions.
    const auto f = static_cast<std::int64_t>(j.inputs.size() - 1) * j.out.height * j.out.width * j.out.channels;
    est.per_cell[key(j.cell, OpRole::Encoded)] += f;
    est.total += f;
  }
  return est;
}

namespace {

nlohmann::json shape_json(const Shape& s) {
  return {{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
}

}  // namespace

nlohmann::json export_architecture(const ArchitectureSpec& spec) {
  using nlohmann::json;
  json table;
  for (OpSet s : {OpSet::Downsampling, OpSet::Upsampling, OpSet::Normal}) {
    json names = json::array();
    for (OpKind k : operator_table().set(s)) names.push_back(op_name(k));
    table[std::string(to_string(s))] = names;
  }
  const auto& cfg = spec.config;
  json doc;
  doc["format"] = "mfmo-architecture";
  doc["version"] = 1;
  doc["operator_table"] = table;
  doc["config"] = {{"input_resolution", cfg.input_resolution},
                   {"input_channels", cfg.input_channels},
                   {"output_channels", cfg.output_channels},
                   {"base_channels", cfg.base_channels},
                   {"n_down", cfg.encoding.n_down},
                   {"n_up", cfg.encoding.n_up},
                   {"n_nodes", cfg.encoding.n_nodes},
                   {"shared", cfg.encoding.shared}};
  doc["input"] = shape_json(spec.input);
  doc["output"] = shape_json(spec.output);
  doc["output_tensor"] = spec.output_tensor;

  json cells = json::array();
  for (const auto& c : spec.cells) {
    json nodes = json::array();
    for (std::size_t n = 0; n < c.graph.nodes.size(); ++n) {
      json slots = json::array();
      for (const auto& slot : c.graph.nodes[n].inputs) {
        slots.push_back({{"predecessor", slot.predecessor},
                         {"op_set", to_string(c.graph.op_set(slot))},
                         {"op", slot.op},
                         {"op_name", op_name(c.graph.op_kind(slot))}});
      }
      nodes.push_back({{"node", CellGraph::node_index(n)}, {"inputs", slots}});
    }
    cells.push_back({{"index", c.index},
                     {"kind", to_string(c.kind)},
                     {"input1", c.input1},
                     {"input2", c.input2},
                     {"output", c.output},
                     {"output_shape", shape_json(c.out)},
                     {"nodes", nodes}});
  }
  doc["cells"] = cells;

  json ops = json::array();
  for (const auto& o : spec.ops) {
    ops.push_back({{"id", o.id},
                   {"from", o.from},
                   {"role", to_string(o.role)},
                   {"op", op_name(o.kind)},
                   {"cell", o.cell},
                   {"node", o.node},
                   {"slot", o.slot},
                   {"stride", o.stride},
                   {"transposed", o.transposed},
                   {"batch_norm_relu", o.batch_norm_relu},
                   {"in", shape_json(o.in)},
                   {"out", shape_json(o.out)},
                   {"flops", operator_flops(o.kind, o.in, o.out)}});
  }
  doc["ops"] = ops;

  json joins = json::array();
  for (const auto& j : spec.joins) {
    joins.push_back({{"id", j.id},
                     {"type", j.kind == JoinKind::Add ? "add" : "concat"},
                     {"inputs", j.inputs},
                     {"cell", j.cell},
                     {"out", shape_json(j.out)}});
  }
  doc["joins"] = joins;

  const FlopsEstimate est = estimate_flops(spec);
  doc["flops"] = {{"total", est.total}, {"per_cell", est.per_cell}};
  return doc;
}

std::string describe(const CellGraph& g) {
  std::ostringstream os;
  os << to_string(g.kind) << " cell\n";
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    os << "  node " << CellGraph::node_index(n) << ":";
    for (const auto& slot : g.nodes[n].inputs) {
      os << "  [" << (slot.predecessor <= 2 ? "cell" : "node") << ' ' << slot.predecessor << "] "
         << op_label(g.op_kind(slot));
      if (&slot == &g.nodes[n].inputs[0]) os << ',';
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace mfmo::nas
