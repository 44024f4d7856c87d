#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mfmo/common.hpp"

/// Real-vector <-> generalized U-Net bridge.
///
/// A cell has two inputs (predecessor indices 1 and 2: the outputs of cells
/// k-2 and k-1) and `n_nodes` intermediate nodes numbered 3..n_nodes+2. Each
/// node adds two operator outputs; each operator reads a cell input (through a
/// downsampling or upsampling operator) or an earlier node (through a normal
/// operator). The cell output concatenates all node outputs.
namespace mfmo::nas {

enum class OpKind {
  Identity,
  SqueezeExcite,
  DilatedConv,
  SepConv,
  Conv,
  AvgPool,
  MaxPool,
  TransSqueezeExcite,
  TransDilatedConv,
  TransSepConv,
  TransConv,
  // Structural operators (not encoded).
  Conv1x1,
  TransConv1x1,
};

std::string_view op_name(OpKind k);
std::string_view op_label(OpKind k);

enum class OpSet { Downsampling, Upsampling, Normal };
std::string_view to_string(OpSet s);

/// Operator lists in table order.
struct OperatorTable {
  std::array<OpKind, 6> downsampling;
  std::array<OpKind, 4> upsampling;
  std::array<OpKind, 5> normal;

  std::span<const OpKind> set(OpSet s) const;
};
const OperatorTable& operator_table();

enum class CellKind { Down, Up };
std::string_view to_string(CellKind k);

enum class Encoding { Continuous, Discrete };
std::string_view to_string(Encoding e);
Encoding encoding_from_string(std::string_view s);

struct Slot {
  /// 1-based over {cell input 1, cell input 2, node 3, ...}.
  int predecessor = 1;
  /// 1-based index into the operator set implied by the predecessor.
  int op = 1;
  friend bool operator==(const Slot&, const Slot&) = default;
};

struct NodeSpec {
  std::array<Slot, 2> inputs;
  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct CellGraph {
  CellKind kind = CellKind::Down;
  std::vector<NodeSpec> nodes;

  /// Node index (3-based) of nodes[i].
  static int node_index(std::size_t i) { return static_cast<int>(i) + 3; }
  OpSet op_set(const Slot& s) const;
  OpKind op_kind(const Slot& s) const;
  /// Validates predecessor < node index and operator ranges; throws.
  void validate() const;

  friend bool operator==(const CellGraph&, const CellGraph&) = default;
};

struct EncodingConfig {
  int n_nodes = 3;
  int n_down = 6;
  int n_up = 5;
  /// One structure shared by all down cells and one by all up cells.
  bool shared = true;

  int cell_structures() const { return shared ? 2 : n_down + n_up; }
};

inline constexpr double kEncodingEpsilon = 1e-6;

/// Continuous search box: per node i two variables in [1, i - eps].
Bounds continuous_schema(const EncodingConfig& cfg);
/// Discrete search box relaxed to reals (each gene is floored by the
/// decoder): per node [pred1, op1, pred2, op2].
Bounds discrete_schema(const EncodingConfig& cfg);
std::size_t dimension(const EncodingConfig& cfg, Encoding enc);

/// Decodes one cell from its 2 * n_nodes continuous values. Throws naming the
/// coordinate when a value is outside its schema interval.
CellGraph decode_continuous(std::span<const double> values, CellKind kind, int n_nodes);
/// Decodes one cell from its 4 * n_nodes integer indices [n1, o1, n2, o2].
CellGraph decode_discrete(std::span<const int> indices, CellKind kind, int n_nodes);
/// Floors relaxed discrete genes into indices (operator genes are rescaled
/// onto the set implied by the chosen predecessor).
std::vector<int> discretize_genes(std::span<const double> genes, CellKind kind, int n_nodes);

std::vector<int> encode_discrete(const CellGraph& g);
/// Midpoint of each (predecessor, operator) sub-interval.
std::vector<double> encode_continuous(const CellGraph& g);

/// Down and up cell structures decoded from a full design vector.
struct Genotype {
  std::vector<CellGraph> down;
  std::vector<CellGraph> up;
};
Genotype decode_genotype(std::span<const double> x, const EncodingConfig& cfg, Encoding enc);

// ---------------------------------------------------------------------------
// Architecture

struct Shape {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct ArchitectureConfig {
  EncodingConfig encoding;
  std::int64_t input_resolution = 128;
  std::int64_t input_channels = 1;
  std::int64_t output_channels = 1;
  std::int64_t base_channels = 16;
};

enum class OpRole { Stem, Preprocess, Reduce, Expand, Encoded, Project, Head };
std::string_view to_string(OpRole r);

struct OpInstance {
  std::string id;    // also the name of the produced tensor
  std::string from;  // consumed tensor
  OpRole role = OpRole::Encoded;
  OpKind kind = OpKind::Identity;
  int cell = 0;  // 0 for stem/head
  int node = 0;
  int slot = 0;
  int stride = 1;
  bool transposed = false;
  bool batch_norm_relu = true;
  Shape in;
  Shape out;
};

enum class JoinKind { Add, Concat };

struct Join {
  std::string id;
  JoinKind kind = JoinKind::Add;
  std::vector<std::string> inputs;
  int cell = 0;
  Shape out;
};

struct CellInstance {
  int index = 0;  // 1-based over all cells (down cells first)
  CellKind kind = CellKind::Down;
  CellGraph graph;
  std::string input1;  // tensor names after pre-processing
  std::string input2;
  std::string output;  // tensor consumed by later cells
  Shape out;
};

struct ArchitectureSpec {
  ArchitectureConfig config;
  Shape input;
  Shape output;
  std::vector<CellInstance> cells;
  std::vector<OpInstance> ops;  // topological order
  std::vector<Join> joins;
  std::string output_tensor;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Wires n_down down cells then n_up up cells. `down`/`up` hold either one
/// shared graph or one graph per cell.
ArchitectureSpec assemble_architecture(std::span<const CellGraph> down, std::span<const CellGraph> up,
                                       const ArchitectureConfig& config);
ArchitectureSpec assemble_architecture(const Genotype& genotype, const ArchitectureConfig& config);

/// Bare operator cost (one multiply-accumulate = 2 FLOPs), excluding the
/// batch-norm + activation that follows it.
std::int64_t operator_flops(OpKind kind, const Shape& in, const Shape& out);

struct FlopsEstimate {
  std::int64_t total = 0;
  /// Keyed by "stem", "head", "cell_<k>".
  std::map<std::string, std::int64_t> per_cell;
};

FlopsEstimate estimate_flops(const ArchitectureSpec& spec);

/// Exported architecture document consumed by external trainers.
nlohmann::json export_architecture(const ArchitectureSpec& spec);

/// Human-readable cell listing.
std::string describe(const CellGraph& g);

}  // namespace mfmo::nas
