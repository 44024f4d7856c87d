#include <doctest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "mfmo/nas_encoding.hpp"

using namespace mfmo;
using namespace mfmo::nas;

namespace {

CellGraph random_graph(CellKind kind, int n_nodes, Rng& rng) {
  CellGraph g{kind, std::vector<NodeSpec>(static_cast<std::size_t>(n_nodes))};
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (auto& slot : g.nodes[i].inputs) {
      slot.predecessor = 1 + static_cast<int>(uniform_index(rng, i + 2));
      const auto n_o = operator_table().set(g.op_set(slot)).size();
      slot.op = 1 + static_cast<int>(uniform_index(rng, n_o));
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("nas_encoding") {
  TEST_CASE("operator table") {
    const auto& t = operator_table();
    CHECK(t.downsampling.size() == 6);
    CHECK(t.upsampling.size() == 4);
    CHECK(t.normal.size() == 5);
    CHECK(t.downsampling[2] == OpKind::SepConv);
    CHECK(t.downsampling[5] == OpKind::MaxPool);
    CHECK(t.normal[0] == OpKind::Identity);
  }

  TEST_CASE("schema dimensions") {
    const EncodingConfig cfg;
    CHECK(dimension(cfg, Encoding::Continuous) == 12);
    CHECK(continuous_schema(cfg).size() == 12);
    CHECK(dimension(cfg, Encoding::Discrete) == 24);
    CHECK(discrete_schema(cfg).size() == 24);
    const auto b = continuous_schema(cfg);
    CHECK(b.lower(0) == 1.0);
    CHECK(b.upper(0) == doctest::Approx(3.0 - kEncodingEpsilon).epsilon(1e-15));
    CHECK(b.upper(2) == doctest::Approx(4.0 - kEncodingEpsilon).epsilon(1e-15));
    EncodingConfig unshared;
    unshared.shared = false;
    CHECK(dimension(unshared, Encoding::Continuous) == 2u * 3u * 11u);
  }

  TEST_CASE("continuous decode examples") {
    const std::vector<double> v{1.40, 2.95, 3.10, 1.0, 1.0, 1.0};
    const auto g = decode_continuous(v, CellKind::Down, 3);
    CHECK(g.nodes[0].inputs[0] == Slot{1, 3});
    CHECK(g.op_kind(g.nodes[0].inputs[0]) == OpKind::SepConv);
    CHECK(g.nodes[0].inputs[1] == Slot{2, 6});
    CHECK(g.op_kind(g.nodes[0].inputs[1]) == OpKind::MaxPool);
    CHECK(g.nodes[1].inputs[0] == Slot{3, 1});
    CHECK(g.op_kind(g.nodes[1].inputs[0]) == OpKind::Identity);
  }

  TEST_CASE("continuous decode rejects out-of-schema values") {
    const std::vector<double> v{1.40, 3.0, 1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_WITH_AS(decode_continuous(v, CellKind::Down, 3), doctest::Contains("coordinate 1"), Error);
    const std::vector<double> w{0.5, 1.0, 1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(decode_continuous(w, CellKind::Down, 3), Error);
  }

  TEST_CASE("discrete decode agrees with continuous") {
    const std::vector<int> idx{1, 3, 2, 6, 1, 1, 1, 1, 1, 1, 1, 1};
    const auto d = decode_discrete(idx, CellKind::Down, 3);
    const std::vector<double> v{1.40, 2.95, 1.0, 1.0, 1.0, 1.0};
    const auto c = decode_continuous(v, CellKind::Down, 3);
    CHECK(d.nodes[0] == c.nodes[0]);
  }

  TEST_CASE("discrete decode rejects a predecessor that does not precede") {
    const std::vector<int> idx{3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(decode_discrete(idx, CellKind::Down, 3), Error);
  }

  TEST_CASE("round trips") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      const CellKind kind = t % 2 ? CellKind::Up : CellKind::Down;
      const int n = 1 + t % 5;
      const auto g = random_graph(kind, n, rng);
      CHECK(decode_discrete(encode_discrete(g), kind, n) == g);
      CHECK(decode_continuous(encode_continuous(g), kind, n) == g);
    }
  }

  TEST_CASE("relaxed discrete genes") {
    // Op gene spans the widest set; it is rescaled onto the chosen set.
    std::vector<double> genes{1.2, 6.9, 2.0, 1.0, 3.5, 6.99, 1.0, 4.0, 4.2, 1.0, 1.0, 1.0};
    const auto idx = discretize_genes(genes, CellKind::Down, 3);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 6);
    CHECK(idx[4] == 3);
    CHECK(idx[5] == 5);  // normal set: (6 - 1) * 5 / 6 + 1
    CHECK(idx[8] == 4);
    CHECK_NOTHROW(decode_discrete(idx, CellKind::Down, 3));
  }

  TEST_CASE("assembly shapes") {
    const std::vector<double> x(12, 1.40);
    const ArchitectureConfig cfg;
    const auto g = decode_genotype(x, cfg.encoding, Encoding::Continuous);
    const auto spec = assemble_architecture(g, cfg);
    Shape bottleneck;
    for (const auto& c : spec.cells) {
      if (c.index == cfg.encoding.n_down) bottleneck = c.out;
    }
    CHECK(bottleneck.height == 2);
    CHECK(bottleneck.width == 2);
    CHECK(spec.output.height == 128);
    CHECK(spec.output.width == 128);
    CHECK(spec.output.channels == cfg.output_channels);

    ArchitectureConfig small = cfg;
    small.input_resolution = 32;
    CHECK_THROWS_AS(assemble_architecture(g, small), ResolutionError);
    small.input_resolution = 96;  // not a multiple of 64
    CHECK_THROWS_AS(assemble_architecture(g, small), ResolutionError);
  }

  TEST_CASE("every consumed tensor is produced earlier") {
    Rng rng(2);
    const ArchitectureConfig cfg;
    for (int t = 0; t < 20; ++t) {
      Point x(12);
      const auto box = continuous_schema(cfg.encoding);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = uniform(rng, box.lower(k), box.upper(k));
      const auto spec = assemble_architecture(decode_genotype(x, cfg.encoding, Encoding::Continuous), cfg);
      const auto doc = export_architecture(spec);
      std::set<std::string> known{"input"};
      // Ops and joins interleave; walk until no progress to allow either order.
      std::vector<std::pair<std::string, std::vector<std::string>>> nodes;
      for (const auto& op : doc.at("ops")) nodes.push_back({op.at("id"), {op.at("from").get<std::string>()}});
      for (const auto& j : doc.at("joins")) nodes.push_back({j.at("id"), j.at("inputs").get<std::vector<std::string>>()});
      bool progress = true;
      while (progress) {
        progress = false;
        for (const auto& [id, ins] : nodes) {
          if (known.contains(id)) continue;
          bool ready = true;
          for (const auto& i : ins) ready = ready && known.contains(i);
          if (ready) {
            known.insert(id);
            progress = true;
          }
        }
      }
      CHECK(known.size() == nodes.size() + 1);
      CHECK(known.contains(doc.at("output_tensor").get<std::string>()));
    }
  }

  TEST_CASE("flops") {
    CHECK(operator_flops(OpKind::Conv, {16, 64, 64}, {16, 64, 64}) == 18'874'368);
    CHECK(operator_flops(OpKind::Identity, {16, 64, 64}, {16, 64, 64}) == 0);

    Rng rng(31);
    const ArchitectureConfig cfg;
    for (int t = 0; t < 20; ++t) {
      auto down = random_graph(CellKind::Down, 3, rng);
      auto up = random_graph(CellKind::Up, 3, rng);
      const std::vector<CellGraph> d1{down}, u1{up};
      const auto base = estimate_flops(assemble_architecture(d1, u1, cfg)).total;
      for (auto* g : {&down, &up}) {
        for (auto& node : g->nodes) {
          for (auto& slot : node.inputs) {
            if (g->op_set(slot) == OpSet::Normal && slot.op == 1) slot.op = 5;
          }
        }
      }
      const std::vector<CellGraph> d2{down}, u2{up};
      CHECK(estimate_flops(assemble_architecture(d2, u2, cfg)).total >= base);
    }
  }

  TEST_CASE("flops breakdown sums to the total") {
    const std::vector<double> x(12, 1.40);
    const ArchitectureConfig cfg;
    const auto est = estimate_flops(assemble_architecture(decode_genotype(x, cfg.encoding, Encoding::Continuous), cfg));
    std::int64_t sum = 0;
    for (const auto& [k, v] : est.per_cell) sum += v;
    CHECK(sum == est.total);
    CHECK(est.per_cell.contains("stem"));
    CHECK(est.per_cell.contains("head"));
    CHECK(est.per_cell.contains("cell_11"));
  }

  TEST_CASE("export document") {
    const std::vector<double> x(12, 2.2);
    const ArchitectureConfig cfg;
    const auto spec = assemble_architecture(decode_genotype(x, cfg.encoding, Encoding::Continuous), cfg);
    const auto doc = export_architecture(spec);
    CHECK(doc.at("format") == "mfmo-architecture");
    CHECK(doc.at("version") == 1);
    CHECK(doc.at("cells").size() == 11);
    CHECK(doc.at("ops").size() == spec.ops.size());
    CHECK(doc.at("flops").at("total") == estimate_flops(spec).total);
  }
}
