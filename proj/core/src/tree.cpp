#include "evidenced/tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace evd {

int Topology::n_leaves() const {
  int count = 0;
  for (const auto& node : nodes)
    if (node.is_leaf()) ++count;
  return count;
}

std::vector<int> Topology::postorder() const {
  std::vector<int> order;
  order.reserve(nodes.size());
  std::function<void(int)> visit = [&](int idx) {
    for (int child : nodes[idx].children) visit(child);
    order.push_back(idx);
  };
  visit(root);
  return order;
}

std::vector<std::string> Topology::leaf_names() const {
  std::vector<std::string> names;
  for (const auto& node : nodes)
    if (node.is_leaf()) names.push_back(node.name);
  std::sort(names.begin(), names.end());
  return names;
}

double Topology::edge_length(int node,
                             const std::vector<double>& lengths) const {
  const int b = nodes[node].branch_index;
  if (b == kZeroEdge) return 0.0;
  if (b < 0) throw InvalidInput("edge_length: node has no parent edge");
  return lengths.at(b);
}

namespace {

struct NewickParser {
  const std::string& text;
  std::size_t pos = 0;

  explicit NewickParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("newick: " + what, pos);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  char peek() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    return text[pos];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }

  std::string read_label() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == ':' || c == ',' || c == ')' || c == '(' || c == ';' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      ++pos;
    }
    return text.substr(start, pos - start);
  }

  double read_length() {
    if (peek() != ':') fail("missing branch length");
    ++pos;
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '.' || text[pos] == '-' || text[pos] == '+' ||
            text[pos] == 'e' || text[pos] == 'E'))
      ++pos;
    double value = 0.0;
    auto [end, ec] =
        std::from_chars(text.data() + start, text.data() + pos, value);
    if (ec != std::errc() || end != text.data() + pos || start == pos)
      fail("malformed branch length");
    return value;
  }

  // Returns node index in `nodes`; fills `lengths_by_node` for non-root
  // nodes once attached.
  int parse_clade(Topology& topo, std::vector<double>& length_by_node) {
    const int idx = static_cast<int>(topo.nodes.size());
    topo.nodes.emplace_back();
    length_by_node.push_back(std::nan(""));
    if (peek() == '(') {
      ++pos;
      while (true) {
        int child = parse_clade(topo, length_by_node);
        topo.nodes[child].parent = idx;
        topo.nodes[idx].children.push_back(child);
        length_by_node[child] = read_length();
        char c = peek();
        if (c == ',') {
          ++pos;
          continue;
        }
        if (c == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
      // optional internal label, ignored
      read_label();
    } else {
      std::string name = read_label();
      if (name.empty()) fail("expected leaf name");
      topo.nodes[idx].name = name;
    }
    return idx;
  }
};

}  // namespace

std::pair<Topology, BranchLengths> parse_newick(const std::string& text) {
  NewickParser parser(text);
  Topology topo;
  std::vector<double> length_by_node;
  const int root = parser.parse_clade(topo, length_by_node);
  parser.skip_ws();
  if (parser.pos >= text.size() || text[parser.pos] != ';')
    parser.fail("expected ';'");
  topo.root = root;
  if (topo.nodes[root].is_leaf()) parser.fail("single-leaf tree");

  // Check leaf uniqueness.
  {
    auto names = topo.leaf_names();
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
      throw InvalidInput("newick: duplicate leaf label");
  }

  // Collapse a degree-2 root.
  auto& root_node = topo.nodes[root];
  bool fused_pair = false;
  if (root_node.children.size() == 2) {
    int internal = -1;
    for (int child : root_node.children)
      if (!topo.nodes[child].is_leaf()) internal = child;
    if (internal >= 0) {
      // Re-root at the internal child; its sibling hangs below it with the
      // sum of the two root-edge lengths.
      int sibling = root_node.children[0] == internal ? root_node.children[1]
                                                      : root_node.children[0];
      length_by_node[sibling] += length_by_node[internal];
      topo.nodes[internal].parent = -1;
      topo.nodes[internal].children.push_back(sibling);
      topo.nodes[sibling].parent = internal;
      topo.root = internal;
      // Drop the orphaned old root by compacting reachable nodes.
      Topology compact;
      std::vector<double> compact_lengths;
      std::function<int(int, int)> copy = [&](int idx, int parent) -> int {
        const int nidx = static_cast<int>(compact.nodes.size());
        compact.nodes.emplace_back();
        compact_lengths.push_back(length_by_node[idx]);
        compact.nodes[nidx].parent = parent;
        compact.nodes[nidx].name = topo.nodes[idx].name;
        for (int child : topo.nodes[idx].children) {
          int c = copy(child, nidx);
          compact.nodes[nidx].children.push_back(c);
        }
        return nidx;
      };
      copy(topo.root, -1);
      compact.root = 0;
      topo = std::move(compact);
      length_by_node = std::move(compact_lengths);
    } else {
      // Two-taxon tree: fuse the two edges into one branch.
      fused_pair = true;
      length_by_node[root_node.children[0]] +=
          length_by_node[root_node.children[1]];
    }
  }

  // Assign branch indices in node-creation order.
  BranchLengths lengths;
  std::function<void(int)> assign = [&](int idx) {
    auto& node = topo.nodes[idx];
    if (idx != topo.root) {
      if (fused_pair && idx == topo.nodes[topo.root].children[1]) {
        node.branch_index = Topology::kZeroEdge;
      } else {
        node.branch_index = static_cast<int>(lengths.size());
        const double len = length_by_node[idx];
        if (!(len > 0.0))
          throw InvalidInput("newick: nonpositive branch length");
        lengths.push_back(len);
      }
    }
    for (int child : node.children) assign(child);
  };
  assign(topo.root);
  topo.n_branches_ = static_cast<int>(lengths.size());
  return {std::move(topo), std::move(lengths)};
}

namespace {

void emit_clade(const Topology& topo, const BranchLengths& lengths, int idx,
                std::string& out) {
  const auto& node = topo.nodes[idx];
  if (node.is_leaf()) {
    out += node.name;
  } else {
    out += '(';
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      if (i) out += ',';
      emit_clade(topo, lengths, node.children[i], out);
    }
    out += ')';
  }
  if (idx != topo.root) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), ":%.17g",
                  topo.edge_length(idx, lengths));
    out += buf;
  }
}

}  // namespace

std::string emit_newick(const Topology& topology,
                        const BranchLengths& lengths) {
  std::string out;
  emit_clade(topology, lengths, topology.root, out);
  out += ';';
  return out;
}

std::vector<Topology> enumerate_topologies(
    const std::vector<std::string>& leaves) {
  if (leaves.size() != 4)
    throw InvalidInput(
        "enumerate_topologies: only the 4-taxon case is supported");
  std::vector<Topology> out;
  // Quartets ((a,b),c,d) with partner index 1, 2, 3 for leaf 0.
  for (int partner = 1; partner <= 3; ++partner) {
    std::vector<int> rest;
    for (int i = 1; i <= 3; ++i)
      if (i != partner) rest.push_back(i);
    std::string newick = "((" + leaves[0] + ":1," + leaves[partner] +
                         ":1):1," + leaves[rest[0]] + ":1," +
                         leaves[rest[1]] + ":1);";
    out.push_back(parse_newick(newick).first);
  }
  return out;
}

}  // namespace evd
