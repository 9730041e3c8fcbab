#ifndef EVIDENCED_TREE_HPP
#define EVIDENCED_TREE_HPP

#include <string>
#include <utility>
#include <vector>

#include "evidenced/common.hpp"

namespace evd {

// Unrooted binary tree over labeled leaves, stored with an arbitrary
// traversal root.  Every non-root node owns the edge to its parent; the
// edge's length lives in a separate BranchLengths vector indexed by
// branch_index.  A branch_index of kZeroEdge marks the second half of a
// collapsed degree-2 root (two-taxon trees): that edge always evaluates
// with length zero and the full length sits on its sibling.
struct Topology {
  static constexpr int kZeroEdge = -2;

  struct Node {
    int parent = -1;
    std::vector<int> children;
    std::string name;       // nonempty iff leaf
    int branch_index = -1;  // -1 for the root, kZeroEdge for a fused edge
    bool is_leaf() const { return children.empty(); }
  };

  std::vector<Node> nodes;
  int root = 0;
  int n_branches_ = 0;

  int n_leaves() const;
  int n_branches() const { return n_branches_; }
  std::vector<int> postorder() const;
  std::vector<std::string> leaf_names() const;  // sorted

  // Effective length of the edge above `node` under the given lengths.
  double edge_length(int node, const std::vector<double>& lengths) const;
};

using BranchLengths = std::vector<double>;

// Parses a Newick string with mandatory branch lengths.  A degree-2 root is
// collapsed: re-rooted at an internal child when one exists, otherwise
// (two taxa) the two root edges are fused into a single branch.
std::pair<Topology, BranchLengths> parse_newick(const std::string& text);

std::string emit_newick(const Topology& topology,
                        const BranchLengths& lengths);

// The 3 distinct unrooted topologies over exactly 4 leaf labels.
std::vector<Topology> enumerate_topologies(
    const std::vector<std::string>& leaves);

}  // namespace evd

#endif  // EVIDENCED_TREE_HPP
