#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wmm {

// One row of the input edge table: a directed edge plus survey evidence
// and an optional marginal leaf count.
struct EdgeRecord {
    std::string from;
    std::string to;
    std::optional<std::int64_t> estimate;  // survey successes toward `to`
    std::optional<std::int64_t> total;     // survey sample size drawn from `from`
    std::optional<std::int64_t> count;     // marginal leaf count D_L
    bool population = false;               // evidence is population-level: use the exact ratio
    std::optional<std::string> description;

    bool has_survey() const { return estimate.has_value() && total.has_value(); }
};

// Root-to-leaf edge sequence with the leaf's marginal count.
struct RootPath {
    std::string leaf;
    std::vector<EdgeRecord> edges;
    std::optional<std::int64_t> count;
};

// Validated rooted tree of population nodes with per-edge evidence.
// Immutable after construction; safe to share across threads.
class PopTree {
public:
    const std::string& root() const { return root_; }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::vector<EdgeRecord>& edges() const { return edges_; }
    const std::vector<std::string>& leaves() const { return leaves_; }
    const std::vector<std::string>& informative_leaves() const { return informative_; }

    // Child labels of `parent` in input order (empty if leaf).
    const std::vector<std::string>& children(const std::string& parent) const;

    // The edge record for parent->child; throws if no such edge.
    const EdgeRecord& edge(const std::string& from, const std::string& to) const;

    bool is_leaf(const std::string& label) const;
    std::optional<std::int64_t> leaf_count(const std::string& leaf) const;

    // Parents in breadth-first order starting at the root, children in
    // input order. This order is load-bearing for codegen naming and
    // sampling determinism.
    std::vector<std::string> parents_breadth_first() const;

    friend PopTree build_tree(const std::vector<EdgeRecord>& records);

private:
    std::string root_;
    std::vector<std::string> nodes_;       // discovery order
    std::vector<EdgeRecord> edges_;        // input order
    std::vector<std::string> leaves_;
    std::vector<std::string> informative_;
    std::map<std::string, std::vector<std::string>> children_;
    std::map<std::pair<std::string, std::string>, std::size_t> edge_index_;
};

// Parses the delimited edge table. Header must name
// from,to,Estimate,Total,Count with optional Population,Description.
// Missing values are written as the literal NA or left empty.
std::vector<EdgeRecord> parse_edge_table(std::istream& in);
std::vector<EdgeRecord> parse_edge_table_file(const std::string& path);

// Builds and validates the rooted tree; computes informative leaves.
PopTree build_tree(const std::vector<EdgeRecord>& records);

// Leaves satisfying the informative-path conditions: the leaf carries a
// count and every edge on the root path carries branch evidence.
std::vector<std::string> informative_leaves(const PopTree& tree);

// Unique root-to-leaf edge sequence; throws if `leaf` is not a leaf.
RootPath path_to_leaf(const PopTree& tree, const std::string& leaf);

} // namespace wmm
