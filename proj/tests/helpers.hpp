#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wmm/tree.hpp"

namespace wmm::test {

inline std::string example_table_csv() {
    return "from,to,Estimate,Total,Count,Population,Description\n"
           "Z,A,4,11,NA,FALSE,First child of the root\n"
           "Z,B,34,70,500,FALSE,Second child of the root\n"
           "Z,C,1,10,NA,FALSE,Third child of the root\n"
           "A,D,9,10,50,FALSE,First grandchild\n"
           "A,E,1,10,NA,FALSE,Second grandchild\n";
}

inline std::vector<EdgeRecord> parse_csv(const std::string& csv) {
    std::istringstream in(csv);
    return parse_edge_table(in);
}

inline PopTree tree_from_csv(const std::string& csv) { return build_tree(parse_csv(csv)); }

inline PopTree example_tree() { return tree_from_csv(example_table_csv()); }

// Random tree topology: `levels` levels, every internal node with
// children_min..children_max children, labels N1, N2, ...
template <typename Rng>
std::vector<EdgeRecord> random_tree_records(Rng& gen, int levels, int children_max,
                                            int children_min = 2) {
    std::vector<EdgeRecord> records;
    int counter = 0;
    std::vector<std::string> frontier{"Z"};
    for (int level = 1; level < levels; ++level) {
        std::vector<std::string> next;
        for (const auto& parent : frontier) {
            int n = children_min +
                    static_cast<int>(gen() % static_cast<unsigned>(children_max - children_min + 1));
            for (int i = 0; i < n; ++i) {
                EdgeRecord rec;
                rec.from = parent;
                rec.to = "N" + std::to_string(++counter);
                records.push_back(rec);
                next.push_back(rec.to);
            }
        }
        frontier = std::move(next);
    }
    return records;
}

// Random tree whose every sibling group is a single-survey Dirichlet
// (shared Total, estimates summing to it) and every leaf has a count.
template <typename Rng>
std::vector<EdgeRecord> random_dirichlet_tree_records(Rng& gen, int levels, int children_max) {
    auto records = random_tree_records(gen, levels, children_max);
    std::map<std::string, std::vector<std::size_t>> by_parent;
    for (std::size_t i = 0; i < records.size(); ++i) by_parent[records[i].from].push_back(i);
    std::set<std::string> parents;
    for (const auto& rec : records) parents.insert(rec.from);
    for (auto& [parent, rows] : by_parent) {
        std::int64_t total = 0;
        std::vector<std::int64_t> estimates;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::int64_t a = 3 + static_cast<std::int64_t>(gen() % 20);
            estimates.push_back(a);
            total += a;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            records[rows[i]].estimate = estimates[i];
            records[rows[i]].total = total;
            if (!parents.count(records[rows[i]].to))
                records[rows[i]].count = 20 + static_cast<std::int64_t>(gen() % 200);
        }
    }
    return records;
}

} // namespace wmm::test
