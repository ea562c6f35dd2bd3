#include "wmm/tree.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>

#include "wmm/error.hpp"

namespace wmm {

namespace {

// Splits one CSV line; double quotes protect commas inside fields.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_na(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<std::int64_t> parse_int_field(const std::string& raw, const std::string& column,
                                            std::size_t line_no) {
    std::string s = trim(raw);
    if (is_na(s)) return std::nullopt;
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw validation_error("row " + std::to_string(line_no) + ": column " + column +
                               ": not an integer: '" + s + "'");
    if (value < 0)
        throw validation_error("row " + std::to_string(line_no) + ": column " + column +
                               ": negative value " + std::to_string(value));
    return value;
}

bool parse_bool_field(const std::string& raw, std::size_t line_no) {
    std::string s = trim(raw);
    if (is_na(s) || s == "FALSE" || s == "false" || s == "F") return false;
    if (s == "TRUE" || s == "true" || s == "T") return true;
    throw validation_error("row " + std::to_string(line_no) +
                           ": column Population: not a logical: '" + s + "'");
}

} // namespace

std::vector<EdgeRecord> parse_edge_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw validation_error("empty input: expected a header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_csv(line);
    for (auto& h : header) h = trim(h);
    const std::vector<std::string> required = {"from", "to", "Estimate", "Total", "Count"};
    if (header.size() < required.size() || header.size() > required.size() + 2)
        throw validation_error("header: expected columns from,to,Estimate,Total,Count"
                               "[,Population[,Description]]");
    for (std::size_t i = 0; i < required.size(); ++i)
        if (header[i] != required[i])
            throw validation_error("header: column " + std::to_string(i + 1) + " must be '" +
                                   required[i] + "', got '" + header[i] + "'");
    bool has_population = header.size() >= 6;
    bool has_description = header.size() >= 7;
    if (has_population && header[5] != "Population")
        throw validation_error("header: column 6 must be 'Population', got '" + header[5] + "'");
    if (has_description && header[6] != "Description")
        throw validation_error("header: column 7 must be 'Description', got '" + header[6] + "'");

    std::vector<EdgeRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw validation_error("row " + std::to_string(line_no) + ": expected " +
                                   std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
        EdgeRecord rec;
        rec.from = trim(fields[0]);
        rec.to = trim(fields[1]);
        if (rec.from.empty() || rec.to.empty())
            throw validation_error("row " + std::to_string(line_no) + ": empty node label");
        rec.estimate = parse_int_field(fields[2], "Estimate", line_no);
        rec.total = parse_int_field(fields[3], "Total", line_no);
        rec.count = parse_int_field(fields[4], "Count", line_no);
        if (has_population) rec.population = parse_bool_field(fields[5], line_no);
        if (has_description) {
            std::string d = trim(fields[6]);
            if (!is_na(d)) rec.description = d;
        }

        if (rec.estimate && !rec.total)
            throw validation_error("row " + std::to_string(line_no) +
                                   ": Estimate present without Total");
        if (rec.total && *rec.total <= 0)
            throw validation_error("row " + std::to_string(line_no) + ": Total must be positive");
        if (rec.estimate && *rec.estimate > *rec.total)
            throw validation_error("row " + std::to_string(line_no) + ": Estimate " +
                                   std::to_string(*rec.estimate) + " exceeds Total " +
                                   std::to_string(*rec.total));
        if (rec.population && !rec.has_survey())
            throw validation_error("row " + std::to_string(line_no) +
                                   ": Population=TRUE requires Estimate and Total");
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<EdgeRecord> parse_edge_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open input file: " + path);
    return parse_edge_table(in);
}

const std::vector<std::string>& PopTree::children(const std::string& parent) const {
    static const std::vector<std::string> none;
    auto it = children_.find(parent);
    return it == children_.end() ? none : it->second;
}

const EdgeRecord& PopTree::edge(const std::string& from, const std::string& to) const {
    auto it = edge_index_.find({from, to});
    if (it == edge_index_.end())
        throw validation_error("no edge " + from + " -> " + to);
    return edges_[it->second];
}

bool PopTree::is_leaf(const std::string& label) const {
    return std::find(leaves_.begin(), leaves_.end(), label) != leaves_.end();
}

std::optional<std::int64_t> PopTree::leaf_count(const std::string& leaf) const {
    for (const auto& e : edges_)
        if (e.to == leaf) return e.count;
    return std::nullopt;
}

std::vector<std::string> PopTree::parents_breadth_first() const {
    std::vector<std::string> order;
    std::deque<std::string> queue{root_};
    while (!queue.empty()) {
        std::string v = queue.front();
        queue.pop_front();
        const auto& kids = children(v);
        if (!kids.empty()) {
            order.push_back(v);
            for (const auto& c : kids) queue.push_back(c);
        }
    }
    return order;
}

PopTree build_tree(const std::vector<EdgeRecord>& records) {
    if (records.empty()) throw validation_error("no edges: cannot build a tree");

    PopTree tree;
    std::map<std::string, int> in_degree;
    for (const auto& rec : records) {
        auto key = std::make_pair(rec.from, rec.to);
        if (tree.edge_index_.count(key))
            throw validation_error("duplicate edge " + rec.from + " -> " + rec.to);
        tree.edge_index_[key] = tree.edges_.size();
        tree.edges_.push_back(rec);
        tree.children_[rec.from].push_back(rec.to);
        if (!in_degree.count(rec.from)) in_degree[rec.from] = 0;
        ++in_degree[rec.to];
        for (const auto& label : {rec.from, rec.to})
            if (std::find(tree.nodes_.begin(), tree.nodes_.end(), label) == tree.nodes_.end())
                tree.nodes_.push_back(label);
    }

    std::vector<std::string> roots;
    for (const auto& [label, deg] : in_degree) {
        if (deg == 0) roots.push_back(label);
        if (deg > 1)
            throw validation_error("node " + label + " has multiple parents");
    }
    if (roots.empty())
        throw validation_error("no root found (cycle in edge table)");
    if (roots.size() > 1) {
        std::string msg = "multiple roots / disconnected:";
        for (const auto& r : roots) msg += " " + r;
        throw validation_error(msg);
    }
    tree.root_ = roots.front();

    // Reachability from the root; anything missed is off-tree.
    std::set<std::string> seen{tree.root_};
    std::deque<std::string> queue{tree.root_};
    while (!queue.empty()) {
        std::string v = queue.front();
        queue.pop_front();
        for (const auto& c : tree.children(v)) {
            if (!seen.insert(c).second)
                throw validation_error("cycle through node " + c);
            queue.push_back(c);
        }
    }
    for (const auto& label : tree.nodes_)
        if (!seen.count(label))
            throw validation_error("node " + label + " is disconnected from root " + tree.root_);

    for (const auto& label : tree.nodes_)
        if (tree.children(label).empty()) tree.leaves_.push_back(label);

    for (const auto& rec : tree.edges_)
        if (rec.count && !tree.is_leaf(rec.to))
            throw validation_error("count on non-leaf node " + rec.to);

    tree.informative_ = informative_leaves(tree);
    return tree;
}

std::vector<std::string> informative_leaves(const PopTree& tree) {
    std::vector<std::string> result;
    for (const auto& leaf : tree.leaves()) {
        RootPath path = path_to_leaf(tree, leaf);
        if (!path.count) continue;
        bool informed = true;
        for (const auto& e : path.edges)
            if (!e.has_survey()) { informed = false; break; }
        if (informed) result.push_back(leaf);
    }
    return result;
}

RootPath path_to_leaf(const PopTree& tree, const std::string& leaf) {
    if (!tree.is_leaf(leaf))
        throw validation_error("node " + leaf + " is not a leaf");
    // Walk upward via the unique parent of each node.
    std::vector<EdgeRecord> reversed;
    std::string cur = leaf;
    while (cur != tree.root()) {
        bool found = false;
        for (const auto& e : tree.edges()) {
            if (e.to == cur) {
                reversed.push_back(e);
                cur = e.from;
                found = true;
                break;
            }
        }
        if (!found)
            throw validation_error("node " + leaf + " has no path to root");
    }
    RootPath path;
    path.leaf = leaf;
    path.edges.assign(reversed.rbegin(), reversed.rend());
    path.count = tree.leaf_count(leaf);
    return path;
}

} // namespace wmm
