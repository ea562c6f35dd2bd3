#include "wmm/render.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "wmm/error.hpp"

namespace wmm::render {

Mode mode_from_string(const std::string& name) {
    if (name == "draw") return Mode::Draw;
    if (name == "count") return Mode::Count;
    if (name == "est") return Mode::Est;
    throw validation_error("unknown render mode: " + name);
}

Format format_from_string(const std::string& name) {
    if (name == "dot") return Format::Dot;
    if (name == "ascii") return Format::Ascii;
    throw validation_error("unknown render format: " + name);
}

namespace {

std::string fixed2(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return out.str();
}

std::string fixed0(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(0) << value;
    return out.str();
}

double mean_of(const std::vector<double>& samples, const std::vector<double>& weights) {
    double acc = 0.0, wsum = 0.0;
    bool weighted = weights.size() == samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double w = weighted ? weights[i] : 1.0;
        acc += w * samples[i];
        wsum += w;
    }
    return wsum > 0.0 ? acc / wsum : 0.0;
}

std::string node_text(const PopTree& tree, const std::string& label, const RenderSpec& spec) {
    if (spec.show_desc) {
        for (const auto& e : tree.edges())
            if (e.to == label && e.description) return *e.description;
    }
    return label;
}

// Annotation inside the node: rounded root estimate at the root, leaf
// count or mean path estimate at informative leaves.
std::optional<std::string> node_value(const PopTree& tree, const std::string& label,
                                      const RenderSpec& spec,
                                      const std::optional<EstimateReport>& report) {
    if (spec.mode == Mode::Draw) return std::nullopt;
    if (label == tree.root()) return fixed0(report->rounded_estimate);
    auto it = report->per_leaf.find(label);
    if (it == report->per_leaf.end()) return std::nullopt;
    if (spec.mode == Mode::Count) {
        auto count = tree.leaf_count(label);
        if (!count) return std::nullopt;
        return std::to_string(*count);
    }
    return fixed0(it->second.mean_estimate);
}

std::optional<std::string> edge_text(const PopTree& tree, const EdgeRecord& edge,
                                     const RenderSpec& spec,
                                     const std::optional<EstimateReport>& report) {
    if (spec.mode == Mode::Draw) {
        if (!spec.show_probs || !edge.has_survey()) return std::nullopt;
        return fixed2(static_cast<double>(*edge.estimate) / static_cast<double>(*edge.total));
    }
    for (const auto& [key, samples] : report->per_edge)
        if (key.first == edge.from && key.second == edge.to)
            return fixed2(mean_of(samples, report->row_weights));
    return std::nullopt;
}

void render_ascii(const PopTree& tree, const RenderSpec& spec,
                  const std::optional<EstimateReport>& report, const std::string& node, int depth,
                  std::ostringstream& out) {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    out << node_text(tree, node, spec);
    if (node != tree.root()) {
        // Parent edge annotation.
        for (const auto& e : tree.edges()) {
            if (e.to != node) continue;
            if (auto text = edge_text(tree, e, spec, report)) out << " (" << *text << ")";
            break;
        }
    }
    if (auto value = node_value(tree, node, spec, report)) out << " [" << *value << "]";
    out << "\n";
    for (const auto& child : tree.children(node))
        render_ascii(tree, spec, report, child, depth + 1, out);
}

} // namespace

std::string render_tree(const PopTree& tree, const RenderSpec& spec,
                        const std::optional<EstimateReport>& report) {
    if (spec.mode != Mode::Draw && !report)
        throw validation_error("count/est render modes require an estimate report");

    if (spec.format == Format::Ascii) {
        std::ostringstream out;
        render_ascii(tree, spec, report, tree.root(), 0, out);
        return out.str();
    }

    std::ostringstream out;
    out << "digraph tree {\n";
    for (const auto& node : tree.nodes()) {
        std::string label = node_text(tree, node, spec);
        if (auto value = node_value(tree, node, spec, report)) label += "\\n" + *value;
        out << "  \"" << node << "\" [label=\"" << label << "\"];\n";
    }
    for (const auto& e : tree.edges()) {
        out << "  \"" << e.from << "\" -> \"" << e.to << "\"";
        if (auto text = edge_text(tree, e, spec, report)) out << " [label=\"" << *text << "\"]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace wmm::render
