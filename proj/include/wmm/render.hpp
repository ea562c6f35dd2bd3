#pragma once

#include <optional>
#include <string>

#include "wmm/estimator.hpp"
#include "wmm/tree.hpp"

namespace wmm::render {

enum class Mode { Draw, Count, Est };
enum class Format { Dot, Ascii };

Mode mode_from_string(const std::string& name);
Format format_from_string(const std::string& name);

struct RenderSpec {
    Mode mode = Mode::Draw;
    Format format = Format::Dot;
    bool show_probs = false;
    bool show_desc = false;
};

// Draw mode labels nodes with their label (or description) and edges
// with Estimate/Total ratios; count and est modes add the rounded root
// estimate, leaf counts or mean path estimates, and mean sampled branch
// probabilities from a previous estimation run.
std::string render_tree(const PopTree& tree, const RenderSpec& spec,
                        const std::optional<EstimateReport>& report = std::nullopt);

} // namespace wmm::render
