#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wmm/error.hpp"
#include "wmm/estimator.hpp"
#include "wmm/jags.hpp"
#include "wmm/render.hpp"
#include "wmm/report_json.hpp"
#include "wmm/tree.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;
constexpr int kExitIo = 4;

int exit_code_for(const wmm::Error& e) {
    switch (e.kind()) {
    case wmm::ErrorKind::Validation: return kExitValidation;
    case wmm::ErrorKind::Estimation: return kExitEstimation;
    case wmm::ErrorKind::Io: return kExitIo;
    }
    return 1;
}

const char* error_prefix(const wmm::Error& e) {
    switch (e.kind()) {
    case wmm::ErrorKind::Validation: return "E_VALIDATION";
    case wmm::ErrorKind::Estimation: return "E_ESTIMATION";
    case wmm::ErrorKind::Io: return "E_IO";
    }
    return "E_UNKNOWN";
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("WMM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw wmm::validation_error(std::string("WMM_SEED is not an integer: ") + env);
        }
    }
    return 0;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

wmm::AlternateSources read_alternate_sources(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw wmm::io_error("cannot open alternate-source file: " + path);
    // Same table format as the main input; each row adds one extra
    // (Estimate, Total) source for the named edge.
    auto records = wmm::parse_edge_table(in);
    wmm::AlternateSources sources;
    for (const auto& rec : records) {
        if (!rec.has_survey())
            throw wmm::validation_error("alternate source for " + rec.from + " -> " + rec.to +
                                        " lacks Estimate/Total");
        sources[{rec.from, rec.to}].push_back({*rec.estimate, *rec.total});
    }
    return sources;
}

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty())
        std::cout << content;
    else
        wmm::write_file_atomic(out_path, content);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted multiplier method estimation and JAGS model generation "
                 "for tree-structured population data"};
    app.require_subcommand(1);

    std::string input, output, report_path, dump_path, alt_path;
    std::uint64_t seed = 0, samples = 10000, max_attempts = 1000000;
    double alpha = 0.05;
    std::string interval = "percentile", prior = "lognormal";
    std::string mode = "draw", format = "dot";
    bool show_probs = false, show_desc = false;
    bool seed_given = false;

    auto* validate = app.add_subcommand("validate", "Parse the edge table and validate the tree");
    validate->add_option("-i,--input", input, "Edge table (CSV)")->required();

    auto* estimate = app.add_subcommand("estimate", "Run the weighted multiplier estimate");
    estimate->add_option("-i,--input", input, "Edge table (CSV)")->required();
    estimate->add_option("-o,--output", output, "Report file (JSON); stdout when omitted");
    estimate->add_option("--samples", samples, "Number of sampled realizations M")
        ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100000000}));
    estimate->add_option("--seed", seed, "Random seed")->each([&](const std::string&) {
        seed_given = true;
    });
    estimate->add_option("--interval", interval, "Interval type: percentile, var, cox");
    estimate->add_option("--alpha", alpha, "Interval tail mass")
        ->check(CLI::Range(1e-9, 0.999999));
    estimate->add_option("--max-attempts", max_attempts, "Rejection-sampler attempt cap");
    estimate->add_option("--dump-samples", dump_path, "Write the raw sample matrix (CSV)");
    estimate->add_option("--alt-sources", alt_path,
                         "Alternate branch sources (CSV); triggers the two-stage estimate");

    auto* jags = app.add_subcommand("jags", "Generate a JAGS model script for the tree");
    jags->add_option("-i,--input", input, "Edge table (CSV)")->required();
    jags->add_option("-o,--output", output, "Model file (.mod/.txt); stdout when omitted");
    jags->add_option("--prior", prior, "Root prior: lognormal or uniform");

    auto* render = app.add_subcommand("render", "Render the tree as DOT or ASCII");
    render->add_option("-i,--input", input, "Edge table (CSV)")->required();
    render->add_option("-o,--output", output, "Output file; stdout when omitted");
    render->add_option("--mode", mode, "draw, count, or est");
    render->add_option("--format", format, "dot or ascii");
    render->add_option("--report", report_path, "Estimate report (required for count/est)");
    render->add_flag("--probs", show_probs, "Show Estimate/Total ratios on edges");
    render->add_flag("--desc", show_desc, "Show node descriptions");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!seed_given) seed = default_seed();

        if (validate->parsed()) {
            auto records = wmm::parse_edge_table_file(input);
            auto tree = wmm::build_tree(records);
            std::cout << tree.edges().size() << " edges, " << tree.nodes().size() << " nodes, "
                      << "leaves: " << join(tree.leaves(), ", ") << ", informative leaves: "
                      << (tree.informative_leaves().empty() ? "(none)"
                                                            : join(tree.informative_leaves(), ", "))
                      << "\n";
            return 0;
        }

        if (estimate->parsed()) {
            auto tree = wmm::build_tree(wmm::parse_edge_table_file(input));
            wmm::EstimateOptions options;
            options.samples = samples;
            options.seed = seed;
            options.interval = wmm::interval_type_from_string(interval);
            options.alpha = alpha;
            options.max_attempts = max_attempts;
            wmm::EstimateReport report =
                alt_path.empty()
                    ? wmm::wmm_estimate(tree, options)
                    : wmm::two_stage_estimate(tree, read_alternate_sources(alt_path), options);
            emit(wmm::report_to_json(report), output);
            if (!dump_path.empty())
                wmm::write_file_atomic(dump_path, wmm::samples_to_csv(report));
            return 0;
        }

        if (jags->parsed()) {
            auto tree = wmm::build_tree(wmm::parse_edge_table_file(input));
            auto model = wmm::jags::generate_model(tree, wmm::jags::root_prior_from_string(prior));
            emit(model.full_text, output);
            return 0;
        }

        if (render->parsed()) {
            auto tree = wmm::build_tree(wmm::parse_edge_table_file(input));
            wmm::render::RenderSpec spec;
            spec.mode = wmm::render::mode_from_string(mode);
            spec.format = wmm::render::format_from_string(format);
            spec.show_probs = show_probs;
            spec.show_desc = show_desc;
            std::optional<wmm::EstimateReport> report;
            if (spec.mode != wmm::render::Mode::Draw) {
                if (report_path.empty())
                    throw wmm::validation_error("--mode count/est requires --report");
                std::ifstream in(report_path);
                if (!in) throw wmm::io_error("cannot open report file: " + report_path);
                std::stringstream buffer;
                buffer << in.rdbuf();
                report = wmm::report_from_json(buffer.str());
            }
            emit(wmm::render::render_tree(tree, spec, report), output);
            return 0;
        }
    } catch (const wmm::Error& e) {
        std::cerr << error_prefix(e) << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
