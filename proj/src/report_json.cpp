#include "wmm/report_json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wmm/error.hpp"

namespace wmm {

using ordered_json = nlohmann::ordered_json;

std::string report_to_json(const EstimateReport& report) {
    ordered_json j;
    j["root_estimate"] = report.root_estimate;
    j["rounded_estimate"] = report.rounded_estimate;
    j["uncertainty"] = {report.interval_lo, report.interval_hi};
    j["interval_type"] = to_string(report.interval_type);
    ordered_json weights;
    for (std::size_t i = 0; i < report.weights.leaf_order.size(); ++i)
        weights[report.weights.leaf_order[i]] = report.weights.weights[i];
    j["weights"] = weights;
    j["uniform_weight_fallback"] = report.weights.uniform_fallback;
    j["log_estimates"] = report.log_estimates;
    j["row_weights"] = report.row_weights;
    ordered_json per_leaf;
    for (const auto& [leaf, summary] : report.per_leaf) {
        per_leaf[leaf] = {
            {"mean_estimate", summary.mean_estimate},
            {"interval", {summary.interval_lo, summary.interval_hi}},
            {"samples", summary.samples},
        };
    }
    j["per_leaf"] = per_leaf;
    ordered_json per_edge;
    for (const auto& [key, samples] : report.per_edge)
        per_edge[key.first + "->" + key.second] = samples;
    j["per_edge"] = per_edge;
    j["seed"] = report.seed;
    j["samples"] = report.samples;
    return j.dump(2) + "\n";
}

EstimateReport report_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw validation_error(std::string("malformed report JSON: ") + e.what());
    }
    try {
        EstimateReport report;
        report.root_estimate = j.at("root_estimate").get<double>();
        report.rounded_estimate = j.at("rounded_estimate").get<double>();
        report.interval_lo = j.at("uncertainty").at(0).get<double>();
        report.interval_hi = j.at("uncertainty").at(1).get<double>();
        report.interval_type = interval_type_from_string(j.at("interval_type").get<std::string>());
        for (const auto& [leaf, weight] : j.at("weights").items()) {
            report.weights.leaf_order.push_back(leaf);
            report.weights.weights.push_back(weight.get<double>());
        }
        report.weights.uniform_fallback = j.value("uniform_weight_fallback", false);
        report.log_estimates = j.at("log_estimates").get<std::vector<double>>();
        report.row_weights = j.value("row_weights", std::vector<double>{});
        for (const auto& [leaf, entry] : j.at("per_leaf").items()) {
            PerLeafSummary summary;
            summary.mean_estimate = entry.at("mean_estimate").get<double>();
            summary.interval_lo = entry.at("interval").at(0).get<double>();
            summary.interval_hi = entry.at("interval").at(1).get<double>();
            summary.samples = entry.at("samples").get<std::vector<double>>();
            report.per_leaf[leaf] = std::move(summary);
        }
        for (const auto& [key, samples] : j.at("per_edge").items()) {
            auto sep = key.find("->");
            if (sep == std::string::npos)
                throw validation_error("malformed edge key in report: " + key);
            report.per_edge.push_back(
                {{key.substr(0, sep), key.substr(sep + 2)}, samples.get<std::vector<double>>()});
        }
        report.seed = j.at("seed").get<std::uint64_t>();
        report.samples = j.at("samples").get<std::uint64_t>();
        return report;
    } catch (const ordered_json::exception& e) {
        throw validation_error(std::string("report JSON missing fields: ") + e.what());
    }
}

std::string samples_to_csv(const EstimateReport& report) {
    std::ostringstream out;
    std::vector<std::string> leaves;
    for (const auto& [leaf, summary] : report.per_leaf) leaves.push_back(leaf);
    for (const auto& leaf : leaves) out << leaf << ",";
    for (const auto& [key, samples] : report.per_edge) out << key.first << "->" << key.second << ",";
    out << "row_weight\n";
    const std::size_t rows = report.log_estimates.size();
    out.precision(17);
    for (std::size_t i = 0; i < rows; ++i) {
        for (const auto& leaf : leaves) out << report.per_leaf.at(leaf).samples[i] << ",";
        for (const auto& [key, samples] : report.per_edge) out << samples[i] << ",";
        out << (i < report.row_weights.size() ? report.row_weights[i] : 1.0) << "\n";
    }
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw io_error("cannot write to " + tmp);
        out << content;
        if (!out) throw io_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw io_error("cannot rename " + tmp + " to " + path);
}

} // namespace wmm
