#include "wmm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "wmm/error.hpp"

namespace wmm {

IntervalType interval_type_from_string(const std::string& name) {
    if (name == "percentile") return IntervalType::Percentile;
    if (name == "var") return IntervalType::Var;
    if (name == "cox") return IntervalType::Cox;
    throw validation_error("unknown interval type: " + name);
}

std::string to_string(IntervalType type) {
    switch (type) {
    case IntervalType::Percentile: return "percentile";
    case IntervalType::Var: return "var";
    case IntervalType::Cox: return "cox";
    }
    return "percentile";
}

double back_calculate(double count, const std::vector<double>& path_probabilities) {
    if (path_probabilities.empty())
        throw estimation_error("back_calculate: empty probability sequence");
    double product = 1.0;
    for (double p : path_probabilities) {
        if (p <= 0.0 || p > 1.0)
            throw estimation_error("back_calculate: probability " + std::to_string(p) +
                                   " outside (0, 1]");
        product *= p;
    }
    return count / product;
}

SamplingOutput build_sample_matrix(const PopTree& tree, std::uint64_t sample_length,
                                   std::uint64_t seed, std::uint64_t max_attempts) {
    if (sample_length < 2) throw estimation_error("sample_length must be at least 2");
    const auto& leaves = tree.informative_leaves();
    if (leaves.empty()) throw estimation_error("no informative paths");

    auto plans = plan_informative_groups(tree);

    std::vector<RootPath> paths;
    paths.reserve(leaves.size());
    for (const auto& leaf : leaves) paths.push_back(path_to_leaf(tree, leaf));

    // Edges carrying a probability, in breadth-first parent order with
    // children in input order.
    std::vector<EdgeKey> edge_order;
    {
        RealizationRng probe(seed, 0);
        Realization first = sample_realization(tree, plans, probe, max_attempts);
        for (const auto& plan : plans)
            for (const auto& child : tree.children(plan.parent))
                if (first.probabilities.count({plan.parent, child}))
                    edge_order.push_back({plan.parent, child});
    }

    SamplingOutput out;
    out.matrix.leaf_order = leaves;
    out.matrix.values.reserve(sample_length);
    out.matrix.log_values.reserve(sample_length);
    out.matrix.row_weights.reserve(sample_length);
    out.edge_samples.reserve(edge_order.size());
    for (const auto& key : edge_order) out.edge_samples.push_back({key, {}});

    for (std::uint64_t m = 0; m < sample_length; ++m) {
        RealizationRng rng(seed, m);
        Realization real = sample_realization(tree, plans, rng, max_attempts);

        std::vector<double> row, log_row;
        row.reserve(leaves.size());
        for (const auto& path : paths) {
            std::vector<double> probs;
            probs.reserve(path.edges.size());
            for (const auto& e : path.edges) {
                auto it = real.probabilities.find({e.from, e.to});
                if (it == real.probabilities.end())
                    throw estimation_error("edge " + e.from + " -> " + e.to +
                                           " missing from realization");
                probs.push_back(it->second);
            }
            double value = back_calculate(static_cast<double>(*path.count), probs);
            row.push_back(value);
            log_row.push_back(std::log(value));
        }
        out.matrix.values.push_back(std::move(row));
        out.matrix.log_values.push_back(std::move(log_row));
        out.matrix.row_weights.push_back(real.weight);

        for (std::size_t k = 0; k < edge_order.size(); ++k)
            out.edge_samples[k].second.push_back(real.probabilities.at(edge_order[k]));
    }
    return out;
}

namespace {

// Row-weighted covariance of the log matrix with the effective-sample-size
// correction; reduces to the unbiased (M-1) estimator for unit weights.
Eigen::MatrixXd log_covariance(const SampleMatrix& matrix) {
    const std::size_t m = matrix.rows();
    const std::size_t k = matrix.cols();
    double wsum = std::accumulate(matrix.row_weights.begin(), matrix.row_weights.end(), 0.0);
    if (wsum <= 0.0) throw estimation_error("row weights sum to zero");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < m; ++i) {
        double u = matrix.row_weights[i] / wsum;
        for (std::size_t j = 0; j < k; ++j) mean(j) += u * matrix.log_values[i][j];
    }
    double u2 = 0.0;
    for (double w : matrix.row_weights) {
        double u = w / wsum;
        u2 += u * u;
    }
    if (u2 >= 1.0) throw estimation_error("degenerate row weights: effective sample size is 1");

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < m; ++i) {
        double u = matrix.row_weights[i] / wsum;
        for (std::size_t a = 0; a < k; ++a) {
            double da = matrix.log_values[i][a] - mean(a);
            for (std::size_t b = 0; b < k; ++b)
                cov(a, b) += u * da * (matrix.log_values[i][b] - mean(b));
        }
    }
    return cov / (1.0 - u2);
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        max_abs = std::max(max_abs, std::abs(values(i)));
    double tol = max_abs * 1e-12 * static_cast<double>(s.rows());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i)) > tol) inv(i) = 1.0 / values(i);
    return vectors * inv.asDiagonal() * vectors.transpose();
}

double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += weights[i] * values[i];
        wsum += weights[i];
    }
    if (wsum <= 0.0) throw estimation_error("row weights sum to zero");
    return acc / wsum;
}

double weighted_variance(const std::vector<double>& values, const std::vector<double>& weights) {
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    double mean = weighted_mean(values, weights);
    double u2 = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double u = weights[i] / wsum;
        u2 += u * u;
        acc += u * (values[i] - mean) * (values[i] - mean);
    }
    if (u2 >= 1.0) return 0.0;
    return acc / (1.0 - u2);
}

} // namespace

WeightVector min_variance_weights(const SampleMatrix& matrix) {
    if (matrix.rows() < 2) throw estimation_error("need at least 2 sample rows for weights");
    WeightVector result;
    result.leaf_order = matrix.leaf_order;
    const std::size_t k = matrix.cols();
    if (k == 1) {
        result.weights = {1.0};
        return result;
    }

    Eigen::MatrixXd cov = log_covariance(matrix);
    Eigen::MatrixXd pinv = pseudo_inverse(cov);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);
    Eigen::VectorXd raw = pinv * ones;
    double denom = ones.dot(raw);
    if (!(std::abs(denom) > 0.0) || !std::isfinite(denom)) {
        result.uniform_fallback = true;
        result.weights.assign(k, 1.0 / static_cast<double>(k));
        return result;
    }
    result.weights.resize(k);
    for (std::size_t j = 0; j < k; ++j) result.weights[j] = raw(j) / denom;
    return result;
}

double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q) {
    if (values.empty()) throw estimation_error("quantile of empty sample");
    if (weights.empty()) weights.assign(values.size(), 1.0);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (wsum <= 0.0) throw estimation_error("quantile weights sum to zero");
    const std::size_t n = values.size();
    if (n == 1) return values[order[0]];

    // Plotting positions p_i = (C_i - w_i)/(W - w_i); for unit weights
    // this is (i-1)/(n-1), i.e. interpolation between order statistics.
    std::vector<double> pos(n);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = weights[order[i]];
        pos[i] = (wsum - w) > 0.0 ? cum / (wsum - w) : 1.0;
        cum += w;
    }
    q = std::clamp(q, 0.0, 1.0);
    if (q <= pos.front()) return values[order.front()];
    if (q >= pos.back()) return values[order.back()];
    auto it = std::upper_bound(pos.begin(), pos.end(), q);
    std::size_t hi = static_cast<std::size_t>(it - pos.begin());
    std::size_t lo = hi - 1;
    double span = pos[hi] - pos[lo];
    double t = span > 0.0 ? (q - pos[lo]) / span : 0.0;
    return values[order[lo]] + t * (values[order[hi]] - values[order[lo]]);
}

Interval confidence_interval(const std::vector<double>& log_estimates,
                             const std::vector<double>& row_weights, const SampleMatrix& matrix,
                             IntervalType type, double alpha) {
    const std::size_t m = log_estimates.size();
    if (m == 0) throw estimation_error("no log estimates");
    std::vector<double> weights = row_weights;
    if (weights.empty()) weights.assign(m, 1.0);

    switch (type) {
    case IntervalType::Percentile: {
        std::vector<double> scale(m);
        for (std::size_t i = 0; i < m; ++i) scale[i] = std::exp(log_estimates[i]);
        return {weighted_quantile(scale, weights, alpha / 2.0),
                weighted_quantile(scale, weights, 1.0 - alpha / 2.0)};
    }
    case IntervalType::Var: {
        if (m < 2) throw estimation_error("var interval needs at least 2 samples");
        double theta_hat = weighted_mean(log_estimates, weights);
        Eigen::MatrixXd cov = log_covariance(matrix);
        double v = 0.0;
        if (cov.cwiseAbs().maxCoeff() > 0.0) {
            Eigen::MatrixXd precision = pseudo_inverse(cov);
            double denom = precision.sum();  // 1' Sigma 1
            v = denom > 0.0 ? 1.0 / denom : 0.0;
        }
        return {std::exp(theta_hat - 2.0 * std::sqrt(v)), std::exp(theta_hat + 2.0 * std::sqrt(v))};
    }
    case IntervalType::Cox: {
        if (m < 2) throw estimation_error("cox interval needs at least 2 samples");
        double mean = weighted_mean(log_estimates, weights);
        double s2 = weighted_variance(log_estimates, weights);
        double n = static_cast<double>(m);
        double center = mean + s2 / 2.0;
        double half = 1.96 * std::sqrt(s2 / n + s2 * s2 / (2.0 * (n - 1.0)));
        return {std::exp(center - half), std::exp(center + half)};
    }
    }
    throw estimation_error("unknown interval type");
}

EstimateReport wmm_estimate(const PopTree& tree, const EstimateOptions& options) {
    SamplingOutput run =
        build_sample_matrix(tree, options.samples, options.seed, options.max_attempts);
    const SampleMatrix& matrix = run.matrix;
    WeightVector weights = min_variance_weights(matrix);

    EstimateReport report;
    report.weights = weights;
    report.row_weights = matrix.row_weights;
    report.interval_type = options.interval;
    report.seed = options.seed;
    report.samples = options.samples;
    report.per_edge = std::move(run.edge_samples);

    report.log_estimates.resize(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < matrix.cols(); ++j)
            acc += weights.weights[j] * matrix.log_values[i][j];
        report.log_estimates[i] = acc;
    }

    auto [lo_it, hi_it] =
        std::minmax_element(report.log_estimates.begin(), report.log_estimates.end());
    if (*lo_it == *hi_it) {
        // fully degenerate sample (e.g. all-fixed ratios): report the
        // exact product instead of round-tripping through exp(log)
        double exact = 1.0;
        for (std::size_t j = 0; j < matrix.cols(); ++j)
            exact *= std::pow(matrix.values[0][j], weights.weights[j]);
        report.root_estimate = exact;
        report.rounded_estimate = std::round(exact);
        report.interval_lo = report.interval_hi = exact;
    } else {
        double theta_hat = weighted_mean(report.log_estimates, matrix.row_weights);
        report.root_estimate = std::exp(theta_hat);
        report.rounded_estimate = std::round(report.root_estimate);
        Interval interval = confidence_interval(report.log_estimates, matrix.row_weights, matrix,
                                                options.interval, options.alpha);
        report.interval_lo = interval.lo;
        report.interval_hi = interval.hi;
    }

    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        PerLeafSummary leaf;
        leaf.samples.resize(matrix.rows());
        for (std::size_t i = 0; i < matrix.rows(); ++i) leaf.samples[i] = matrix.values[i][j];
        leaf.mean_estimate = weighted_mean(leaf.samples, matrix.row_weights);
        leaf.interval_lo = weighted_quantile(leaf.samples, matrix.row_weights, options.alpha / 2.0);
        leaf.interval_hi =
            weighted_quantile(leaf.samples, matrix.row_weights, 1.0 - options.alpha / 2.0);
        report.per_leaf[matrix.leaf_order[j]] = std::move(leaf);
    }
    return report;
}

AnalyticMoments analytic_path_moments(double count,
                                      const std::vector<std::pair<double, double>>& edge_betas) {
    AnalyticMoments moments;
    bool mean_ok = true, var_ok = true;
    double mean = count, second = count * count;
    for (const auto& [a, b] : edge_betas) {
        if (a <= 1.0) mean_ok = false;
        if (a <= 2.0) var_ok = false;
        if (mean_ok) mean *= (a + b - 1.0) / (a - 1.0);                        // E(1/p)
        if (var_ok) second *= (a + b - 1.0) * (a + b - 2.0) / ((a - 1.0) * (a - 2.0));
    }
    if (mean_ok) moments.mean = mean;
    if (mean_ok && var_ok) moments.variance = second - mean * mean;
    return moments;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

EstimateReport two_stage_estimate(const PopTree& tree, const AlternateSources& alternates,
                                  const EstimateOptions& options, std::size_t combination_cap) {
    // Per-edge source lists: the base table's evidence first, then alternates.
    std::vector<std::pair<std::size_t, std::vector<SurveyEvidence>>> varying;  // edge idx, sources
    const auto& edges = tree.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto it = alternates.find({edges[i].from, edges[i].to});
        if (it == alternates.end() || it->second.empty()) continue;
        std::vector<SurveyEvidence> sources;
        if (edges[i].has_survey())
            sources.push_back({*edges[i].estimate, *edges[i].total});
        sources.insert(sources.end(), it->second.begin(), it->second.end());
        if (sources.size() > 1) varying.push_back({i, std::move(sources)});
    }

    std::size_t combos = 1;
    for (const auto& [idx, sources] : varying) {
        combos *= sources.size();
        if (combos > combination_cap)
            throw estimation_error("combination count exceeds cap of " +
                                   std::to_string(combination_cap) + "; prune alternate sources");
    }
    if (combos == 1) return wmm_estimate(tree, options);

    const std::size_t m = options.samples;
    SampleMatrix stacked;  // columns = combinations, values = exp(theta_C)
    stacked.row_weights.assign(m, 1.0);
    stacked.values.assign(m, {});
    stacked.log_values.assign(m, {});

    for (std::size_t c = 0; c < combos; ++c) {
        std::vector<EdgeRecord> records = edges;
        std::size_t rem = c;
        for (const auto& [idx, sources] : varying) {
            const SurveyEvidence& source = sources[rem % sources.size()];
            rem /= sources.size();
            records[idx].estimate = source.successes;
            records[idx].total = source.size;
        }
        PopTree combo_tree = build_tree(records);
        EstimateOptions combo_options = options;
        combo_options.seed = mix_seed(options.seed, c);
        SamplingOutput run = build_sample_matrix(combo_tree, combo_options.samples,
                                                 combo_options.seed, combo_options.max_attempts);
        WeightVector w = min_variance_weights(run.matrix);
        for (std::size_t i = 0; i < m; ++i) {
            double theta = 0.0;
            for (std::size_t j = 0; j < run.matrix.cols(); ++j)
                theta += w.weights[j] * run.matrix.log_values[i][j];
            stacked.log_values[i].push_back(theta);
            stacked.values[i].push_back(std::exp(theta));
        }
        stacked.leaf_order.push_back("combination_" + std::to_string(c + 1));
    }

    WeightVector second_stage = min_variance_weights(stacked);

    EstimateReport report;
    report.weights = second_stage;
    report.row_weights = stacked.row_weights;
    report.interval_type = options.interval;
    report.seed = options.seed;
    report.samples = options.samples;
    report.log_estimates.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < stacked.cols(); ++j)
            acc += second_stage.weights[j] * stacked.log_values[i][j];
        report.log_estimates[i] = acc;
    }
    double psi_hat = weighted_mean(report.log_estimates, stacked.row_weights);
    report.root_estimate = std::exp(psi_hat);
    report.rounded_estimate = std::round(report.root_estimate);
    Interval interval = confidence_interval(report.log_estimates, stacked.row_weights, stacked,
                                            options.interval, options.alpha);
    report.interval_lo = interval.lo;
    report.interval_hi = interval.hi;
    return report;
}

} // namespace wmm
