#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmm/sampling.hpp"
#include "wmm/tree.hpp"

namespace wmm {

// M x K matrix of back-calculated root estimates, one column per
// informative leaf, plus per-row importance weights.
struct SampleMatrix {
    std::vector<std::string> leaf_order;
    std::vector<std::vector<double>> values;      // [row][column], > 0
    std::vector<std::vector<double>> log_values;  // element-wise ln
    std::vector<double> row_weights;              // all 1 when no importance regime

    std::size_t rows() const { return values.size(); }
    std::size_t cols() const { return leaf_order.size(); }
};

struct WeightVector {
    std::vector<std::string> leaf_order;
    std::vector<double> weights;    // sum to 1; individual entries may be negative
    bool uniform_fallback = false;  // pseudo-inverse collapsed; fell back to 1/K
};

enum class IntervalType { Percentile, Var, Cox };

IntervalType interval_type_from_string(const std::string& name);
std::string to_string(IntervalType type);

struct PerLeafSummary {
    double mean_estimate = 0.0;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    std::vector<double> samples;  // back-calculated root estimates for this leaf
};

struct EstimateReport {
    double root_estimate = 0.0;           // Zhat = exp(theta_hat)
    double rounded_estimate = 0.0;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    IntervalType interval_type = IntervalType::Percentile;
    std::vector<double> log_estimates;    // row-combined samples (L.w)
    std::vector<double> row_weights;
    WeightVector weights;
    std::map<std::string, PerLeafSummary> per_leaf;
    std::vector<std::pair<EdgeKey, std::vector<double>>> per_edge;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
};

// Closed-form moments of a single back-calculated path estimate when
// every edge probability is Beta-distributed; undefined below the
// existence thresholds on alpha.
struct AnalyticMoments {
    std::optional<double> mean;      // needs alpha > 1 on every edge
    std::optional<double> variance;  // needs alpha > 2 on every edge
};

struct EstimateOptions {
    std::uint64_t samples = 10000;
    std::uint64_t seed = 0;
    IntervalType interval = IntervalType::Percentile;
    double alpha = 0.05;
    std::uint64_t max_attempts = 1000000;
};

double back_calculate(double count, const std::vector<double>& path_probabilities);

struct SamplingOutput {
    SampleMatrix matrix;
    // Sampled probabilities per edge, one value per realization;
    // fixed-ratio edges repeat the exact ratio.
    std::vector<std::pair<EdgeKey, std::vector<double>>> edge_samples;
};

SamplingOutput build_sample_matrix(const PopTree& tree, std::uint64_t sample_length,
                                   std::uint64_t seed, std::uint64_t max_attempts = 1000000);

// Minimum-variance weights from the (row-weighted) covariance of the log
// matrix, via the Moore-Penrose pseudo-inverse: w = S+ 1 / (1' S+ 1).
WeightVector min_variance_weights(const SampleMatrix& matrix);

EstimateReport wmm_estimate(const PopTree& tree, const EstimateOptions& options);

// Moments of D / prod(p_e) with independent p_e ~ Beta(alpha_e, beta_e).
AnalyticMoments analytic_path_moments(double count,
                                      const std::vector<std::pair<double, double>>& edge_betas);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Interval on the population scale from the row-combined log estimates.
// Percentile uses (weighted) empirical quantiles of exp(theta_m); var
// uses exp(theta_hat +/- 2 sqrt(V)) with V = 1/(1' Sigma 1), Sigma the
// precision matrix of the log-matrix columns; cox is the lognormal-mean
// interval exp(mean + s^2/2 +/- 1.96 sqrt(s^2/N + s^4/(2(N-1)))).
Interval confidence_interval(const std::vector<double>& log_estimates,
                             const std::vector<double>& row_weights,
                             const SampleMatrix& matrix, IntervalType type, double alpha = 0.05);

// Quantile by linear interpolation between order statistics; weighted
// values generalize the unit-weight rule.
double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q);

// Alternate branch evidence for the two-stage process: extra
// (estimate, total) sources per edge on top of the base table's source.
using AlternateSources = std::map<EdgeKey, std::vector<SurveyEvidence>>;

// Enumerates every combination of per-edge sources, runs the first stage
// per combination, then combines the per-combination log estimates with
// second-stage minimum-variance weights. Reduces to wmm_estimate when
// only one combination exists.
EstimateReport two_stage_estimate(const PopTree& tree, const AlternateSources& alternates,
                                  const EstimateOptions& options,
                                  std::size_t combination_cap = 4096);

} // namespace wmm
