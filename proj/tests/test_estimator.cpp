#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "wmm/error.hpp"
#include "wmm/estimator.hpp"

using namespace wmm;

namespace {

SampleMatrix matrix_from_logs(std::vector<std::vector<double>> log_rows,
                              std::vector<std::string> leaves) {
    SampleMatrix m;
    m.leaf_order = std::move(leaves);
    m.log_values = std::move(log_rows);
    for (const auto& row : m.log_values) {
        std::vector<double> values;
        for (double v : row) values.push_back(std::exp(v));
        m.values.push_back(std::move(values));
    }
    m.row_weights.assign(m.log_values.size(), 1.0);
    return m;
}

double combine_theta(const SampleMatrix& m, const WeightVector& w, std::size_t row) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += w.weights[j] * m.log_values[row][j];
    return acc;
}

} // namespace

TEST_CASE("back_calculate divides the count by the path product") {
    CHECK(back_calculate(500, {0.5}) == doctest::Approx(1000.0));
    CHECK(back_calculate(50, {0.4, 0.9}) == doctest::Approx(50.0 / 0.36));
    CHECK(back_calculate(100, {1.0}) == doctest::Approx(100.0));
    CHECK_THROWS_AS(back_calculate(10, {}), Error);
    CHECK_THROWS_AS(back_calculate(10, {0.0}), Error);
    CHECK_THROWS_AS(back_calculate(10, {-0.2}), Error);
    CHECK_THROWS_AS(back_calculate(10, {1.5}), Error);
}

TEST_CASE("build_sample_matrix on the example tree") {
    auto tree = test::example_tree();
    auto run = build_sample_matrix(tree, 15, 7);
    CHECK(run.matrix.rows() == 15);
    CHECK(run.matrix.cols() == 2);
    CHECK(run.matrix.leaf_order == std::vector<std::string>{"B", "D"});
    CHECK(run.edge_samples.size() == 5);
    for (std::size_t i = 0; i < 15; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(run.matrix.values[i][j] > 0.0);
            CHECK(run.matrix.log_values[i][j] ==
                  doctest::Approx(std::log(run.matrix.values[i][j])));
        }
        CHECK(run.matrix.row_weights[i] >= 0.0);
    }
}

TEST_CASE("build_sample_matrix is constant for a fixed-ratio tree") {
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count,Population\nZ,A,1,2,500,TRUE\n");
    auto run = build_sample_matrix(tree, 10, 3);
    for (const auto& row : run.matrix.values) CHECK(row[0] == doctest::Approx(1000.0));
}

TEST_CASE("no informative paths is an estimation error") {
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count\nZ,A,1,2,NA\n");
    CHECK_THROWS_WITH_AS(build_sample_matrix(tree, 10, 0),
                         doctest::Contains("no informative paths"), Error);
}

TEST_CASE("Beta(9,1) column mean converges to the inverse-moment value") {
    // E(1/p) for Beta(9,1) is (9+1-1)/(9-1); with D = 45 the column mean
    // is 45 * 9/8 = 50.625.
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count\nZ,A,9,10,45\nZ,B,1,10,NA\n");
    auto run = build_sample_matrix(tree, 100000, 11);
    double acc = 0.0;
    for (const auto& row : run.matrix.values) acc += row[0];
    CHECK(test::rel_err(acc / run.matrix.rows(), 50.625) < 0.01);
}

TEST_CASE("min_variance_weights: inverse-variance weighting on independent columns") {
    auto m = matrix_from_logs({{-1, -2}, {1, -2}, {-1, 2}, {1, 2}}, {"B", "D"});
    auto w = min_variance_weights(m);  // column variances 4/3 and 16/3
    CHECK(w.weights[0] == doctest::Approx(0.8));
    CHECK(w.weights[1] == doctest::Approx(0.2));
    CHECK(w.weights[0] + w.weights[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("min_variance_weights: single column and duplicated columns") {
    auto single = matrix_from_logs({{1.0}, {2.0}}, {"B"});
    CHECK(min_variance_weights(single).weights == std::vector<double>{1.0});

    auto dup = matrix_from_logs({{1, 1}, {2, 2}, {3, 3}}, {"B", "D"});
    auto w = min_variance_weights(dup);  // rank-1 covariance; pseudo-inverse splits evenly
    CHECK(std::isfinite(w.weights[0]));
    CHECK(w.weights[0] == doctest::Approx(0.5));
    CHECK(w.weights[1] == doctest::Approx(0.5));
}

TEST_CASE("min_variance_weights: constant matrix falls back to uniform") {
    auto constant = matrix_from_logs({{1, 1}, {1, 1}}, {"B", "D"});
    auto w = min_variance_weights(constant);
    CHECK(w.uniform_fallback);
    CHECK(w.weights[0] == doctest::Approx(0.5));
}

TEST_CASE("weight permutation follows column permutation") {
    auto m = matrix_from_logs({{-1, -2}, {1, -2}, {-1, 2}, {1, 2}}, {"B", "D"});
    auto swapped = matrix_from_logs({{-2, -1}, {-2, 1}, {2, -1}, {2, 1}}, {"D", "B"});
    auto w1 = min_variance_weights(m);
    auto w2 = min_variance_weights(swapped);
    CHECK(w1.weights[0] == doctest::Approx(w2.weights[1]));
    CHECK(w1.weights[1] == doctest::Approx(w2.weights[0]));
}

TEST_CASE("wmm_estimate: deterministic single path") {
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count,Population\nZ,A,1,2,500,TRUE\n");
    for (auto type : {IntervalType::Percentile, IntervalType::Var, IntervalType::Cox}) {
        EstimateOptions options;
        options.samples = 50;
        options.interval = type;
        auto report = wmm_estimate(tree, options);
        CHECK(report.root_estimate == doctest::Approx(1000.0).epsilon(1e-12));
        CHECK(report.interval_lo == doctest::Approx(1000.0).epsilon(1e-9));
        CHECK(report.interval_hi == doctest::Approx(1000.0).epsilon(1e-9));
    }
}

TEST_CASE("wmm_estimate: example tree end to end") {
    EstimateOptions options;
    options.samples = 15;
    options.seed = 7;
    auto report = wmm_estimate(test::example_tree(), options);
    CHECK(report.root_estimate > 0.0);
    CHECK(report.log_estimates.size() == 15);
    REQUIRE(report.weights.weights.size() == 2);
    CHECK(report.weights.weights[0] + report.weights.weights[1] ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.per_leaf.count("B") == 1);
    CHECK(report.per_leaf.count("D") == 1);
    CHECK(report.per_leaf.at("B").samples.size() == 15);
    CHECK(report.per_edge.size() == 5);
    CHECK(report.root_estimate ==
          doctest::Approx(std::round(report.rounded_estimate)).epsilon(0.01));

    auto again = wmm_estimate(test::example_tree(), options);
    CHECK(again.root_estimate == report.root_estimate);  // reproducibility
    CHECK(again.log_estimates == report.log_estimates);
}

TEST_CASE("log-scale identity: exp(mean(Lw)) equals the weighted product form") {
    auto tree = test::tree_from_csv(
        "from,to,Estimate,Total,Count\nZ,A,9,10,45\nZ,B,1,10,12\n");  // unit row weights
    auto run = build_sample_matrix(tree, 500, 3);
    auto w = min_variance_weights(run.matrix);
    const std::size_t m = run.matrix.rows();
    double theta = 0.0;
    for (std::size_t i = 0; i < m; ++i) theta += combine_theta(run.matrix, w, i) / m;
    double product = 1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < run.matrix.cols(); ++j)
            product *= std::pow(run.matrix.values[i][j], w.weights[j] / m);
    CHECK(test::rel_err(std::exp(theta), product) < 1e-9);
}

TEST_CASE("scaling all rows scales the estimate") {
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count\nZ,A,9,10,45\nZ,B,1,10,12\n");
    auto run = build_sample_matrix(tree, 200, 5);
    auto scaled = run.matrix;
    const double c = 3.5;
    for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < scaled.cols(); ++j) {
            scaled.values[i][j] *= c;
            scaled.log_values[i][j] += std::log(c);
        }
    auto w1 = min_variance_weights(run.matrix);
    auto w2 = min_variance_weights(scaled);
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t i = 0; i < run.matrix.rows(); ++i) {
        t1 += combine_theta(run.matrix, w1, i);
        t2 += combine_theta(scaled, w2, i);
    }
    CHECK(std::exp(t2 / scaled.rows()) ==
          doctest::Approx(c * std::exp(t1 / run.matrix.rows())).epsilon(1e-9));
}

TEST_CASE("analytic_path_moments closed forms") {
    auto m1 = analytic_path_moments(33, {{4, 8}});
    CHECK(*m1.mean == doctest::Approx(121.0));
    CHECK(*m1.variance == doctest::Approx(5324.0));
    // quadrature oracle for the same moments
    CHECK(test::rel_err(*m1.mean, test::beta_inverse_moment(33, 4, 8, 1, 200000)) < 1e-3);
    double second = test::beta_inverse_moment(33, 4, 8, 2, 200000);
    CHECK(test::rel_err(*m1.variance, second - *m1.mean * *m1.mean) < 1e-2);

    auto m2 = analytic_path_moments(1, {{2, 1}});
    CHECK(*m2.mean == doctest::Approx(2.0));
    CHECK_FALSE(m2.variance.has_value());  // alpha = 2 boundary

    auto m3 = analytic_path_moments(64, {{9, 1}, {9, 1}});
    CHECK(*m3.mean == doctest::Approx(81.0));

    auto m4 = analytic_path_moments(10, {{1, 1}});
    CHECK_FALSE(m4.mean.has_value());
}

TEST_CASE("percentile quantiles interpolate order statistics") {
    std::vector<double> values = {2, 4, 8, 16, 32};
    CHECK(weighted_quantile(values, {}, 0.0) == doctest::Approx(2.0));
    CHECK(weighted_quantile(values, {}, 0.25) == doctest::Approx(4.0));
    CHECK(weighted_quantile(values, {}, 0.5) == doctest::Approx(8.0));
    CHECK(weighted_quantile(values, {}, 1.0) == doctest::Approx(32.0));
    CHECK(weighted_quantile(values, {}, 0.375) == doctest::Approx(6.0));  // halfway 4..8
    // monotone in the level
    double prev = -1.0;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
        double v = weighted_quantile(values, {}, q);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("confidence intervals on a constant sample degenerate") {
    auto m = matrix_from_logs({{std::log(1000.0)}, {std::log(1000.0)}}, {"B"});
    std::vector<double> theta(2, std::log(1000.0));
    for (auto type : {IntervalType::Percentile, IntervalType::Var, IntervalType::Cox}) {
        auto interval = confidence_interval(theta, m.row_weights, m, type);
        CHECK(interval.lo == doctest::Approx(1000.0).epsilon(1e-9));
        CHECK(interval.hi == doctest::Approx(1000.0).epsilon(1e-9));
    }
}

TEST_CASE("var interval uses the summed precision matrix") {
    // Columns (0,1,2,3) and (0,2,1,3): covariance [[5/3,4/3],[4/3,5/3]],
    // precision [[5/3,-4/3],[-4/3,5/3]], summed 2/3, so V = 3/2.
    auto m = matrix_from_logs({{0, 0}, {1, 2}, {2, 1}, {3, 3}}, {"B", "D"});
    std::vector<double> theta = {0.0, 1.5, 1.5, 3.0};
    auto interval = confidence_interval(theta, m.row_weights, m, IntervalType::Var);
    double theta_hat = 1.5;
    CHECK(interval.lo == doctest::Approx(std::exp(theta_hat - 2.0 * std::sqrt(1.5))));
    CHECK(interval.hi == doctest::Approx(std::exp(theta_hat + 2.0 * std::sqrt(1.5))));
}

TEST_CASE("cox interval matches the lognormal-mean formula") {
    std::vector<double> theta = {std::log(2.0), std::log(8.0)};
    auto m = matrix_from_logs({{theta[0]}, {theta[1]}}, {"B"});
    auto interval = confidence_interval(theta, m.row_weights, m, IntervalType::Cox);
    double mean = (theta[0] + theta[1]) / 2.0;
    double s2 = (std::pow(theta[0] - mean, 2) + std::pow(theta[1] - mean, 2)) / 1.0;
    double half = 1.96 * std::sqrt(s2 / 2.0 + s2 * s2 / 2.0);
    CHECK(interval.lo == doctest::Approx(std::exp(mean + s2 / 2.0 - half)));
    CHECK(interval.hi == doctest::Approx(std::exp(mean + s2 / 2.0 + half)));
    CHECK(interval.lo <= std::exp(mean + s2 / 2.0));
    CHECK(std::exp(mean + s2 / 2.0) <= interval.hi);
}

TEST_CASE("two_stage_estimate reduces to wmm_estimate with single sources") {
    EstimateOptions options;
    options.samples = 50;
    options.seed = 9;
    auto tree = test::example_tree();
    auto direct = wmm_estimate(tree, options);
    auto staged = two_stage_estimate(tree, {}, options);
    CHECK(staged.root_estimate == direct.root_estimate);
    CHECK(staged.log_estimates == direct.log_estimates);
    CHECK(staged.interval_lo == direct.interval_lo);
}

TEST_CASE("two_stage_estimate with two identical sources agrees with single-source") {
    auto tree = test::tree_from_csv("from,to,Estimate,Total,Count\nZ,A,9,10,45\nZ,B,1,10,12\n");
    EstimateOptions options;
    options.samples = 50000;
    options.seed = 13;
    AlternateSources alternates;
    alternates[{"Z", "A"}] = {{9, 10}};  // identical to the base source
    auto staged = two_stage_estimate(tree, alternates, options);
    auto direct = wmm_estimate(tree, options);
    CHECK(test::rel_err(staged.root_estimate, direct.root_estimate) < 0.01);
    double wsum = 0.0;
    for (double w : staged.weights.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two_stage_estimate enumerates the source product") {
    auto tree = test::tree_from_csv(
        "from,to,Estimate,Total,Count\nZ,A,9,10,45\nZ,B,1,10,12\n");
    EstimateOptions options;
    options.samples = 200;
    AlternateSources alternates;
    alternates[{"Z", "A"}] = {{8, 10}};
    alternates[{"Z", "B"}] = {{2, 10}};
    auto staged = two_stage_estimate(tree, alternates, options);
    CHECK(staged.weights.weights.size() == 4);  // 2 x 2 combinations
    double wsum = 0.0;
    for (double w : staged.weights.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_WITH_AS(two_stage_estimate(tree, alternates, options, 2),
                         doctest::Contains("cap"), Error);
}
