#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "wmm/tree.hpp"

namespace wmm {

struct SurveyEvidence {
    std::int64_t successes;  // a
    std::int64_t size;       // N
};
struct PopulationRatio {
    std::int64_t successes;
    std::int64_t size;
};
struct Uninformed {};
using BranchEvidence = std::variant<SurveyEvidence, PopulationRatio, Uninformed>;

BranchEvidence evidence_of(const EdgeRecord& record);

// All children of one parent with their branch evidence, in input order.
struct SiblingGroup {
    std::string parent;
    std::vector<std::pair<std::string, BranchEvidence>> members;
};

SiblingGroup sibling_group_of(const PopTree& tree, const std::string& parent);

enum class Regime {
    Empty,                  // no member is informed
    FixedRatios,            // only population-level ratios
    SingleSurveyDirichlet,
    MultiSurveyRejection,
    MultiSurveyImportance,
};

struct BetaParam {
    std::string label;
    double alpha;
    double beta;
};

// Resolved sampling regime for one sibling group. Population-ratio
// members are always fixed; the regime describes the surveyed remainder.
struct SamplingPlan {
    std::string parent;
    Regime regime = Regime::Empty;
    std::vector<std::pair<std::string, double>> fixed;   // label -> exact ratio

    // SingleSurveyDirichlet: concentrations in member order, plus an
    // optional trailing remainder component that is drawn but not returned.
    std::vector<std::pair<std::string, double>> concentrations;
    std::optional<double> remainder;

    // MultiSurveyRejection / MultiSurveyImportance: flat-prior posterior
    // Beta(a+1, N-a+1) per informed member. The importance pivot is the
    // last informed member; it is set deterministically and its survey
    // feeds the importance weight.
    std::vector<BetaParam> betas;
    std::optional<SurveyEvidence> pivot_survey;
    std::string pivot_label;
};

// One joint draw of branch probabilities for a sibling group.
struct GroupDraw {
    std::map<std::string, double> probabilities;
    double importance_weight = 1.0;
};

// Deterministic per-realization random stream: identical (seed, index)
// yields an identical draw sequence regardless of which realizations run
// where.
class RealizationRng {
public:
    RealizationRng(std::uint64_t seed, std::uint64_t index);

    double uniform();
    double gamma(double shape);
    double beta(double alpha, double beta);

private:
    std::mt19937_64 gen_;
};

SamplingPlan classify_sibling_group(const SiblingGroup& group);

GroupDraw sample_dirichlet_group(const SamplingPlan& plan, RealizationRng& rng);
GroupDraw sample_rejection_group(const SamplingPlan& plan, RealizationRng& rng,
                                 std::uint64_t max_attempts);
GroupDraw sample_importance_group(const SamplingPlan& plan, RealizationRng& rng,
                                  std::uint64_t max_attempts);
GroupDraw sample_group(const SamplingPlan& plan, RealizationRng& rng,
                       std::uint64_t max_attempts);

using EdgeKey = std::pair<std::string, std::string>;

struct Realization {
    std::map<EdgeKey, double> probabilities;
    double weight = 1.0;  // product of group importance weights
};

// One joint realization across all planned sibling groups, in
// breadth-first parent order.
Realization sample_realization(const PopTree& tree,
                               const std::vector<SamplingPlan>& plans,
                               RealizationRng& rng,
                               std::uint64_t max_attempts = 1000000);

// Plans for every sibling group that contains an informative-path edge,
// in breadth-first parent order.
std::vector<SamplingPlan> plan_informative_groups(const PopTree& tree);

} // namespace wmm
