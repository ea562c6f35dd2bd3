#include "wmm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "wmm/error.hpp"

namespace wmm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

RealizationRng::RealizationRng(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t mixed = splitmix64(seed ^ splitmix64(index));
    std::seed_seq seq{static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(seed)};
    gen_.seed(seq);
}

double RealizationRng::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
}

double RealizationRng::gamma(double shape) {
    if (shape < 0.0) throw estimation_error("negative gamma shape");
    if (shape == 0.0) return 0.0;
    return std::gamma_distribution<double>(shape, 1.0)(gen_);
}

double RealizationRng::beta(double alpha, double beta) {
    if (alpha <= 0.0 || beta <= 0.0) throw estimation_error("nonpositive beta parameter");
    double x = gamma(alpha);
    double y = gamma(beta);
    return x / (x + y);
}

BranchEvidence evidence_of(const EdgeRecord& record) {
    if (record.population)
        return PopulationRatio{*record.estimate, *record.total};
    if (record.has_survey())
        return SurveyEvidence{*record.estimate, *record.total};
    return Uninformed{};
}

SiblingGroup sibling_group_of(const PopTree& tree, const std::string& parent) {
    SiblingGroup group;
    group.parent = parent;
    for (const auto& child : tree.children(parent))
        group.members.emplace_back(child, evidence_of(tree.edge(parent, child)));
    if (group.members.empty())
        throw validation_error("node " + parent + " has no children");
    return group;
}

SamplingPlan classify_sibling_group(const SiblingGroup& group) {
    SamplingPlan plan;
    plan.parent = group.parent;

    std::vector<std::pair<std::string, SurveyEvidence>> surveyed;
    std::size_t uninformed = 0;
    for (const auto& [label, ev] : group.members) {
        if (const auto* ratio = std::get_if<PopulationRatio>(&ev)) {
            plan.fixed.emplace_back(label, static_cast<double>(ratio->successes) /
                                               static_cast<double>(ratio->size));
        } else if (const auto* survey = std::get_if<SurveyEvidence>(&ev)) {
            surveyed.emplace_back(label, *survey);
        } else {
            ++uninformed;
        }
    }

    if (surveyed.empty()) {
        plan.regime = plan.fixed.empty() ? Regime::Empty : Regime::FixedRatios;
        return plan;
    }

    // A single survey source is inferred when all surveyed siblings share
    // one Total and estimates fit inside it.
    std::int64_t shared_total = surveyed.front().second.size;
    std::int64_t estimate_sum = 0;
    bool same_total = true;
    for (const auto& [label, survey] : surveyed) {
        same_total = same_total && survey.size == shared_total;
        estimate_sum += survey.successes;
    }

    if (same_total && estimate_sum <= shared_total) {
        plan.regime = Regime::SingleSurveyDirichlet;
        for (const auto& [label, survey] : surveyed)
            plan.concentrations.emplace_back(label, static_cast<double>(survey.successes));
        if (uninformed > 0 || estimate_sum < shared_total)
            plan.remainder = static_cast<double>(shared_total - estimate_sum);
        return plan;
    }

    if (uninformed > 0) {
        plan.regime = Regime::MultiSurveyRejection;
        for (const auto& [label, survey] : surveyed)
            plan.betas.push_back({label, static_cast<double>(survey.successes + 1),
                                  static_cast<double>(survey.size - survey.successes + 1)});
        return plan;
    }

    // Every member informed, surveys differ: importance sampling with the
    // last surveyed sibling as pivot.
    plan.regime = Regime::MultiSurveyImportance;
    for (std::size_t i = 0; i + 1 < surveyed.size(); ++i) {
        const auto& [label, survey] = surveyed[i];
        plan.betas.push_back({label, static_cast<double>(survey.successes + 1),
                              static_cast<double>(survey.size - survey.successes + 1)});
    }
    plan.pivot_label = surveyed.back().first;
    plan.pivot_survey = surveyed.back().second;
    return plan;
}

namespace {

double fixed_budget(const SamplingPlan& plan) {
    double budget = 1.0;
    for (const auto& [label, ratio] : plan.fixed) budget -= ratio;
    if (budget <= 0.0)
        throw estimation_error("group " + plan.parent +
                               ": fixed ratios leave no probability mass to sample");
    return budget;
}

} // namespace

GroupDraw sample_dirichlet_group(const SamplingPlan& plan, RealizationRng& rng) {
    if (plan.regime != Regime::SingleSurveyDirichlet)
        throw estimation_error("group " + plan.parent + ": not a Dirichlet plan");
    double budget = fixed_budget(plan);

    std::vector<double> raw(plan.concentrations.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < plan.concentrations.size(); ++i) {
        double conc = plan.concentrations[i].second;
        if (conc <= 0.0)
            throw estimation_error("group " + plan.parent + ": nonpositive concentration for " +
                                   plan.concentrations[i].first);
        raw[i] = rng.gamma(conc);
        sum += raw[i];
    }
    double remainder_draw = 0.0;
    if (plan.remainder) {
        remainder_draw = rng.gamma(*plan.remainder);
        sum += remainder_draw;
    }
    if (sum <= 0.0) throw estimation_error("group " + plan.parent + ": degenerate Dirichlet draw");

    GroupDraw draw;
    for (std::size_t i = 0; i < plan.concentrations.size(); ++i)
        draw.probabilities[plan.concentrations[i].first] = budget * raw[i] / sum;
    return draw;
}

GroupDraw sample_rejection_group(const SamplingPlan& plan, RealizationRng& rng,
                                 std::uint64_t max_attempts) {
    if (plan.regime != Regime::MultiSurveyRejection)
        throw estimation_error("group " + plan.parent + ": not a rejection plan");
    double budget = fixed_budget(plan);

    for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        GroupDraw draw;
        double sum = 0.0;
        for (const auto& member : plan.betas) {
            double p = rng.beta(member.alpha, member.beta);
            draw.probabilities[member.label] = p;
            sum += p;
        }
        if (sum < budget) return draw;  // all-or-none: redraw the whole tuple otherwise
    }
    throw estimation_error("group " + plan.parent + ": rejection sampler exhausted " +
                           std::to_string(max_attempts) +
                           " attempts (acceptance rate 0); evidence may be contradictory");
}

GroupDraw sample_importance_group(const SamplingPlan& plan, RealizationRng& rng,
                                  std::uint64_t max_attempts) {
    if (plan.regime != Regime::MultiSurveyImportance)
        throw estimation_error("group " + plan.parent + ": not an importance plan");
    double budget = fixed_budget(plan);

    for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        GroupDraw draw;
        double sum = 0.0;
        for (const auto& member : plan.betas) {
            double p = rng.beta(member.alpha, member.beta);
            draw.probabilities[member.label] = p;
            sum += p;
        }
        if (sum > budget) continue;

        double pivot = budget - sum;
        draw.probabilities[plan.pivot_label] = pivot;
        const auto& survey = *plan.pivot_survey;
        double e = static_cast<double>(survey.successes);
        double n = static_cast<double>(survey.size);
        if (e == 0.0 && n == 0.0) {
            draw.importance_weight = 1.0;  // pivot carries no evidence
        } else if (pivot <= 0.0) {
            draw.importance_weight = e == 0.0 ? std::exp((n - e) * std::log1p(-pivot)) : 0.0;
        } else if (pivot >= 1.0) {
            draw.importance_weight = (n - e) == 0.0 ? std::exp(e * std::log(pivot)) : 0.0;
        } else {
            draw.importance_weight = std::exp(e * std::log(pivot) + (n - e) * std::log1p(-pivot));
        }
        return draw;
    }
    throw estimation_error("group " + plan.parent + ": importance sampler exhausted " +
                           std::to_string(max_attempts) + " attempts");
}

GroupDraw sample_group(const SamplingPlan& plan, RealizationRng& rng,
                       std::uint64_t max_attempts) {
    switch (plan.regime) {
    case Regime::Empty:
    case Regime::FixedRatios:
        return GroupDraw{};
    case Regime::SingleSurveyDirichlet:
        return sample_dirichlet_group(plan, rng);
    case Regime::MultiSurveyRejection:
        return sample_rejection_group(plan, rng, max_attempts);
    case Regime::MultiSurveyImportance:
        return sample_importance_group(plan, rng, max_attempts);
    }
    throw estimation_error("unknown sampling regime");
}

Realization sample_realization(const PopTree& tree, const std::vector<SamplingPlan>& plans,
                               RealizationRng& rng, std::uint64_t max_attempts) {
    Realization result;
    for (const auto& plan : plans) {
        GroupDraw draw = sample_group(plan, rng, max_attempts);
        for (const auto& [label, p] : draw.probabilities)
            result.probabilities[{plan.parent, label}] = p;
        for (const auto& [label, ratio] : plan.fixed)
            result.probabilities[{plan.parent, label}] = ratio;
        result.weight *= draw.importance_weight;
    }
    return result;
}

std::vector<SamplingPlan> plan_informative_groups(const PopTree& tree) {
    std::set<std::string> parents_on_paths;
    for (const auto& leaf : tree.informative_leaves())
        for (const auto& e : path_to_leaf(tree, leaf).edges)
            parents_on_paths.insert(e.from);

    std::vector<SamplingPlan> plans;
    for (const auto& parent : tree.parents_breadth_first())
        if (parents_on_paths.count(parent))
            plans.push_back(classify_sibling_group(sibling_group_of(tree, parent)));
    return plans;
}

} // namespace wmm
