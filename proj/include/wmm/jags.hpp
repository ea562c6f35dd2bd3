#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "wmm/tree.hpp"

namespace wmm::jags {

enum class RootPrior { Lognormal, Uniform };

RootPrior root_prior_from_string(const std::string& name);

// Sibling tuples are named by concatenating the child labels in input
// order; member k is referenced as name[k], 1-based.
std::string sibling_tuple_name(const std::vector<std::string>& children);

struct JagsModelText {
    std::string preamble;
    std::string data_chunk;
    std::string model_chunk;
    std::string full_text;
};

// Emits the model script for the tree: a data chunk of branching
// parameter vectors and a model chunk with the root prior, Dirichlet or
// Beta branch priors, and the sequential-binomial decomposition of each
// sibling group. Output is byte-stable for a given tree.
JagsModelText generate_model(const PopTree& tree, RootPrior prior);

struct SymbolUse {
    std::string name;
    std::set<int> indices;  // empty when used unindexed
};

struct ParseSummary {
    std::vector<std::string> data_declared;         // lhs symbols of the data chunk
    std::vector<std::string> data_parameters;       // free rhs symbols in the data chunk
    std::map<std::string, SymbolUse> sampled;       // lhs of ~ statements
    std::map<std::string, SymbolUse> deterministic; // lhs of <- statements
    std::vector<std::pair<int, int>> loop_bounds;   // (lo, hi) per for loop
    std::set<std::string> referenced;               // every symbol read anywhere
};

// Recursive-descent parser for exactly the grammar the generator emits:
// comments, data/model blocks, deterministic and stochastic statements
// with dlnorm/dunif/ddirch/dbeta/dbinom, c/round/sum calls, for loops
// and 1-based indexing. Rejects anything else with line:column
// diagnostics.
ParseSummary parse_generated_model(const std::string& text);

} // namespace wmm::jags
