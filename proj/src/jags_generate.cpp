#include <cctype>
#include <sstream>

#include "wmm/error.hpp"
#include "wmm/jags.hpp"

namespace wmm::jags {

RootPrior root_prior_from_string(const std::string& name) {
    if (name == "lognormal") return RootPrior::Lognormal;
    if (name == "uniform") return RootPrior::Uniform;
    throw validation_error("unknown root prior: " + name + " (expected lognormal or uniform)");
}

std::string sibling_tuple_name(const std::vector<std::string>& children) {
    if (children.empty()) throw validation_error("empty sibling group");
    std::string name;
    for (const auto& c : children) name += c;
    return name;
}

namespace {

bool valid_identifier(const std::string& label) {
    if (label.empty() || !std::isalpha(static_cast<unsigned char>(label.front()))) return false;
    for (char c : label)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.') return false;
    return true;
}

// Reference to a node inside the model: the root by its own label, any
// other node as a member of its sibling tuple.
std::string node_reference(const PopTree& tree, const std::string& node) {
    if (node == tree.root()) return node;
    for (const auto& e : tree.edges()) {
        if (e.to != node) continue;
        const auto& siblings = tree.children(e.from);
        for (std::size_t i = 0; i < siblings.size(); ++i)
            if (siblings[i] == node)
                return sibling_tuple_name(siblings) + "[" + std::to_string(i + 1) + "]";
    }
    throw validation_error("node " + node + " not found");
}

} // namespace

JagsModelText generate_model(const PopTree& tree, RootPrior prior) {
    for (const auto& label : tree.nodes())
        if (!valid_identifier(label))
            throw validation_error("node label '" + label +
                                   "' is not a valid identifier (letter then letters/digits/periods)");

    auto parents = tree.parents_breadth_first();
    for (const auto& parent : parents)
        if (tree.children(parent).size() < 2)
            throw validation_error("node " + parent +
                                   " has a single child; no branching distribution is defined");

    JagsModelText text;
    text.preamble =
        "# This JAGS model was created using 'makeJAGStree' in the 'JAGStree' package in R.\n"
        "# The root may have lognormal or discretized uniform prior.\n"
        "# Branching and leaf prior distributions are assumed Dirichlet and Multinomial, \n"
        "# respectively. \n";

    std::ostringstream data;
    data << "data { \n";
    for (const auto& parent : parents) {
        const auto& kids = tree.children(parent);
        data << "\tp" << parent << ".params <- c(";
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (i > 0) data << ", ";
            data << "p" << parent << i + 1;
        }
        data << "); \n";
    }
    data << "} \n";
    text.data_chunk = data.str();

    std::ostringstream model;
    model << "model { \n";
    if (prior == RootPrior::Lognormal)
        model << "\t" << tree.root() << ".cont ~ dlnorm(mu, tau); \n";
    else
        model << "\t" << tree.root() << ".cont ~ dunif(Lz, Uz); \n";
    model << "\t" << tree.root() << " <- round(" << tree.root() << ".cont); \n";

    for (const auto& parent : parents) {
        const auto& kids = tree.children(parent);
        const std::size_t n = kids.size();
        const std::string tuple = sibling_tuple_name(kids);
        const std::string ref = node_reference(tree, parent);
        const std::string p = "p" + parent;

        if (n == 2) {
            model << "\t" << p << " ~ dbeta(" << p << ".params[1], " << p << ".params[2]); \n";
            model << "\t" << tuple << "[1] ~ dbinom(" << p << ", " << ref << "); \n";
            model << "\t" << tuple << "[2] <- " << ref << " - " << tuple << "[1]; \n";
        } else {
            model << "\t" << p << " ~ ddirch(" << p << ".params); \n";
            model << "\t" << parent << ".bin[1] <- " << ref << "; \n";
            model << "\t" << p << ".bin[1] <- " << p << "[1]; \n";
            model << "\tfor (i in 2:" << n << "){ \n";
            model << "\t\t" << parent << ".bin[i] <- " << parent << ".bin[i-1] - " << tuple
                  << "[i-1] \n";
            model << "\t\t" << p << ".bin[i] <- " << p << "[i]/(sum(" << p << "[i:" << n
                  << "])) \n";
            model << "\t} \n";
            model << "\tfor (i in 1:" << n - 1 << "){ \n";
            model << "\t\t" << tuple << "[i] ~ dbinom(" << p << ".bin[i], " << parent
                  << ".bin[i]) \n";
            model << "\t} \n";
            model << "\t" << tuple << "[" << n << "] <- " << parent << ".bin[1] - sum(" << tuple
                  << "[1:" << n - 1 << "]); \n";
        }
        model << "\t\n";
    }
    model << "} \n";
    text.model_chunk = model.str();

    text.full_text = text.preamble + "\t\n" + text.data_chunk + "\t\n" + text.model_chunk;
    return text;
}

} // namespace wmm::jags
