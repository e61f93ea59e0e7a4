#ifndef ROTS_SIMILARITY_HPP
#define ROTS_SIMILARITY_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rots/matrix.hpp"
#include "rots/structure.hpp"
#include "rots/transport.hpp"
#include "rots/weighting.hpp"

namespace rots {

enum class Method { wmd, cos_wawv, rot, rots };

inline Method parse_method(const std::string& name) {
    if (name == "wmd") return Method::wmd;
    if (name == "cos" || name == "cos_wawv") return Method::cos_wawv;
    if (name == "rot") return Method::rot;
    if (name == "rots") return Method::rots;
    throw std::invalid_argument("unknown method: " + name);
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::wmd: return "wmd";
        case Method::cos_wawv: return "cos_wawv";
        case Method::rot: return "rot";
        case Method::rots: return "rots";
    }
    return "?";
}

struct SimilarityConfig {
    int depth = 5;
    double gamma = 10.0;
    SinkhornOptions sinkhorn;
    int level_size_cap = 64;   // partitions larger than this are coarsened
    int exact_size_limit = 64; // cap for the exact solver (level 1 and WMD)
    // marginals: modified a/b weights instead of raw substructure weights;
    // unset picks the method default (on for rots, off for rot)
    std::optional<bool> use_modified_weights;
};

struct LevelDiagnostics {
    int level = 0;
    Matrix plan;
    std::vector<double> marginals1, marginals2;
    double coefficient = 1.0; // C^(k); 1 for distance methods
    double value = 0.0;       // level transport cost, or C^(k) * plan-weighted similarity
};

struct SimilarityReport {
    Method method = Method::cos_wawv;
    double score = 0.0;
    std::vector<LevelDiagnostics> levels;
};

inline double cos_wawv(const WeightedSentence& s1, const WeightedSentence& s2) {
    const auto d1 = s1.weighted_average();
    const auto d2 = s2.weighted_average();
    if (norm(d1) == 0.0 || norm(d2) == 0.0)
        throw std::runtime_error("cos_wawv: degenerate sentence vector");
    return cosine_similarity(d1, d2);
}

// C * sum_ij a_i b_j Sim(v_i, v_j): the cosine of weighted averages written
// as a transportation process over the rank-one plan a b^T.
inline double induced_plan_similarity(const WeightedSentence& s1, const WeightedSentence& s2) {
    const auto v1 = s1.vectors();
    const auto v2 = s2.vectors();
    const auto w1 = s1.normalized_weights();
    const auto w2 = s2.normalized_weights();
    const auto a = modified_weights(w1, v1);
    const auto b = modified_weights(w2, v2);
    const double coeff = comprehensive_coefficient(w1, v1, w2, v2);
    double sim = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) {
        if (a.values[i] == 0.0) continue;
        for (std::size_t j = 0; j < v2.size(); ++j)
            sim += a.values[i] * b.values[j] * cosine_similarity(v1[i], v2[j]);
    }
    return coeff * sim;
}

inline TransportPlan wmd_plan(const WeightedSentence& s1, const WeightedSentence& s2,
                              int exact_size_limit = 64) {
    const auto cost = cosine_cost(s1.vectors(), s2.vectors());
    return solve_exact_ot(cost, s1.normalized_weights(), s2.normalized_weights(), exact_size_limit);
}

inline double wmd(const WeightedSentence& s1, const WeightedSentence& s2,
                  int exact_size_limit = 64) {
    const auto cost = cosine_cost(s1.vectors(), s2.vectors());
    const auto plan = solve_exact_ot(cost, s1.normalized_weights(), s2.normalized_weights(),
                                     exact_size_limit);
    return transport_objective(plan, cost);
}

namespace detail {

// One level of the nested partition sequence used by the recursion. Elements
// are unions of tree nodes so that coarsening keeps the refinement property:
// every element is contained in exactly one element of the previous level.
struct ChainLevel {
    std::vector<std::vector<int>> groups; // word indices, ordered by min index
    std::vector<int> parent;              // element index at the previous level
};

inline std::vector<ChainLevel> build_level_chain(const StructureTree& tree,
                                                 const WeightedSentence& sentence, int depth,
                                                 int cap) {
    struct Element {
        std::vector<int> node_ids;
        std::vector<int> indices;
        double weight;
        int parent;
    };

    auto element_weight = [&](const std::vector<int>& indices) {
        double w = 0.0;
        for (int i : indices) w += sentence.tokens[i].weight;
        return w;
    };

    std::vector<Element> current;
    current.push_back({{tree.root}, tree.node(tree.root).indices,
                       element_weight(tree.node(tree.root).indices), -1});

    std::vector<ChainLevel> chain;
    for (int level = 1; level <= depth; ++level) {
        std::vector<Element> next;
        for (std::size_t e = 0; e < current.size(); ++e) {
            for (int id : current[e].node_ids) {
                const TreeNode& node = tree.node(id);
                if (node.children.empty()) {
                    next.push_back({{id}, node.indices, element_weight(node.indices),
                                    static_cast<int>(e)});
                } else {
                    for (int child : node.children) {
                        const TreeNode& cn = tree.node(child);
                        next.push_back({{child}, cn.indices, element_weight(cn.indices),
                                        static_cast<int>(e)});
                    }
                }
            }
        }
        std::sort(next.begin(), next.end(), [](const Element& a, const Element& b) {
            return a.indices.front() < b.indices.front();
        });

        // coarsen oversized partitions, merging siblings only
        while (static_cast<int>(next.size()) > cap) {
            int best_i = -1, best_j = -1;
            double best_weight = 0.0;
            for (std::size_t i = 0; i + 1 < next.size(); ++i) { // adjacent pairs first
                if (next[i].parent != next[i + 1].parent) continue;
                const double w = next[i].weight + next[i + 1].weight;
                if (best_i < 0 || w < best_weight) {
                    best_i = static_cast<int>(i);
                    best_j = static_cast<int>(i + 1);
                    best_weight = w;
                }
            }
            if (best_i < 0) { // siblings exist by pigeonhole, just not adjacent
                for (std::size_t i = 0; i < next.size(); ++i)
                    for (std::size_t j = i + 1; j < next.size(); ++j) {
                        if (next[i].parent != next[j].parent) continue;
                        const double w = next[i].weight + next[j].weight;
                        if (best_i < 0 || w < best_weight) {
                            best_i = static_cast<int>(i);
                            best_j = static_cast<int>(j);
                            best_weight = w;
                        }
                    }
            }
            if (best_i < 0)
                throw std::logic_error("build_level_chain: cannot coarsen below cap");
            Element& lhs = next[best_i];
            Element& rhs = next[best_j];
            lhs.node_ids.insert(lhs.node_ids.end(), rhs.node_ids.begin(), rhs.node_ids.end());
            std::vector<int> merged;
            std::merge(lhs.indices.begin(), lhs.indices.end(), rhs.indices.begin(),
                       rhs.indices.end(), std::back_inserter(merged));
            lhs.indices = std::move(merged);
            lhs.weight += rhs.weight;
            next.erase(next.begin() + best_j);
        }

        ChainLevel out;
        for (const auto& e : next) {
            out.groups.push_back(e.indices);
            out.parent.push_back(e.parent);
        }
        chain.push_back(std::move(out));
        current = std::move(next);
    }
    return chain;
}

inline WeightedSentence with_normalized_weights(const WeightedSentence& s) {
    WeightedSentence out = s;
    const auto w = s.normalized_weights();
    for (std::size_t i = 0; i < out.tokens.size(); ++i) out.tokens[i].weight = w[i];
    return out;
}

// Shared ROT / ROTS recursion (Algorithm 1 shape): exact transport at level
// one, then top-down KOT steps whose priors are split from the previous plan.
inline SimilarityReport recursive_transport(const WeightedSentence& s1,
                                            const WeightedSentence& s2,
                                            const StructureTree& tree1,
                                            const StructureTree& tree2,
                                            const SimilarityConfig& config, Method method) {
    if (config.depth < 1) throw std::invalid_argument("recursive_transport: depth must be >= 1");
    if (tree1.word_count != static_cast<int>(s1.size()) ||
        tree2.word_count != static_cast<int>(s2.size()))
        throw std::invalid_argument("recursive_transport: tree does not match sentence");

    const bool similarity_mode = method == Method::rots;
    const bool modified = config.use_modified_weights.value_or(similarity_mode);

    const WeightedSentence n1 = with_normalized_weights(s1);
    const WeightedSentence n2 = with_normalized_weights(s2);
    const auto chain1 = build_level_chain(tree1, n1, config.depth, config.level_size_cap);
    const auto chain2 = build_level_chain(tree2, n2, config.depth, config.level_size_cap);

    SimilarityReport report;
    report.method = method;

    TransportPlan previous;
    std::vector<std::vector<int>> prev_groups1, prev_groups2;
    double total = 0.0;

    for (int level = 1; level <= config.depth; ++level) {
        const auto agg1 = aggregate_substructures(n1, chain1[level - 1].groups, level);
        const auto agg2 = aggregate_substructures(n2, chain2[level - 1].groups, level);

        std::vector<double> m1 = agg1.weights, m2 = agg2.weights;
        if (modified) {
            m1 = modified_weights(agg1.weights, agg1.vectors).values;
            m2 = modified_weights(agg2.weights, agg2.vectors).values;
        }

        const Matrix cost = cosine_cost(agg1.vectors, agg2.vectors);
        TransportPlan plan;
        if (level == 1) {
            plan = solve_exact_ot(cost, m1, m2, config.exact_size_limit);
        } else {
            const Matrix prior = split_prior(previous, prev_groups1, prev_groups2,
                                             agg1.groups, agg2.groups, m1, m2);
            plan = solve_kot(cost, m1, m2, prior, config.gamma, config.sinkhorn);
        }

        LevelDiagnostics diag;
        diag.level = level;
        diag.marginals1 = m1;
        diag.marginals2 = m2;
        if (similarity_mode) {
            diag.coefficient = comprehensive_coefficient(agg1.weights, agg1.vectors,
                                                         agg2.weights, agg2.vectors);
            double sim = 0.0;
            for (int i = 0; i < cost.rows; ++i)
                for (int j = 0; j < cost.cols; ++j)
                    sim += plan.gamma(i, j) * (1.0 - cost(i, j));
            diag.value = diag.coefficient * sim;
        } else {
            diag.value = transport_objective(plan, cost);
        }
        total += diag.value;

        prev_groups1 = agg1.groups;
        prev_groups2 = agg2.groups;
        previous = plan; // next level splits this plan
        diag.plan = std::move(plan.gamma);
        report.levels.push_back(std::move(diag));
    }

    report.score = total / config.depth;
    return report;
}

} // namespace detail

// Depth-averaged transport cost down the tree hierarchy.
inline double rot_distance(const WeightedSentence& s1, const WeightedSentence& s2,
                           const StructureTree& tree1, const StructureTree& tree2,
                           const SimilarityConfig& config = {}) {
    return detail::recursive_transport(s1, s2, tree1, tree2, config, Method::rot).score;
}

// Depth-averaged C^(k)-scaled plan similarity with modified weights.
inline double rots_similarity(const WeightedSentence& s1, const WeightedSentence& s2,
                              const StructureTree& tree1, const StructureTree& tree2,
                              const SimilarityConfig& config = {}) {
    return detail::recursive_transport(s1, s2, tree1, tree2, config, Method::rots).score;
}

inline SimilarityReport similarity_report(const WeightedSentence& s1, const WeightedSentence& s2,
                                          const StructureTree& tree1, const StructureTree& tree2,
                                          const SimilarityConfig& config, Method method) {
    switch (method) {
        case Method::cos_wawv: {
            SimilarityReport report;
            report.method = method;
            report.score = cos_wawv(s1, s2);
            return report;
        }
        case Method::wmd: {
            SimilarityReport report;
            report.method = method;
            const auto cost = cosine_cost(s1.vectors(), s2.vectors());
            auto plan = solve_exact_ot(cost, s1.normalized_weights(), s2.normalized_weights(),
                                       config.exact_size_limit);
            report.score = transport_objective(plan, cost);
            LevelDiagnostics diag;
            diag.level = 1;
            diag.marginals1 = plan.row_marginals;
            diag.marginals2 = plan.col_marginals;
            diag.value = report.score;
            diag.plan = std::move(plan.gamma);
            report.levels.push_back(std::move(diag));
            return report;
        }
        case Method::rot:
        case Method::rots:
            return detail::recursive_transport(s1, s2, tree1, tree2, config, method);
    }
    throw std::logic_error("similarity_report: unreachable");
}

} // namespace rots

#endif // ROTS_SIMILARITY_HPP
