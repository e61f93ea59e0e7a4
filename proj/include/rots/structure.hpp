#ifndef ROTS_STRUCTURE_HPP
#define ROTS_STRUCTURE_HPP

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "rots/matrix.hpp"

namespace rots {

// One sentence after vocabulary filtering: surface forms, vectors, weights.
struct SentenceToken {
    std::string surface;
    std::vector<double> vector;
    double weight = 1.0;
};

struct WeightedSentence {
    std::vector<SentenceToken> tokens;
    int dropped = 0; // out-of-vocabulary tokens removed upstream

    std::size_t size() const { return tokens.size(); }

    std::vector<double> weights() const {
        std::vector<double> w(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i) w[i] = tokens[i].weight;
        return w;
    }

    // nBOW weights summing to 1
    std::vector<double> normalized_weights() const {
        std::vector<double> w = weights();
        double total = 0.0;
        for (double x : w) total += x;
        if (total <= 0.0) throw std::runtime_error("WeightedSentence: nonpositive weight total");
        for (double& x : w) x /= total;
        return w;
    }

    std::vector<std::vector<double>> vectors() const {
        std::vector<std::vector<double>> v(tokens.size());
        for (std::size_t i = 0; i < tokens.size(); ++i) v[i] = tokens[i].vector;
        return v;
    }

    // d = sum_i w_i v_i
    std::vector<double> weighted_average() const {
        if (tokens.empty()) throw std::runtime_error("WeightedSentence: empty sentence");
        std::vector<double> d(tokens.front().vector.size(), 0.0);
        for (const auto& t : tokens) add_scaled(d, t.vector, t.weight);
        return d;
    }
};

// Rooted tree whose nodes own word-index sets; a node's set is the disjoint
// union of its children's sets and leaves hold exactly one index.
struct TreeNode {
    int id = -1;
    int parent = -1;
    std::vector<int> children;
    std::vector<int> indices; // sorted word indices under this node
};

struct StructureTree {
    std::vector<TreeNode> nodes;
    int root = -1;
    int word_count = 0;

    const TreeNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }

    bool is_leaf(int id) const { return node(id).children.empty(); }

    int height() const {
        // longest root-to-leaf path, in edges
        int best = 0;
        std::vector<std::pair<int, int>> stack{{root, 0}};
        while (!stack.empty()) {
            auto [id, depth] = stack.back();
            stack.pop_back();
            best = std::max(best, depth);
            for (int c : node(id).children) stack.emplace_back(c, depth + 1);
        }
        return best;
    }
};

// Disjoint word-index groups covering the sentence at one tree level, with
// the aggregated substructure weights and vectors once filled in.
struct LevelPartition {
    int level = 0;
    std::vector<std::vector<int>> groups;
    std::vector<double> weights;               // w~_j = sum of member weights
    std::vector<std::vector<double>> vectors;  // v~_j = weighted average of members
};

namespace detail {

inline int add_node(StructureTree& tree, int parent, std::vector<int> indices) {
    TreeNode n;
    n.id = static_cast<int>(tree.nodes.size());
    n.parent = parent;
    n.indices = std::move(indices);
    tree.nodes.push_back(std::move(n));
    return tree.nodes.back().id;
}

inline void split_binary(StructureTree& tree, int id) {
    const auto& indices = tree.node(id).indices;
    const int k = static_cast<int>(indices.size());
    if (k <= 1) return;
    const int left_size = (k + 1) / 2; // left half takes the ceiling
    std::vector<int> left(indices.begin(), indices.begin() + left_size);
    std::vector<int> right(indices.begin() + left_size, indices.end());
    const int l = add_node(tree, id, std::move(left));
    tree.nodes[id].children.push_back(l);
    split_binary(tree, l);
    const int r = add_node(tree, id, std::move(right));
    tree.nodes[id].children.push_back(r);
    split_binary(tree, r);
}

} // namespace detail

// Positional binary tree: each node splits its word span into two halves.
inline StructureTree build_binary_tree(int n) {
    if (n < 1) throw std::invalid_argument("build_binary_tree: n must be positive");
    StructureTree tree;
    tree.word_count = n;
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    tree.root = detail::add_node(tree, -1, std::move(all));
    detail::split_binary(tree, tree.root);
    return tree;
}

// Builds a tree from head indices (heads[i] = head of word i, -1 for the
// root). A word node owns its whole dependency subtree; when it is expanded
// one level down, the head word itself becomes a singleton child next to its
// dependents' subtrees, so every level remains an exact partition.
inline StructureTree ingest_dependency_tree(const std::vector<std::string>& tokens,
                                            const std::vector<int>& heads) {
    const int n = static_cast<int>(heads.size());
    if (n == 0) throw std::invalid_argument("ingest_dependency_tree: empty sentence");
    if (!tokens.empty() && static_cast<int>(tokens.size()) != n)
        throw std::invalid_argument("ingest_dependency_tree: tokens/heads length mismatch");

    int root_word = -1;
    std::vector<std::vector<int>> dependents(n);
    for (int i = 0; i < n; ++i) {
        if (heads[i] == -1) {
            if (root_word != -1) throw std::runtime_error("ingest_dependency_tree: multiple roots");
            root_word = i;
        } else if (heads[i] < 0 || heads[i] >= n) {
            throw std::runtime_error("ingest_dependency_tree: head index out of range");
        } else {
            dependents[heads[i]].push_back(i);
        }
    }
    if (root_word == -1) throw std::runtime_error("ingest_dependency_tree: no root");

    // cycle check: every word must reach the root
    for (int i = 0; i < n; ++i) {
        int cur = i, steps = 0;
        while (cur != -1) {
            cur = heads[cur];
            if (++steps > n) throw std::runtime_error("ingest_dependency_tree: cycle detected");
        }
    }

    // subtree word sets, computed bottom-up over the dependency arcs
    std::vector<std::vector<int>> subtree(n);
    {
        std::vector<int> order;
        std::vector<int> stack{root_word};
        while (!stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            order.push_back(w);
            for (int d : dependents[w]) stack.push_back(d);
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int w = *it;
            subtree[w].push_back(w);
            for (int d : dependents[w])
                subtree[w].insert(subtree[w].end(), subtree[d].begin(), subtree[d].end());
            std::sort(subtree[w].begin(), subtree[w].end());
        }
    }

    StructureTree tree;
    tree.word_count = n;

    // expand word w into a tree node; children ordered by minimum word index
    struct Pending {
        int word;
        int node_id;
    };
    tree.root = detail::add_node(tree, -1, subtree[root_word]);
    std::vector<Pending> queue{{root_word, tree.root}};
    while (!queue.empty()) {
        auto [w, id] = queue.back();
        queue.pop_back();
        if (dependents[w].empty()) continue; // singleton leaf

        struct Child {
            int word;       // -1 for the head singleton
            std::vector<int> indices;
        };
        std::vector<Child> children;
        children.push_back({-1, {w}});
        for (int d : dependents[w]) children.push_back({d, subtree[d]});
        std::sort(children.begin(), children.end(),
                  [](const Child& a, const Child& b) { return a.indices.front() < b.indices.front(); });

        for (auto& c : children) {
            const int cid = detail::add_node(tree, id, std::move(c.indices));
            tree.nodes[id].children.push_back(cid);
            if (c.word != -1) queue.push_back({c.word, cid});
        }
    }
    return tree;
}

// Groups at depth k plus singleton carry-downs for leaves above depth k,
// ordered by minimum word index. Beyond the tree height everything is a
// singleton, which reduces the level to plain word-to-word transport.
inline LevelPartition level_partition(const StructureTree& tree, int level) {
    if (level < 1) throw std::invalid_argument("level_partition: level must be positive");
    LevelPartition part;
    part.level = level;
    std::vector<std::pair<int, int>> stack{{tree.root, 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const TreeNode& node = tree.node(id);
        if (depth == level || (depth < level && node.children.empty())) {
            part.groups.push_back(node.indices);
        } else if (depth < level) {
            for (int c : node.children) stack.emplace_back(c, depth + 1);
        }
    }
    std::sort(part.groups.begin(), part.groups.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });
    return part;
}

// Fills w~ and v~ for the given groups: w~_j = sum of member weights,
// v~_j = member weighted average.
inline LevelPartition aggregate_substructures(const WeightedSentence& sentence,
                                              const std::vector<std::vector<int>>& groups,
                                              int level = 0) {
    const int n = static_cast<int>(sentence.size());
    std::vector<char> seen(n, 0);
    for (const auto& g : groups)
        for (int i : g) {
            if (i < 0 || i >= n || seen[i])
                throw std::invalid_argument("aggregate_substructures: groups do not partition the sentence");
            seen[i] = 1;
        }
    for (char s : seen)
        if (!s) throw std::invalid_argument("aggregate_substructures: groups do not cover all tokens");

    LevelPartition part;
    part.level = level;
    part.groups = groups;
    const std::size_t dim = sentence.tokens.front().vector.size();
    for (const auto& g : groups) {
        double w = 0.0;
        std::vector<double> v(dim, 0.0);
        for (int i : g) {
            w += sentence.tokens[i].weight;
            add_scaled(v, sentence.tokens[i].vector, sentence.tokens[i].weight);
        }
        if (w <= 0.0) throw std::runtime_error("aggregate_substructures: zero-weight substructure");
        for (double& x : v) x /= w;
        part.weights.push_back(w);
        part.vectors.push_back(std::move(v));
    }
    return part;
}

} // namespace rots

#endif // ROTS_STRUCTURE_HPP
