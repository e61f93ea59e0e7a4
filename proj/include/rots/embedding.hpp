#ifndef ROTS_EMBEDDING_HPP
#define ROTS_EMBEDDING_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rots/matrix.hpp"

namespace rots {

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Vocabulary -> dense vector map. Rows are kept in insertion order so that
// whole-table passes (principal component removal) are reproducible.
struct EmbeddingTable {
    int dim = 0;
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> vectors;
    std::unordered_map<std::string, std::size_t> index;

    // ingestion tallies
    int rejected_lines = 0;
    int duplicate_tokens = 0;

    bool lowercase_lookup = true;

    std::size_t size() const { return tokens.size(); }

    void insert(const std::string& token, std::vector<double> vec) {
        auto it = index.find(token);
        if (it != index.end()) {
            vectors[it->second] = std::move(vec); // last occurrence wins
            ++duplicate_tokens;
        } else {
            index.emplace(token, tokens.size());
            tokens.push_back(token);
            vectors.push_back(std::move(vec));
        }
    }
};

// Returns the vector for `token`, or nullptr when absent. The query is
// lowercased first unless the table disables normalized lookup.
inline const std::vector<double>* lookup(const EmbeddingTable& table, const std::string& token) {
    const std::string key = table.lowercase_lookup ? to_lower(token) : token;
    auto it = table.index.find(key);
    if (it == table.index.end()) return nullptr;
    return &table.vectors[it->second];
}

// Parses GloVe-style text: one `token v1 v2 ... vd` per line. Lines whose
// arity or numeric content is off are rejected and tallied; with an explicit
// expected_dim a mismatch is a hard error naming the line.
inline EmbeddingTable load_embeddings(std::istream& source,
                                      std::optional<int> expected_dim = std::nullopt,
                                      bool lowercase_lookup = true) {
    EmbeddingTable table;
    table.lowercase_lookup = lowercase_lookup;
    if (expected_dim) {
        if (*expected_dim <= 0) throw std::invalid_argument("load_embeddings: expected_dim must be positive");
        table.dim = *expected_dim;
    }

    std::string line;
    long line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) continue;

        std::vector<double> vec;
        double x;
        bool numeric_ok = true;
        while (ls >> x) vec.push_back(x);
        if (!ls.eof()) numeric_ok = false; // trailing junk that failed to parse

        if (expected_dim) {
            if (!numeric_ok || static_cast<int>(vec.size()) != *expected_dim)
                throw std::runtime_error("load_embeddings: dimension mismatch at line " +
                                         std::to_string(line_no));
        } else if (table.dim == 0) {
            if (!numeric_ok || vec.empty()) {
                ++table.rejected_lines;
                continue;
            }
            table.dim = static_cast<int>(vec.size());
        } else if (!numeric_ok || static_cast<int>(vec.size()) != table.dim) {
            ++table.rejected_lines;
            continue;
        }
        table.insert(token, std::move(vec));
    }

    if (table.size() == 0) throw std::runtime_error("load_embeddings: no vectors");
    return table;
}

// Corpus unigram counts backing the SIF/uSIF weight schemes.
struct FrequencyTable {
    std::unordered_map<std::string, long long> counts;
    long long total = 0;

    double probability(const std::string& token) const {
        if (total == 0) throw std::runtime_error("probability: empty frequency table");
        auto it = counts.find(token);
        if (it == counts.end()) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total);
    }
};

// Parses `token count` per line; counts accumulate over repeated tokens.
inline FrequencyTable load_frequencies(std::istream& source) {
    FrequencyTable table;
    std::string line;
    long line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        long long count = 0;
        if (!(ls >> token >> count) || count < 0)
            throw std::runtime_error("load_frequencies: bad count at line " + std::to_string(line_no));
        table.counts[token] += count;
        table.total += count;
    }
    return table;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Fine at embedding
// dimensionality (the covariance here is dim x dim, dim <= a few hundred).
inline void jacobi_eigen_symmetric(std::vector<std::vector<double>> a,
                                   std::vector<double>& eigenvalues,
                                   std::vector<std::vector<double>>& eigenvectors) {
    const int n = static_cast<int>(a.size());
    eigenvectors.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;

    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0) scale = 1.0;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (std::sqrt(off) < 1e-14 * scale * n) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

} // namespace detail

// Common-component removal: center the vocabulary matrix, take the top-m
// principal directions of the centered data, and return the centered
// residuals with their projections onto those directions removed. m = 0 is
// the identity. Directions whose variance is numerically zero are skipped,
// so a rank-deficient vocabulary degenerates gracefully.
inline EmbeddingTable remove_principal_components(const EmbeddingTable& table, int m) {
    if (m < 0) throw std::invalid_argument("remove_principal_components: m must be nonnegative");
    if (m == 0) return table;
    const int n = static_cast<int>(table.size());
    const int d = table.dim;
    if (m >= n) throw std::invalid_argument("remove_principal_components: m >= vocabulary size");
    if (m > d) throw std::invalid_argument("remove_principal_components: m > dim");

    std::vector<double> mean(d, 0.0);
    for (const auto& v : table.vectors)
        for (int k = 0; k < d; ++k) mean[k] += v[k];
    for (int k = 0; k < d; ++k) mean[k] /= n;

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    std::vector<double> centered(d);
    for (const auto& v : table.vectors) {
        for (int k = 0; k < d; ++k) centered[k] = v[k] - mean[k];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) cov[i][j] += centered[i] * centered[j];
    }
    double trace = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
        trace += cov[i][i];
    }

    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;
    detail::jacobi_eigen_symmetric(cov, eigenvalues, eigenvectors);

    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return eigenvalues[a] > eigenvalues[b]; });

    std::vector<std::vector<double>> directions;
    for (int r = 0; r < m; ++r) {
        const int col = order[r];
        if (eigenvalues[col] <= 1e-12 * std::max(trace, 1e-300)) break; // no variance left
        std::vector<double> dir(d);
        for (int k = 0; k < d; ++k) dir[k] = eigenvectors[k][col];
        directions.push_back(std::move(dir));
    }

    EmbeddingTable out = table;
    for (auto& v : out.vectors) {
        for (int k = 0; k < d; ++k) v[k] -= mean[k];
        for (const auto& dir : directions) {
            const double proj = dot(v, dir);
            for (int k = 0; k < d; ++k) v[k] -= proj * dir[k];
        }
    }
    return out;
}

} // namespace rots

#endif // ROTS_EMBEDDING_HPP
