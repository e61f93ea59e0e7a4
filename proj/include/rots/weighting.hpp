#ifndef ROTS_WEIGHTING_HPP
#define ROTS_WEIGHTING_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rots/embedding.hpp"
#include "rots/matrix.hpp"

namespace rots {

// Constants of the uSIF weight a/(a/2 + p), precomputed once per corpus from
// the unigram table and the expected sentence length.
struct UsifStats {
    double a = 1e-3;
};

inline UsifStats make_usif_stats(const FrequencyTable& freq, double avg_sentence_length = 11.0) {
    if (freq.total == 0 || freq.counts.empty())
        throw std::runtime_error("make_usif_stats: empty frequency table");
    if (avg_sentence_length <= 0.0)
        throw std::invalid_argument("make_usif_stats: average sentence length must be positive");

    const double vocab_size = static_cast<double>(freq.counts.size());
    const double threshold = 1.0 - std::pow(1.0 - 1.0 / vocab_size, avg_sentence_length);
    double above = 0.0;
    for (const auto& [token, count] : freq.counts) {
        (void)token;
        if (static_cast<double>(count) / static_cast<double>(freq.total) > threshold) above += 1.0;
    }
    double alpha = above / vocab_size;
    if (alpha <= 0.0) alpha = 1.0 / vocab_size; // keep weights finite on flat corpora
    const double z = 0.5 * vocab_size;
    UsifStats stats;
    stats.a = (1.0 - alpha) / (alpha * z);
    return stats;
}

struct WeightScheme {
    enum class Kind { uniform, sif, usif };
    Kind kind = Kind::uniform;
    double sif_a = 1e-3;
    UsifStats usif;

    static WeightScheme uniform() { return WeightScheme{}; }
    static WeightScheme sif(double a = 1e-3) {
        if (a <= 0.0) throw std::invalid_argument("WeightScheme: sif_a must be positive");
        return WeightScheme{Kind::sif, a, {}};
    }
    static WeightScheme usif_scheme(UsifStats stats) {
        return WeightScheme{Kind::usif, 1e-3, stats};
    }
};

inline WeightScheme::Kind parse_weight_scheme(const std::string& name) {
    if (name == "uniform") return WeightScheme::Kind::uniform;
    if (name == "sif") return WeightScheme::Kind::sif;
    if (name == "usif") return WeightScheme::Kind::usif;
    throw std::invalid_argument("unknown weight scheme: " + name);
}

inline double word_weight(const WeightScheme& scheme, double probability) {
    if (probability < 0.0 || probability > 1.0 || !std::isfinite(probability))
        throw std::invalid_argument("word_weight: probability outside [0,1]");
    switch (scheme.kind) {
        case WeightScheme::Kind::uniform:
            return 1.0;
        case WeightScheme::Kind::sif:
            return scheme.sif_a / (scheme.sif_a + probability);
        case WeightScheme::Kind::usif:
            return scheme.usif.a / (0.5 * scheme.usif.a + probability);
    }
    throw std::logic_error("word_weight: unreachable");
}

// Norm-modified weights a_i = w_i |v_i| / sum_k w_k |v_k|.
struct ModifiedWeights {
    std::vector<double> values; // nonnegative, sums to 1
};

inline ModifiedWeights modified_weights(std::span<const double> weights,
                                        const std::vector<std::vector<double>>& vectors) {
    if (weights.size() != vectors.size() || weights.empty())
        throw std::invalid_argument("modified_weights: size mismatch or empty input");
    ModifiedWeights out;
    out.values.resize(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.values[i] = weights[i] * norm(vectors[i]);
        total += out.values[i];
    }
    if (total <= 0.0) throw std::runtime_error("modified_weights: degenerate sentence norm");
    for (double& v : out.values) v /= total;
    return out;
}

// K = (sum_k w_k |v_k|)^2 / |sum_k w_k v_k|^2, always >= 1.
inline double norm_concentration(std::span<const double> weights,
                                 const std::vector<std::vector<double>>& vectors) {
    if (weights.size() != vectors.size() || weights.empty())
        throw std::invalid_argument("norm_concentration: size mismatch or empty input");
    double weighted_norms = 0.0;
    std::vector<double> average(vectors.front().size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weighted_norms += weights[i] * norm(vectors[i]);
        add_scaled(average, vectors[i], weights[i]);
    }
    const double denom = dot(average, average);
    if (denom <= 0.0) throw std::runtime_error("norm_concentration: degenerate sentence vector");
    return weighted_norms * weighted_norms / denom;
}

// C = sqrt(K1 K2), the factor relating the induced-plan transport similarity
// to the plain cosine of weighted averages.
inline double comprehensive_coefficient(std::span<const double> weights1,
                                        const std::vector<std::vector<double>>& vectors1,
                                        std::span<const double> weights2,
                                        const std::vector<std::vector<double>>& vectors2) {
    const double k1 = norm_concentration(weights1, vectors1);
    const double k2 = norm_concentration(weights2, vectors2);
    return std::sqrt(k1 * k2);
}

} // namespace rots

#endif // ROTS_WEIGHTING_HPP
