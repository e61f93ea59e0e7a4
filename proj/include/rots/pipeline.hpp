#ifndef ROTS_PIPELINE_HPP
#define ROTS_PIPELINE_HPP

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rots/embedding.hpp"
#include "rots/similarity.hpp"
#include "rots/structure.hpp"
#include "rots/tree_io.hpp"
#include "rots/weighting.hpp"

namespace rots {

// Whitespace split, lowercased, with surrounding punctuation stripped.
// Tokens that are all punctuation vanish.
inline std::vector<std::string> tokenize(const std::string& text, bool lowercase = true) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            std::size_t lo = i, hi = j;
            while (lo < hi && std::ispunct(static_cast<unsigned char>(text[lo]))) ++lo;
            while (hi > lo && std::ispunct(static_cast<unsigned char>(text[hi - 1]))) --hi;
            if (hi > lo) {
                std::string tok = text.substr(lo, hi - lo);
                out.push_back(lowercase ? to_lower(tok) : tok);
            }
        }
        i = j;
    }
    return out;
}

enum class TreeKind { binary, dependency };

inline TreeKind parse_tree_kind(const std::string& name) {
    if (name == "binary") return TreeKind::binary;
    if (name == "dependency") return TreeKind::dependency;
    throw std::invalid_argument("unknown tree kind: " + name);
}

struct Pipeline {
    const EmbeddingTable* embeddings = nullptr;
    const FrequencyTable* frequencies = nullptr; // optional for uniform weights
    WeightScheme scheme;
    SimilarityConfig config;
    TreeKind tree_kind = TreeKind::binary;
};

struct BuiltSentence {
    WeightedSentence sentence;
    std::vector<char> kept; // mask over the input tokens
};

// Vocabulary filtering plus weight assignment. Returns nullopt when no token
// survives the lookup.
inline std::optional<BuiltSentence> build_weighted_sentence(const Pipeline& pipeline,
                                                            const std::vector<std::string>& tokens) {
    BuiltSentence built;
    built.kept.assign(tokens.size(), 0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::vector<double>* vec = lookup(*pipeline.embeddings, tokens[i]);
        if (!vec) {
            ++built.sentence.dropped;
            continue;
        }
        double probability = 0.0;
        if (pipeline.scheme.kind != WeightScheme::Kind::uniform) {
            if (!pipeline.frequencies)
                throw std::runtime_error("weight scheme requires a frequency table");
            const std::string key =
                pipeline.embeddings->lowercase_lookup ? to_lower(tokens[i]) : tokens[i];
            probability = pipeline.frequencies->probability(key);
        }
        built.kept[i] = 1;
        built.sentence.tokens.push_back(
            {tokens[i], *vec, word_weight(pipeline.scheme, probability)});
    }
    if (built.sentence.tokens.empty()) return std::nullopt;
    return built;
}

inline StructureTree tree_for(const Pipeline& pipeline, const BuiltSentence& built,
                              const ParsedSentence* parse) {
    if (pipeline.tree_kind == TreeKind::binary)
        return build_binary_tree(static_cast<int>(built.sentence.size()));
    if (!parse) throw std::runtime_error("dependency trees requested but no parse supplied");
    const ParsedSentence pruned = prune_parse(*parse, built.kept);
    return ingest_dependency_tree(pruned.tokens, pruned.heads);
}

// Scores one pair of token lists; nullopt when either side is fully OOV.
inline std::optional<SimilarityReport> score_pair(const Pipeline& pipeline,
                                                  const std::vector<std::string>& tokens1,
                                                  const std::vector<std::string>& tokens2,
                                                  Method method,
                                                  const PairParse* parse = nullptr) {
    const auto b1 = build_weighted_sentence(pipeline, tokens1);
    const auto b2 = build_weighted_sentence(pipeline, tokens2);
    if (!b1 || !b2) return std::nullopt;

    StructureTree tree1, tree2;
    if (method == Method::rot || method == Method::rots) {
        tree1 = tree_for(pipeline, *b1, parse ? &parse->first : nullptr);
        tree2 = tree_for(pipeline, *b2, parse ? &parse->second : nullptr);
    }
    return similarity_report(b1->sentence, b2->sentence, tree1, tree2, pipeline.config, method);
}

// Raw-text entry point used by the CLI for binary-tree runs.
inline std::optional<SimilarityReport> score_texts(const Pipeline& pipeline,
                                                   const std::string& text1,
                                                   const std::string& text2, Method method,
                                                   const PairParse* parse = nullptr) {
    std::vector<std::string> tokens1, tokens2;
    if (parse && pipeline.tree_kind == TreeKind::dependency) {
        tokens1 = parse->first.tokens; // parses carry their own tokenization
        tokens2 = parse->second.tokens;
    } else {
        tokens1 = tokenize(text1);
        tokens2 = tokenize(text2);
    }
    if (tokens1.empty() || tokens2.empty()) return std::nullopt;
    return score_pair(pipeline, tokens1, tokens2, method, parse);
}

} // namespace rots

#endif // ROTS_PIPELINE_HPP
