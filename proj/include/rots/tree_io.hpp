#ifndef ROTS_TREE_IO_HPP
#define ROTS_TREE_IO_HPP

#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rots {

struct ParsedSentence {
    std::vector<std::string> tokens;
    std::vector<int> heads; // -1 for root
};

// One dataset row worth of parses.
struct PairParse {
    ParsedSentence first;
    ParsedSentence second;
};

// Restrict a parse to the kept tokens: indices are remapped and each kept
// word re-attaches to its nearest kept ancestor. Kept words whose ancestors
// were all dropped attach to the first surviving root.
inline ParsedSentence prune_parse(const ParsedSentence& parse, const std::vector<char>& keep) {
    const int n = static_cast<int>(parse.heads.size());
    if (static_cast<int>(keep.size()) != n)
        throw std::invalid_argument("prune_parse: mask length mismatch");

    std::vector<int> new_index(n, -1);
    ParsedSentence out;
    for (int i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        new_index[i] = static_cast<int>(out.tokens.size());
        out.tokens.push_back(parse.tokens[i]);
    }
    if (out.tokens.empty()) throw std::runtime_error("prune_parse: no tokens retained");

    int first_root = -1;
    for (int i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        int cur = parse.heads[i];
        while (cur != -1 && !keep[cur]) cur = parse.heads[cur];
        int head = cur == -1 ? -1 : new_index[cur];
        if (head == -1) {
            if (first_root == -1)
                first_root = new_index[i];
            else
                head = first_root;
        }
        out.heads.push_back(head);
    }
    return out;
}

namespace detail {

inline ParsedSentence parse_from_json(const nlohmann::json& rec, const std::string& tokens_key,
                                      const std::string& heads_key, long line_no) {
    if (!rec.contains(tokens_key) || !rec.contains(heads_key))
        throw std::runtime_error("tree record at line " + std::to_string(line_no) +
                                 " is missing '" + tokens_key + "' or '" + heads_key + "'");
    ParsedSentence out;
    out.tokens = rec.at(tokens_key).get<std::vector<std::string>>();
    out.heads = rec.at(heads_key).get<std::vector<int>>();
    if (out.tokens.size() != out.heads.size())
        throw std::runtime_error("tree record at line " + std::to_string(line_no) +
                                 " has mismatched tokens/heads lengths");
    return out;
}

} // namespace detail

// One sentence per line: {"tokens": [...], "heads": [...]} with -1 as root.
inline std::vector<ParsedSentence> read_tree_jsonl(std::istream& source) {
    std::vector<ParsedSentence> out;
    std::string line;
    long line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("bad tree record at line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(detail::parse_from_json(rec, "tokens", "heads", line_no));
    }
    return out;
}

// One dataset row per line: {"tokens1": ..., "heads1": ..., "tokens2": ..., "heads2": ...}.
inline std::vector<PairParse> read_pair_trees_jsonl(std::istream& source) {
    std::vector<PairParse> out;
    std::string line;
    long line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("bad tree record at line " + std::to_string(line_no) + ": " + e.what());
        }
        PairParse pair;
        pair.first = detail::parse_from_json(rec, "tokens1", "heads1", line_no);
        pair.second = detail::parse_from_json(rec, "tokens2", "heads2", line_no);
        out.push_back(std::move(pair));
    }
    return out;
}

// Ten-column CoNLL-U: ID, FORM and HEAD columns are consumed; comment lines,
// multiword ranges and empty nodes are skipped. HEAD 0 marks the root.
inline std::vector<ParsedSentence> read_conllu(std::istream& source) {
    std::vector<ParsedSentence> sentences;
    ParsedSentence current;
    std::string line;
    auto flush = [&] {
        if (!current.tokens.empty()) sentences.push_back(std::move(current));
        current = ParsedSentence{};
    };
    while (std::getline(source, line)) {
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') continue;
        std::istringstream ls(line);
        std::vector<std::string> cols;
        std::string col;
        while (std::getline(ls, col, '\t')) cols.push_back(col);
        if (cols.size() < 8) continue;
        const std::string& id = cols[0];
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
        int head;
        try {
            head = std::stoi(cols[6]);
        } catch (const std::exception&) {
            continue;
        }
        current.tokens.push_back(cols[1]);
        current.heads.push_back(head == 0 ? -1 : head - 1);
    }
    flush();
    return sentences;
}

} // namespace rots

#endif // ROTS_TREE_IO_HPP
