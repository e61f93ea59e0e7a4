#ifndef ROTS_EVAL_HPP
#define ROTS_EVAL_HPP

#include <cmath>
#include <istream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rots/pipeline.hpp"
#include "rots/tree_io.hpp"

namespace rots {

struct StsRecord {
    double gold = 0.0;
    std::string sentence1;
    std::string sentence2;
};

struct StsDataset {
    std::vector<StsRecord> records;
    int malformed_lines = 0;
};

// TSV lines `gold<TAB>sentence1<TAB>sentence2`; malformed lines are counted
// and skipped.
inline StsDataset read_sts_dataset(std::istream& source) {
    StsDataset dataset;
    std::string line;
    while (std::getline(source, line)) {
        if (line.empty()) continue;
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            ++dataset.malformed_lines;
            continue;
        }
        StsRecord rec;
        try {
            std::size_t used = 0;
            rec.gold = std::stod(line.substr(0, t1), &used);
            if (used != t1 || !std::isfinite(rec.gold)) throw std::invalid_argument("gold");
        } catch (const std::exception&) {
            ++dataset.malformed_lines;
            continue;
        }
        rec.sentence1 = line.substr(t1 + 1, t2 - t1 - 1);
        rec.sentence2 = line.substr(t2 + 1);
        if (rec.sentence1.empty() || rec.sentence2.empty()) {
            ++dataset.malformed_lines;
            continue;
        }
        dataset.records.push_back(std::move(rec));
    }
    if (dataset.records.empty()) throw std::runtime_error("read_sts_dataset: no parseable lines");
    return dataset;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length samples of size >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw std::runtime_error("pearson: degenerate score vector");
    return sxy / std::sqrt(sxx * syy);
}

struct EvalResult {
    std::vector<std::optional<double>> predictions; // aligned with dataset records
    double pearson_x100 = 0.0;
    int scored = 0;
    int skipped = 0;
};

// Scores every record with the chosen method and correlates against gold.
// Records with no in-vocabulary token on either side are skipped. Results
// are written into a preallocated slot per record, so any worker count gives
// identical output.
inline EvalResult run_eval(const StsDataset& dataset, const Pipeline& pipeline, Method method,
                           const std::vector<PairParse>* parses = nullptr, int workers = 1) {
    if (pipeline.tree_kind == TreeKind::dependency && (method == Method::rot || method == Method::rots)) {
        if (!parses) throw std::runtime_error("run_eval: dependency trees require a parse file");
        if (parses->size() != dataset.records.size())
            throw std::runtime_error("run_eval: parse file is not aligned with the dataset");
    }

    const std::size_t n = dataset.records.size();
    EvalResult result;
    result.predictions.assign(n, std::nullopt);

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&](std::size_t begin, std::size_t end) {
        try {
            for (std::size_t i = begin; i < end; ++i) {
                const auto& rec = dataset.records[i];
                const PairParse* parse = parses ? &(*parses)[i] : nullptr;
                const auto report = score_texts(pipeline, rec.sentence1, rec.sentence2, method, parse);
                if (report) result.predictions[i] = report->score;
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (workers <= 1 || n < 2) {
        worker(0, n);
    } else {
        const std::size_t count = std::min<std::size_t>(workers, n);
        std::vector<std::thread> threads;
        const std::size_t chunk = (n + count - 1) / count;
        for (std::size_t t = 0; t < count; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) threads.emplace_back(worker, begin, end);
        }
        for (auto& th : threads) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> gold, predicted;
    for (std::size_t i = 0; i < n; ++i) {
        if (result.predictions[i]) {
            gold.push_back(dataset.records[i].gold);
            predicted.push_back(*result.predictions[i]);
            ++result.scored;
        } else {
            ++result.skipped;
        }
    }
    if (result.scored == 0) throw std::runtime_error("run_eval: all records skipped");
    result.pearson_x100 = 100.0 * pearson(gold, predicted);
    return result;
}

} // namespace rots

#endif // ROTS_EVAL_HPP
