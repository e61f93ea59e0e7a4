#include <catch2/catch.hpp>

#include <algorithm>
#include <iomanip>
#include <random>
#include <sstream>

#include "rots/eval.hpp"
#include "oracles.hpp"

namespace {

// in-memory pipeline over a synthetic vocabulary
struct Fixture {
    rots::EmbeddingTable table;
    rots::FrequencyTable freq;
    rots::Pipeline pipeline;
    std::vector<std::string> vocab;

    explicit Fixture(unsigned seed, int words = 30, int dim = 8) {
        std::mt19937 rng(seed);
        table.dim = dim;
        for (int i = 0; i < words; ++i) {
            vocab.push_back("word" + std::to_string(i));
            table.insert(vocab.back(), oracles::random_vector(rng, dim));
            freq.counts[vocab.back()] = 1 + i * 3;
            freq.total += 1 + i * 3;
        }
        pipeline.embeddings = &table;
        pipeline.frequencies = &freq;
        pipeline.scheme = rots::WeightScheme::sif(1e-3);
    }

    std::string sentence(std::mt19937& rng, int len) const {
        std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
        std::string out;
        for (int i = 0; i < len; ++i) {
            if (!out.empty()) out += ' ';
            out += vocab[pick(rng)];
        }
        return out;
    }
};

} // namespace

TEST_CASE("tokenize lowercases and strips surrounding punctuation") {
    REQUIRE(rots::tokenize("Hello, world!") == std::vector<std::string>{"hello", "world"});
    REQUIRE(rots::tokenize("  'quoted'   word.  ") == std::vector<std::string>{"quoted", "word"});
    REQUIRE(rots::tokenize("don't stop-me") == std::vector<std::string>{"don't", "stop-me"});
    REQUIRE(rots::tokenize("... !! ?") == std::vector<std::string>{});
    REQUIRE(rots::tokenize("") == std::vector<std::string>{});
    REQUIRE(rots::tokenize("Keep CASE", false) == std::vector<std::string>{"Keep", "CASE"});
}

TEST_CASE("read_sts_dataset parses and counts") {
    std::istringstream in(
        "3.2\tthe cat sat\tthe dog ran\n"
        "0.5\thello there\tgoodbye now\n"
        "broken line without tabs\n"
        "4.8\ta b\tc d\n");
    const auto dataset = rots::read_sts_dataset(in);
    REQUIRE(dataset.records.size() == 3);
    REQUIRE(dataset.malformed_lines == 1);
    REQUIRE(dataset.records[0].gold == Approx(3.2));
    REQUIRE(dataset.records[2].sentence2 == "c d");

    std::istringstream empty("not a dataset\n");
    REQUIRE_THROWS_WITH(rots::read_sts_dataset(empty), Catch::Contains("no parseable"));
}

TEST_CASE("large dataset record count matches an independent line counter") {
    std::mt19937 rng(229);
    std::uniform_real_distribution<double> gold(0.0, 5.0);
    std::ostringstream content;
    int expected = 0;
    for (int i = 0; i < 1379; ++i) {
        if (i % 100 == 37) {
            content << "malformed line " << i << "\n";
            continue;
        }
        content << gold(rng) << "\tleft sentence " << i << "\tright sentence " << i << "\n";
        ++expected;
    }
    const std::string text = content.str();

    int independent = 0;
    {
        std::istringstream check(text);
        std::string line;
        while (std::getline(check, line))
            if (std::count(line.begin(), line.end(), '\t') == 2) ++independent;
    }
    REQUIRE(independent == expected);

    std::istringstream in(text);
    const auto dataset = rots::read_sts_dataset(in);
    REQUIRE(static_cast<int>(dataset.records.size()) == independent);
}

TEST_CASE("pearson hand cases") {
    REQUIRE(rots::pearson({1, 2, 3, 4}, {5, 7, 9, 11}) == Approx(1.0));   // y = 2x + 3
    REQUIRE(rots::pearson({1, 2, 3}, {-1, -2, -3}) == Approx(-1.0));
    REQUIRE(rots::pearson({1, 2, 3}, {1, 3, 2}) == Approx(0.5));
    REQUIRE_THROWS_WITH(rots::pearson({1, 2, 3}, {2, 2, 2}),
                        Catch::Contains("degenerate score vector"));
    REQUIRE_THROWS(rots::pearson({1.0}, {2.0}));
}

TEST_CASE("pearson is invariant under positive affine transforms") {
    std::mt19937 rng(233);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(40), y(40);
    for (int i = 0; i < 40; ++i) {
        x[i] = n(rng);
        y[i] = n(rng);
    }
    const double base = rots::pearson(x, y);
    auto xs = x;
    auto ys = y;
    for (double& v : xs) v = 3.7 * v + 11.0;
    for (double& v : ys) v = 0.02 * v - 5.0;
    REQUIRE(rots::pearson(xs, ys) == Approx(base).margin(1e-12));
}

TEST_CASE("run_eval self-correlation is a perfect score") {
    Fixture fx(239);
    std::mt19937 rng(241);
    std::ostringstream tsv;
    tsv << std::setprecision(17);
    std::vector<std::string> lefts, rights;
    for (int i = 0; i < 15; ++i) {
        lefts.push_back(fx.sentence(rng, 3 + i % 5));
        rights.push_back(fx.sentence(rng, 3 + (i / 2) % 5));
    }
    for (int i = 0; i < 15; ++i) {
        const auto report =
            rots::score_texts(fx.pipeline, lefts[i], rights[i], rots::Method::cos_wawv);
        tsv << report->score << "\t" << lefts[i] << "\t" << rights[i] << "\n";
    }
    std::istringstream in(tsv.str());
    const auto dataset = rots::read_sts_dataset(in);
    const auto result = rots::run_eval(dataset, fx.pipeline, rots::Method::cos_wawv);
    REQUIRE(result.scored == 15);
    REQUIRE(result.skipped == 0);
    REQUIRE(result.pearson_x100 == Approx(100.0).margin(1e-6));
}

TEST_CASE("run_eval skips fully out-of-vocabulary records") {
    Fixture fx(251);
    std::istringstream in(
        "1.0\tword1 word2\tword3 word4\n"
        "2.0\txyzzy qwerty\tword5 word6\n" // left side fully OOV
        "3.0\tword7\tword8 word9\n"
        "0.5\tword1 word4\tword2\n");
    const auto dataset = rots::read_sts_dataset(in);
    const auto result = rots::run_eval(dataset, fx.pipeline, rots::Method::cos_wawv);
    REQUIRE(result.skipped == 1);
    REQUIRE(result.scored == 3);
    REQUIRE_FALSE(result.predictions[1].has_value());
}

TEST_CASE("run_eval throws when every record is skipped") {
    Fixture fx(257);
    std::istringstream in("1.0\tzzz yyy\txxx www\n2.0\tqqq\tppp\n");
    const auto dataset = rots::read_sts_dataset(in);
    REQUIRE_THROWS_WITH(rots::run_eval(dataset, fx.pipeline, rots::Method::cos_wawv),
                        Catch::Contains("all records skipped"));
}

TEST_CASE("methods agree on which records are scored") {
    Fixture fx(263);
    std::mt19937 rng(269);
    std::ostringstream tsv;
    for (int i = 0; i < 10; ++i)
        tsv << (i * 0.5) << "\t" << fx.sentence(rng, 4) << "\t" << fx.sentence(rng, 5) << "\n";
    std::istringstream in(tsv.str());
    const auto dataset = rots::read_sts_dataset(in);
    const auto by_cos = rots::run_eval(dataset, fx.pipeline, rots::Method::cos_wawv);
    const auto by_rots = rots::run_eval(dataset, fx.pipeline, rots::Method::rots);
    REQUIRE(by_cos.predictions.size() == by_rots.predictions.size());
    REQUIRE(by_cos.scored == by_rots.scored);
}

TEST_CASE("gold built from perturbed rots scores correlates above 95") {
    Fixture fx(271);
    std::mt19937 rng(277);
    std::vector<std::string> lefts, rights;
    for (int i = 0; i < 20; ++i) {
        lefts.push_back(fx.sentence(rng, 4 + i % 4));
        rights.push_back(fx.sentence(rng, 4 + (i / 3) % 4));
    }
    std::vector<double> scores;
    for (int i = 0; i < 20; ++i) {
        const auto report = rots::score_texts(fx.pipeline, lefts[i], rights[i], rots::Method::rots);
        scores.push_back(report->score);
    }
    // rank-preserving: noise amplitude below half the smallest score gap
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double min_gap = 1.0;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        min_gap = std::min(min_gap, sorted[i] - sorted[i - 1]);
    std::uniform_real_distribution<double> noise(-0.4 * min_gap, 0.4 * min_gap);
    std::ostringstream tsv;
    tsv << std::setprecision(17);
    for (int i = 0; i < 20; ++i)
        tsv << scores[i] + noise(rng) << "\t" << lefts[i] << "\t" << rights[i] << "\n";

    std::istringstream in(tsv.str());
    const auto dataset = rots::read_sts_dataset(in);
    const auto result = rots::run_eval(dataset, fx.pipeline, rots::Method::rots);
    REQUIRE(result.pearson_x100 >= 95.0);
}

TEST_CASE("run_eval is deterministic and worker-count independent") {
    Fixture fx(281);
    std::mt19937 rng(283);
    std::ostringstream tsv;
    for (int i = 0; i < 12; ++i)
        tsv << i << "\t" << fx.sentence(rng, 5) << "\t" << fx.sentence(rng, 6) << "\n";
    const std::string text = tsv.str();

    std::vector<rots::EvalResult> runs;
    for (int workers : {1, 1, 4}) {
        std::istringstream in(text);
        const auto dataset = rots::read_sts_dataset(in);
        runs.push_back(rots::run_eval(dataset, fx.pipeline, rots::Method::rots, nullptr, workers));
    }
    for (std::size_t i = 0; i < runs[0].predictions.size(); ++i) {
        REQUIRE(*runs[0].predictions[i] == *runs[1].predictions[i]); // bitwise
        REQUIRE(*runs[0].predictions[i] == *runs[2].predictions[i]);
    }
    REQUIRE(runs[0].pearson_x100 == runs[2].pearson_x100);
}

TEST_CASE("dependency evaluation needs aligned parses") {
    Fixture fx(293);
    fx.pipeline.tree_kind = rots::TreeKind::dependency;
    std::istringstream in(
        "1.0\tword1 word2\tword3 word4\n"
        "2.5\tword5 word6 word7\tword8\n");
    const auto dataset = rots::read_sts_dataset(in);
    REQUIRE_THROWS_WITH(rots::run_eval(dataset, fx.pipeline, rots::Method::rots),
                        Catch::Contains("dependency"));

    std::vector<rots::PairParse> parses(3); // wrong length
    REQUIRE_THROWS_WITH(rots::run_eval(dataset, fx.pipeline, rots::Method::rots, &parses),
                        Catch::Contains("aligned"));

    parses.resize(2);
    parses[0].first = {{"word1", "word2"}, {-1, 0}};
    parses[0].second = {{"word3", "word4"}, {1, -1}};
    parses[1].first = {{"word5", "word6", "word7"}, {1, -1, 1}};
    parses[1].second = {{"word8"}, {-1}};
    const auto result = rots::run_eval(dataset, fx.pipeline, rots::Method::rots, &parses);
    REQUIRE(result.scored == 2);
}
