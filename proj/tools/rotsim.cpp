// Command-line front end: similarity of one sentence pair, STS-style dataset
// evaluation, and per-level plan inspection.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rots/rots.hpp"

namespace {

struct Options {
    std::string method = "rots";
    std::string vectors_path;
    std::string freq_path;
    std::string weight_scheme = "usif";
    double sif_a = 1e-3;
    double usif_avg_len = 11.0;
    int components = 5;
    std::string tree = "binary";
    std::string trees_path;
    int depth = 5;
    double gamma = 10.0;
    double sinkhorn_tol = 1e-9;
    int sinkhorn_max_iter = 10000;
    double prior_floor_lambda = 1e-6;
    int workers = 1;
    bool keep_case = false;

    std::string dataset_path;
    bool per_record = false;
    std::string sentence1, sentence2;
};

// ROT_SIM_CONFIG points at a key=value file; command-line flags override it.
void apply_config_file(Options& opt) {
    const char* path = std::getenv("ROT_SIM_CONFIG");
    if (!path || !*path) return;
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string("cannot open config file ") + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "method") opt.method = value;
        else if (key == "vectors") opt.vectors_path = value;
        else if (key == "freq") opt.freq_path = value;
        else if (key == "weight_scheme") opt.weight_scheme = value;
        else if (key == "sif_a") opt.sif_a = std::stod(value);
        else if (key == "usif_avg_len") opt.usif_avg_len = std::stod(value);
        else if (key == "components") opt.components = std::stoi(value);
        else if (key == "tree") opt.tree = value;
        else if (key == "trees") opt.trees_path = value;
        else if (key == "depth") opt.depth = std::stoi(value);
        else if (key == "gamma") opt.gamma = std::stod(value);
        else if (key == "sinkhorn_tol") opt.sinkhorn_tol = std::stod(value);
        else if (key == "sinkhorn_max_iter") opt.sinkhorn_max_iter = std::stoi(value);
        else if (key == "prior_floor_lambda") opt.prior_floor_lambda = std::stod(value);
        else if (key == "workers") opt.workers = std::stoi(value);
        else if (key == "keep_case") opt.keep_case = value == "1" || value == "true";
        else throw std::runtime_error("config line " + std::to_string(line_no) + ": unknown key " + key);
    }
}

// A missing argument that the config file could have supplied: report it and
// show usage, but do not let CLI11 hard-require it.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_shared_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("--method", opt.method, "wmd | cos | rot | rots");
    cmd->add_option("--vectors", opt.vectors_path, "embedding text file (token v1 ... vd per line)");
    cmd->add_option("--freq", opt.freq_path, "frequency file (token count per line)");
    cmd->add_option("--weight-scheme", opt.weight_scheme, "uniform | sif | usif");
    cmd->add_option("--sif-a", opt.sif_a, "SIF constant a");
    cmd->add_option("--usif-avg-len", opt.usif_avg_len, "average sentence length for uSIF");
    cmd->add_option("--components", opt.components, "principal components removed at load");
    cmd->add_option("--tree", opt.tree, "binary | dependency");
    cmd->add_option("--trees", opt.trees_path, "JSONL file with tokens1/heads1/tokens2/heads2");
    cmd->add_option("--depth", opt.depth, "recursion depth");
    cmd->add_option("--gamma", opt.gamma, "KL regularization strength");
    cmd->add_option("--sinkhorn-tol", opt.sinkhorn_tol, "marginal tolerance");
    cmd->add_option("--sinkhorn-max-iter", opt.sinkhorn_max_iter, "iteration cap");
    cmd->add_option("--prior-floor-lambda", opt.prior_floor_lambda, "prior floor blend");
    cmd->add_flag("--keep-case", opt.keep_case, "disable lowercasing");
}

struct LoadedPipeline {
    rots::EmbeddingTable embeddings;
    rots::FrequencyTable frequencies;
    rots::Pipeline pipeline;
};

LoadedPipeline load_pipeline(const Options& opt) {
    LoadedPipeline loaded;

    if (opt.vectors_path.empty()) throw UsageError("missing --vectors (or `vectors` config key)");
    std::ifstream vin(opt.vectors_path);
    if (!vin) throw std::runtime_error("cannot open vectors file " + opt.vectors_path);
    loaded.embeddings = rots::load_embeddings(vin, std::nullopt, !opt.keep_case);
    if (opt.components > 0)
        loaded.embeddings = rots::remove_principal_components(loaded.embeddings, opt.components);

    const auto kind = rots::parse_weight_scheme(opt.weight_scheme);
    if (kind != rots::WeightScheme::Kind::uniform) {
        if (opt.freq_path.empty())
            throw std::runtime_error("--freq is required for weight scheme " + opt.weight_scheme);
        std::ifstream fin(opt.freq_path);
        if (!fin) throw std::runtime_error("cannot open frequency file " + opt.freq_path);
        loaded.frequencies = rots::load_frequencies(fin);
    }

    switch (kind) {
        case rots::WeightScheme::Kind::uniform:
            loaded.pipeline.scheme = rots::WeightScheme::uniform();
            break;
        case rots::WeightScheme::Kind::sif:
            loaded.pipeline.scheme = rots::WeightScheme::sif(opt.sif_a);
            break;
        case rots::WeightScheme::Kind::usif:
            loaded.pipeline.scheme = rots::WeightScheme::usif_scheme(
                rots::make_usif_stats(loaded.frequencies, opt.usif_avg_len));
            break;
    }

    loaded.pipeline.embeddings = &loaded.embeddings;
    loaded.pipeline.frequencies = &loaded.frequencies;
    loaded.pipeline.tree_kind = rots::parse_tree_kind(opt.tree);
    loaded.pipeline.config.depth = opt.depth;
    loaded.pipeline.config.gamma = opt.gamma;
    loaded.pipeline.config.sinkhorn.tol = opt.sinkhorn_tol;
    loaded.pipeline.config.sinkhorn.max_iter = opt.sinkhorn_max_iter;
    loaded.pipeline.config.sinkhorn.prior_floor_lambda = opt.prior_floor_lambda;
    return loaded;
}

std::vector<rots::PairParse> load_pair_parses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tree file " + path);
    return rots::read_pair_trees_jsonl(in);
}

double rounded(double x) { return std::round(x * 1e6) / 1e6 + 0.0; } // +0.0 drops negative zero

nlohmann::json report_json(const rots::SimilarityReport& report, bool with_levels) {
    nlohmann::json out;
    out["method"] = rots::method_name(report.method);
    out["score"] = rounded(report.score);
    if (with_levels) {
        nlohmann::json levels = nlohmann::json::array();
        for (const auto& level : report.levels) {
            nlohmann::json entry;
            entry["level"] = level.level;
            entry["groups1"] = level.plan.rows;
            entry["groups2"] = level.plan.cols;
            entry["coefficient"] = level.coefficient;
            entry["value"] = level.value;
            entry["marginals1"] = level.marginals1;
            entry["marginals2"] = level.marginals2;
            nlohmann::json plan = nlohmann::json::array();
            for (int i = 0; i < level.plan.rows; ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (int j = 0; j < level.plan.cols; ++j) row.push_back(level.plan(i, j));
                plan.push_back(std::move(row));
            }
            entry["plan"] = std::move(plan);
            levels.push_back(std::move(entry));
        }
        out["levels"] = std::move(levels);
    }
    return out;
}

int run_sim(const Options& opt, bool inspect) {
    const auto loaded = load_pipeline(opt);
    const auto method = rots::parse_method(opt.method);

    std::vector<rots::PairParse> parses;
    const rots::PairParse* parse = nullptr;
    if (!opt.trees_path.empty()) {
        parses = load_pair_parses(opt.trees_path);
        if (parses.empty()) throw std::runtime_error("tree file has no records");
        parse = &parses.front();
    } else if (loaded.pipeline.tree_kind == rots::TreeKind::dependency &&
               (method == rots::Method::rot || method == rots::Method::rots)) {
        throw std::runtime_error("--tree dependency requires --trees");
    }

    const auto report = rots::score_texts(loaded.pipeline, opt.sentence1, opt.sentence2, method, parse);
    if (!report) throw std::runtime_error("no in-vocabulary tokens in one of the sentences");

    nlohmann::json out = report_json(*report, inspect);
    out["sentence1"] = opt.sentence1;
    out["sentence2"] = opt.sentence2;
    if (inspect) {
        out["config"] = {{"method", opt.method},       {"weight_scheme", opt.weight_scheme},
                         {"components", opt.components}, {"tree", opt.tree},
                         {"depth", opt.depth},          {"gamma", opt.gamma}};
    }
    std::cout << out.dump() << "\n";
    return 0;
}

int run_eval_command(const Options& opt) {
    const auto loaded = load_pipeline(opt);
    const auto method = rots::parse_method(opt.method);

    std::ifstream din(opt.dataset_path);
    if (!din) throw std::runtime_error("cannot open dataset file " + opt.dataset_path);
    const auto dataset = rots::read_sts_dataset(din);

    std::vector<rots::PairParse> parses;
    const std::vector<rots::PairParse>* parses_ptr = nullptr;
    if (!opt.trees_path.empty()) {
        parses = load_pair_parses(opt.trees_path);
        parses_ptr = &parses;
    }

    const auto result = rots::run_eval(dataset, loaded.pipeline, method, parses_ptr, opt.workers);

    if (opt.per_record) {
        for (std::size_t i = 0; i < result.predictions.size(); ++i) {
            nlohmann::json rec;
            rec["index"] = i;
            rec["gold"] = dataset.records[i].gold;
            if (result.predictions[i])
                rec["score"] = *result.predictions[i];
            else
                rec["score"] = nullptr;
            std::cout << rec.dump() << "\n";
        }
    }
    nlohmann::json out;
    out["method"] = rots::method_name(method);
    out["pearson_x100"] = rounded(result.pearson_x100);
    out["records"] = dataset.records.size();
    out["scored"] = result.scored;
    out["skipped"] = result.skipped;
    out["malformed_lines"] = dataset.malformed_lines;
    std::cout << out.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    try {
        apply_config_file(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"Recursive optimal transport sentence similarity"};
    app.require_subcommand(1);

    CLI::App* sim = app.add_subcommand("sim", "score one sentence pair");
    add_shared_options(sim, opt);
    sim->add_option("sentence1", opt.sentence1, "first sentence")->required();
    sim->add_option("sentence2", opt.sentence2, "second sentence")->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a gold<TAB>s1<TAB>s2 dataset");
    add_shared_options(eval, opt);
    eval->add_option("--dataset", opt.dataset_path, "TSV dataset file")->required();
    eval->add_option("--workers", opt.workers, "worker threads");
    eval->add_flag("--per-record", opt.per_record, "print one JSON line per record");

    CLI::App* inspect = app.add_subcommand("inspect", "dump the per-level similarity report");
    add_shared_options(inspect, opt);
    inspect->add_option("sentence1", opt.sentence1, "first sentence")->required();
    inspect->add_option("sentence2", opt.sentence2, "second sentence")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_sim(opt, false);
        if (eval->parsed()) return run_eval_command(opt);
        if (inspect->parsed()) return run_sim(opt, true);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
