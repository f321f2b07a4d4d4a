// hnr: node-influence ranking toolkit command line.
//
// Subcommands: rank, calibrate, evaluate, cv, sweep, htbreaks, synth.
// Every command writes its primary outputs plus a manifest.json recording
// the resolved configuration and SHA-256 digests of all inputs, so a run
// can be reproduced byte-for-byte from the manifest and the same seed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "hnr/hnr.hpp"

namespace {

using hnr::Json;
using hnr::ValidationError;

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitConvergence = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open for digesting");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (in.good()) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

struct GlobalOptions {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = ".";
    bool quiet = false;
};

struct RunContext {
    GlobalOptions global;
    std::string command;
    Json config = Json::object();
    std::map<std::string, std::string> input_digests;
    std::vector<std::string> outputs;

    void track_input(const std::string& path) { input_digests[path] = sha256_file(path); }

    std::string out_path(const std::string& name) {
        std::filesystem::create_directories(global.out_dir);
        outputs.push_back(name);
        return (std::filesystem::path(global.out_dir) / name).string();
    }

    void info(const std::string& msg) const {
        if (!global.quiet) std::cerr << msg << "\n";
    }

    void write_manifest(std::chrono::milliseconds duration) {
        Json manifest;
        manifest["command"] = command;
        manifest["version"] = hnr::kVersion;
        manifest["seed"] = global.seed;
        manifest["threads"] = global.threads;
        manifest["config"] = config;
        Json inputs = Json::object();
        for (const auto& [path, digest] : input_digests) inputs[path] = digest;
        manifest["inputs"] = std::move(inputs);
        manifest["outputs"] = outputs;
        manifest["duration_ms"] = duration.count();
        std::filesystem::create_directories(global.out_dir);
        hnr::write_json_file(
            (std::filesystem::path(global.out_dir) / "manifest.json").string(), manifest);
    }
};

// ---------------------------------------------------------------------------
// shared ingestion helpers

hnr::WeightedDigraph load_graph(RunContext& ctx, const std::string& edges_path) {
    ctx.track_input(edges_path);
    return hnr::build_graph(hnr::read_edge_csv(edges_path));
}

hnr::GroupAssignment load_groups(RunContext& ctx, const hnr::WeightedDigraph& graph,
                                 const std::string& groups_arg, int auto_levels) {
    if (groups_arg == "auto") {
        return hnr::assign_groups_default(graph, auto_levels);
    }
    ctx.track_input(groups_arg);
    return hnr::read_group_csv(groups_arg, graph);
}

struct RankCsv {
    std::vector<std::string> node_ids;
    std::vector<double> scores;
};

RankCsv read_rank_csv(const std::string& path) {
    hnr::csv::Reader reader(path);
    reader.expect_header({"node_id", "score", "rank"});
    RankCsv out;
    while (auto row = reader.next()) {
        if (row->size() != 3) reader.fail("expected 3 fields");
        out.node_ids.push_back((*row)[0]);
        out.scores.push_back(reader.parse_real((*row)[1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
    std::string algo;
    std::string edges;
    std::string attrs;
    std::string params;
    std::string groups = "auto";
    int group_levels = 1;
    double damping = 0.85;
    double gamma = 0.0;
    int damping_samples = 64;
    std::string node;
    double tol = 1e-9;
    int max_iter = 1000;
};

void cmd_rank(RunContext& ctx, const RankArgs& args) {
    const std::set<std::string> algos{"pagerank", "wpr", "attrirank", "exf", "hnr"};
    if (!algos.count(args.algo)) {
        throw UsageError("rank: unknown --algo '" + args.algo +
                         "' (expected pagerank|wpr|attrirank|exf|hnr)");
    }
    if (args.algo == "attrirank" && args.attrs.empty()) {
        throw UsageError("rank: --attrs is required for --algo attrirank");
    }
    if (args.algo == "hnr" && args.params.empty()) {
        throw UsageError("rank: --params is required for --algo hnr");
    }

    ctx.config["algo"] = args.algo;
    ctx.config["tol"] = args.tol;
    ctx.config["max_iter"] = args.max_iter;
    const hnr::WeightedDigraph graph = load_graph(ctx, args.edges);

    if (args.algo == "exf") {
        std::vector<std::pair<std::string, double>> rows;
        if (!args.node.empty()) {
            ctx.config["node"] = args.node;
            rows.emplace_back(args.node, hnr::expected_force(graph, graph.index_of(args.node)));
        } else {
            for (std::size_t i = 0; i < graph.node_count(); ++i) {
                try {
                    rows.emplace_back(graph.node_ids()[i], hnr::expected_force(graph, i));
                } catch (const ValidationError&) {
                    ctx.info("exf: skipping node '" + graph.node_ids()[i] +
                             "' (insufficient neighborhood)");
                }
            }
        }
        hnr::write_exf_csv(ctx.out_path("exf.csv"), rows);
        return;
    }

    hnr::RankVector ranking;
    if (args.algo == "pagerank") {
        ctx.config["damping"] = args.damping;
        ranking = hnr::pagerank(graph, args.damping, args.tol, args.max_iter);
    } else if (args.algo == "wpr") {
        ctx.config["damping"] = args.damping;
        ranking = hnr::weighted_pagerank(graph, args.damping, args.tol, args.max_iter);
    } else if (args.algo == "attrirank") {
        ctx.track_input(args.attrs);
        const hnr::AttributeMatrix attrs = hnr::read_attribute_csv(args.attrs, graph);
        hnr::AttriRankOptions opts;
        opts.gamma = args.gamma;
        opts.damping_samples = args.damping_samples;
        opts.seed = ctx.global.seed;
        opts.tol = args.tol;
        opts.max_iter = args.max_iter;
        ctx.config["gamma"] =
            opts.gamma > 0.0 ? opts.gamma : 1.0 / static_cast<double>(attrs.cols());
        ctx.config["damping_samples"] = opts.damping_samples;
        ranking = hnr::attrirank(graph, attrs, opts);
    } else {  // hnr
        ctx.track_input(args.params);
        const hnr::ModelFile model = hnr::model_from_json(hnr::read_json_file(args.params));
        hnr::AttributeMatrix attrs;
        if (model.attribute_names.empty()) {
            attrs = hnr::AttributeMatrix::empty(graph.node_count());
        } else {
            if (args.attrs.empty()) {
                throw UsageError("rank: --attrs is required for --algo hnr with this model");
            }
            ctx.track_input(args.attrs);
            attrs = hnr::read_attribute_csv(args.attrs, graph);
            if (attrs.names() != model.attribute_names) {
                throw ValidationError("rank: attribute columns do not match the model");
            }
        }
        hnr::GroupAssignment groups =
            model.params.group_count() == 1
                ? hnr::GroupAssignment::single_group(graph.node_count())
                : load_groups(ctx, graph, args.groups, args.group_levels);
        if (groups.group_count != model.params.group_count()) {
            throw ValidationError("rank: grouping has " + std::to_string(groups.group_count) +
                                  " groups but the model expects " +
                                  std::to_string(model.params.group_count()));
        }
        ctx.config["groups"] = model.params.group_count();
        ranking = hnr::hnr_rank(graph, attrs, groups, model.params, args.tol, args.max_iter);
    }
    hnr::write_rank_csv(ctx.out_path("ranks.csv"), graph.node_ids(), ranking);
}

// ---------------------------------------------------------------------------
// calibrate / cv / sweep share configuration plumbing

struct CalibArgs {
    std::string edges;
    std::string attrs;
    std::string labels;
    std::string groups = "auto";
    int group_levels = 1;
    std::string model_variant = "el";
    std::string config_path;
    std::string optimizer;
    std::string loss;
    int population = 0;
    int generations = 0;
    double target_loss = -1.0;
    int bootstrap = 0;
    double train_fraction = 0.3;
    int repeats = 10;
    std::string fractions;
    bool stratified = false;
};

struct CalibSetup {
    hnr::WeightedDigraph graph;
    hnr::AttributeMatrix attrs;
    hnr::GroupAssignment groups;
    hnr::LabelSet labels;
    hnr::EvolutionConfig config;
    std::vector<std::string> attribute_names;
};

CalibSetup prepare_calibration(RunContext& ctx, const CalibArgs& args, CLI::App* cmd) {
    CalibSetup setup;
    setup.graph = load_graph(ctx, args.edges);
    ctx.track_input(args.attrs);
    const hnr::AttributeMatrix file_attrs = hnr::read_attribute_csv(args.attrs, setup.graph);
    ctx.track_input(args.labels);
    setup.labels = hnr::read_label_csv(args.labels, setup.graph);

    if (args.model_variant == "el") {
        setup.attrs = file_attrs;
        setup.groups = load_groups(ctx, setup.graph, args.groups, args.group_levels);
    } else if (args.model_variant == "e") {
        // uniform damping variant: one shared group, attributes active
        setup.attrs = file_attrs;
        setup.groups = hnr::GroupAssignment::single_group(setup.graph.node_count());
    } else if (args.model_variant == "l") {
        // local damping variant: uniform teleportation, no attribute terms
        setup.attrs = hnr::AttributeMatrix::empty(setup.graph.node_count());
        setup.groups = load_groups(ctx, setup.graph, args.groups, args.group_levels);
    } else {
        throw UsageError("--model must be el, e or l");
    }
    setup.attribute_names = setup.attrs.names();

    if (!args.config_path.empty()) {
        ctx.track_input(args.config_path);
        const hnr::ConfigFile file = hnr::parse_config_file(args.config_path);
        setup.config = file.config;
        if (file.seed && cmd->get_option("--seed")->count() == 0) {
            ctx.global.seed = *file.seed;
        }
    }
    if (!args.optimizer.empty()) setup.config.optimizer = hnr::parse_optimizer(args.optimizer);
    if (!args.loss.empty()) setup.config.loss = hnr::parse_loss(args.loss);
    if (args.population > 0) setup.config.population = args.population;
    if (args.generations > 0) setup.config.generations = args.generations;
    if (args.target_loss >= 0.0) setup.config.target_loss = args.target_loss;
    setup.config.threads = ctx.global.threads;
    setup.config.validate();

    ctx.config["model"] = args.model_variant;
    ctx.config["groups"] = setup.groups.group_count;
    ctx.config["optimizer"] = hnr::optimizer_name(setup.config.optimizer);
    ctx.config["loss"] = hnr::loss_name(setup.config.loss);
    ctx.config["population"] = setup.config.population;
    ctx.config["generations"] = setup.config.generations;
    ctx.config["tournament_size"] = setup.config.tournament_size;
    ctx.config["crossover_rate"] = setup.config.crossover_rate;
    ctx.config["mutation_sigma"] = setup.config.mutation_sigma;
    ctx.config["mutation_rate"] = setup.config.mutation_rate;
    ctx.config["elitism"] = setup.config.elitism;
    ctx.config["target_loss"] = setup.config.target_loss;
    ctx.config["tol"] = setup.config.tol;
    ctx.config["max_iter"] = setup.config.max_iter;
    return setup;
}

void cmd_calibrate(RunContext& ctx, const CalibArgs& args, CLI::App* cmd) {
    CalibSetup setup = prepare_calibration(ctx, args, cmd);
    hnr::CalibrationResult result =
        hnr::calibrate(setup.graph, setup.attrs, setup.groups, setup.labels, setup.config,
                       ctx.global.seed);
    if (args.bootstrap > 0) {
        ctx.config["bootstrap"] = args.bootstrap;
        result.bootstrap =
            hnr::bootstrap_coefficients(setup.graph, setup.attrs, setup.groups, setup.labels,
                                        setup.config, args.bootstrap, ctx.global.seed);
    }
    hnr::write_json_file(ctx.out_path("model.json"),
                         hnr::model_to_json(result, setup.attribute_names));
    ctx.info("calibrate: best loss " + hnr::format_score(result.best_loss) + " (" +
             hnr::loss_name(result.loss) + ")");
}

void cmd_cv(RunContext& ctx, const CalibArgs& args, CLI::App* cmd) {
    CalibSetup setup = prepare_calibration(ctx, args, cmd);
    hnr::CvOptions options;
    options.train_fraction = args.train_fraction;
    options.repeats = args.repeats;
    options.stratified = args.stratified;
    ctx.config["train_fraction"] = options.train_fraction;
    ctx.config["repeats"] = options.repeats;
    ctx.config["stratified"] = options.stratified;
    const hnr::CvSummary summary =
        hnr::cross_validate(setup.graph, setup.attrs, setup.groups, setup.labels, setup.config,
                            options, ctx.global.seed);
    hnr::write_json_file(ctx.out_path("cv.json"), hnr::cv_to_json(summary));
    ctx.info("cv: mean test spearman " + hnr::format_score(summary.mean));
}

void cmd_sweep(RunContext& ctx, const CalibArgs& args, CLI::App* cmd) {
    CalibSetup setup = prepare_calibration(ctx, args, cmd);
    std::vector<double> fractions;
    if (args.fractions.empty()) {
        fractions = hnr::decile_fractions();
    } else {
        std::stringstream ss(args.fractions);
        std::string token;
        while (std::getline(ss, token, ',')) {
            try {
                fractions.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw UsageError("sweep: bad fraction '" + token + "'");
            }
        }
    }
    ctx.config["fractions"] = fractions;
    ctx.config["repeats"] = args.repeats;
    const auto rows = hnr::sample_size_sweep(setup.graph, setup.attrs, setup.groups, setup.labels,
                                             setup.config, fractions, args.repeats,
                                             ctx.global.seed);
    hnr::write_sweep_csv(ctx.out_path("sweep.csv"), rows);
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string ranks;
    std::string labels;
    std::string partition_on = "labels";
    double cap = 0.4;
};

void cmd_evaluate(RunContext& ctx, const EvaluateArgs& args) {
    if (args.partition_on != "labels" && args.partition_on != "scores") {
        throw UsageError("evaluate: --partition-on must be labels or scores");
    }
    ctx.track_input(args.ranks);
    ctx.track_input(args.labels);
    ctx.config["partition_on"] = args.partition_on;
    ctx.config["head_fraction_cap"] = args.cap;

    const RankCsv ranks = read_rank_csv(args.ranks);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ranks.node_ids.size(); ++i) index[ranks.node_ids[i]] = i;

    hnr::csv::Reader reader(args.labels);
    reader.expect_header({"node_id", "label"});
    std::vector<std::pair<std::size_t, double>> pairs;
    while (auto row = reader.next()) {
        if (row->size() != 2) reader.fail("expected 2 fields");
        auto it = index.find((*row)[0]);
        if (it == index.end()) continue;  // evaluation runs on the intersection
        pairs.emplace_back(it->second, reader.parse_real((*row)[1]));
    }
    if (pairs.size() < 3) {
        throw ValidationError("evaluate: fewer than 3 nodes shared between ranks and labels");
    }
    const hnr::LabelSet labels = hnr::LabelSet::from_pairs(std::move(pairs), ranks.scores.size());
    const hnr::RankVector ranking = hnr::make_rank_vector(ranks.scores, 0, 0.0);
    const hnr::EvaluationReport report = hnr::ht_level_report(
        ranking, labels,
        args.partition_on == "labels" ? hnr::PartitionOn::Labels : hnr::PartitionOn::Scores,
        args.cap);
    hnr::write_json_file(ctx.out_path("report.json"), hnr::report_to_json(report));
    ctx.info("evaluate: overall spearman " + hnr::format_score(report.overall_spearman));
}

// ---------------------------------------------------------------------------
// htbreaks

struct HtbreaksArgs {
    std::string values;
    double cap = 0.4;
};

void cmd_htbreaks(RunContext& ctx, const HtbreaksArgs& args) {
    ctx.track_input(args.values);
    ctx.config["head_fraction_cap"] = args.cap;
    const auto rows = hnr::read_value_csv(args.values);
    if (rows.size() < 2) throw ValidationError("htbreaks: need at least 2 values");
    std::vector<std::string> ids;
    std::vector<double> values;
    for (const auto& [id, v] : rows) {
        ids.push_back(id);
        values.push_back(v);
    }
    const hnr::HtPartition part = hnr::head_tail_breaks(values, args.cap);
    hnr::write_json_file(ctx.out_path("htbreaks.json"), hnr::ht_partition_to_json(part, ids));
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::size_t nodes = 300;
    int groups = 2;
    int attrs = 3;
    double noise_sd = 0.0;
    int edges_per_node = 3;
    std::string hidden_damping;
};

void cmd_synth(RunContext& ctx, const SynthArgs& args) {
    hnr::SynthOptions options;
    options.nodes = args.nodes;
    options.groups = args.groups;
    options.attrs = args.attrs;
    options.noise_sd = args.noise_sd;
    options.edges_per_node = args.edges_per_node;
    if (!args.hidden_damping.empty()) {
        std::stringstream ss(args.hidden_damping);
        std::string token;
        while (std::getline(ss, token, ',')) {
            try {
                options.hidden_damping.push_back(std::stod(token));
            } catch (const std::exception&) {
                throw UsageError("synth: bad damping value '" + token + "'");
            }
        }
    }
    ctx.config["nodes"] = options.nodes;
    ctx.config["groups"] = options.groups;
    ctx.config["attrs"] = options.attrs;
    ctx.config["noise_sd"] = options.noise_sd;
    ctx.config["edges_per_node"] = options.edges_per_node;
    if (!options.hidden_damping.empty()) ctx.config["hidden_damping"] = options.hidden_damping;

    const hnr::SyntheticDataset data = hnr::generate_synthetic(options, ctx.global.seed);

    std::string edges = "source,target,weight\n";
    for (const auto& e : data.graph.edges()) {
        edges += data.graph.node_ids()[e.source];
        edges += ',';
        edges += data.graph.node_ids()[e.target];
        edges += ',';
        edges += hnr::format_score(e.weight);
        edges += '\n';
    }
    hnr::write_text_file(ctx.out_path("edges.csv"), edges);

    std::string attrs = "node_id";
    for (const auto& name : data.attrs.names()) attrs += "," + name;
    attrs += '\n';
    for (std::size_t i = 0; i < data.attrs.rows(); ++i) {
        attrs += data.graph.node_ids()[i];
        for (std::size_t j = 0; j < data.attrs.cols(); ++j) {
            attrs += ',';
            attrs += hnr::format_score(data.attrs(i, j));
        }
        attrs += '\n';
    }
    hnr::write_text_file(ctx.out_path("attributes.csv"), attrs);

    std::string labels = "node_id,label\n";
    for (const auto& [node, value] : data.labels.entries) {
        labels += data.graph.node_ids()[node];
        labels += ',';
        labels += hnr::format_score(value);
        labels += '\n';
    }
    hnr::write_text_file(ctx.out_path("labels.csv"), labels);

    std::string groups = "node_id,group\n";
    for (std::size_t i = 0; i < data.graph.node_count(); ++i) {
        groups += data.graph.node_ids()[i];
        groups += ',';
        groups += std::to_string(data.groups.group_of[i]);
        groups += '\n';
    }
    hnr::write_text_file(ctx.out_path("groups.csv"), groups);

    Json hidden;
    hidden["groups"] = data.hidden_params.group_count();
    hidden["damping"] = data.hidden_params.damping;
    hidden["attr_weights"] = data.hidden_params.attr_weights;
    hidden["attribute_names"] = data.attrs.names();
    hnr::write_json_file(ctx.out_path("hidden_params.json"), hidden);
    ctx.info("synth: wrote " + std::to_string(data.graph.node_count()) + " nodes, " +
             std::to_string(data.graph.edges().size()) + " edges, " +
             std::to_string(data.groups.group_count) + " groups");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hnr " + std::string(hnr::kVersion) +
                 " - node influence ranking, calibration and evaluation"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "root seed for all randomness")->capture_default_str();
    app.add_option("--threads", global.threads, "worker threads (results are order-invariant)")
        ->capture_default_str();
    app.add_option("--out-dir", global.out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", global.quiet, "suppress progress notes");

    RankArgs rank_args;
    CLI::App* rank = app.add_subcommand("rank", "run a ranking algorithm over an edge list");
    rank->add_option("--algo", rank_args.algo, "pagerank|wpr|attrirank|exf|hnr")->required();
    rank->add_option("--edges", rank_args.edges, "edge CSV (source,target,weight)")->required();
    rank->add_option("--attrs", rank_args.attrs, "attribute CSV (node_id,<attrs...>)");
    rank->add_option("--params", rank_args.params, "model JSON for --algo hnr");
    rank->add_option("--groups", rank_args.groups, "'auto' or group CSV for --algo hnr");
    rank->add_option("--group-levels", rank_args.group_levels,
                     "head/tail depth for --groups auto");
    rank->add_option("--damping", rank_args.damping, "damping for pagerank/wpr")
        ->capture_default_str();
    rank->add_option("--gamma", rank_args.gamma, "attrirank RBF gamma (default 1/m)");
    rank->add_option("--damping-samples", rank_args.damping_samples,
                     "attrirank Beta(2,3) draws")
        ->capture_default_str();
    rank->add_option("--node", rank_args.node, "restrict exf to one node");
    rank->add_option("--tol", rank_args.tol, "convergence tolerance")->capture_default_str();
    rank->add_option("--max-iter", rank_args.max_iter, "iteration cap")->capture_default_str();

    auto add_calibration_options = [](CLI::App* cmd, CalibArgs& args) {
        cmd->add_option("--edges", args.edges, "edge CSV")->required();
        cmd->add_option("--attrs", args.attrs, "attribute CSV")->required();
        cmd->add_option("--labels", args.labels, "label CSV (node_id,label)")->required();
        cmd->add_option("--groups", args.groups, "'auto' or group CSV")->capture_default_str();
        cmd->add_option("--group-levels", args.group_levels, "head/tail depth for auto grouping")
            ->capture_default_str();
        cmd->add_option("--model", args.model_variant,
                        "el (full), e (uniform damping) or l (uniform teleport)")
            ->capture_default_str();
        cmd->add_option("--config", args.config_path, "key=value config file");
        cmd->add_option("--optimizer", args.optimizer, "ga or de");
        cmd->add_option("--loss", args.loss, "l1, l2 or neg_spearman");
        cmd->add_option("--population", args.population, "population size override");
        cmd->add_option("--generations", args.generations, "generation budget override");
        cmd->add_option("--target-loss", args.target_loss, "early-stop loss threshold");
    };

    CalibArgs calibrate_args;
    CLI::App* calibrate = app.add_subcommand("calibrate", "fit model parameters to labels");
    add_calibration_options(calibrate, calibrate_args);
    calibrate->add_option("--bootstrap", calibrate_args.bootstrap,
                          "bootstrap resamples for parameter intervals (0 = off)");

    CalibArgs cv_args;
    CLI::App* cv = app.add_subcommand("cv", "repeated train/test cross-validation");
    add_calibration_options(cv, cv_args);
    cv->add_option("--train-frac", cv_args.train_fraction, "training fraction")
        ->capture_default_str();
    cv->add_option("--repeats", cv_args.repeats, "number of repeats")->capture_default_str();
    cv->add_flag("--stratified", cv_args.stratified, "stratify splits by label ht level");

    CalibArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "cross-validation across sample fractions");
    add_calibration_options(sweep, sweep_args);
    sweep->add_option("--fractions", sweep_args.fractions,
                      "comma-separated train fractions (default deciles)");
    sweep->add_option("--repeats", sweep_args.repeats, "repeats per fraction")
        ->capture_default_str();

    EvaluateArgs evaluate_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a ranking against labels");
    evaluate->add_option("--ranks", evaluate_args.ranks, "rank CSV from the rank command")
        ->required();
    evaluate->add_option("--labels", evaluate_args.labels, "label CSV")->required();
    evaluate->add_option("--partition-on", evaluate_args.partition_on, "labels or scores")
        ->capture_default_str();
    evaluate->add_option("--cap", evaluate_args.cap, "head fraction cap")->capture_default_str();

    HtbreaksArgs htbreaks_args;
    CLI::App* htbreaks = app.add_subcommand("htbreaks", "head/tail breaks partition of values");
    htbreaks->add_option("--values", htbreaks_args.values, "value CSV (node_id,value)")
        ->required();
    htbreaks->add_option("--cap", htbreaks_args.cap, "head fraction cap")->capture_default_str();

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    synth->add_option("--nodes", synth_args.nodes, "node count")->capture_default_str();
    synth->add_option("--groups", synth_args.groups, "requested group count")
        ->capture_default_str();
    synth->add_option("--attrs", synth_args.attrs, "attribute count")->capture_default_str();
    synth->add_option("--noise-sd", synth_args.noise_sd, "label noise sd")
        ->capture_default_str();
    synth->add_option("--edges-per-node", synth_args.edges_per_node,
                      "preferential attachment out-edges")
        ->capture_default_str();
    synth->add_option("--hidden-damping", synth_args.hidden_damping,
                      "comma-separated per-group damping overriding the random draw");

    // global flags may appear after the subcommand too
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    RunContext ctx;
    ctx.global = global;
    const auto start = std::chrono::steady_clock::now();
    try {
        if (rank->parsed()) {
            ctx.command = "rank";
            cmd_rank(ctx, rank_args);
        } else if (calibrate->parsed()) {
            ctx.command = "calibrate";
            cmd_calibrate(ctx, calibrate_args, &app);
        } else if (cv->parsed()) {
            ctx.command = "cv";
            cmd_cv(ctx, cv_args, &app);
        } else if (sweep->parsed()) {
            ctx.command = "sweep";
            cmd_sweep(ctx, sweep_args, &app);
        } else if (evaluate->parsed()) {
            ctx.command = "evaluate";
            cmd_evaluate(ctx, evaluate_args);
        } else if (htbreaks->parsed()) {
            ctx.command = "htbreaks";
            cmd_htbreaks(ctx, htbreaks_args);
        } else if (synth->parsed()) {
            ctx.command = "synth";
            cmd_synth(ctx, synth_args);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const hnr::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    const auto duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    ctx.write_manifest(duration);
    return 0;
}
