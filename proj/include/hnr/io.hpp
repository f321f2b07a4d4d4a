#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hnr/calibration.hpp"
#include "hnr/common.hpp"
#include "hnr/evaluation.hpp"
#include "hnr/graph.hpp"
#include "hnr/rankers.hpp"

namespace hnr {

using Json = nlohmann::ordered_json;

/// 12 significant digits, the format used by every CSV the toolkit writes.
inline std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace csv {

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

struct Reader {
    explicit Reader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw ValidationError(path + ": cannot open file");
    }

    /// Returns the fields of the next non-empty row, stripping a trailing CR.
    std::optional<std::vector<std::string>> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            return split_row(line);
        }
        return std::nullopt;
    }

    void expect_header(const std::vector<std::string>& expected) {
        auto row = next();
        if (!row || *row != expected) {
            std::string want;
            for (const auto& f : expected) {
                if (!want.empty()) want += ',';
                want += f;
            }
            throw ValidationError(path_ + ": expected header '" + want + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
    }

    double parse_real(const std::string& field) const {
        try {
            std::size_t consumed = 0;
            const double v = std::stod(field, &consumed);
            if (consumed != field.size()) fail("trailing garbage in number '" + field + "'");
            return v;
        } catch (const std::invalid_argument&) {
            fail("not a number: '" + field + "'");
        } catch (const std::out_of_range&) {
            fail("number out of range: '" + field + "'");
        }
    }

    long parse_integer(const std::string& field) const {
        try {
            std::size_t consumed = 0;
            const long v = std::stol(field, &consumed);
            if (consumed != field.size()) fail("trailing garbage in integer '" + field + "'");
            return v;
        } catch (const std::exception&) {
            fail("not an integer: '" + field + "'");
        }
    }

    const std::string& path() const { return path_; }
    int line() const { return line_no_; }

private:
    std::string path_;
    std::ifstream in_;
    int line_no_ = 0;
};

}  // namespace csv

inline std::vector<EdgeRecord> read_edge_csv(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header({"source", "target", "weight"});
    std::vector<EdgeRecord> records;
    while (auto row = reader.next()) {
        if (row->size() != 3) reader.fail("expected 3 fields");
        records.push_back({(*row)[0], (*row)[1], reader.parse_real((*row)[2])});
    }
    return records;
}

namespace detail {

[[noreturn]] inline void report_offenders(const std::string& path, const std::string& what,
                                          const std::vector<std::string>& offenders) {
    std::string msg = path + ": " + what + " (" + std::to_string(offenders.size()) + "):";
    for (const auto& id : offenders) msg += " '" + id + "'";
    throw ValidationError(msg);
}

}  // namespace detail

/// Attribute CSV must cover every graph node exactly once; unknown or
/// missing node_ids are listed exhaustively before aborting.
inline AttributeMatrix read_attribute_csv(const std::string& path, const WeightedDigraph& graph) {
    csv::Reader reader(path);
    auto header = reader.next();
    if (!header || header->size() < 2 || (*header)[0] != "node_id") {
        throw ValidationError(path + ": expected header 'node_id,<attr_1>,...'");
    }
    std::vector<std::string> names(header->begin() + 1, header->end());

    const std::size_t n = graph.node_count();
    std::vector<std::vector<double>> raw(n);
    std::vector<bool> seen(n, false);
    std::vector<std::string> unknown;
    while (auto row = reader.next()) {
        if (row->size() != names.size() + 1) {
            reader.fail("expected " + std::to_string(names.size() + 1) + " fields");
        }
        if (!graph.has_node((*row)[0])) {
            unknown.push_back((*row)[0]);
            continue;
        }
        const std::uint32_t idx = graph.index_of((*row)[0]);
        if (seen[idx]) reader.fail("duplicate node_id '" + (*row)[0] + "'");
        seen[idx] = true;
        raw[idx].reserve(names.size());
        for (std::size_t j = 1; j < row->size(); ++j) {
            raw[idx].push_back(reader.parse_real((*row)[j]));
        }
    }
    if (!unknown.empty()) detail::report_offenders(path, "unknown node_ids", unknown);
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) missing.push_back(graph.node_ids()[i]);
    }
    if (!missing.empty()) detail::report_offenders(path, "nodes missing attribute rows", missing);
    return standardize_attributes(raw, std::move(names));
}

inline LabelSet read_label_csv(const std::string& path, const WeightedDigraph& graph) {
    csv::Reader reader(path);
    reader.expect_header({"node_id", "label"});
    std::vector<std::pair<std::size_t, double>> pairs;
    std::vector<std::string> unknown;
    while (auto row = reader.next()) {
        if (row->size() != 2) reader.fail("expected 2 fields");
        if (!graph.has_node((*row)[0])) {
            unknown.push_back((*row)[0]);
            continue;
        }
        pairs.emplace_back(graph.index_of((*row)[0]), reader.parse_real((*row)[1]));
    }
    if (!unknown.empty()) detail::report_offenders(path, "unknown node_ids", unknown);
    return LabelSet::from_pairs(std::move(pairs), graph.node_count());
}

/// Group CSV must cover every node; arbitrary non-negative group values are
/// remapped onto contiguous ids 0..K-1 preserving numeric order.
inline GroupAssignment read_group_csv(const std::string& path, const WeightedDigraph& graph) {
    csv::Reader reader(path);
    reader.expect_header({"node_id", "group"});
    const std::size_t n = graph.node_count();
    std::vector<long> raw(n, -1);
    std::vector<std::string> unknown;
    while (auto row = reader.next()) {
        if (row->size() != 2) reader.fail("expected 2 fields");
        if (!graph.has_node((*row)[0])) {
            unknown.push_back((*row)[0]);
            continue;
        }
        const long value = reader.parse_integer((*row)[1]);
        if (value < 0) reader.fail("group must be a non-negative integer");
        const std::uint32_t idx = graph.index_of((*row)[0]);
        if (raw[idx] >= 0) reader.fail("duplicate node_id '" + (*row)[0] + "'");
        raw[idx] = value;
    }
    if (!unknown.empty()) detail::report_offenders(path, "unknown node_ids", unknown);
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < n; ++i) {
        if (raw[i] < 0) missing.push_back(graph.node_ids()[i]);
    }
    if (!missing.empty()) detail::report_offenders(path, "nodes missing group rows", missing);

    std::set<long> distinct(raw.begin(), raw.end());
    std::map<long, std::uint32_t> remap;
    for (long value : distinct) {
        remap.emplace(value, static_cast<std::uint32_t>(remap.size()));
    }
    GroupAssignment g;
    g.group_count = static_cast<std::uint32_t>(remap.size());
    g.group_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.group_of[i] = remap.at(raw[i]);
    g.validate(n);
    return g;
}

inline std::vector<std::pair<std::string, double>> read_value_csv(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header({"node_id", "value"});
    std::vector<std::pair<std::string, double>> rows;
    while (auto row = reader.next()) {
        if (row->size() != 2) reader.fail("expected 2 fields");
        rows.emplace_back((*row)[0], reader.parse_real((*row)[1]));
    }
    return rows;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    out << content;
    if (!out) throw ValidationError(path + ": write failed");
}

inline void write_rank_csv(const std::string& path, const std::vector<std::string>& node_ids,
                           const RankVector& ranking) {
    std::string out = "node_id,score,rank\n";
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        out += node_ids[i];
        out += ',';
        out += format_score(ranking.scores[i]);
        out += ',';
        out += std::to_string(ranking.ranks[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

inline void write_exf_csv(const std::string& path,
                          const std::vector<std::pair<std::string, double>>& rows) {
    std::string out = "node_id,exf\n";
    for (const auto& [id, value] : rows) {
        out += id;
        out += ',';
        out += format_score(value);
        out += '\n';
    }
    write_text_file(path, out);
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::string out = "fraction,mean_spearman,sd_spearman\n";
    for (const auto& row : rows) {
        out += format_score(row.fraction);
        out += ',';
        out += format_score(row.mean_spearman);
        out += ',';
        out += format_score(row.sd_spearman);
        out += '\n';
    }
    write_text_file(path, out);
}

inline Json bootstrap_to_json(const BootstrapIntervals& b) {
    Json j;
    j["resamples"] = b.resamples;
    j["damping"] = b.damping;
    j["attr_weights"] = b.attr_weights;
    return j;
}

inline Json model_to_json(const CalibrationResult& result,
                          const std::vector<std::string>& attribute_names) {
    Json j;
    j["groups"] = result.best_params.group_count();
    j["damping"] = result.best_params.damping;
    j["attr_weights"] = result.best_params.attr_weights;
    j["attribute_names"] = attribute_names;
    j["loss"] = loss_name(result.loss);
    j["best_fitness"] = result.best_fitness;
    j["fitness_history"] = Json{{"best", result.history.best}, {"mean", result.history.mean}};
    if (result.bootstrap) j["bootstrap"] = bootstrap_to_json(*result.bootstrap);
    return j;
}

struct ModelFile {
    HnrParams params;
    std::vector<std::string> attribute_names;
};

inline ModelFile model_from_json(const Json& j) {
    ModelFile m;
    try {
        const std::size_t groups = j.at("groups").get<std::size_t>();
        m.params.damping = j.at("damping").get<std::vector<double>>();
        m.params.attr_weights = j.at("attr_weights").get<std::vector<std::vector<double>>>();
        m.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
        if (m.params.damping.size() != groups || m.params.attr_weights.size() != groups) {
            throw ValidationError("model: group count mismatch");
        }
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("model: malformed JSON (") + e.what() + ")");
    }
    m.params.validate(m.params.group_count(), m.attribute_names.size());
    return m;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open file");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
    }
}

inline void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline Json report_to_json(const EvaluationReport& report) {
    Json j;
    j["overall_spearman"] = report.overall_spearman;
    if (report.p_value) j["p_value"] = *report.p_value;
    Json parts = Json::array();
    for (const auto& part : report.per_ht) {
        parts.push_back(Json{{"level", part.level},
                             {"part", part.head ? "head" : "tail"},
                             {"n", part.n},
                             {"spearman", part.spearman}});
    }
    j["per_ht"] = std::move(parts);
    j["n_evaluated"] = report.n_evaluated;
    return j;
}

inline Json cv_to_json(const CvSummary& summary) {
    Json j;
    j["train_fraction"] = summary.train_fraction;
    j["train_size"] = summary.train_size;
    j["repeats"] = summary.repeats;
    j["per_repeat_spearman"] = summary.per_repeat;
    j["mean_spearman"] = summary.mean;
    j["sd_spearman"] = summary.sd;
    return j;
}

inline Json ht_partition_to_json(const HtPartition& part,
                                 const std::vector<std::string>& node_ids) {
    Json levels = Json::array();
    for (const auto& lvl : part.levels) {
        Json entry;
        entry["level"] = lvl.level;
        Json head = Json::array(), tail = Json::array();
        for (std::size_t i : lvl.head) head.push_back(node_ids[i]);
        for (std::size_t i : lvl.tail) tail.push_back(node_ids[i]);
        entry["head"] = std::move(head);
        entry["tail"] = std::move(tail);
        levels.push_back(std::move(entry));
    }
    return Json{{"levels", std::move(levels)}};
}

/// Calibration config file: `key = value` lines, '#' comments. Recognized
/// keys: population, generations, tournament_size, crossover_rate,
/// mutation_sigma, mutation_rate, elitism, target_loss, loss, optimizer,
/// seed, tol, max_iter.
struct ConfigFile {
    EvolutionConfig config;
    std::optional<std::uint64_t> seed;
};

inline ConfigFile parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open file");
    ConfigFile out;
    std::string line;
    int line_no = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "population") out.config.population = std::stoi(value);
            else if (key == "generations") out.config.generations = std::stoi(value);
            else if (key == "tournament_size") out.config.tournament_size = std::stoi(value);
            else if (key == "crossover_rate") out.config.crossover_rate = std::stod(value);
            else if (key == "mutation_sigma") out.config.mutation_sigma = std::stod(value);
            else if (key == "mutation_rate") out.config.mutation_rate = std::stod(value);
            else if (key == "elitism") out.config.elitism = std::stoi(value);
            else if (key == "target_loss") out.config.target_loss = std::stod(value);
            else if (key == "loss") out.config.loss = parse_loss(value);
            else if (key == "optimizer") out.config.optimizer = parse_optimizer(value);
            else if (key == "seed") out.seed = std::stoull(value);
            else if (key == "tol") out.config.tol = std::stod(value);
            else if (key == "max_iter") out.config.max_iter = std::stoi(value);
            else {
                throw ValidationError(path + ":" + std::to_string(line_no) + ": unknown key '" +
                                      key + "'");
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": bad value for '" +
                                  key + "'");
        }
    }
    return out;
}

}  // namespace hnr
