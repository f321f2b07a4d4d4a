// End-to-end tests driving the hnr binary the way a user would.
#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "hnr/hnr.hpp"

using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() /
               ("hnr_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }
    std::string dir(const std::string& name) const { return (root / name).string(); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (root / name).string();
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(HNR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("rank with zero damping is pure teleport") {
    Workspace ws;
    ws.file("edges.csv", "source,target,weight\na,b,1\nb,c,2\nc,a,4\n");
    REQUIRE(run("--out-dir " + ws.dir("out") + " rank --algo pagerank --edges " +
                ws.dir("edges.csv") + " --damping 0") == 0);
    const auto content = slurp(ws.dir("out") + "/ranks.csv");
    CHECK(content.find("node_id,score,rank") == 0);
    CHECK(content.find("0.333333333333") != std::string::npos);
}

TEST_CASE("exf on a path gives zero for the end node") {
    Workspace ws;
    ws.file("path3.csv", "source,target,weight\na,b,1\nb,c,1\n");
    REQUIRE(run("--out-dir " + ws.dir("out") + " rank --algo exf --edges " + ws.dir("path3.csv") +
                " --node a") == 0);
    CHECK(slurp(ws.dir("out") + "/exf.csv") == "node_id,exf\na,0\n");
}

TEST_CASE("usage errors exit with code 2") {
    Workspace ws;
    ws.file("edges.csv", "source,target,weight\na,b,1\n");
    CHECK(run("rank --edges " + ws.dir("edges.csv")) == 2);  // missing --algo
    CHECK(run("rank --algo nosuch --edges " + ws.dir("edges.csv")) == 2);
    CHECK(run("rank --algo hnr --edges " + ws.dir("edges.csv")) == 2);  // missing --params
    CHECK(run("definitely-not-a-command") == 2);
}

TEST_CASE("validation errors exit with code 3") {
    Workspace ws;
    ws.file("edges.csv", "source,target,weight\na,b,-5\n");
    CHECK(run("--out-dir " + ws.dir("out") + " rank --algo pagerank --edges " +
              ws.dir("edges.csv")) == 3);
    ws.file("ok.csv", "source,target,weight\na,b,1\nb,a,1\n");
    ws.file("attrs.csv", "node_id,x\na,1\nb,2\n");
    ws.file("labels.csv", "node_id,label\nbogus,3\n");
    CHECK(run("--out-dir " + ws.dir("out") + " calibrate --edges " + ws.dir("ok.csv") +
              " --attrs " + ws.dir("attrs.csv") + " --labels " + ws.dir("labels.csv")) == 3);
}

TEST_CASE("convergence failure exits with code 4") {
    Workspace ws;
    ws.file("edges.csv", "source,target,weight\na,b,1\nb,c,1\nc,a,1\na,c,3\n");
    CHECK(run("--out-dir " + ws.dir("out") + " rank --algo pagerank --edges " +
              ws.dir("edges.csv") + " --damping 0.9 --max-iter 1 --tol 1e-15") == 4);
}

TEST_CASE("synthetic pipeline calibrates, ranks and evaluates") {
    Workspace ws;
    const std::string synth = ws.dir("synth");
    REQUIRE(run("--seed 1 --out-dir " + synth + " synth --nodes 120 --groups 2 --attrs 3") == 0);
    REQUIRE(fs::exists(synth + "/edges.csv"));
    REQUIRE(fs::exists(synth + "/manifest.json"));

    const std::string model = ws.dir("model");
    REQUIRE(run("--seed 2 --out-dir " + model + " calibrate --edges " + synth +
                "/edges.csv --attrs " + synth + "/attributes.csv --labels " + synth +
                "/labels.csv --groups " + synth +
                "/groups.csv --population 30 --generations 30") == 0);

    const std::string ranks = ws.dir("ranks");
    REQUIRE(run("--out-dir " + ranks + " rank --algo hnr --edges " + synth +
                "/edges.csv --attrs " + synth + "/attributes.csv --params " + model +
                "/model.json --groups " + synth + "/groups.csv") == 0);

    const std::string eval = ws.dir("eval");
    REQUIRE(run("--out-dir " + eval + " evaluate --ranks " + ranks + "/ranks.csv --labels " +
                synth + "/labels.csv") == 0);
    const auto report = hnr::read_json_file(eval + "/report.json");
    CHECK(report.at("overall_spearman").get<double>() >= 0.95);
    CHECK(report.at("n_evaluated").get<int>() == 120);

    SECTION("exported model reproduces the calibrated ranking") {
        const auto graph = hnr::build_graph(hnr::read_edge_csv(synth + "/edges.csv"));
        const auto attrs = hnr::read_attribute_csv(synth + "/attributes.csv", graph);
        const auto groups = hnr::read_group_csv(synth + "/groups.csv", graph);
        const auto m = hnr::model_from_json(hnr::read_json_file(model + "/model.json"));
        const auto want = hnr::hnr_rank(graph, attrs, groups, m.params);

        hnr::csv::Reader reader(ranks + "/ranks.csv");
        reader.expect_header({"node_id", "score", "rank"});
        while (auto row = reader.next()) {
            const auto idx = graph.index_of((*row)[0]);
            CHECK_THAT(reader.parse_real((*row)[1]), WithinAbs(want.scores[idx], 1e-10));
        }
    }
}

TEST_CASE("seeded commands are byte-identical across runs") {
    Workspace ws;
    for (const char* dir : {"s1", "s2"}) {
        REQUIRE(run("--seed 9 --out-dir " + ws.dir(dir) +
                    " synth --nodes 50 --groups 2 --attrs 2 --noise-sd 0.05") == 0);
    }
    for (const char* name : {"edges.csv", "attributes.csv", "labels.csv", "groups.csv",
                             "hidden_params.json"}) {
        CHECK(slurp(ws.dir("s1") + "/" + name) == slurp(ws.dir("s2") + "/" + name));
    }

    for (const char* dir : {"m1", "m2"}) {
        REQUIRE(run("--seed 5 --out-dir " + ws.dir(dir) + " calibrate --edges " + ws.dir("s1") +
                    "/edges.csv --attrs " + ws.dir("s1") + "/attributes.csv --labels " +
                    ws.dir("s1") + "/labels.csv --population 8 --generations 4") == 0);
    }
    CHECK(slurp(ws.dir("m1") + "/model.json") == slurp(ws.dir("m2") + "/model.json"));
}

TEST_CASE("cv on a paper-sized label set") {
    Workspace ws;
    const std::string synth = ws.dir("synth");
    REQUIRE(run("--seed 3 --out-dir " + synth + " synth --nodes 272 --groups 2 --attrs 2") == 0);
    const std::string out = ws.dir("cv");
    REQUIRE(run("--seed 3 --out-dir " + out + " cv --edges " + synth + "/edges.csv --attrs " +
                synth + "/attributes.csv --labels " + synth + "/labels.csv --train-frac 0.3 "
                "--repeats 10 --population 6 --generations 2") == 0);
    const auto cv = hnr::read_json_file(out + "/cv.json");
    CHECK(cv.at("repeats").get<int>() == 10);
    CHECK(cv.at("train_size").get<int>() == 82);
    CHECK(cv.at("per_repeat_spearman").size() == 10);
}

TEST_CASE("htbreaks handles constant values") {
    Workspace ws;
    ws.file("values.csv", "node_id,value\na,3\nb,3\nc,3\n");
    REQUIRE(run("--out-dir " + ws.dir("out") + " htbreaks --values " + ws.dir("values.csv")) == 0);
    const auto j = hnr::read_json_file(ws.dir("out") + "/htbreaks.json");
    REQUIRE(j.at("levels").size() == 1);
    CHECK(j.at("levels")[0].at("head").empty());
    CHECK(j.at("levels")[0].at("tail").size() == 3);
}

TEST_CASE("sweep emits one row per fraction") {
    Workspace ws;
    const std::string synth = ws.dir("synth");
    REQUIRE(run("--seed 4 --out-dir " + synth + " synth --nodes 40 --groups 1 --attrs 2") == 0);
    const std::string out = ws.dir("sweep");
    REQUIRE(run("--seed 4 --out-dir " + out + " sweep --edges " + synth + "/edges.csv --attrs " +
                synth + "/attributes.csv --labels " + synth + "/labels.csv "
                "--fractions 0.3,0.6 --repeats 2 --population 6 --generations 2") == 0);
    const auto content = slurp(out + "/sweep.csv");
    CHECK(content.find("fraction,mean_spearman,sd_spearman\n") == 0);
    CHECK(std::count(content.begin(), content.end(), '\n') == 3);
}

TEST_CASE("manifests record inputs and configuration") {
    Workspace ws;
    ws.file("edges.csv", "source,target,weight\na,b,1\nb,a,2\n");
    REQUIRE(run("--seed 11 --out-dir " + ws.dir("out") + " rank --algo pagerank --edges " +
                ws.dir("edges.csv")) == 0);
    const auto manifest = hnr::read_json_file(ws.dir("out") + "/manifest.json");
    CHECK(manifest.at("command") == "rank");
    CHECK(manifest.at("seed").get<std::uint64_t>() == 11);
    CHECK(manifest.at("config").at("algo") == "pagerank");
    CHECK(manifest.at("inputs").size() == 1);
    const std::string digest = manifest.at("inputs").begin().value().get<std::string>();
    CHECK(digest.size() == 64);
    CHECK(manifest.at("outputs")[0] == "ranks.csv");
}
