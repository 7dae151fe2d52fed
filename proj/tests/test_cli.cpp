#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

#include "support/fixture.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome cli(const std::string& args, const std::string& env = {}) {
    auto cmd = env + (env.empty() ? "" : " ") + "'" + std::string(HYKGE_CLI) + "' " + args + " 2>/dev/null";
    Outcome o;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) o.out.append(buf.data(), n);
    int status = ::pclose(p);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Snapshot of the fixture graph in a scratch directory.
struct Workspace {
    fs::path dir = fs::temp_directory_path() / "hykge_cli_test";
    std::string graph = (dir / "graph.hykg").string();

    Workspace() {
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto r = cli("ingest --entities " + shell_quote(hykge::testing::data_path("entities.jsonl")) + " --triples " +
                     shell_quote(hykge::testing::data_path("triples.tsv")) + " --out " + shell_quote(graph));
        REQUIRE(r.code == 0);
    }
    ~Workspace() { fs::remove_all(dir); }

    std::string query_args(const std::string& extra = {}) const {
        return "query " + shell_quote(hykge::testing::kHeartburnQuery) + " --graph " + shell_quote(graph) + " --config " +
               shell_quote(hykge::testing::data_path("config.json")) + (extra.empty() ? "" : " " + extra);
    }
};

}  // namespace

TEST_CASE("ingest prints counts") {
    fs::path out = fs::temp_directory_path() / "hykge_cli_ingest.hykg";
    auto r = cli("ingest --entities " + shell_quote(hykge::testing::data_path("entities.jsonl")) + " --triples " +
                 shell_quote(hykge::testing::data_path("triples.tsv")) + " --out " + shell_quote(out.string()));
    CHECK(r.code == 0);
    CHECK(r.out == "entities: 10\nrelations: 9\ntriplets: 11\n");
    CHECK(fs::exists(out));
    fs::remove(out);
}

TEST_CASE("missing input file exits 2") {
    auto r = cli("ingest --entities /nonexistent/e.jsonl --triples " +
                 shell_quote(hykge::testing::data_path("triples.tsv")) + " --out /tmp/x.hykg");
    CHECK(r.code == 2);
    auto q = cli("query hello --graph /nonexistent/graph.hykg");
    CHECK(q.code == 2);
}

TEST_CASE("malformed input exits 1") {
    fs::path bad = fs::temp_directory_path() / "hykge_cli_bad.jsonl";
    std::ofstream(bad) << "{\"name\":\"A\"}\n{oops\n";
    auto r = cli("ingest --entities " + shell_quote(bad.string()) + " --triples " +
                 shell_quote(hykge::testing::data_path("triples.tsv")) + " --out /tmp/x.hykg");
    CHECK(r.code == 1);
    fs::remove(bad);
}

TEST_CASE("query prints the golden answer") {
    Workspace ws;
    auto r = cli(ws.query_args());
    CHECK(r.code == 0);
    CHECK(r.out == read_file(std::string(HYKGE_GOLDEN_DIR) + "/query_answer.txt"));
}

TEST_CASE("--trace prints the full trace as JSON") {
    Workspace ws;
    auto r = cli(ws.query_args("--trace"));
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    for (auto key : {"query", "hypothesis_output", "mentions", "anchors", "chain_counts", "pruned_chains",
                     "reader_prompt", "answer", "durations", "stages"}) {
        CHECK(doc.contains(key));
    }
    CHECK(doc["answer"].get<std::string>() + "\n" == read_file(std::string(HYKGE_GOLDEN_DIR) + "/query_answer.txt"));
    CHECK(doc["generator_calls"] == 2);
}

TEST_CASE("overrides and ablations reach the pipeline") {
    Workspace ws;
    auto r = cli(ws.query_args("--trace --ablation w/o-HO"));
    REQUIRE(r.code == 0);
    auto doc = json::parse(r.out);
    CHECK(doc["hypothesis_output"] == "");
    auto k = cli(ws.query_args("--trace --top-k 3 --k 2"));
    REQUIRE(k.code == 0);
    auto kd = json::parse(k.out);
    CHECK(kd["pruned_chains"].size() == 3);
    for (const auto& c : kd["pruned_chains"]) CHECK(c["hops"].get<int>() <= 2);
    CHECK(cli(ws.query_args("--ablation nonsense")).code == 1);
    CHECK(cli(ws.query_args("--lc 4 --oc 4")).code == 1);
}

TEST_CASE("unreachable provider exits 3") {
    Workspace ws;
    auto r = cli(ws.query_args(), "HYKGE_GENERATOR_URL=http://127.0.0.1:1");
    CHECK(r.code == 3);
}

TEST_CASE("index and eval subcommands") {
    Workspace ws;
    auto idx = cli("index --graph " + shell_quote(ws.graph));
    CHECK(idx.code == 0);
    CHECK(idx.out.find("rows: 10") != std::string::npos);

    auto report = (ws.dir / "report.json").string();
    auto e = cli("eval --kind mcq --seeds 2 --dataset " + shell_quote(hykge::testing::data_path("mcq.jsonl")) + " --graph " +
                 shell_quote(ws.graph) + " --config " + shell_quote(hykge::testing::data_path("config.json")) + " --report " +
                 shell_quote(report));
    CHECK(e.code == 0);
    CHECK(e.out.find("EM") != std::string::npos);
    auto doc = json::parse(read_file(report));
    CHECK(doc["seeds"] == 2);
    CHECK(doc["ppl"].is_null());
    CHECK(doc["scores"]["EM"].size() == 2);

    auto o = cli("eval --kind open --dataset " + shell_quote(hykge::testing::data_path("open_qa.jsonl")) + " --graph " +
                 shell_quote(ws.graph) + " --config " + shell_quote(hykge::testing::data_path("config.json")));
    CHECK(o.code == 0);
    CHECK(o.out.find("ROUGE-R") != std::string::npos);
}
