// hykge: knowledge-graph RAG command line.
//
//   hykge ingest --entities E.jsonl --triples T.tsv --out graph.hykg
//   hykge index  --graph graph.hykg --config cfg.json
//   hykge query  "question" --graph graph.hykg --config cfg.json [--trace] [--ablation w/o-HO]
//   hykge eval   --dataset d.jsonl --kind mcq|open --graph graph.hykg --config cfg.json
//   hykge serve  --graph graph.hykg --config cfg.json --port 8080
//
// Exit codes: 0 ok, 1 bad input or usage, 2 missing file, 3 provider failure.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include "json.hpp"

#include "hykge/error.hpp"
#include "hykge/eval.hpp"
#include "hykge/kg.hpp"
#include "hykge/linker.hpp"
#include "hykge/pipeline.hpp"
#include "hykge/service.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hykge;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitMissing = 2;
constexpr int kExitProvider = 3;

struct Overrides {
    std::optional<int> k;
    std::optional<std::size_t> top_k;
    std::optional<double> delta;
    std::optional<std::size_t> lc;
    std::optional<std::size_t> oc;
    std::string ablation;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--k", o.k, "Maximum chain length in hops");
    cmd->add_option("--top-k", o.top_k, "Chains kept after reranking");
    cmd->add_option("--delta", o.delta, "Linking similarity threshold");
    cmd->add_option("--lc", o.lc, "Fragment window in tokens");
    cmd->add_option("--oc", o.oc, "Fragment overlap in tokens");
    cmd->add_option("--ablation", o.ablation, "full, w/o-HO, w/o-Chains, w/o-Description, w/o-Fragment, w/o-Reranker");
}

pipeline::PipelineConfig load_config(const std::string& path, const Overrides& o) {
    auto cfg = path.empty() ? pipeline::PipelineConfig{} : pipeline::PipelineConfig::from_file(path);
    if (o.k) cfg.k = *o.k;
    if (o.top_k) cfg.top_k = *o.top_k;
    if (o.delta) cfg.delta = *o.delta;
    if (o.lc) cfg.lc = *o.lc;
    if (o.oc) cfg.oc = *o.oc;
    if (!o.ablation.empty()) {
        auto flags = pipeline::ablation_flags(o.ablation);
        if (!flags) throw std::invalid_argument("unknown ablation '" + o.ablation + "'");
        cfg.flags = *flags;
    }
    cfg.validate();
    return cfg;
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw IngestError(path, 0, "no such file");
}

std::unique_ptr<service::ServiceState> load_state(const std::string& graph_path, const pipeline::PipelineConfig& cfg) {
    require_file(graph_path);
    return service::load_state(kg::KnowledgeGraph::load_snapshot_file(graph_path), cfg,
                               service::ProviderEndpoints::from_environment());
}

service::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph retrieval-augmented generation"};
    app.require_subcommand(1);

    std::string entities_path, triples_path, out_path, graph_path, config_path, dataset_path, kind = "mcq",
                                                                                              report_path;
    std::string question, host = "127.0.0.1";
    bool auto_create = false, want_trace = false;
    int port = 8080;
    std::size_t seeds = 1;
    Overrides overrides;

    auto* ingest = app.add_subcommand("ingest", "Build a graph snapshot from entity and triple files");
    ingest->add_option("--entities", entities_path, "Entities JSON-lines file")->required();
    ingest->add_option("--triples", triples_path, "Triples JSON-lines or TSV file")->required();
    ingest->add_option("--out", out_path, "Snapshot output path")->required();
    ingest->add_flag("--auto-create", auto_create, "Create entities for unknown triple endpoints");

    auto* index = app.add_subcommand("index", "Build or refresh the entity embedding index");
    index->add_option("--graph", graph_path, "Graph snapshot")->required();
    index->add_option("--config", config_path, "Pipeline config (JSON)");

    auto* query = app.add_subcommand("query", "Answer one question");
    query->add_option("question", question, "The user query")->required();
    query->add_option("--graph", graph_path, "Graph snapshot")->required();
    query->add_option("--config", config_path, "Pipeline config (JSON)");
    query->add_flag("--trace", want_trace, "Print the full pipeline trace as JSON");
    add_overrides(query, overrides);

    auto* evalc = app.add_subcommand("eval", "Score a dataset");
    evalc->add_option("--dataset", dataset_path, "Dataset JSON-lines file")->required();
    evalc->add_option("--kind", kind, "mcq or open")->check(CLI::IsMember({"mcq", "open"}));
    evalc->add_option("--graph", graph_path, "Graph snapshot")->required();
    evalc->add_option("--config", config_path, "Pipeline config (JSON)");
    evalc->add_option("--seeds", seeds, "Repetitions")->check(CLI::PositiveNumber);
    evalc->add_option("--report", report_path, "Write the JSON report here");
    add_overrides(evalc, overrides);

    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--graph", graph_path, "Graph snapshot")->required();
    serve->add_option("--config", config_path, "Pipeline config (JSON)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Bind port");
    add_overrides(serve, overrides);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            require_file(entities_path);
            require_file(triples_path);
            auto g = kg::ingest_files(entities_path, triples_path, kg::IngestOptions{auto_create});
            g.save_snapshot_file(out_path);
            std::cout << "entities: " << g.entity_count() << '\n'
                      << "relations: " << g.relation_count() << '\n'
                      << "triplets: " << g.triplet_count() << '\n';
            return kExitOk;
        }

        auto cfg = load_config(config_path, overrides);

        if (*index) {
            auto state = load_state(graph_path, cfg);
            std::cout << "rows: " << state->index.size() << '\n'
                      << "dim: " << state->index.dim() << '\n'
                      << "provider: " << state->index.provider_tag() << '\n';
            return kExitOk;
        }

        if (*query) {
            auto state = load_state(graph_path, cfg);
            auto trace = pipeline::run(question, state->config, state->deps());
            if (want_trace) {
                std::cout << pipeline::to_json(trace).dump(2) << '\n';
            } else {
                std::cout << trace.answer << '\n';
            }
            return kExitOk;
        }

        if (*evalc) {
            require_file(dataset_path);
            auto state = load_state(graph_path, cfg);
            auto answer = [&](const std::string& prompt, std::size_t) {
                return pipeline::run(prompt, state->config, state->deps()).answer;
            };
            std::ifstream in(dataset_path);
            eval::MetricReport report;
            const auto name = fs::path(dataset_path).stem().string();
            if (kind == "mcq") {
                report = eval::evaluate_mcq(eval::load_mcq(in, dataset_path), answer, seeds, name);
            } else {
                report = eval::evaluate_open_qa(eval::load_open_qa(in, dataset_path), answer, seeds, *state->tokenizer,
                                                name);
            }
            report.print_table(std::cout);
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                out << report.to_json().dump(2) << '\n';
            }
            return kExitOk;
        }

        if (*serve) {
            require_file(graph_path);
            service::Service svc(cfg.trace_capacity, cfg.trace_spill_path);
            g_service = &svc;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            int bound = svc.start(host, port);
            std::cerr << "listening on " << host << ":" << bound << " (loading)\n";
            svc.set_state(load_state(graph_path, cfg));
            std::cerr << "ready\n";
            svc.wait();
            g_service = nullptr;
            return kExitOk;
        }
    } catch (const PipelineError& e) {
        std::cerr << "error: provider failure in stage '" << e.stage() << "': " << e.what() << '\n';
        return kExitProvider;
    } catch (const IngestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.line() == 0 && !fs::exists(e.source()) ? kExitMissing : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitOk;
}
