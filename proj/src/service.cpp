#include "hykge/service.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "hykge/error.hpp"
#include "hykge/http_providers.hpp"

namespace hykge::service {

using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

std::vector<std::string> entity_names(const kg::KnowledgeGraph& g) {
    std::vector<std::string> names;
    names.reserve(g.entity_count());
    for (const auto& e : g.entities()) names.push_back(e.name);
    return names;
}

}  // namespace

ProviderEndpoints ProviderEndpoints::from_environment() {
    return ProviderEndpoints{env_or_empty("HYKGE_GENERATOR_URL"), env_or_empty("HYKGE_EMBEDDER_URL"),
                             env_or_empty("HYKGE_SCORER_URL"), env_or_empty("HYKGE_NER_URL")};
}

pipeline::PipelineDeps ServiceState::deps() const {
    return pipeline::PipelineDeps{graph,
                                  index,
                                  pipeline::Providers{*generator, *embedder, *scorer, *recognizer},
                                  stopwords,
                                  *tokenizer,
                                  templates,
                                  ho_cache.get()};
}

std::unique_ptr<ServiceState> load_state(kg::KnowledgeGraph graph, const pipeline::PipelineConfig& config,
                                         const ProviderEndpoints& endpoints) {
    config.validate();
    auto s = std::make_unique<ServiceState>();
    s->graph = std::move(graph);
    s->config = config;

    if (config.tokenizer == "dictionary") {
        s->tokenizer = std::make_unique<text::DictionarySegmenter>(entity_names(s->graph));
    } else {
        s->tokenizer = std::make_unique<text::WhitespaceTokenizer>();
    }
    if (!config.stopwords_path.empty()) s->stopwords = text::load_stopwords_file(config.stopwords_path);
    s->templates = prompts::PromptTemplates::load(config.prompt_dir, config.prompt_locale);
    s->ho_cache = std::make_unique<pipeline::HoCache>(config.ho_cache_path);

    if (!endpoints.generator.empty()) {
        s->generator = std::make_unique<providers::HttpGenerator>(endpoints.generator);
    } else if (!config.generator_fixture.empty()) {
        s->generator = std::make_unique<providers::ScriptedGenerator>(
            providers::ScriptedGenerator::from_json_file(config.generator_fixture));
    } else {
        s->generator = std::make_unique<providers::ScriptedGenerator>();
    }
    if (!endpoints.embedder.empty()) {
        s->embedder = std::make_unique<providers::HttpEmbedder>(endpoints.embedder);
    } else {
        s->embedder = std::make_unique<providers::HashEmbedder>();
    }
    if (!endpoints.scorer.empty()) {
        s->scorer = std::make_unique<providers::HttpScorer>(endpoints.scorer);
    } else {
        std::shared_ptr<const text::Tokenizer> tok;
        if (config.tokenizer == "dictionary") tok = std::make_shared<text::DictionarySegmenter>(entity_names(s->graph));
        s->scorer = std::make_unique<providers::OverlapScorer>(std::move(tok));
    }
    if (!endpoints.recognizer.empty()) {
        s->recognizer = std::make_unique<providers::HttpRecognizer>(endpoints.recognizer);
    } else {
        s->recognizer = std::make_unique<providers::GazetteerRecognizer>(entity_names(s->graph));
    }

    try {
        s->index = config.entity_index_path.empty()
                       ? linker::build_index(s->graph, *s->embedder)
                       : linker::load_or_build_index(s->graph, *s->embedder, config.entity_index_path);
    } catch (const ProviderError& e) {
        throw PipelineError("index", e.what());
    }
    return s;
}

// --- TraceStore -------------------------------------------------------------

TraceStore::TraceStore(std::size_t capacity, std::string spill_path)
    : capacity_(std::max<std::size_t>(1, capacity)), spill_path_(std::move(spill_path)) {}

std::string TraceStore::add(json trace) {
    std::lock_guard lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%08llu", static_cast<unsigned long long>(next_++));
    std::string id(buf);
    trace["trace_id"] = id;
    if (!spill_path_.empty()) {
        std::ofstream out(spill_path_, std::ios::app);
        out << trace.dump() << '\n';
    }
    ring_.emplace_back(id, std::move(trace));
    while (ring_.size() > capacity_) ring_.pop_front();
    return id;
}

std::optional<json> TraceStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    for (const auto& [k, v] : ring_) {
        if (k == id) return std::optional<json>(std::in_place, v);
    }
    return std::nullopt;
}

std::size_t TraceStore::size() const {
    std::lock_guard lock(mu_);
    return ring_.size();
}

// --- Service ----------------------------------------------------------------

struct Service::Impl {
    httplib::Server server;
};

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

std::optional<std::string> question_of(const httplib::Request& req, httplib::Response& res) {
    try {
        auto body = json::parse(req.body);
        if (body.is_object() && body.contains("question") && body["question"].is_string()) {
            auto q = body["question"].get<std::string>();
            if (!text::trim(q).empty()) return q;
        }
    } catch (const json::exception&) {
    }
    reply(res, 422, json{{"error", "body must be a JSON object with a non-empty string 'question'"}});
    return std::nullopt;
}

}  // namespace

Service::Service(std::size_t trace_capacity, std::string trace_spill_path)
    : impl_(std::make_unique<Impl>()), traces_(trace_capacity, std::move(trace_spill_path)) {
    auto& srv = impl_->server;

    srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        if (ready()) reply(res, 200, json{{"status", "ok"}});
        else reply(res, 503, json{{"status", "loading"}});
    });

    // Runs `body` with the current state, mapping readiness and pipeline failures
    // onto status codes.
    auto guarded = [this](auto body) {
        return [this, body](const httplib::Request& req, httplib::Response& res) {
            auto st = state();
            if (!st) {
                reply(res, 503, json{{"error", "service not ready"}});
                return;
            }
            try {
                body(*st, req, res);
            } catch (const PipelineError& e) {
                reply(res, 502, json{{"error", e.what()}, {"stage", e.stage()}});
            } catch (const std::invalid_argument& e) {
                reply(res, 422, json{{"error", e.what()}});
            }
        };
    };

    srv.Post("/v1/answer", guarded([this](const ServiceState& st, const httplib::Request& req, httplib::Response& res) {
        auto q = question_of(req, res);
        if (!q) return;
        auto trace = pipeline::run(*q, st.config, st.deps());
        auto id = traces_.add(pipeline::to_json(trace));
        reply(res, 200, json{{"answer", trace.answer}, {"trace_id", id}});
    }));

    srv.Post("/v1/retrieve", guarded([](const ServiceState& st, const httplib::Request& req, httplib::Response& res) {
        auto q = question_of(req, res);
        if (!q) return;
        auto trace = pipeline::retrieve(*q, st.config, st.deps());
        json chains = json::array();
        for (const auto& c : trace.pruned) {
            chains.push_back({{"text", chains::serialize_chain(c.chain, st.graph, st.config.flags.use_descriptions)},
                              {"score", c.score},
                              {"kind", chains::to_string(c.chain.kind)},
                              {"hops", c.chain.hops()}});
        }
        json anchors = json::array();
        for (const auto& a : trace.anchors) {
            anchors.push_back({{"id", a.id.value}, {"name", a.name}, {"mention", a.mention}, {"similarity", a.similarity}});
        }
        reply(res, 200, json{{"chains", chains}, {"anchors", anchors}});
    }));

    srv.Get(R"(/v1/trace/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        if (!ready()) {
            reply(res, 503, json{{"error", "service not ready"}});
            return;
        }
        auto t = traces_.get(req.matches[1]);
        if (!t) reply(res, 404, json{{"error", "unknown trace id"}});
        else reply(res, 200, *t);
    });
}

Service::~Service() { stop(); }

void Service::set_state(std::shared_ptr<const ServiceState> state) {
    std::lock_guard lock(state_mu_);
    state_ = std::move(state);
    ready_.store(state_ != nullptr);
}

std::shared_ptr<const ServiceState> Service::state() const {
    std::lock_guard lock(state_mu_);
    return state_;
}

int Service::start(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void Service::wait() {
    if (thread_.joinable()) thread_.join();
}

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void Service::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace hykge::service
