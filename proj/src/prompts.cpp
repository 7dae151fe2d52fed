#include "hykge/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hykge::prompts {

namespace {

constexpr std::string_view kHypothesisTemplate =
    "### Task Description:\n"
    "You are a medical expert. Please write a passage to answer [User Query] while adhering to "
    "[Answer Requirements].\n"
    "\n"
    "### Answer Requirements:\n"
    "1) Please take time to think slowly, understand step by step, and answer questions. Do not skip key steps.\n"
    "2) Fully analyze the problem through thinking and exploratory analysis.\n"
    "\n"
    "### {{ User Query }}\n"
    "{user_query}";

constexpr std::string_view kReaderTemplate =
    "### Task Description:\n"
    "You are a medical expert. Based on relevant medical [Background Knowledge] and your medical knowledge, "
    "provide professional medical advice for [User Query] while adhering to [Answer Requirements].\n"
    "\n"
    "### Answer Requirements:\n"
    "1) Take time to think slowly, understand step by step, and answer questions.\n"
    "2) Clearly state key information in the answer and provide direct and specific answers to user questions.\n"
    "\n"
    "### {{ Background Knowledge }}\n"
    "{background_knowledge}\n"
    "\n"
    "### {{ User Query }}\n"
    "{user_query}";

bool is_slot_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptTemplates PromptTemplates::english() {
    return PromptTemplates{std::string(kHypothesisTemplate), std::string(kReaderTemplate)};
}

PromptTemplates PromptTemplates::load(const std::string& dir, const std::string& locale) {
    auto t = english();
    if (dir.empty()) return t;
    std::filesystem::path base(dir);
    if (!locale.empty() && std::filesystem::is_directory(base / locale)) base /= locale;
    if (std::filesystem::exists(base / "ho.txt")) t.hypothesis = read_file(base / "ho.txt");
    if (std::filesystem::exists(base / "reader.txt")) t.reader = read_file(base / "reader.txt");
    if (t.hypothesis.find("{user_query}") == std::string::npos || t.reader.find("{user_query}") == std::string::npos ||
        t.reader.find("{background_knowledge}") == std::string::npos) {
        throw std::runtime_error("prompt templates in " + base.string() + " are missing required slots");
    }
    return t;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_slot_char(tmpl[j])) ++j;
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                auto it = values.find(std::string(tmpl.substr(i + 1, j - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string render_ho_prompt(std::string_view query, const PromptTemplates& templates) {
    if (query.empty()) throw std::invalid_argument("query is empty");
    return render(templates.hypothesis, {{"user_query", std::string(query)}});
}

std::string background_section(std::span<const std::string> lines) {
    std::string out(kChainsLead);
    if (lines.empty()) {
        out += ' ';
        out += kEmptyRetrieval;
        return out;
    }
    for (const auto& line : lines) {
        out += '\n';
        out += line;
        if (line.empty() || line.back() != '.') out += '.';
    }
    return out;
}

std::string render_reader_prompt(std::string_view query, std::span<const std::string> knowledge_lines,
                                 const PromptTemplates& templates) {
    if (query.empty()) throw std::invalid_argument("query is empty");
    return render(templates.reader,
                  {{"user_query", std::string(query)}, {"background_knowledge", background_section(knowledge_lines)}});
}

std::vector<std::string> chain_lines(std::span<const rerank::ScoredChain> chains, const kg::KnowledgeGraph& graph,
                                     bool with_descriptions) {
    std::vector<std::string> out;
    out.reserve(chains.size());
    for (const auto& c : chains) out.push_back(chains::serialize_chain(c.chain, graph, with_descriptions));
    return out;
}

std::string render_reader_prompt(std::string_view query, std::span<const rerank::ScoredChain> chains,
                                 const kg::KnowledgeGraph& graph, const PromptTemplates& templates) {
    auto lines = chain_lines(chains, graph, true);
    return render_reader_prompt(query, lines, templates);
}

}  // namespace hykge::prompts
