#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hykge/kg.hpp"
#include "hykge/rerank.hpp"

namespace hykge::prompts {

/// Templates use the named slots {user_query} and {background_knowledge}.
struct PromptTemplates {
    std::string hypothesis;
    std::string reader;

    static PromptTemplates english();

    /// Reads ho.txt and reader.txt from `dir/locale/` if that directory exists,
    /// else from `dir/`. Missing files keep the English default.
    static PromptTemplates load(const std::string& dir, const std::string& locale);
};

inline constexpr std::string_view kChainsLead = "The retrieved knowledge chains are:";
inline constexpr std::string_view kEmptyRetrieval = "(none)";

/// Substitutes {name} slots in one pass; substituted text is never re-scanned.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

std::string render_ho_prompt(std::string_view query, const PromptTemplates& templates = PromptTemplates::english());

/// The lead sentence followed by one line per knowledge item, each ending in a
/// period; "(none)" when there are no items.
std::string background_section(std::span<const std::string> lines);

std::string render_reader_prompt(std::string_view query, std::span<const std::string> knowledge_lines,
                                 const PromptTemplates& templates = PromptTemplates::english());

/// Serializes pruned chains in order, with endpoint descriptions when asked.
std::vector<std::string> chain_lines(std::span<const rerank::ScoredChain> chains, const kg::KnowledgeGraph& graph,
                                     bool with_descriptions = true);

std::string render_reader_prompt(std::string_view query, std::span<const rerank::ScoredChain> chains,
                                 const kg::KnowledgeGraph& graph,
                                 const PromptTemplates& templates = PromptTemplates::english());

}  // namespace hykge::prompts
