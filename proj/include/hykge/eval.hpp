#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hykge/text.hpp"

namespace hykge::eval {

using LetterSet = std::set<char>;

struct McqItem {
    std::string id;
    std::string question;
    std::map<char, std::string> options;
    LetterSet gold;
};

struct OpenQaItem {
    std::string id;
    std::string context;
    std::string question;
    std::string reference;
};

std::vector<McqItem> load_mcq(std::istream& in, std::string_view source = "mcq");
std::vector<OpenQaItem> load_open_qa(std::istream& in, std::string_view source = "open_qa");

/// The question followed by one "X. option" line per choice.
std::string format_mcq_prompt(const McqItem& item);

/// Letters from the first line that contains a standalone option token. A token is a
/// maximal run of ASCII letters/digits; it counts only when every character is an
/// allowed letter, so "ABD" yields {A,B,D} and "cat" yields nothing.
LetterSet extract_choice_letters(std::string_view response, const LetterSet& allowed);

/// 1 iff pred == gold.
int exact_match(const LetterSet& pred, const LetterSet& gold);
/// 1 iff pred is non-empty and pred ⊆ gold.
int partial_correct(const LetterSet& pred, const LetterSet& gold);

/// ROUGE-1 recall: clipped unigram overlap / reference length.
double rouge_recall(std::string_view response, std::string_view reference, const text::Tokenizer& tokenizer);

/// BLEU with uniform weights over 1..max_n, clipped counts, brevity penalty, no
/// smoothing: any order with zero clipped matches gives 0.
double bleu(std::string_view response, std::string_view reference, int max_n, const text::Tokenizer& tokenizer);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

MeanStd mean_std(const std::vector<double>& values);

/// scores[metric][seed][item]. Aggregates are the mean over items per seed, then
/// mean ± std across seeds.
struct MetricReport {
    std::string dataset;
    std::size_t seeds = 0;
    std::map<std::string, std::vector<std::vector<double>>> scores;
    std::vector<std::string> item_ids;
    std::vector<std::string> notes;

    std::map<std::string, MeanStd> aggregate() const;
    nlohmann::json to_json() const;
    void print_table(std::ostream& out) const;
};

/// `answer(prompt, seed)` produces the model response.
using Answerer = std::function<std::string(const std::string& prompt, std::size_t seed)>;

/// EM and PCR per item. Items whose response yields no letters are noted.
MetricReport evaluate_mcq(const std::vector<McqItem>& items, const Answerer& answer, std::size_t seeds,
                          std::string dataset = "mcq");

/// BLEU-1, BLEU-4 and ROUGE-R (recall against the reference answer) per item.
MetricReport evaluate_open_qa(const std::vector<OpenQaItem>& items, const Answerer& answer, std::size_t seeds,
                              const text::Tokenizer& tokenizer, std::string dataset = "open_qa");

}  // namespace hykge::eval
