#include "hykge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "hykge/error.hpp"

namespace hykge::eval {

using nlohmann::json;

namespace {

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

template <typename Item, typename Parse>
std::vector<Item> load_jsonl(std::istream& in, std::string_view source, Parse parse) {
    std::vector<Item> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            out.push_back(parse(json::parse(line)));
        } catch (const json::exception& e) {
            throw IngestError(std::string(source), lineno, e.what());
        } catch (const std::invalid_argument& e) {
            throw IngestError(std::string(source), lineno, e.what());
        }
    }
    return out;
}

std::string id_of(const json& j) {
    const auto& id = j.at("id");
    return id.is_string() ? id.get<std::string>() : id.dump();
}

bool ascii_alnum(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
    std::map<std::vector<std::string>, int> counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                          toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace

std::vector<McqItem> load_mcq(std::istream& in, std::string_view source) {
    return load_jsonl<McqItem>(in, source, [](const json& j) {
        McqItem item;
        item.id = id_of(j);
        item.question = j.at("question").get<std::string>();
        for (const auto& [letter, text] : j.at("options").items()) {
            if (letter.size() != 1) throw std::invalid_argument("option keys must be single letters");
            item.options[letter[0]] = text.get<std::string>();
        }
        for (char c : j.at("answer").get<std::string>()) {
            if (c == ' ' || c == ',') continue;
            if (!item.options.count(c)) throw std::invalid_argument(std::string("gold letter '") + c + "' is not an option");
            item.gold.insert(c);
        }
        if (item.gold.empty()) throw std::invalid_argument("answer has no letters");
        return item;
    });
}

std::vector<OpenQaItem> load_open_qa(std::istream& in, std::string_view source) {
    return load_jsonl<OpenQaItem>(in, source, [](const json& j) {
        OpenQaItem item;
        item.id = id_of(j);
        item.context = j.value("context", std::string());
        item.question = j.at("question").get<std::string>();
        item.reference = j.at("reference").get<std::string>();
        if (blank(item.reference)) throw std::invalid_argument("reference is empty");
        return item;
    });
}

std::string format_mcq_prompt(const McqItem& item) {
    std::string s = item.question;
    for (const auto& [letter, text] : item.options) {
        s += '\n';
        s += letter;
        s += ". ";
        s += text;
    }
    return s;
}

LetterSet extract_choice_letters(std::string_view response, const LetterSet& allowed) {
    if (allowed.empty()) throw std::invalid_argument("allowed letter set is empty");
    std::size_t pos = 0;
    while (pos <= response.size()) {
        auto nl = response.find('\n', pos);
        auto line = response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        LetterSet found;
        std::size_t i = 0;
        while (i < line.size()) {
            if (!ascii_alnum(line[i])) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < line.size() && ascii_alnum(line[j])) ++j;
            auto token = line.substr(i, j - i);
            if (std::all_of(token.begin(), token.end(), [&](char c) { return allowed.count(c) > 0; })) {
                found.insert(token.begin(), token.end());
            }
            i = j;
        }
        if (!found.empty()) return found;
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return {};
}

int exact_match(const LetterSet& pred, const LetterSet& gold) {
    if (gold.empty()) throw std::invalid_argument("gold set is empty");
    return pred == gold ? 1 : 0;
}

int partial_correct(const LetterSet& pred, const LetterSet& gold) {
    if (gold.empty()) throw std::invalid_argument("gold set is empty");
    if (pred.empty()) return 0;
    return std::includes(gold.begin(), gold.end(), pred.begin(), pred.end()) ? 1 : 0;
}

double rouge_recall(std::string_view response, std::string_view reference, const text::Tokenizer& tokenizer) {
    auto ref = tokenizer.tokenize(reference);
    if (ref.empty()) throw std::invalid_argument("reference has no tokens");
    auto ref_counts = ngram_counts(ref, 1);
    auto hyp_counts = ngram_counts(tokenizer.tokenize(response), 1);
    int overlap = 0;
    for (const auto& [g, n] : ref_counts) {
        if (auto it = hyp_counts.find(g); it != hyp_counts.end()) overlap += std::min(n, it->second);
    }
    return static_cast<double>(overlap) / static_cast<double>(ref.size());
}

double bleu(std::string_view response, std::string_view reference, int max_n, const text::Tokenizer& tokenizer) {
    if (max_n < 1) throw std::invalid_argument("max_n must be >= 1");
    auto hyp = tokenizer.tokenize(response);
    auto ref = tokenizer.tokenize(reference);
    if (hyp.empty() || ref.empty()) throw std::invalid_argument("bleu needs non-empty response and reference");
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        const auto h = ngram_counts(hyp, static_cast<std::size_t>(n));
        const auto r = ngram_counts(ref, static_cast<std::size_t>(n));
        int clipped = 0, total = 0;
        for (const auto& [g, c] : h) {
            total += c;
            if (auto it = r.find(g); it != r.end()) clipped += std::min(c, it->second);
        }
        if (clipped == 0 || total == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped) / total);
    }
    const double c = static_cast<double>(hyp.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / max_n);
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::map<std::string, MeanStd> MetricReport::aggregate() const {
    std::map<std::string, MeanStd> out;
    for (const auto& [metric, per_seed] : scores) {
        std::vector<double> seed_means;
        for (const auto& items : per_seed) seed_means.push_back(mean_std(items).mean);
        out[metric] = mean_std(seed_means);
    }
    return out;
}

json MetricReport::to_json() const {
    json aggregates = json::object();
    for (const auto& [metric, ms] : aggregate()) aggregates[metric] = {{"mean", ms.mean}, {"std", ms.stddev}};
    return json{{"dataset", dataset},
                {"seeds", seeds},
                {"items", item_ids},
                {"scores", scores},
                {"aggregate", aggregates},
                {"ppl", nullptr},
                {"notes", notes}};
}

void MetricReport::print_table(std::ostream& out) const {
    out << dataset << " (" << item_ids.size() << " items, " << seeds << " seed" << (seeds == 1 ? "" : "s") << ")\n";
    out << std::left << std::setw(10) << "metric" << std::right << std::setw(10) << "mean" << std::setw(10) << "std"
        << '\n';
    for (const auto& [metric, ms] : aggregate()) {
        out << std::left << std::setw(10) << metric << std::right << std::fixed << std::setprecision(4)
            << std::setw(10) << ms.mean << std::setw(10) << ms.stddev << '\n';
    }
    out << std::left << std::setw(10) << "PPL" << std::right << std::setw(10) << "n/a" << '\n';
}

MetricReport evaluate_mcq(const std::vector<McqItem>& items, const Answerer& answer, std::size_t seeds,
                          std::string dataset) {
    MetricReport r;
    r.dataset = std::move(dataset);
    r.seeds = seeds;
    for (const auto& it : items) r.item_ids.push_back(it.id);
    auto& em = r.scores["EM"];
    auto& pcr = r.scores["PCR"];
    for (std::size_t s = 0; s < seeds; ++s) {
        em.emplace_back();
        pcr.emplace_back();
        for (const auto& item : items) {
            LetterSet allowed;
            for (const auto& [letter, _] : item.options) allowed.insert(letter);
            auto pred = extract_choice_letters(answer(format_mcq_prompt(item), s), allowed);
            if (pred.empty()) r.notes.push_back("seed " + std::to_string(s) + " item " + item.id + ": no option letters parsed");
            em.back().push_back(exact_match(pred, item.gold));
            pcr.back().push_back(partial_correct(pred, item.gold));
        }
    }
    return r;
}

MetricReport evaluate_open_qa(const std::vector<OpenQaItem>& items, const Answerer& answer, std::size_t seeds,
                              const text::Tokenizer& tokenizer, std::string dataset) {
    MetricReport r;
    r.dataset = std::move(dataset);
    r.seeds = seeds;
    for (const auto& it : items) r.item_ids.push_back(it.id);
    auto& b1 = r.scores["BLEU-1"];
    auto& b4 = r.scores["BLEU-4"];
    auto& rr = r.scores["ROUGE-R"];
    for (std::size_t s = 0; s < seeds; ++s) {
        b1.emplace_back();
        b4.emplace_back();
        rr.emplace_back();
        for (const auto& item : items) {
            auto prompt = item.context.empty() ? item.question : item.context + "\n" + item.question;
            auto response = answer(prompt, s);
            const bool empty = tokenizer.tokenize(response).empty();
            if (empty) r.notes.push_back("seed " + std::to_string(s) + " item " + item.id + ": empty response");
            b1.back().push_back(empty ? 0.0 : bleu(response, item.reference, 1, tokenizer));
            b4.back().push_back(empty ? 0.0 : bleu(response, item.reference, 4, tokenizer));
            rr.back().push_back(rouge_recall(response, item.reference, tokenizer));
        }
    }
    return r;
}

}  // namespace hykge::eval
