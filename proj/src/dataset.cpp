#include "crowdscore/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "crowdscore/csv.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kColumns[] = {"id", "headline", "body", "source", "human_rating"};

double parse_rating(const std::string& text, std::size_t row) {
    double value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(row, "human_rating", "not a decimal number: '" + text + "'");
    if (value < 1.0 || value > 4.0)
        throw ParseError(row, "human_rating", "rating outside [1,4]: " + text);
    return value;
}

/// Shortest round-trip decimal form, so save/load preserves values exactly.
std::string format_rating(double value) {
    return ordered_json(value).dump();
}

void validate_joke(const Joke& joke, std::size_t row) {
    if (joke.id.empty()) throw ParseError(row, "id", "empty id");
    if (joke.body.empty()) throw ParseError(row, "body", "empty joke body");
}

Corpus load_csv(const std::string& path) {
    auto records = csv::read_file(path);
    if (records.empty()) throw ParseError(1, "-", "missing header row");

    const auto& header = records.front();
    bool has_rating_col = header.size() == 5;
    std::size_t expected = has_rating_col ? 5 : 4;
    for (std::size_t i = 0; i < expected; ++i) {
        if (i >= header.size() || header[i] != kColumns[i])
            throw ParseError(1, i < header.size() ? header[i] : "-",
                             std::string("expected column '") + kColumns[i] + "'");
    }

    Corpus corpus;
    corpus.provenance = path;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        std::size_t row = r + 1;
        if (rec.size() != expected)
            throw ParseError(row, "-",
                             "expected " + std::to_string(expected) + " fields, got " +
                                 std::to_string(rec.size()));
        Joke joke;
        joke.id = rec[0];
        joke.headline = rec[1];
        joke.body = rec[2];
        joke.source = rec[3];
        if (has_rating_col && !rec[4].empty()) joke.human_rating = parse_rating(rec[4], row);
        validate_joke(joke, row);
        if (!seen.insert(joke.id).second) throw DuplicateIdError(joke.id);
        corpus.jokes.push_back(std::move(joke));
    }
    return corpus;
}

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);

    Corpus corpus;
    corpus.provenance = path;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded()) throw ParseError(row, "-", "invalid JSON");
        if (!obj.is_object()) throw ParseError(row, "-", "expected a JSON object");
        auto string_field = [&](const char* key, bool required) -> std::string {
            if (!obj.contains(key)) {
                if (required) throw ParseError(row, key, "missing field");
                return "";
            }
            if (!obj[key].is_string()) throw ParseError(row, key, "expected a string");
            return obj[key].get<std::string>();
        };
        Joke joke;
        joke.id = string_field("id", true);
        joke.headline = string_field("headline", false);
        joke.body = string_field("body", true);
        joke.source = string_field("source", false);
        if (obj.contains("human_rating") && !obj["human_rating"].is_null()) {
            if (!obj["human_rating"].is_number())
                throw ParseError(row, "human_rating", "expected a number");
            double value = obj["human_rating"].get<double>();
            if (value < 1.0 || value > 4.0)
                throw ParseError(row, "human_rating", "rating outside [1,4]");
            joke.human_rating = value;
        }
        validate_joke(joke, row);
        if (!seen.insert(joke.id).second) throw DuplicateIdError(joke.id);
        corpus.jokes.push_back(std::move(joke));
    }
    return corpus;
}

}  // namespace

const Joke* Corpus::find(const std::string& id) const {
    for (const auto& joke : jokes)
        if (joke.id == id) return &joke;
    return nullptr;
}

CorpusFormat corpus_format_from_string(const std::string& name) {
    if (name == "csv") return CorpusFormat::Csv;
    if (name == "jsonl") return CorpusFormat::Jsonl;
    throw ConfigError("unknown corpus format: " + name);
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    return format == CorpusFormat::Csv ? load_csv(path) : load_jsonl(path);
}

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    if (format == CorpusFormat::Csv) {
        out << "id,headline,body,source,human_rating\n";
        for (const auto& joke : corpus.jokes) {
            out << csv::join_record({joke.id, joke.headline, joke.body, joke.source,
                                     joke.human_rating ? format_rating(*joke.human_rating) : ""})
                << "\n";
        }
    } else {
        for (const auto& joke : corpus.jokes) {
            ordered_json obj;
            obj["id"] = joke.id;
            obj["headline"] = joke.headline;
            obj["body"] = joke.body;
            obj["source"] = joke.source;
            if (joke.human_rating) obj["human_rating"] = *joke.human_rating;
            out << obj.dump() << "\n";
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<LabeledJoke> label_by_threshold(const Corpus& corpus, double threshold) {
    std::vector<LabeledJoke> labeled;
    labeled.reserve(corpus.jokes.size());
    for (const auto& joke : corpus.jokes) {
        if (!joke.human_rating) throw MissingRatingError(joke.id);
        labeled.push_back(
            {joke, *joke.human_rating >= threshold ? Label::Positive : Label::Negative});
    }
    return labeled;
}

LabelCounts count_labels(const std::vector<LabeledJoke>& labeled) {
    LabelCounts counts;
    for (const auto& lj : labeled)
        (lj.label == Label::Positive ? counts.positive : counts.negative)++;
    return counts;
}

std::vector<LabeledJoke> select_anchor_set(const Corpus& corpus, std::size_t k) {
    std::vector<std::size_t> rated;
    for (std::size_t i = 0; i < corpus.jokes.size(); ++i)
        if (corpus.jokes[i].human_rating) rated.push_back(i);
    if (rated.size() < 2 * k) throw InsufficientJokesError(rated.size(), 2 * k);
    if (k == 0) return {};

    auto rating = [&](std::size_t i) { return *corpus.jokes[i].human_rating; };

    // Highest first; equal ratings keep corpus order so the earlier row wins.
    std::vector<std::size_t> by_desc = rated;
    std::stable_sort(by_desc.begin(), by_desc.end(),
                     [&](std::size_t a, std::size_t b) { return rating(a) > rating(b); });

    std::vector<LabeledJoke> anchors;
    std::unordered_set<std::size_t> taken;
    for (std::size_t i = 0; i < k; ++i) {
        anchors.push_back({corpus.jokes[by_desc[i]], Label::Positive});
        taken.insert(by_desc[i]);
    }

    std::vector<std::size_t> by_asc = rated;
    std::stable_sort(by_asc.begin(), by_asc.end(),
                     [&](std::size_t a, std::size_t b) { return rating(a) < rating(b); });
    std::size_t added = 0;
    for (std::size_t idx : by_asc) {
        if (added == k) break;
        if (taken.count(idx)) continue;  // keep the subsets disjoint under heavy ties
        anchors.push_back({corpus.jokes[idx], Label::Negative});
        ++added;
    }
    return anchors;
}

}  // namespace crowdscore
