#pragma once

#include <optional>
#include <string>
#include <vector>

namespace crowdscore {

/// One artifact under evaluation. `headline` is the input the joke
/// completes; `body` is the joke text itself; `human_rating`, when present,
/// is a mean human judgement on the [1,4] scale.
struct Joke {
    std::string id;
    std::string headline;
    std::string body;
    std::string source;
    std::optional<double> human_rating;

    bool operator==(const Joke&) const = default;
};

enum class Label { Positive, Negative };

inline const char* to_string(Label label) {
    return label == Label::Positive ? "positive" : "negative";
}

struct LabeledJoke {
    Joke joke;
    Label label = Label::Positive;

    bool operator==(const LabeledJoke&) const = default;
};

struct Corpus {
    std::vector<Joke> jokes;
    std::string provenance;

    bool operator==(const Corpus&) const = default;

    const Joke* find(const std::string& id) const;
};

enum class CorpusFormat { Csv, Jsonl };

CorpusFormat corpus_format_from_string(const std::string& name);

/// Load a corpus, preserving file order.
/// CSV columns: id,headline,body,source,human_rating (header required).
/// JSONL: one object per line with the same field names.
Corpus load_corpus(const std::string& path, CorpusFormat format);

/// Inverse of load_corpus; load(save(c)) == c.
void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format);

/// Label every joke by rating threshold: Positive iff human_rating >= threshold.
/// Throws MissingRatingError if any joke lacks a rating.
std::vector<LabeledJoke> label_by_threshold(const Corpus& corpus, double threshold);

struct LabelCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;
};

LabelCounts count_labels(const std::vector<LabeledJoke>& labeled);

/// The k highest-rated jokes labeled Positive followed by the k lowest-rated
/// labeled Negative. Ties broken by corpus order (earlier row wins); the two
/// subsets are always disjoint. Jokes without a rating are ignored.
std::vector<LabeledJoke> select_anchor_set(const Corpus& corpus, std::size_t k);

}  // namespace crowdscore
