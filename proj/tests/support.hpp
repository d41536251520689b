#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "crowdscore/dataset.hpp"
#include "crowdscore/mock_backend.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(CROWDSCORE_SOURCE_DIR); }
inline fs::path fixture_corpus_path() { return source_dir() / "data" / "jokes_synthetic.csv"; }
inline fs::path golden_dir() { return source_dir() / "tests" / "golden"; }
inline fs::path asset_dir() { return source_dir() / "assets" / "templates"; }

inline crowdscore::Corpus fixture_corpus() {
    return crowdscore::load_corpus(fixture_corpus_path().string(), crowdscore::CorpusFormat::Csv);
}

/// Fresh scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = fs::temp_directory_path() /
                ("crowdscore_" + tag + "_" + std::to_string(rng()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    fs::path file(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// ---- mock rule builders ---------------------------------------------------
//
// Rules target prompt layers by priority: audit (30) > explanation (20) >
// few-shot vote (10) > persona vote (7) > zero-shot vote (5). Lower layers
// match higher-layer prompts as substrings, so "at most one rule fires,
// highest priority wins" resolves each call.

using crowdscore::MockMatcher;
using crowdscore::MockRule;

inline MockRule vote_zero_rule(const std::string& opposite, const std::string& body,
                               std::vector<std::string> answers) {
    return MockRule{MockMatcher::SubstringSet,
                    {"as Funny or " + opposite + ".", "Joke: " + body + "\nClassification:"},
                    std::move(answers),
                    5};
}

inline MockRule vote_few_rule(const std::string& opposite, const std::string& exemplar_pos_body,
                              const std::string& body, std::vector<std::string> answers) {
    return MockRule{MockMatcher::SubstringSet,
                    {"as Funny or " + opposite + ".",
                     "Joke: " + exemplar_pos_body + "\nClassification: Funny.",
                     "Joke: " + body + "\nClassification:"},
                    std::move(answers),
                    10};
}

inline MockRule vote_persona_rule(const std::string& persona_phrase, const std::string& body,
                                  std::vector<std::string> answers) {
    return MockRule{MockMatcher::SubstringSet,
                    {"enjoys " + persona_phrase + " humour", "Joke: " + body + "\nClassification:"},
                    std::move(answers),
                    7};
}

inline MockRule explanation_rule(const std::string& body, const std::string& persona_phrase,
                                 std::vector<std::string> answers) {
    std::vector<std::string> patterns = {"Let's think step by step why this [Joke] is",
                                         "Joke: " + body + "\n"};
    if (!persona_phrase.empty()) patterns.push_back("enjoys " + persona_phrase + " humour");
    return MockRule{MockMatcher::SubstringSet, std::move(patterns), std::move(answers), 20};
}

inline MockRule audit_rule(const std::string& reasoning_marker,
                           std::vector<std::string> answers) {
    return MockRule{MockMatcher::SubstringSet,
                    {"Does the [Reasoning] explain", "Reasoning: " + reasoning_marker},
                    std::move(answers),
                    30};
}

/// Catch-all audit rule (lowest audit priority).
inline MockRule audit_default_rule(const std::string& answer) {
    return MockRule{MockMatcher::SubstringSet, {"Does the [Reasoning] explain"}, {answer}, 25};
}

/// Catch-all explanation rule.
inline MockRule explanation_default_rule(const std::string& answer) {
    return MockRule{MockMatcher::SubstringSet,
                    {"Let's think step by step why this [Joke] is"},
                    {answer},
                    15};
}

// ---- fixture-derived id sets ----------------------------------------------

/// Positive/negative ids of the fixture corpus at threshold 2.0.
inline void fixture_classes(const crowdscore::Corpus& corpus, std::vector<std::string>& positives,
                            std::vector<std::string>& negatives) {
    for (const auto& joke : corpus.jokes)
        (*joke.human_rating >= 2.0 ? positives : negatives).push_back(joke.id);
}

inline std::string body_of(const crowdscore::Corpus& corpus, const std::string& id) {
    const crowdscore::Joke* joke = corpus.find(id);
    return joke ? joke->body : "";
}

}  // namespace testsupport
