#include <doctest.h>

#include <nlohmann/json.hpp>

#include "crowdscore/cli.hpp"
#include "crowdscore/csv.hpp"
#include "crowdscore/manifest.hpp"
#include "crowdscore/mock_backend.hpp"
#include "crowdscore/score.hpp"
#include "support.hpp"

using namespace crowdscore;
using testsupport::TempDir;
using ordered_json = nlohmann::ordered_json;

namespace {

/// Rules for a full happy-path crowd over the fixture corpus: persona and
/// baseline votes all Funny, unique explanation markers, all audits Yes.
std::vector<MockRule> happy_rules(const Corpus& corpus) {
    std::vector<MockRule> rules;
    for (const auto& joke : corpus.jokes) {
        rules.push_back(testsupport::vote_zero_rule("Boring", joke.body, {"Funny."}));
        for (const auto& persona : Persona::all_humour_types())
            rules.push_back(testsupport::vote_persona_rule(persona.humour_phrase, joke.body,
                                                           {"Funny."}));
    }
    rules.push_back(testsupport::explanation_default_rule("a plausible reading"));
    rules.push_back(testsupport::audit_default_rule("Yes."));
    return rules;
}

ordered_json base_config(const TempDir& tmp, const std::string& rules_file) {
    ordered_json config;
    config["backend"] = {{"kind", "mock"}, {"mock_rules", rules_file}, {"model", "mock"}};
    config["journal"] = (tmp.path() / "journal.jsonl").string();
    config["dataset"] = {{"path", testsupport::fixture_corpus_path().string()},
                         {"format", "csv"}};
    config["voting"] = {{"opposite_label", "Boring"},
                        {"shot_mode", "zero"},
                        {"exemplar_positive_id", "j20"},
                        {"exemplar_negative_id", "j33"}};
    config["out_dir"] = (tmp.path() / "out").string();
    config["runs"] = 1;
    return config;
}

std::string write_config(const TempDir& tmp, const ordered_json& config,
                         const std::string& name = "config.json") {
    auto path = tmp.file(name);
    testsupport::write_file(path, config.dump(2));
    return path.string();
}

int cli(std::vector<std::string> args) { return run_cli(args); }

}  // namespace

TEST_CASE("cli: vote -> audit -> score -> report chain on a scripted mock") {
    TempDir tmp("cli_chain");
    Corpus corpus = testsupport::fixture_corpus();
    auto rules_path = tmp.file("rules.jsonl").string();
    MockBackend::save_rules(rules_path, happy_rules(corpus));
    auto config_path = write_config(tmp, base_config(tmp, rules_path));

    CHECK(cli({"--config", config_path, "vote"}) == 0);
    CHECK(cli({"--config", config_path, "audit"}) == 0);
    CHECK(cli({"--config", config_path, "score"}) == 0);
    CHECK(cli({"--config", config_path, "report"}) == 0);

    auto out = tmp.path() / "out";
    for (const char* name : {"ballots.jsonl", "vote_spec.json", "ballots_audited.jsonl",
                             "scores.csv", "report.json", "report.csv", "vote.manifest.json",
                             "audit.manifest.json", "score.manifest.json",
                             "report.manifest.json"})
        CHECK(std::filesystem::exists(out / name));

    auto report = ordered_json::parse(testsupport::read_file(out / "report.json"));
    CHECK(report["audit"]["total_ballots"] == 52 * 4);
    CHECK(report["audit"]["invalid"] == 0);
    CHECK(report["per_joke"].size() == 52);

    SUBCASE("manifest chain links stages through matching digests") {
        auto vote_manifest = read_manifest((out / "vote.manifest.json").string());
        auto audit_manifest = read_manifest((out / "audit.manifest.json").string());
        std::string ballots_digest;
        for (const auto& [name, digest] : vote_manifest.outputs)
            if (name == "ballots.jsonl") ballots_digest = digest;
        REQUIRE_FALSE(ballots_digest.empty());
        bool linked = false;
        for (const auto& [path, digest] : audit_manifest.inputs)
            if (digest == ballots_digest) linked = true;
        CHECK(linked);
        CHECK(vote_manifest.config_digest == audit_manifest.config_digest);
    }

    SUBCASE("replay-verify reproduces the tree byte-identically") {
        CHECK(cli({"--config", config_path, "replay-verify"}) == 0);
    }

    SUBCASE("policies coincide on a journal with zero No audits") {
        auto scores = read_scores_csv((out / "scores.csv").string());
        std::vector<CrowdScore> all, valid;
        for (const auto& score : scores)
            (score.policy == ScorePolicy::AllVotes ? all : valid).push_back(score);
        REQUIRE(all.size() == valid.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            CHECK(all[i].joke_id == valid[i].joke_id);
            CHECK(all[i].raw == valid[i].raw);
            CHECK(all[i].voters_counted == valid[i].voters_counted);
        }

        // the same holds for two single-policy score runs
        CHECK(cli({"--config", config_path, "--out", (tmp.path() / "pa").string(), "score",
                   "--ballots", (out / "ballots_audited.jsonl").string(), "--policy",
                   "all"}) == 0);
        CHECK(cli({"--config", config_path, "--out", (tmp.path() / "pv").string(), "score",
                   "--ballots", (out / "ballots_audited.jsonl").string(), "--policy",
                   "valid-only"}) == 0);
        auto run_a = read_scores_csv((tmp.path() / "pa" / "scores.csv").string());
        auto run_v = read_scores_csv((tmp.path() / "pv" / "scores.csv").string());
        REQUIRE(run_a.size() == run_v.size());
        for (std::size_t i = 0; i < run_a.size(); ++i) {
            CHECK(run_a[i].joke_id == run_v[i].joke_id);
            CHECK(run_a[i].run_index == run_v[i].run_index);
            CHECK(run_a[i].raw == run_v[i].raw);
            CHECK(run_a[i].voters_counted == run_v[i].voters_counted);
            CHECK(run_a[i].normalized.has_value() == run_v[i].normalized.has_value());
        }
    }
}

TEST_CASE("cli: calibrate writes a ranked report and the chosen spec") {
    TempDir tmp("cli_calibrate");
    Corpus corpus = testsupport::fixture_corpus();
    auto anchors = select_anchor_set(corpus, 4);

    // few-shot rules perfect for Boring/Dull, zero-shot slightly off
    std::vector<MockRule> rules;
    std::string exemplar_pos = corpus.find("j20")->body;
    for (const auto& anchor : anchors) {
        bool positive = anchor.label == Label::Positive;
        for (const std::string opposite : {"Boring", "Dull"}) {
            rules.push_back(testsupport::vote_few_rule(opposite, exemplar_pos, anchor.joke.body,
                                                       {positive ? "Funny." : opposite + "."}));
            // zero-shot: first negative anchor misvotes Funny
            bool misvote = !positive && anchor.joke.id == anchors[4].joke.id;
            rules.push_back(testsupport::vote_zero_rule(
                opposite, anchor.joke.body,
                {positive || misvote ? "Funny." : opposite + "."}));
        }
    }
    auto rules_path = tmp.file("rules.jsonl").string();
    MockBackend::save_rules(rules_path, rules);

    auto config = base_config(tmp, rules_path);
    config["calibration"] = {{"opposites", ordered_json::array({"Boring", "Dull"})},
                             {"shot_modes", ordered_json::array({"zero", "few"})},
                             {"anchor_k", 4}};
    config["runs"] = 3;
    auto config_path = write_config(tmp, config);

    CHECK(cli({"--config", config_path, "calibrate"}) == 0);
    auto out = tmp.path() / "out";
    auto chosen = ordered_json::parse(testsupport::read_file(out / "chosen_spec.json"));
    CHECK(chosen["opposite_label"] == "Boring");  // ties broken by label order
    CHECK(chosen["shot_mode"] == "few");
    CHECK(chosen["f_score"] == 1.0);
    CHECK(chosen["balanced_accuracy"] == 1.0);

    auto records = csv::read_file((out / "calibration.csv").string());
    REQUIRE(records.size() == 5);  // header + 4 cells
    CHECK(records[0] == std::vector<std::string>{"opposite", "shot_mode", "f_score",
                                                 "balanced_accuracy", "tp", "fp", "tn", "fn",
                                                 "unparseable", "runs"});
    CHECK(records[1][0] == "Boring");
    CHECK(records[1][1] == "few");
    CHECK(records[1][9] == "3");  // --runs carried into the report rows

    SUBCASE("the chosen few-shot spec downgrades to zero-shot persona voting") {
        MockBackend::save_rules(rules_path, happy_rules(corpus));
        CHECK(cli({"--config", config_path, "vote"}) == 0);
        auto vote_spec = ordered_json::parse(testsupport::read_file(out / "vote_spec.json"));
        CHECK(vote_spec["shot_mode"] == "zero");
        CHECK(vote_spec["opposite_label"] == "Boring");
    }
}

TEST_CASE("cli: config errors exit 2 with a machine-parsable line") {
    TempDir tmp("cli_config");
    auto config = base_config(tmp, "unused.jsonl");
    config["calibration"] = {{"opposites", ordered_json::array()}};
    auto config_path = write_config(tmp, config);
    CHECK(cli({"--config", config_path, "calibrate"}) == 2);

    SUBCASE("unknown config keys are rejected") {
        auto bad = base_config(tmp, "unused.jsonl");
        bad["dataste"] = {{"path", "x"}};
        CHECK(cli({"--config", write_config(tmp, bad, "bad.json"), "score"}) == 2);
    }
    SUBCASE("few-shot voting plus personas is rejected at config time") {
        auto bad = base_config(tmp, "unused.jsonl");
        bad["voting"]["shot_mode"] = "few";
        CHECK(cli({"--config", write_config(tmp, bad, "fewshot.json"), "vote"}) == 2);
    }
    SUBCASE("unknown flags exit 2") { CHECK(cli({"--bogus-flag", "vote"}) == 2); }
}

TEST_CASE("cli: missing data files exit 4") {
    TempDir tmp("cli_data");
    Corpus corpus = testsupport::fixture_corpus();
    auto rules_path = tmp.file("rules.jsonl").string();
    MockBackend::save_rules(rules_path, happy_rules(corpus));
    auto config = base_config(tmp, rules_path);
    auto config_path = write_config(tmp, config);
    // score before any vote: no ballot file
    CHECK(cli({"--config", config_path, "score"}) == 4);
}

TEST_CASE("cli: replay mode misses exit 3 naming the digest") {
    TempDir tmp("cli_replay");
    Corpus corpus = testsupport::fixture_corpus();
    auto rules_path = tmp.file("rules.jsonl").string();
    MockBackend::save_rules(rules_path, happy_rules(corpus));
    auto config = base_config(tmp, rules_path);
    auto config_path = write_config(tmp, config);

    CHECK(cli({"--config", config_path, "vote"}) == 0);
    // replay works for the recorded run
    CHECK(cli({"--config", config_path, "--backend", "replay", "--out",
               (tmp.path() / "replay_out").string(), "vote"}) == 0);
    // a different spec produces unseen prompts -> JournalMiss -> exit 3
    ordered_json other_spec = {{"positive_label", "Funny"},
                               {"opposite_label", "Dull"},
                               {"shot_mode", "zero"}};
    testsupport::write_file(tmp.file("other_spec.json"), other_spec.dump());
    CHECK(cli({"--config", config_path, "--backend", "replay", "--out",
               (tmp.path() / "replay_out2").string(), "vote", "--spec",
               tmp.file("other_spec.json").string()}) == 3);
}

TEST_CASE("cli: --runs and --seed overrides land in outputs") {
    TempDir tmp("cli_overrides");
    Corpus corpus = testsupport::fixture_corpus();
    auto rules_path = tmp.file("rules.jsonl").string();
    MockBackend::save_rules(rules_path, happy_rules(corpus));
    auto config_path = write_config(tmp, base_config(tmp, rules_path));

    CHECK(cli({"--config", config_path, "--runs", "2", "--seed", "99", "vote"}) == 0);
    auto ballots = read_ballots((tmp.path() / "out" / "ballots.jsonl").string());
    CHECK(ballots.size() == 52 * 4 * 2);
    auto manifest = read_manifest((tmp.path() / "out" / "vote.manifest.json").string());
    CHECK(manifest.seed == 99);
}
