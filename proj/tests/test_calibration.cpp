#include <doctest.h>

#include <random>

#include "crowdscore/calibration.hpp"
#include "crowdscore/errors.hpp"
#include "crowdscore/mock_backend.hpp"
#include "support.hpp"

using namespace crowdscore;

namespace {

VotingQuestionSpec labels(const std::string& positive, const std::string& opposite) {
    VotingQuestionSpec spec;
    spec.positive_label = positive;
    spec.opposite_label = opposite;
    return spec;
}

}  // namespace

TEST_CASE("parse_verdict label matching") {
    auto spec = labels("Funny", "Boring");
    CHECK(parse_verdict(" Funny.\n", spec).value == VerdictValue::Positive);
    CHECK(parse_verdict("boring", spec).value == VerdictValue::Negative);
    CHECK(parse_verdict("Funny, but also boring.", spec).value == VerdictValue::Unparseable);
    CHECK(parse_verdict("As an AI language model...", spec).value == VerdictValue::Unparseable);
    CHECK(parse_verdict("", spec).value == VerdictValue::Unparseable);
    CHECK(parse_verdict("\n\n  FUNNY!\nsecond line boring", spec).value ==
          VerdictValue::Positive);
    CHECK(*parse_verdict("funny", spec).matched_label == "Funny");
    CHECK_FALSE(parse_verdict("neither", spec).matched_label.has_value());
}

TEST_CASE("parse_verdict handles overlapping labels") {
    auto spec = labels("Funny", "Not funny");
    CHECK(parse_verdict("Not funny.", spec).value == VerdictValue::Negative);
    CHECK(parse_verdict("Funny", spec).value == VerdictValue::Positive);
    CHECK(parse_verdict("Funny, not funny, who knows", spec).value ==
          VerdictValue::Unparseable);

    auto unfunny = labels("Funny", "Unfunny");
    CHECK(parse_verdict("unfunny", unfunny).value == VerdictValue::Negative);
}

TEST_CASE("parse_verdict never crashes and keeps its label invariant") {
    auto spec = labels("Funny", "Not funny");
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> len(0, 40);
    std::uniform_int_distribution<int> pick(0, 6);
    const char* fragments[] = {"Funny", "not funny", "\n", " ", ".", "maybe", "FUNNY,"};
    for (int trial = 0; trial < 500; ++trial) {
        std::string completion;
        for (int i = 0, n = len(rng) % 8; i < n; ++i) completion += fragments[pick(rng)];
        Verdict verdict = parse_verdict(completion, spec);
        CHECK(verdict.raw_completion == completion);
        CHECK(verdict.matched_label.has_value() ==
              (verdict.value != VerdictValue::Unparseable));
        if (verdict.matched_label)
            CHECK((*verdict.matched_label == "Funny" || *verdict.matched_label == "Not funny"));
    }
}

TEST_CASE("f_score examples") {
    CHECK(f_score({4, 0, 4, 0}) == 1.0);
    CHECK(f_score({4, 1, 3, 0}) == doctest::Approx(8.0 / 9.0));
    CHECK(f_score({0, 0, 0, 4}) == 0.0);
    CHECK_FALSE(f_score_defined({0, 0, 7, 0}));
    CHECK(f_score({0, 0, 7, 0}) == 0.0);
}

TEST_CASE("balanced_accuracy examples") {
    CHECK(balanced_accuracy({4, 0, 4, 0}) == 1.0);
    CHECK(balanced_accuracy({4, 1, 3, 0}) == doctest::Approx(0.875));
    CHECK(balanced_accuracy({4, 2, 2, 0}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(balanced_accuracy({0, 1, 1, 0}), EmptyClassError);
    CHECK_THROWS_AS(balanced_accuracy({1, 0, 0, 1}), EmptyClassError);
}

TEST_CASE("metric properties: scale invariance and class swap") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<long> count(0, 12);
    std::uniform_int_distribution<long> factor(2, 5);
    for (int trial = 0; trial < 300; ++trial) {
        ConfusionCounts c{count(rng), count(rng), count(rng), count(rng)};
        long m = factor(rng);
        ConfusionCounts scaled{c.tp * m, c.fp * m, c.tn * m, c.fn * m};
        if (f_score_defined(c))
            CHECK(f_score(c) == doctest::Approx(f_score(scaled)).epsilon(1e-12));
        if (c.tp + c.fn > 0 && c.tn + c.fp > 0) {
            CHECK(balanced_accuracy(c) ==
                  doctest::Approx(balanced_accuracy(scaled)).epsilon(1e-12));
            ConfusionCounts swapped{c.tn, c.fn, c.tp, c.fp};  // tp<->tn, fp<->fn
            CHECK(balanced_accuracy(c) ==
                  doctest::Approx(balanced_accuracy(swapped)).epsilon(1e-12));
        }
    }
}

TEST_CASE("an unparseable verdict never improves either metric") {
    // Unparseable counts as a misclassification of the true class: fn for a
    // positive anchor, fp for a negative one.
    std::mt19937 rng(29);
    std::uniform_int_distribution<long> count(1, 10);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{count(rng), count(rng), count(rng), count(rng)};
        ConfusionCounts plus_pos_unparseable{c.tp, c.fp, c.tn, c.fn + 1};
        ConfusionCounts plus_neg_unparseable{c.tp, c.fp + 1, c.tn, c.fn};
        CHECK(f_score(plus_pos_unparseable) <= f_score(c));
        CHECK(f_score(plus_neg_unparseable) <= f_score(c));
        CHECK(balanced_accuracy(plus_pos_unparseable) <= balanced_accuracy(c));
        CHECK(balanced_accuracy(plus_neg_unparseable) <= balanced_accuracy(c));
    }
}

namespace {

/// Table-1-shaped scripted sweep over the fixture anchor set.
struct SweepFixture {
    Corpus corpus = testsupport::fixture_corpus();
    std::vector<LabeledJoke> anchors = select_anchor_set(corpus, 4);
    SweepOptions options;

    SweepFixture() {
        options.exemplar_positive = *corpus.find("j20");
        options.exemplar_negative = *corpus.find("j33");
        options.params.model = "mock";
    }

    std::vector<std::string> anchor_bodies(Label label) const {
        std::vector<std::string> bodies;
        for (const auto& anchor : anchors)
            if (anchor.label == label) bodies.push_back(anchor.joke.body);
        return bodies;
    }
};

}  // namespace

TEST_CASE("run_sweep: degenerate always-positive mock gives F = 2p/(2p+n)") {
    SweepFixture fx;
    std::vector<MockRule> rules = {
        {MockMatcher::SubstringSet, {"Classify the following [Joke]"}, {"Funny."}, 0}};
    MockBackend backend(rules, true);
    auto results = run_sweep(fx.anchors, {"Boring"}, {ShotMode::ZeroShot}, 1, backend,
                             fx.options);
    REQUIRE(results.size() == 1);
    // 4 positives, 4 negatives, everything classified positive
    CHECK(results[0].counts == ConfusionCounts{4, 4, 0, 0});
    CHECK(results[0].f_score == doctest::Approx(8.0 / 12.0));
    CHECK(results[0].unparseable_count == 0);
}

TEST_CASE("run_sweep scripted to the Table-1 reconstruction ranks Boring/Dull first") {
    SweepFixture fx;
    auto positives = fx.anchor_bodies(Label::Positive);
    auto negatives = fx.anchor_bodies(Label::Negative);
    std::vector<std::string> opposites = {"Not funny", "Dumb",    "Unfunny", "Not Amusing",
                                          "Sad",       "Serious", "Dull",    "Boring"};

    std::vector<MockRule> rules;
    auto script_zero = [&](const std::string& opposite,
                           const std::vector<std::string>& positive_answers,
                           const std::vector<std::string>& negative_answers) {
        for (std::size_t i = 0; i < positives.size(); ++i)
            rules.push_back(testsupport::vote_zero_rule(opposite, positives[i],
                                                        {positive_answers[i]}));
        for (std::size_t i = 0; i < negatives.size(); ++i)
            rules.push_back(testsupport::vote_zero_rule(opposite, negatives[i],
                                                        {negative_answers[i]}));
    };
    auto script_few = [&](const std::string& opposite,
                          const std::vector<std::string>& positive_answers,
                          const std::vector<std::string>& negative_answers) {
        for (std::size_t i = 0; i < positives.size(); ++i)
            rules.push_back(testsupport::vote_few_rule(
                opposite, fx.options.exemplar_positive->body, positives[i],
                {positive_answers[i]}));
        for (std::size_t i = 0; i < negatives.size(); ++i)
            rules.push_back(testsupport::vote_few_rule(
                opposite, fx.options.exemplar_positive->body, negatives[i],
                {negative_answers[i]}));
    };

    const std::string F = "Funny.";
    for (const auto& opposite : opposites) {
        std::string O = opposite + ".";
        if (opposite == "Boring" || opposite == "Dull") {
            script_zero(opposite, {F, F, F, F}, {F, O, O, O});   // (tp4, fp1, tn3, fn0)
            script_few(opposite, {F, F, F, F}, {O, O, O, O});    // perfect
        } else if (opposite == "Serious" || opposite == "Sad") {
            script_zero(opposite, {F, F, F, F}, {F, F, O, O});   // (4,2,2,0)
            script_few(opposite, {F, F, F, F}, {F, F, O, O});
        } else if (opposite == "Not Amusing") {
            script_zero(opposite, {F, F, F, O}, {F, O, O, O});   // (3,1,3,1)
            script_few(opposite, {F, F, F, O}, {O, O, O, O});    // (3,0,4,1)
        } else {  // Unfunny, Dumb, Not funny
            script_zero(opposite, {F, F, F, O}, {F, F, O, O});   // (3,2,2,1)
            script_few(opposite, {F, F, F, O}, {O, O, O, O});    // (3,0,4,1)
        }
    }

    MockBackend backend(rules, true);
    auto results = run_sweep(fx.anchors, opposites, {ShotMode::ZeroShot, ShotMode::FewShot}, 1,
                             backend, fx.options);
    REQUIRE(results.size() == 16);
    // Boring and Dull few-shot tied at (1.0, 1.0); opposite ascending breaks the tie
    CHECK(results[0].spec.opposite_label == "Boring");
    CHECK(results[0].spec.shot_mode == ShotMode::FewShot);
    CHECK(results[0].f_score == 1.0);
    CHECK(results[0].balanced_accuracy == 1.0);
    CHECK(results[1].spec.opposite_label == "Dull");
    CHECK(results[1].spec.shot_mode == ShotMode::FewShot);
    CHECK(results[1].f_score == 1.0);

    for (const auto& result : results) {
        if (result.spec.opposite_label == "Boring" &&
            result.spec.shot_mode == ShotMode::ZeroShot) {
            CHECK(result.f_score == doctest::Approx(8.0 / 9.0));
            CHECK(result.balanced_accuracy == doctest::Approx(0.875));
        }
    }

    SUBCASE("a scripted sweep is byte-identical across executions") {
        testsupport::TempDir tmp("sweep");
        MockBackend again(rules, true);
        auto results2 = run_sweep(fx.anchors, opposites,
                                  {ShotMode::ZeroShot, ShotMode::FewShot}, 1, again, fx.options);
        write_calibration_csv(results, tmp.file("a.csv").string());
        write_calibration_csv(results2, tmp.file("b.csv").string());
        CHECK(testsupport::read_file(tmp.file("a.csv")) ==
              testsupport::read_file(tmp.file("b.csv")));
        backend.journal().export_file(tmp.file("a.jsonl").string());
        again.journal().export_file(tmp.file("b.jsonl").string());
        CHECK(testsupport::read_file(tmp.file("a.jsonl")) ==
              testsupport::read_file(tmp.file("b.jsonl")));
    }
}

TEST_CASE("run_sweep majority aggregation and per-run means over 3 runs") {
    SweepFixture fx;
    auto positives = fx.anchor_bodies(Label::Positive);
    auto negatives = fx.anchor_bodies(Label::Negative);

    // One positive anchor flips Funny,Boring,Boring across runs: the per-run
    // mean sees tp 4,3,3 while the majority verdict lands on Boring.
    std::vector<MockRule> rules;
    rules.push_back(testsupport::vote_zero_rule("Boring", positives[0],
                                                {"Funny.", "Boring.", "Boring."}));
    for (std::size_t i = 1; i < positives.size(); ++i)
        rules.push_back(testsupport::vote_zero_rule("Boring", positives[i], {"Funny."}));
    for (const auto& body : negatives)
        rules.push_back(testsupport::vote_zero_rule("Boring", body, {"Boring."}));

    MockBackend backend(rules, true);
    auto results = run_sweep(fx.anchors, {"Boring"}, {ShotMode::ZeroShot}, 3, backend,
                             fx.options);
    REQUIRE(results.size() == 1);
    const auto& cell = results[0];
    CHECK(cell.runs == 3);
    REQUIRE(cell.per_run.size() == 3);
    CHECK(cell.per_run[0].counts == ConfusionCounts{4, 0, 4, 0});
    CHECK(cell.per_run[1].counts == ConfusionCounts{3, 0, 4, 1});
    // headline = mean of run metrics
    double f_run0 = 1.0, f_run12 = 6.0 / 7.0;
    CHECK(cell.f_score == doctest::Approx((f_run0 + 2 * f_run12) / 3.0));
    CHECK(cell.balanced_accuracy == doctest::Approx((1.0 + 2 * 0.875) / 3.0));
    // majority: the flipping anchor resolves to Boring -> fn
    CHECK(cell.counts == ConfusionCounts{3, 0, 4, 1});
    CHECK(cell.majority_f_score == doctest::Approx(6.0 / 7.0));
}

TEST_CASE("run_sweep majority tie across runs counts as unparseable") {
    SweepFixture fx;
    auto positives = fx.anchor_bodies(Label::Positive);
    auto negatives = fx.anchor_bodies(Label::Negative);
    std::vector<MockRule> rules;
    // two runs, split verdicts on one positive anchor
    rules.push_back(testsupport::vote_zero_rule("Boring", positives[0],
                                                {"Funny.", "Boring."}));
    for (std::size_t i = 1; i < positives.size(); ++i)
        rules.push_back(testsupport::vote_zero_rule("Boring", positives[i], {"Funny."}));
    for (const auto& body : negatives)
        rules.push_back(testsupport::vote_zero_rule("Boring", body, {"Boring."}));

    MockBackend backend(rules, true);
    auto results = run_sweep(fx.anchors, {"Boring"}, {ShotMode::ZeroShot}, 2, backend,
                             fx.options);
    // tie -> Unparseable -> counted against the positive class
    CHECK(results[0].counts == ConfusionCounts{3, 0, 4, 1});
}

TEST_CASE("run_sweep backend failure marks only the affected cell partial") {
    SweepFixture fx;
    auto positives = fx.anchor_bodies(Label::Positive);
    auto negatives = fx.anchor_bodies(Label::Negative);
    std::vector<MockRule> rules;
    // only the Boring cell is scripted; the Dull cell has no matching rules
    for (const auto& body : positives)
        rules.push_back(testsupport::vote_zero_rule("Boring", body, {"Funny."}));
    for (const auto& body : negatives)
        rules.push_back(testsupport::vote_zero_rule("Boring", body, {"Boring."}));

    MockBackend backend(rules, true);  // strict: Dull prompts raise
    auto results =
        run_sweep(fx.anchors, {"Boring", "Dull"}, {ShotMode::ZeroShot}, 1, backend, fx.options);
    REQUIRE(results.size() == 2);
    CHECK_FALSE(results[0].partial);
    CHECK(results[0].spec.opposite_label == "Boring");
    CHECK(results[1].partial);
    CHECK(results[1].spec.opposite_label == "Dull");
    CHECK(results[1].partial_reason.find("NoMockRuleMatched") != std::string::npos);
}

TEST_CASE("run_sweep validates its configuration") {
    SweepFixture fx;
    MockBackend backend({}, false);
    CHECK_THROWS_AS(
        run_sweep(fx.anchors, {}, {ShotMode::ZeroShot}, 1, backend, fx.options), ConfigError);
    CHECK_THROWS_AS(
        run_sweep(fx.anchors, {"Boring"}, {ShotMode::ZeroShot}, 0, backend, fx.options),
        ConfigError);
    std::vector<LabeledJoke> one_sided = {{fx.corpus.jokes[0], Label::Positive}};
    CHECK_THROWS_AS(
        run_sweep(one_sided, {"Boring"}, {ShotMode::ZeroShot}, 1, backend, fx.options),
        ConfigError);
    SweepOptions no_exemplars;
    no_exemplars.params.model = "mock";
    CHECK_THROWS_AS(
        run_sweep(fx.anchors, {"Boring"}, {ShotMode::FewShot}, 1, backend, no_exemplars),
        ConfigError);
}
