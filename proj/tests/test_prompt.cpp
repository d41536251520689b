#include <doctest.h>

#include <random>

#include "crowdscore/errors.hpp"
#include "crowdscore/prompt.hpp"
#include "support.hpp"

using namespace crowdscore;

namespace {

Joke make_joke(const std::string& body) { return {"jX", "h", body, "src", 2.5}; }

VotingQuestionSpec zero_spec(const std::string& opposite = "Boring") {
    VotingQuestionSpec spec;
    spec.opposite_label = opposite;
    return spec;
}

VotingQuestionSpec few_spec(const std::string& opposite = "Boring") {
    VotingQuestionSpec spec;
    spec.opposite_label = opposite;
    spec.shot_mode = ShotMode::FewShot;
    spec.exemplar_positive = make_joke("Exemplar that lands.");
    spec.exemplar_negative = make_joke("Exemplar that does not.");
    return spec;
}

}  // namespace

TEST_CASE("render substitutes the voting question example") {
    Template tmpl("voting",
                  "Classify the following [Joke] as Funny or $Opposite.\n\nJoke: "
                  "$JokeDescription\nClassification:");
    std::string text = render(tmpl, {{"Opposite", "Boring"}, {"JokeDescription", "Q? A."}});
    CHECK(text ==
          "Classify the following [Joke] as Funny or Boring.\n\nJoke: Q? A.\nClassification:");
}

TEST_CASE("render of a slotless template is the identity") {
    Template tmpl("plain", "No slots here, just [Brackets] and a lone $ sign.");
    CHECK(render(tmpl, {}) == tmpl.body());
}

TEST_CASE("render reports missing and unknown slots") {
    const Template& tmpl = templates::personality();
    SlotMap missing{{"Opposite", "Boring"}, {"JokeDescription", "x"}};
    CHECK_THROWS_AS(render(tmpl, missing), MissingSlotError);

    SlotMap extra{{"Opposite", "Boring"},
                  {"JokeDescription", "x"},
                  {"TypeOfHumour", "dry"},
                  {"Bogus", "y"}};
    CHECK_THROWS_AS(render(tmpl, extra), UnknownSlotError);

    std::vector<std::string> warnings;
    CHECK_NOTHROW(render(tmpl, extra, UnknownSlotPolicy::Warn, &warnings));
    CHECK(warnings.size() == 1);
    CHECK_NOTHROW(render(tmpl, extra, UnknownSlotPolicy::Ignore));
}

TEST_CASE("substitution is literal, never recursive") {
    Template tmpl("t", "Value: $A");
    std::string text = render(tmpl, {{"A", "$A and $B"}});
    CHECK(text == "Value: $A and $B");
}

TEST_CASE("required slots match the $ references in the body") {
    CHECK(templates::voting_zero().required_slots() ==
          std::set<std::string>{"Opposite", "JokeDescription"});
    CHECK(templates::voting_few().required_slots() ==
          std::set<std::string>{"Opposite", "JokeDescription", "FunnyJokeDescription",
                                "NotFunnyJokeDescription"});
    CHECK(templates::audit().required_slots() ==
          std::set<std::string>{"JokeDescription", "ReasoningDescription",
                                "ClassificationDescription"});
}

TEST_CASE("render property: bound values appear verbatim, no slot survives") {
    std::mt19937 rng(11);
    auto random_word = [&](std::size_t max_len) {
        static const char* alphabet = "abcdefghijklmnopqrstuvwxyz QR0123";
        std::uniform_int_distribution<std::size_t> len(1, max_len);
        std::uniform_int_distribution<std::size_t> pick(0, 32);
        std::string word;
        for (std::size_t i = 0, n = len(rng); i < n; ++i) word.push_back(alphabet[pick(rng)]);
        return word;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::string body = "Header $SlotA middle $SlotB, [Ref] tail $SlotA.";
        Template tmpl("prop", body);
        SlotMap slots{{"SlotA", random_word(12)}, {"SlotB", random_word(12)}};
        std::string text = render(tmpl, slots);
        for (const auto& [identifier, value] : slots) {
            CHECK(text.find(value) != std::string::npos);
            CHECK(text.find("$" + identifier) == std::string::npos);
        }
        CHECK(text.find("[Ref]") != std::string::npos);
        // determinism
        CHECK(render(tmpl, slots) == text);
    }
}

TEST_CASE("built-in templates equal the shipped asset files") {
    auto check = [](const Template& tmpl, const char* file) {
        Template loaded = templates::load_file(testsupport::asset_dir() / file);
        CHECK(loaded.body() == tmpl.body());
    };
    check(templates::voting_zero(), "voting_zero.txt");
    check(templates::voting_few(), "voting_few.txt");
    check(templates::personality(), "personality.txt");
    check(templates::explanation(), "explanation.txt");
    check(templates::audit(), "audit.txt");
}

TEST_CASE("voting spec invariants") {
    CHECK_NOTHROW(zero_spec().validate());
    CHECK_NOTHROW(few_spec().validate());

    VotingQuestionSpec same = zero_spec("funny");
    CHECK_THROWS_AS(same.validate(), InvalidSpecError);

    VotingQuestionSpec half = few_spec();
    half.exemplar_negative.reset();
    CHECK_THROWS_AS(half.validate(), InvalidSpecError);

    VotingQuestionSpec stray = zero_spec();
    stray.exemplar_positive = make_joke("x");
    CHECK_THROWS_AS(stray.validate(), InvalidSpecError);
}

TEST_CASE("persona invariants and names") {
    CHECK(Persona::none().humour_phrase.empty());
    CHECK(Persona::aggressive().humour_phrase == "aggressive");
    CHECK(Persona::from_name("self-defeating").kind == PersonaKind::SelfDefeating);
    CHECK_THROWS_AS(Persona::from_name("bogus"), ConfigError);
    CHECK(Persona::all_humour_types().size() == 4);
}

TEST_CASE("build_voting_prompt shapes") {
    Joke joke = make_joke("A man told a joke about scaffolding. It had no support.");

    SUBCASE("zero-shot baseline has the canonical shape") {
        std::string prompt = build_voting_prompt(zero_spec(), Persona::none(), joke);
        CHECK(prompt == "Classify the following [Joke] as Funny or Boring.\n\nJoke: " +
                            joke.body + "\nClassification:");
    }
    SUBCASE("persona inserts the humour phrase") {
        std::string prompt = build_voting_prompt(zero_spec(), Persona::aggressive(), joke);
        CHECK(prompt.find("as a person that enjoys aggressive humour") != std::string::npos);
        std::string baseline = build_voting_prompt(zero_spec(), Persona::none(), joke);
        // the two differ only by the inserted persona phrase
        std::string inserted = " as a person that enjoys aggressive humour";
        auto pos = prompt.find(inserted);
        REQUIRE(pos != std::string::npos);
        std::string stripped = prompt.substr(0, pos) + prompt.substr(pos + inserted.size());
        CHECK(stripped == baseline);
    }
    SUBCASE("few-shot carries both exemplar blocks before the joke block") {
        VotingQuestionSpec spec = few_spec();
        std::string prompt = build_voting_prompt(spec, Persona::none(), joke);
        auto pos_ex1 = prompt.find("Joke: " + spec.exemplar_positive->body +
                                   "\nClassification: Funny.");
        auto pos_ex2 = prompt.find("Joke: " + spec.exemplar_negative->body +
                                   "\nClassification: Boring.");
        auto pos_joke = prompt.find("Joke: " + joke.body + "\nClassification:");
        REQUIRE(pos_ex1 != std::string::npos);
        REQUIRE(pos_ex2 != std::string::npos);
        REQUIRE(pos_joke != std::string::npos);
        CHECK(pos_ex1 < pos_ex2);
        CHECK(pos_ex2 < pos_joke);
        CHECK(prompt.rfind("Classification:") == prompt.size() - 15);
    }
    SUBCASE("few-shot with a persona is rejected") {
        CHECK_THROWS_AS(build_voting_prompt(few_spec(), Persona::aggressive(), joke),
                        InvalidSpecError);
    }
    SUBCASE("few-shot without an exemplar is rejected") {
        VotingQuestionSpec spec = few_spec();
        spec.exemplar_negative.reset();
        CHECK_THROWS_AS(build_voting_prompt(spec, Persona::none(), joke), InvalidSpecError);
    }
}

TEST_CASE("build_explanation_prompt embeds the decided classification") {
    Joke joke = make_joke("He tried to write with a broken pencil. It was pointless.");

    std::string prompt =
        build_explanation_prompt(zero_spec(), Persona::self_defeating(), joke, "Funny");
    CHECK(prompt.find("Classification: Funny. Let's think step by step why this [Joke] is "
                      "Funny to a person that enjoys self-defeating humour.") !=
          std::string::npos);

    SUBCASE("opposite verdict lands in both positions") {
        std::string boring =
            build_explanation_prompt(zero_spec(), Persona::self_defeating(), joke, "Boring");
        CHECK(boring.find("Classification: Boring. Let's think step by step why this [Joke] "
                          "is Boring") != std::string::npos);
    }
    SUBCASE("verdict casing folds to the canonical label") {
        std::string folded =
            build_explanation_prompt(zero_spec(), Persona::none(), joke, "bOrInG");
        CHECK(folded.find("Classification: Boring.") != std::string::npos);
    }
    SUBCASE("a verdict outside the label pair is rejected") {
        CHECK_THROWS_AS(
            build_explanation_prompt(zero_spec(), Persona::none(), joke, "Hilarious"),
            InvalidSpecError);
    }
    SUBCASE("baseline persona drops both humour phrases") {
        std::string baseline =
            build_explanation_prompt(zero_spec(), Persona::none(), joke, "Funny");
        CHECK(baseline.find("humour") == std::string::npos);
        CHECK(baseline.find("Let's think step by step why this [Joke] is Funny.") !=
              std::string::npos);
    }
}

TEST_CASE("build_audit_prompt has the canonical audit shape") {
    Joke joke = make_joke("The cheese stood alone. It was provolone.");
    std::string prompt = build_audit_prompt(joke, "Because isolation is the point.", "Funny");
    CHECK(prompt.find("Does the [Reasoning] explain why the [Joke] is [Classification]?") !=
          std::string::npos);
    CHECK(prompt.find("Reasoning: Because isolation is the point.") != std::string::npos);
    CHECK(prompt.rfind("Answer:") == prompt.size() - 7);

    CHECK_THROWS_AS(build_audit_prompt(joke, "", "Funny"), EmptyReasoningError);
}

TEST_CASE("with_positive_label generalizes the canonical templates") {
    VotingQuestionSpec spec;
    spec.positive_label = "Witty";
    spec.opposite_label = "Flat";
    Joke joke = make_joke("A pun about paper. It was tearable.");
    std::string prompt = build_voting_prompt(spec, Persona::none(), joke);
    CHECK(prompt.find("as Witty or Flat.") != std::string::npos);
    CHECK(prompt.find("Funny") == std::string::npos);
}
