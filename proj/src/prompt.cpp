#include "crowdscore/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

bool is_slot_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string fold_ascii(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

constexpr const char* kVotingZero =
    "Classify the following [Joke] as Funny or $Opposite.\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Classification:";

constexpr const char* kVotingFew =
    "Classify the following [Joke] as Funny or $Opposite.\n"
    "\n"
    "Joke: $FunnyJokeDescription\n"
    "Classification: Funny.\n"
    "\n"
    "Joke: $NotFunnyJokeDescription\n"
    "Classification: $Opposite.\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Classification:";

constexpr const char* kPersonality =
    "Classify the following [Joke] as Funny or $Opposite as a person that enjoys "
    "$TypeOfHumour humour.\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Classification:";

constexpr const char* kExplanation =
    "Classify the following [Joke] as Funny or $Opposite as a person that enjoys "
    "$TypeOfHumour humour.\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Classification: $FunnyOrOpposite. Let's think step by step why this [Joke] is "
    "$FunnyOrOpposite to a person that enjoys $TypeOfHumour humour.";

constexpr const char* kExplanationBaseline =
    "Classify the following [Joke] as Funny or $Opposite.\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Classification: $FunnyOrOpposite. Let's think step by step why this [Joke] is "
    "$FunnyOrOpposite.";

constexpr const char* kAudit =
    "Provide an answer to the following [Question], replacing [Reasoning], [Joke] and "
    "[Classification] slots for their contents.\n"
    "\n"
    "Question: Does the [Reasoning] explain why the [Joke] is [Classification]?\n"
    "\n"
    "Joke: $JokeDescription\n"
    "Reasoning: $ReasoningDescription\n"
    "Classification: $ClassificationDescription\n"
    "\n"
    "Answer:";

}  // namespace

Template::Template(std::string name, std::string body)
    : name_(std::move(name)), body_(std::move(body)) {
    for (std::size_t i = 0; i < body_.size(); ++i) {
        if (body_[i] != '$') continue;
        std::size_t j = i + 1;
        while (j < body_.size() && is_slot_char(body_[j])) ++j;
        if (j > i + 1) required_slots_.insert(body_.substr(i + 1, j - i - 1));
        i = j - 1;
    }
}

std::string render(const Template& tmpl, const SlotMap& slots, UnknownSlotPolicy policy,
                   std::vector<std::string>* warnings) {
    for (const auto& [identifier, value] : slots) {
        if (identifier.empty()) throw UnknownSlotError("(empty identifier)");
        if (tmpl.required_slots().count(identifier)) continue;
        if (policy == UnknownSlotPolicy::Error) throw UnknownSlotError(identifier);
        if (policy == UnknownSlotPolicy::Warn && warnings)
            warnings->push_back("unknown slot binding: " + identifier);
    }

    const std::string& body = tmpl.body();
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '$') {
            out.push_back(body[i]);
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && is_slot_char(body[j])) ++j;
        if (j == i + 1) {  // bare '$'
            out.push_back('$');
            continue;
        }
        std::string identifier = body.substr(i + 1, j - i - 1);
        auto it = slots.find(identifier);
        if (it == slots.end()) throw MissingSlotError(identifier);
        out += it->second;
        i = j - 1;
    }
    return out;
}

const char* to_string(ShotMode mode) {
    return mode == ShotMode::ZeroShot ? "zero" : "few";
}

ShotMode shot_mode_from_string(const std::string& name) {
    if (name == "zero" || name == "zero-shot") return ShotMode::ZeroShot;
    if (name == "few" || name == "few-shot") return ShotMode::FewShot;
    throw ConfigError("unknown shot mode: " + name);
}

void VotingQuestionSpec::validate() const {
    if (positive_label.empty() || opposite_label.empty())
        throw InvalidSpecError("voting labels must be non-empty");
    if (fold_ascii(positive_label) == fold_ascii(opposite_label))
        throw InvalidSpecError("voting labels must be distinct after case-folding: '" +
                               positive_label + "' vs '" + opposite_label + "'");
    if (shot_mode == ShotMode::FewShot) {
        if (!exemplar_positive || !exemplar_negative)
            throw InvalidSpecError("few-shot spec requires both exemplars");
        if (exemplar_positive->body.empty() || exemplar_negative->body.empty())
            throw InvalidSpecError("few-shot exemplars must have non-empty bodies");
    } else if (exemplar_positive || exemplar_negative) {
        throw InvalidSpecError("zero-shot spec must not carry exemplars");
    }
}

Persona Persona::from_name(const std::string& name) {
    std::string folded = fold_ascii(name);
    if (folded == "affiliative") return affiliative();
    if (folded == "self-enhancing") return self_enhancing();
    if (folded == "aggressive") return aggressive();
    if (folded == "self-defeating") return self_defeating();
    if (folded == "none") return none();
    throw ConfigError("unknown persona: " + name);
}

const std::vector<Persona>& Persona::all_humour_types() {
    static const std::vector<Persona> personas = {affiliative(), self_enhancing(), aggressive(),
                                                  self_defeating()};
    return personas;
}

std::string Persona::name() const {
    switch (kind) {
        case PersonaKind::Affiliative: return "affiliative";
        case PersonaKind::SelfEnhancing: return "self-enhancing";
        case PersonaKind::Aggressive: return "aggressive";
        case PersonaKind::SelfDefeating: return "self-defeating";
        case PersonaKind::None: return "none";
    }
    return "none";
}

namespace templates {

const Template& voting_zero() {
    static const Template tmpl("voting_zero", kVotingZero);
    return tmpl;
}

const Template& voting_few() {
    static const Template tmpl("voting_few", kVotingFew);
    return tmpl;
}

const Template& personality() {
    static const Template tmpl("personality", kPersonality);
    return tmpl;
}

const Template& explanation() {
    static const Template tmpl("explanation", kExplanation);
    return tmpl;
}

const Template& explanation_baseline() {
    static const Template tmpl("explanation_baseline", kExplanationBaseline);
    return tmpl;
}

const Template& audit() {
    static const Template tmpl("audit", kAudit);
    return tmpl;
}

Template load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    if (!body.empty() && body.back() == '\n') body.pop_back();
    return Template(path.stem().string(), std::move(body));
}

}  // namespace templates

Template with_positive_label(const Template& tmpl, const std::string& positive_label) {
    if (positive_label == "Funny") return tmpl;
    std::string body = tmpl.body();
    std::size_t pos = 0;
    while ((pos = body.find("Funny", pos)) != std::string::npos) {
        body.replace(pos, 5, positive_label);
        pos += positive_label.size();
    }
    return Template(tmpl.name(), std::move(body));
}

std::string build_voting_prompt(const VotingQuestionSpec& spec, const Persona& persona,
                                const Joke& joke) {
    spec.validate();
    SlotMap slots{{"Opposite", spec.opposite_label}, {"JokeDescription", joke.body}};
    if (!persona.is_none()) {
        if (spec.shot_mode == ShotMode::FewShot)
            throw InvalidSpecError(
                "few-shot prompting overwrites personality induction; use a zero-shot spec "
                "with personas");
        slots["TypeOfHumour"] = persona.humour_phrase;
        return render(with_positive_label(templates::personality(), spec.positive_label), slots);
    }
    if (spec.shot_mode == ShotMode::FewShot) {
        slots["FunnyJokeDescription"] = spec.exemplar_positive->body;
        slots["NotFunnyJokeDescription"] = spec.exemplar_negative->body;
        return render(with_positive_label(templates::voting_few(), spec.positive_label), slots);
    }
    return render(with_positive_label(templates::voting_zero(), spec.positive_label), slots);
}

std::string build_explanation_prompt(const VotingQuestionSpec& spec, const Persona& persona,
                                     const Joke& joke, const std::string& verdict_label) {
    spec.validate();
    std::string folded = fold_ascii(verdict_label);
    std::string canonical;
    if (folded == fold_ascii(spec.positive_label)) canonical = spec.positive_label;
    else if (folded == fold_ascii(spec.opposite_label)) canonical = spec.opposite_label;
    else
        throw InvalidSpecError("verdict '" + verdict_label + "' is neither '" +
                               spec.positive_label + "' nor '" + spec.opposite_label + "'");

    SlotMap slots{{"Opposite", spec.opposite_label},
                  {"JokeDescription", joke.body},
                  {"FunnyOrOpposite", canonical}};
    if (persona.is_none())
        return render(with_positive_label(templates::explanation_baseline(), spec.positive_label),
                      slots);
    slots["TypeOfHumour"] = persona.humour_phrase;
    return render(with_positive_label(templates::explanation(), spec.positive_label), slots);
}

std::string build_audit_prompt(const Joke& joke, const std::string& reasoning,
                               const std::string& classification) {
    if (reasoning.empty()) throw EmptyReasoningError();
    return render(templates::audit(), SlotMap{{"JokeDescription", joke.body},
                                              {"ReasoningDescription", reasoning},
                                              {"ClassificationDescription", classification}});
}

}  // namespace crowdscore
