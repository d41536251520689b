#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crowdscore/dataset.hpp"

namespace crowdscore {

/// Immutable prompt template. Slots are written `$Identifier` where the
/// identifier runs until the first non-alphanumeric character. Bracketed
/// `[Identifier]` references are prompt text addressed to the model and are
/// left verbatim.
class Template {
public:
    Template(std::string name, std::string body);

    const std::string& name() const { return name_; }
    const std::string& body() const { return body_; }
    const std::set<std::string>& required_slots() const { return required_slots_; }

private:
    std::string name_;
    std::string body_;
    std::set<std::string> required_slots_;
};

using SlotMap = std::map<std::string, std::string>;

enum class UnknownSlotPolicy { Error, Warn, Ignore };

/// Substitute every `$Identifier` with its binding. Substitution is literal:
/// slot values are never re-scanned for further references.
/// Throws MissingSlot when a required slot is unbound. Bindings that match no
/// slot raise UnknownSlot under Error, are appended to `warnings` under Warn,
/// and are dropped silently under Ignore.
std::string render(const Template& tmpl, const SlotMap& slots,
                   UnknownSlotPolicy policy = UnknownSlotPolicy::Error,
                   std::vector<std::string>* warnings = nullptr);

enum class ShotMode { ZeroShot, FewShot };

const char* to_string(ShotMode mode);
ShotMode shot_mode_from_string(const std::string& name);

/// The binary voting question: a fixed positive label ("Funny" by default)
/// paired with its opposite, optionally with one labeled exemplar per class.
struct VotingQuestionSpec {
    std::string positive_label = "Funny";
    std::string opposite_label;
    ShotMode shot_mode = ShotMode::ZeroShot;
    std::optional<Joke> exemplar_positive;
    std::optional<Joke> exemplar_negative;

    /// Throws InvalidSpec unless: labels non-empty and distinct after
    /// case-folding; FewShot has both exemplars; ZeroShot has neither.
    void validate() const;
};

enum class PersonaKind { Affiliative, SelfEnhancing, Aggressive, SelfDefeating, None };

/// A humour-type trait inserted into the `$TypeOfHumour` slot. `None` is the
/// no-personality baseline and carries an empty phrase.
struct Persona {
    PersonaKind kind = PersonaKind::None;
    std::string humour_phrase;

    static Persona affiliative() { return {PersonaKind::Affiliative, "affiliative"}; }
    static Persona self_enhancing() { return {PersonaKind::SelfEnhancing, "self-enhancing"}; }
    static Persona aggressive() { return {PersonaKind::Aggressive, "aggressive"}; }
    static Persona self_defeating() { return {PersonaKind::SelfDefeating, "self-defeating"}; }
    static Persona none() { return {PersonaKind::None, ""}; }

    static Persona from_name(const std::string& name);
    static const std::vector<Persona>& all_humour_types();

    std::string name() const;
    bool is_none() const { return kind == PersonaKind::None; }

    bool operator==(const Persona&) const = default;
};

namespace templates {

/// Built-in canonical templates.
const Template& voting_zero();
const Template& voting_few();
const Template& personality();
const Template& explanation();
/// Explanation prompt for the no-personality baseline: the personality
/// variant minus both "…humour" phrases.
const Template& explanation_baseline();
const Template& audit();

/// Load one template from a UTF-8 asset file (LF line endings). A single
/// trailing newline, if present, is stripped.
Template load_file(const std::filesystem::path& path);

}  // namespace templates

/// Rebind the literal positive label ("Funny") of a canonical template to a
/// different word, for domains where the positive class is named differently.
Template with_positive_label(const Template& tmpl, const std::string& positive_label);

/// Voting prompt per spec/persona. Personas use the zero-shot personality
/// shape; FewShot with a persona is rejected (exemplars overwrite the
/// induction), so callers must downgrade to zero-shot first.
std::string build_voting_prompt(const VotingQuestionSpec& spec, const Persona& persona,
                                const Joke& joke);

/// Chain-of-thought prompt for an already-decided classification.
/// `verdict_label` must equal one of the spec's two labels (case-insensitive).
std::string build_explanation_prompt(const VotingQuestionSpec& spec, const Persona& persona,
                                     const Joke& joke, const std::string& verdict_label);

/// Prompt asking whether `reasoning` justifies classifying `joke` as
/// `classification`. Throws EmptyReasoning when reasoning is empty.
std::string build_audit_prompt(const Joke& joke, const std::string& reasoning,
                               const std::string& classification);

}  // namespace crowdscore
