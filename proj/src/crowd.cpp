#include "crowdscore/crowd.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "crowdscore/digest.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string first_word_folded(const std::string& text) {
    std::string trimmed = trim(text);
    std::size_t end = 0;
    while (end < trimmed.size() && !std::isspace(static_cast<unsigned char>(trimmed[end]))) ++end;
    std::string word = trimmed.substr(0, end);
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.pop_back();
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return word;
}

/// Effective spec for a persona vote: personas always use the zero-shot
/// personality prompt, keeping the calibrated labels.
VotingQuestionSpec effective_spec(const VotingQuestionSpec& spec, const Persona& persona) {
    if (persona.is_none() || spec.shot_mode == ShotMode::ZeroShot) return spec;
    VotingQuestionSpec zero = spec;
    zero.shot_mode = ShotMode::ZeroShot;
    zero.exemplar_positive.reset();
    zero.exemplar_negative.reset();
    return zero;
}

ordered_json ballot_to_json(const BallotRecord& b) {
    ordered_json obj;
    obj["joke_id"] = b.joke_id;
    obj["persona"] = b.persona.name();
    obj["run_index"] = b.run_index;
    obj["verdict"] = to_string(b.verdict.value);
    if (b.verdict.matched_label) obj["matched_label"] = *b.verdict.matched_label;
    else obj["matched_label"] = nullptr;
    obj["raw_completion"] = b.verdict.raw_completion;
    obj["explanation"] = b.explanation;
    obj["audit"] = to_string(b.audit);
    obj["prompts_digest"] = b.prompts_digest;
    obj["failed"] = b.failed;
    obj["failure_reason"] = b.failure_reason;
    return obj;
}

BallotRecord ballot_from_json(const ordered_json& obj, std::size_t line) {
    try {
        BallotRecord b;
        b.joke_id = obj.at("joke_id").get<std::string>();
        b.persona = Persona::from_name(obj.at("persona").get<std::string>());
        b.run_index = obj.at("run_index").get<int>();
        b.verdict.value = verdict_value_from_string(obj.at("verdict").get<std::string>());
        if (obj.contains("matched_label") && !obj["matched_label"].is_null())
            b.verdict.matched_label = obj["matched_label"].get<std::string>();
        b.verdict.raw_completion = obj.at("raw_completion").get<std::string>();
        b.explanation = obj.at("explanation").get<std::string>();
        b.audit = audit_status_from_string(obj.at("audit").get<std::string>());
        b.prompts_digest = obj.at("prompts_digest").get<std::string>();
        b.failed = obj.at("failed").get<bool>();
        b.failure_reason = obj.at("failure_reason").get<std::string>();
        return b;
    } catch (const ordered_json::exception& e) {
        throw ParseError(line, "-", std::string("ballot: ") + e.what());
    } catch (const ConfigError& e) {
        // unknown enum values in a ballot file are data corruption
        throw ParseError(line, "-", std::string("ballot: ") + e.what());
    }
}

}  // namespace

const char* to_string(AuditStatus status) {
    switch (status) {
        case AuditStatus::Valid: return "valid";
        case AuditStatus::Invalid: return "invalid";
        case AuditStatus::Inconclusive: return "inconclusive";
        case AuditStatus::Skipped: return "skipped";
    }
    return "skipped";
}

AuditStatus audit_status_from_string(const std::string& name) {
    if (name == "valid") return AuditStatus::Valid;
    if (name == "invalid") return AuditStatus::Invalid;
    if (name == "inconclusive") return AuditStatus::Inconclusive;
    if (name == "skipped") return AuditStatus::Skipped;
    throw ConfigError("unknown audit status: " + name);
}

const char* to_string(InvalidVotePolicy policy) {
    return policy == InvalidVotePolicy::Discard ? "discard" : "reprompt-once";
}

InvalidVotePolicy invalid_vote_policy_from_string(const std::string& name) {
    if (name == "discard") return InvalidVotePolicy::Discard;
    if (name == "reprompt-once") return InvalidVotePolicy::RepromptOnce;
    throw ConfigError("unknown invalid-vote policy: " + name);
}

Verdict cast_vote(const Joke& joke, const Persona& persona, const VotingQuestionSpec& spec,
                  int run_index, Backend& backend, const CompletionParams& params) {
    VotingQuestionSpec eff = effective_spec(spec, persona);
    std::string prompt = build_voting_prompt(eff, persona, joke);
    int base = run_index * kAttemptStride;

    auto rec = backend.complete(prompt, params, base);
    Verdict verdict = parse_verdict(rec.completion, eff);
    if (verdict.value == VerdictValue::Unparseable) {
        rec = backend.complete(prompt, params, base + 1);
        verdict = parse_verdict(rec.completion, eff);
    }
    return verdict;
}

std::string explain_vote(const Joke& joke, const Persona& persona,
                         const VotingQuestionSpec& spec, const Verdict& verdict, int run_index,
                         Backend& backend, const CompletionParams& params, int attempt_offset) {
    if (verdict.value == VerdictValue::Unparseable || !verdict.matched_label)
        throw InvalidSpecError("cannot explain an unparseable verdict");
    VotingQuestionSpec eff = effective_spec(spec, persona);
    std::string prompt = build_explanation_prompt(eff, persona, joke, *verdict.matched_label);
    int base = run_index * kAttemptStride + attempt_offset;

    auto rec = backend.complete(prompt, params, base);
    std::string explanation = trim(rec.completion);
    if (explanation.empty()) {
        rec = backend.complete(prompt, params, base + 1);
        explanation = trim(rec.completion);
    }
    if (explanation.empty()) throw EmptyExplanationError();
    return explanation;
}

AuditVerdict audit_vote(const Joke& joke, const std::string& explanation,
                        const std::string& classification_label, int run_index,
                        Backend& backend, const CompletionParams& params, int attempt_offset) {
    std::string prompt = build_audit_prompt(joke, explanation, classification_label);
    int base = run_index * kAttemptStride + attempt_offset;

    auto parse = [](const std::string& raw) {
        AuditVerdict v;
        v.raw = raw;
        std::string word = first_word_folded(raw);
        if (word == "yes") v.decision = AuditDecision::Yes;
        else if (word == "no") v.decision = AuditDecision::No;
        return v;
    };

    auto rec = backend.complete(prompt, params, base);
    AuditVerdict verdict = parse(rec.completion);
    if (verdict.decision == AuditDecision::Unparseable) {
        rec = backend.complete(prompt, params, base + 1);
        verdict = parse(rec.completion);
    }
    return verdict;
}

namespace {

/// vote -> explain -> audit chain for one ballot. Never throws: backend
/// failures land in the ballot's failure state.
BallotRecord run_ballot(const Joke& joke, const Persona& persona,
                        const VotingQuestionSpec& spec, int run, const CrowdOptions& options,
                        Backend& backend) {
    BallotRecord ballot;
    ballot.joke_id = joke.id;
    ballot.persona = persona;
    ballot.run_index = run;

    VotingQuestionSpec eff = effective_spec(spec, persona);
    std::string vote_prompt, explanation_prompt, audit_prompt;
    try {
        vote_prompt = build_voting_prompt(eff, persona, joke);
        ballot.verdict = cast_vote(joke, persona, spec, run, backend, options.params);
        if (ballot.verdict.value == VerdictValue::Unparseable) {
            ballot.audit = AuditStatus::Skipped;
            ballot.prompts_digest = sha256_hex({vote_prompt, "", ""});
            return ballot;
        }

        bool want_explanation = options.audit_enabled || options.explanations_enabled;
        if (want_explanation) {
            explanation_prompt =
                build_explanation_prompt(eff, persona, joke, *ballot.verdict.matched_label);
            ballot.explanation =
                explain_vote(joke, persona, spec, ballot.verdict, run, backend, options.params);
        }

        if (options.audit_enabled) {
            audit_prompt = build_audit_prompt(joke, ballot.explanation,
                                              *ballot.verdict.matched_label);
            AuditVerdict audit = audit_vote(joke, ballot.explanation,
                                            *ballot.verdict.matched_label, run, backend,
                                            options.params);
            if (audit.decision == AuditDecision::No &&
                options.invalid_policy == InvalidVotePolicy::RepromptOnce) {
                // Re-prompt for a fresh explanation, then audit it once more.
                try {
                    std::string retry_explanation =
                        explain_vote(joke, persona, spec, ballot.verdict, run, backend,
                                     options.params, 2);
                    AuditVerdict re_audit =
                        audit_vote(joke, retry_explanation, *ballot.verdict.matched_label, run,
                                   backend, options.params, 2);
                    if (re_audit.decision != AuditDecision::No)
                        ballot.explanation = retry_explanation;
                    audit = re_audit;
                } catch (const EmptyExplanationError&) {
                    // keep the original explanation and the "No" audit
                }
            }
            // digest covers the audit prompt for the explanation that stood
            audit_prompt = build_audit_prompt(joke, ballot.explanation,
                                              *ballot.verdict.matched_label);
            switch (audit.decision) {
                case AuditDecision::Yes: ballot.audit = AuditStatus::Valid; break;
                case AuditDecision::No: ballot.audit = AuditStatus::Invalid; break;
                case AuditDecision::Unparseable: ballot.audit = AuditStatus::Inconclusive; break;
            }
        } else {
            ballot.audit = AuditStatus::Skipped;
        }
    } catch (const JournalMissError&) {
        // a replay miss means the journal does not cover this run; a failed
        // ballot would silently corrupt the determinism check
        throw;
    } catch (const Error& e) {
        ballot.failed = true;
        ballot.failure_reason = e.code() + ": " + e.what();
        ballot.audit = AuditStatus::Skipped;
    }
    ballot.prompts_digest = sha256_hex({vote_prompt, explanation_prompt, audit_prompt});
    return ballot;
}

}  // namespace

std::vector<BallotRecord> run_crowd(const Corpus& corpus, const std::vector<Persona>& personas,
                                    const VotingQuestionSpec& spec, int runs,
                                    const CrowdOptions& options, Backend& backend) {
    if (personas.empty()) throw ConfigError("persona list must be non-empty");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    for (std::size_t i = 0; i < personas.size(); ++i)
        for (std::size_t j = i + 1; j < personas.size(); ++j)
            if (personas[i].name() == personas[j].name())
                throw ConfigError("personas must be distinct: " + personas[i].name());
    spec.validate();
    bool any_persona = std::any_of(personas.begin(), personas.end(),
                                   [](const Persona& p) { return !p.is_none(); });
    if (any_persona && spec.shot_mode == ShotMode::FewShot)
        throw ConfigError(
            "few-shot prompting overwrites personality induction; calibrated few-shot specs "
            "must be downgraded to zero-shot before persona voting");

    std::vector<BallotRecord> ballots;
    ballots.reserve(corpus.jokes.size() * personas.size() * static_cast<std::size_t>(runs));
    for (const auto& joke : corpus.jokes)
        for (const auto& persona : personas)
            for (int run = 0; run < runs; ++run)
                ballots.push_back(run_ballot(joke, persona, spec, run, options, backend));
    sort_ballots(ballots);
    return ballots;
}

std::vector<BallotRecord> audit_ballots(std::vector<BallotRecord> ballots, const Corpus& corpus,
                                        const VotingQuestionSpec& spec,
                                        const CrowdOptions& options, Backend& backend) {
    for (auto& ballot : ballots) {
        if (ballot.failed || ballot.verdict.value == VerdictValue::Unparseable) continue;
        if (ballot.audit != AuditStatus::Skipped) continue;  // already audited
        const Joke* joke = corpus.find(ballot.joke_id);
        if (!joke) throw ConfigError("ballot references unknown joke id: " + ballot.joke_id);
        if (ballot.explanation.empty())
            throw ConfigError("ballot for joke " + ballot.joke_id +
                              " has no explanation; re-run the vote stage with explanations "
                              "enabled");
        try {
            VotingQuestionSpec eff = effective_spec(spec, ballot.persona);
            AuditVerdict audit =
                audit_vote(*joke, ballot.explanation, *ballot.verdict.matched_label,
                           ballot.run_index, backend, options.params);
            if (audit.decision == AuditDecision::No &&
                options.invalid_policy == InvalidVotePolicy::RepromptOnce) {
                try {
                    std::string retry_explanation =
                        explain_vote(*joke, ballot.persona, spec, ballot.verdict,
                                     ballot.run_index, backend, options.params, 2);
                    AuditVerdict re_audit =
                        audit_vote(*joke, retry_explanation, *ballot.verdict.matched_label,
                                   ballot.run_index, backend, options.params, 2);
                    if (re_audit.decision != AuditDecision::No)
                        ballot.explanation = retry_explanation;
                    audit = re_audit;
                } catch (const EmptyExplanationError&) {
                    // keep the original explanation and the "No" audit
                }
            }
            switch (audit.decision) {
                case AuditDecision::Yes: ballot.audit = AuditStatus::Valid; break;
                case AuditDecision::No: ballot.audit = AuditStatus::Invalid; break;
                case AuditDecision::Unparseable: ballot.audit = AuditStatus::Inconclusive; break;
            }
            // Rebuild the digest with the audit prompt so the chained path
            // matches a single audited pass.
            std::string vote_prompt = build_voting_prompt(eff, ballot.persona, *joke);
            std::string explanation_prompt = build_explanation_prompt(
                eff, ballot.persona, *joke, *ballot.verdict.matched_label);
            std::string audit_prompt =
                build_audit_prompt(*joke, ballot.explanation, *ballot.verdict.matched_label);
            ballot.prompts_digest = sha256_hex({vote_prompt, explanation_prompt, audit_prompt});
        } catch (const JournalMissError&) {
            throw;
        } catch (const Error& e) {
            ballot.failed = true;
            ballot.failure_reason = e.code() + ": " + e.what();
        }
    }
    sort_ballots(ballots);
    return ballots;
}

std::map<std::string, long> persona_tally(const std::vector<BallotRecord>& ballots,
                                          TallyMode mode) {
    std::map<std::string, long> tally;
    for (const auto& ballot : ballots) {
        tally.try_emplace(ballot.persona.name(), 0);
        if (ballot.verdict.value != VerdictValue::Positive) continue;
        if (mode == TallyMode::PostAudit &&
            (ballot.failed || ballot.audit == AuditStatus::Invalid))
            continue;
        ++tally[ballot.persona.name()];
    }
    return tally;
}

void sort_ballots(std::vector<BallotRecord>& ballots) {
    std::stable_sort(ballots.begin(), ballots.end(), [](const auto& a, const auto& b) {
        return std::make_tuple(a.joke_id, a.persona.name(), a.run_index) <
               std::make_tuple(b.joke_id, b.persona.name(), b.run_index);
    });
}

void write_ballots(const std::string& path, const std::vector<BallotRecord>& ballots) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write ballots: " + path);
    for (const auto& ballot : ballots) out << ballot_to_json(ballot).dump() << "\n";
    if (!out) throw IoError("ballot write failed: " + path);
}

std::vector<BallotRecord> read_ballots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    std::vector<BallotRecord> ballots;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw ParseError(line_no, "-", "invalid JSON ballot");
        ballots.push_back(ballot_from_json(obj, line_no));
    }
    return ballots;
}

}  // namespace crowdscore
