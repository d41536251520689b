#pragma once

#include <map>
#include <string>
#include <vector>

#include "crowdscore/backend.hpp"
#include "crowdscore/calibration.hpp"
#include "crowdscore/dataset.hpp"
#include "crowdscore/prompt.hpp"

namespace crowdscore {

enum class AuditStatus { Valid, Invalid, Inconclusive, Skipped };

const char* to_string(AuditStatus status);
AuditStatus audit_status_from_string(const std::string& name);

enum class AuditDecision { Yes, No, Unparseable };

struct AuditVerdict {
    AuditDecision decision = AuditDecision::Unparseable;
    std::string raw;
};

/// One voter's classification of one joke in one run.
/// audit == Skipped iff auditing was disabled for the ballot or the verdict
/// was Unparseable. `failed` marks backend failures; such ballots fill the
/// crowd's slot but never count toward a score.
struct BallotRecord {
    std::string joke_id;
    Persona persona;
    int run_index = 0;
    Verdict verdict;
    std::string explanation;
    AuditStatus audit = AuditStatus::Skipped;
    std::string prompts_digest;
    bool failed = false;
    std::string failure_reason;
};

enum class InvalidVotePolicy { Discard, RepromptOnce };

const char* to_string(InvalidVotePolicy policy);
InvalidVotePolicy invalid_vote_policy_from_string(const std::string& name);

struct CrowdOptions {
    bool audit_enabled = true;
    /// Generate explanations even when auditing is disabled. Forced on for
    /// audited runs (the auditor needs the reasoning).
    bool explanations_enabled = true;
    InvalidVotePolicy invalid_policy = InvalidVotePolicy::Discard;
    CompletionParams params;
};

/// Attempt indices reserve a stride of 4 per run so that first tries,
/// unparseable retries, and policy re-prompts never collide in the journal.
constexpr int kAttemptStride = 4;

/// Build the voting prompt (zero-shot personality shape whenever the persona
/// is not None, per the protocol: exemplars overwrite induction), call the
/// backend, parse. An Unparseable answer is retried once with an incremented
/// attempt index.
Verdict cast_vote(const Joke& joke, const Persona& persona, const VotingQuestionSpec& spec,
                  int run_index, Backend& backend, const CompletionParams& params);

/// Chain-of-thought explanation for a decided vote. Empty completions are
/// retried once, then EmptyExplanation is thrown. `attempt_offset` shifts
/// within the run's attempt stride (used by the re-prompt policy).
std::string explain_vote(const Joke& joke, const Persona& persona,
                         const VotingQuestionSpec& spec, const Verdict& verdict, int run_index,
                         Backend& backend, const CompletionParams& params,
                         int attempt_offset = 0);

/// Ask whether the explanation justifies the classification. The first word
/// of the trimmed completion decides: yes/no, anything else Unparseable.
AuditVerdict audit_vote(const Joke& joke, const std::string& explanation,
                        const std::string& classification_label, int run_index,
                        Backend& backend, const CompletionParams& params,
                        int attempt_offset = 0);

/// Full crowd pass: exactly |corpus| x |personas| x runs ballots, sorted by
/// (joke_id, persona, run_index). Backend failures become per-ballot failure
/// states, never exceptions. FewShot spec with any non-None persona is
/// rejected up front.
std::vector<BallotRecord> run_crowd(const Corpus& corpus, const std::vector<Persona>& personas,
                                    const VotingQuestionSpec& spec, int runs,
                                    const CrowdOptions& options, Backend& backend);

/// Audit-stage pass over previously voted ballots (the file-mediated CLI
/// path). Ballots must carry explanations; Skipped parseable ballots get an
/// audit status, already-audited ballots are left untouched. The spec is
/// needed to recompute prompts_digest, so a vote stage followed by this one
/// yields ballots identical to a single audited run_crowd pass.
std::vector<BallotRecord> audit_ballots(std::vector<BallotRecord> ballots, const Corpus& corpus,
                                        const VotingQuestionSpec& spec,
                                        const CrowdOptions& options, Backend& backend);

enum class TallyMode { PreAudit, PostAudit };

/// Funny-vote count per persona name. PreAudit counts every Positive
/// verdict; PostAudit drops invalidated and failed ballots.
std::map<std::string, long> persona_tally(const std::vector<BallotRecord>& ballots,
                                          TallyMode mode);

/// JSONL ballot file, one record per line, sorted by (joke_id, persona,
/// run_index). The contract between the vote/audit and score CLI stages.
void write_ballots(const std::string& path, const std::vector<BallotRecord>& ballots);
std::vector<BallotRecord> read_ballots(const std::string& path);

void sort_ballots(std::vector<BallotRecord>& ballots);

}  // namespace crowdscore
