#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdscore/crowd.hpp"
#include "crowdscore/dataset.hpp"

namespace crowdscore {

enum class ScorePolicy { AllVotes, ValidOnly };

const char* to_string(ScorePolicy policy);
ScorePolicy score_policy_from_string(const std::string& name);

/// Sum of binary votes for one joke in one run, normalized onto the human
/// [1,4] scale: 1 + 3*raw/voters_counted. A joke with no countable ballot
/// is Unscored (normalized empty), never zero.
struct CrowdScore {
    std::string joke_id;
    int raw = 0;
    int voters_counted = 0;
    std::optional<double> normalized;
    ScorePolicy policy = ScorePolicy::AllVotes;
    int run_index = 0;
};

/// True when the ballot counts as a vote under the policy: the verdict must
/// be parseable and the ballot not failed; ValidOnly additionally drops
/// invalidated ballots (inconclusive audits keep their vote).
bool ballot_counted(const BallotRecord& ballot, ScorePolicy policy);

/// Aggregate the ballots of one (joke, run) group. All ballots must share
/// joke_id and run_index.
CrowdScore aggregate(const std::vector<BallotRecord>& ballots, ScorePolicy policy);

/// Group a ballot file by (joke_id, run_index) and aggregate each group,
/// preserving first-appearance joke order and run order.
std::vector<CrowdScore> score_ballots(const std::vector<BallotRecord>& ballots,
                                      ScorePolicy policy);

struct RunMean {
    double mean = 0.0;
    int scored_runs = 0;
    int unscored_runs = 0;
};

/// Arithmetic mean of normalized scores across the runs where the joke was
/// scored. Throws AllRunsUnscored when no run produced a score.
RunMean mean_over_runs(const std::vector<CrowdScore>& scores_for_one_joke);

/// Spearman rank correlation: Pearson correlation of rank vectors with
/// average ranks for ties. Throws LengthMismatch / DegenerateInput.
double rank_correlation(const std::vector<double>& human, const std::vector<double>& crowd);

struct ExtremesAgreement {
    int k = 0;
    int top_total = 0;         // per-run scores observed for the k top jokes
    int top_at_or_above = 0;   // of those, count >= threshold
    int bottom_total = 0;
    int bottom_above = 0;      // of those, count > threshold
};

/// Count per-run normalized scores against the threshold among the k
/// highest- and k lowest-human-rated jokes (ties broken by corpus order).
ExtremesAgreement extremes_agreement(const Corpus& corpus,
                                     const std::vector<CrowdScore>& per_run_scores,
                                     std::size_t k, double threshold = 3.0);

struct PerJokeRow {
    std::string joke_id;
    double human_rating = 0.0;
    std::optional<double> crowd_all;
    std::optional<double> crowd_valid;
};

struct AuditAccounting {
    long total_ballots = 0;
    long parseable = 0;
    long valid = 0;
    long invalid = 0;
    long inconclusive = 0;
    long skipped = 0;
    long failed = 0;
    long audited = 0;            // valid + invalid + inconclusive
    double invalid_fraction = 0; // invalid / audited, 0 when nothing audited
    std::map<std::string, long> invalid_by_persona;
};

/// Per-joke comparison against human ratings plus audit accounting and
/// persona tallies. The table covers exactly the jokes having both a human
/// rating and a crowd score.
struct ComparisonReport {
    std::vector<PerJokeRow> per_joke;  // sorted by human rating descending
    std::optional<double> rank_correlation_all;
    std::optional<double> rank_correlation_valid;
    ExtremesAgreement extremes;
    AuditAccounting audit;
    std::map<std::string, long> tally_pre_audit;
    std::map<std::string, long> tally_post_audit;
};

ComparisonReport build_report(const Corpus& corpus, const std::vector<BallotRecord>& ballots,
                              const std::vector<CrowdScore>& scores_all,
                              const std::vector<CrowdScore>& scores_valid, std::size_t extremes_k);

/// CSV columns: joke_id,policy,run_index,raw,voters_counted,normalized
/// (normalized blank when unscored).
void write_scores_csv(const std::string& path, const std::vector<CrowdScore>& scores);
std::vector<CrowdScore> read_scores_csv(const std::string& path);

void write_report_json(const ComparisonReport& report, const std::string& path);
void write_report_csv(const ComparisonReport& report, const std::string& path);

/// Two aligned series (human and crowd means) sorted by human rating
/// descending, for external charting.
void write_plot_data(const ComparisonReport& report, const std::string& path);

}  // namespace crowdscore
