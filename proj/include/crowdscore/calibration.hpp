#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdscore/backend.hpp"
#include "crowdscore/dataset.hpp"
#include "crowdscore/metrics.hpp"
#include "crowdscore/prompt.hpp"

namespace crowdscore {

enum class VerdictValue { Positive, Negative, Unparseable };

const char* to_string(VerdictValue value);
VerdictValue verdict_value_from_string(const std::string& name);

/// A parsed classification answer. `matched_label` carries the canonical
/// spec label and is present exactly when the verdict is parseable.
struct Verdict {
    VerdictValue value = VerdictValue::Unparseable;
    std::string raw_completion;
    std::optional<std::string> matched_label;
};

/// Case-insensitively match the spec's two labels in the first non-empty
/// line of the completion, after trimming whitespace and terminal
/// punctuation. Exactly one label present -> that verdict; both or neither
/// -> Unparseable. Occurrences of one label inside an occurrence of the
/// longer label (e.g. "Funny" inside "Not funny") do not count.
Verdict parse_verdict(const std::string& completion, const VotingQuestionSpec& spec);

struct RunMetrics {
    int run_index = 0;
    ConfusionCounts counts;
    double f = 0.0;
    double ba = 0.0;
    int unparseable = 0;
};

/// One sweep cell. Headline `f_score`/`balanced_accuracy` are means of the
/// per-run metrics; `counts` and the majority_* pair come from aggregating
/// each anchor's verdicts by majority across runs (ties -> Unparseable).
struct CalibrationResult {
    VotingQuestionSpec spec;
    ConfusionCounts counts;
    double f_score = 0.0;
    double balanced_accuracy = 0.0;
    double majority_f_score = 0.0;
    double majority_balanced_accuracy = 0.0;
    std::vector<RunMetrics> per_run;
    int runs = 0;
    int unparseable_count = 0;
    bool partial = false;
    std::string partial_reason;
};

struct SweepOptions {
    std::string positive_label = "Funny";
    std::optional<Joke> exemplar_positive;  // required when shot modes include FewShot
    std::optional<Joke> exemplar_negative;
    CompletionParams params;
};

/// Classify every anchor `runs` times for each (opposite, shot mode) pair.
/// Unparseable verdicts count against the anchor's true class. Backend
/// errors abort only the affected cell, which is returned with
/// `partial = true` and sorted last. Results are sorted by balanced
/// accuracy desc, then F-score desc, then opposite label asc.
std::vector<CalibrationResult> run_sweep(const std::vector<LabeledJoke>& anchors,
                                         const std::vector<std::string>& opposites,
                                         const std::vector<ShotMode>& shot_modes, int runs,
                                         Backend& backend, const SweepOptions& options);

/// CSV columns: opposite,shot_mode,f_score,balanced_accuracy,tp,fp,tn,fn,unparseable,runs
void write_calibration_csv(const std::vector<CalibrationResult>& results,
                           const std::string& path);

/// JSON variant with per-run breakdowns and majority metrics.
void write_calibration_json(const std::vector<CalibrationResult>& results,
                            const std::string& path);

}  // namespace crowdscore
