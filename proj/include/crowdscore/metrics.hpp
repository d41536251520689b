#pragma once

namespace crowdscore {

/// Binary-classification tallies. Positives are the funny class.
struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    long total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

/// F-score 2*tp / (2*tp + fp + fn). Defined as 0 when the denominator is
/// zero; check f_score_defined to distinguish that case.
double f_score(const ConfusionCounts& counts);
bool f_score_defined(const ConfusionCounts& counts);

/// (tpr + tnr) / 2. Throws EmptyClass when either class has no members.
double balanced_accuracy(const ConfusionCounts& counts);

}  // namespace crowdscore
