#include "crowdscore/metrics.hpp"

#include "crowdscore/errors.hpp"

namespace crowdscore {

bool f_score_defined(const ConfusionCounts& counts) {
    return counts.tp + counts.fp + counts.fn > 0;
}

double f_score(const ConfusionCounts& counts) {
    if (!f_score_defined(counts)) return 0.0;
    return 2.0 * static_cast<double>(counts.tp) /
           static_cast<double>(2 * counts.tp + counts.fp + counts.fn);
}

double balanced_accuracy(const ConfusionCounts& counts) {
    if (counts.tp + counts.fn <= 0) throw EmptyClassError("positive");
    if (counts.tn + counts.fp <= 0) throw EmptyClassError("negative");
    double tpr = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
    double tnr = static_cast<double>(counts.tn) / static_cast<double>(counts.tn + counts.fp);
    return (tpr + tnr) / 2.0;
}

}  // namespace crowdscore
