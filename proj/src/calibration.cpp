#include "crowdscore/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "crowdscore/csv.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fold_ascii(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string first_content_line(const std::string& text) {
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
        std::size_t b = 0, e = line.size();
        while (b < e && is_space(line[b])) ++b;
        while (e > b && is_space(line[e - 1])) --e;
        if (e > b) return line.substr(b, e - b);
        start = end + 1;
    }
    return "";
}

std::string strip_terminal_punctuation(std::string line) {
    while (!line.empty()) {
        char c = line.back();
        if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' || c == '"' ||
            c == '\'')
            line.pop_back();
        else
            break;
    }
    return line;
}

/// Case-insensitive occurrence spans of `needle` in `haystack` (both folded).
std::vector<std::pair<std::size_t, std::size_t>> find_spans(const std::string& haystack,
                                                            const std::string& needle) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    if (needle.empty()) return spans;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        spans.emplace_back(pos, pos + needle.size());
        ++pos;
    }
    return spans;
}

bool inside_any(std::pair<std::size_t, std::size_t> span,
                const std::vector<std::pair<std::size_t, std::size_t>>& outer) {
    return std::any_of(outer.begin(), outer.end(), [&](const auto& o) {
        return span.first >= o.first && span.second <= o.second &&
               (span.second - span.first) < (o.second - o.first);
    });
}

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

double mean(const std::vector<double>& values) {
    double sum = 0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

ordered_json counts_json(const ConfusionCounts& counts) {
    return ordered_json{{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn},
                        {"fn", counts.fn}};
}

}  // namespace

const char* to_string(VerdictValue value) {
    switch (value) {
        case VerdictValue::Positive: return "positive";
        case VerdictValue::Negative: return "negative";
        case VerdictValue::Unparseable: return "unparseable";
    }
    return "unparseable";
}

VerdictValue verdict_value_from_string(const std::string& name) {
    if (name == "positive") return VerdictValue::Positive;
    if (name == "negative") return VerdictValue::Negative;
    if (name == "unparseable") return VerdictValue::Unparseable;
    throw ConfigError("unknown verdict value: " + name);
}

Verdict parse_verdict(const std::string& completion, const VotingQuestionSpec& spec) {
    Verdict verdict;
    verdict.raw_completion = completion;

    std::string line =
        fold_ascii(strip_terminal_punctuation(first_content_line(completion)));
    if (line.empty()) return verdict;

    std::string positive = fold_ascii(spec.positive_label);
    std::string opposite = fold_ascii(spec.opposite_label);

    auto pos_spans = find_spans(line, positive);
    auto neg_spans = find_spans(line, opposite);

    // "Funny" inside "Not funny" (or vice versa) is not a standalone match.
    std::erase_if(pos_spans, [&](const auto& s) { return inside_any(s, neg_spans); });
    std::erase_if(neg_spans, [&](const auto& s) { return inside_any(s, pos_spans); });

    bool has_positive = !pos_spans.empty();
    bool has_negative = !neg_spans.empty();
    if (has_positive == has_negative) return verdict;  // both or neither

    verdict.value = has_positive ? VerdictValue::Positive : VerdictValue::Negative;
    verdict.matched_label = has_positive ? spec.positive_label : spec.opposite_label;
    return verdict;
}

std::vector<CalibrationResult> run_sweep(const std::vector<LabeledJoke>& anchors,
                                         const std::vector<std::string>& opposites,
                                         const std::vector<ShotMode>& shot_modes, int runs,
                                         Backend& backend, const SweepOptions& options) {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (opposites.empty()) throw ConfigError("opposite-word list must be non-empty");
    if (shot_modes.empty()) throw ConfigError("shot-mode list must be non-empty");
    bool has_positive = std::any_of(anchors.begin(), anchors.end(),
                                    [](const auto& a) { return a.label == Label::Positive; });
    bool has_negative = std::any_of(anchors.begin(), anchors.end(),
                                    [](const auto& a) { return a.label == Label::Negative; });
    if (!has_positive || !has_negative)
        throw ConfigError("anchor set must contain both classes");

    std::vector<CalibrationResult> results;
    for (const auto& opposite : opposites) {
        for (ShotMode mode : shot_modes) {
            VotingQuestionSpec spec;
            spec.positive_label = options.positive_label;
            spec.opposite_label = opposite;
            spec.shot_mode = mode;
            if (mode == ShotMode::FewShot) {
                if (!options.exemplar_positive || !options.exemplar_negative)
                    throw ConfigError("few-shot sweep requires both exemplar jokes");
                spec.exemplar_positive = options.exemplar_positive;
                spec.exemplar_negative = options.exemplar_negative;
            }
            spec.validate();

            CalibrationResult cell;
            cell.spec = spec;
            cell.runs = runs;

            // verdicts[anchor][run]
            std::vector<std::vector<VerdictValue>> verdicts(
                anchors.size(), std::vector<VerdictValue>(runs, VerdictValue::Unparseable));
            try {
                for (int run = 0; run < runs; ++run) {
                    RunMetrics rm;
                    rm.run_index = run;
                    for (std::size_t a = 0; a < anchors.size(); ++a) {
                        std::string prompt =
                            build_voting_prompt(spec, Persona::none(), anchors[a].joke);
                        auto rec = backend.complete(prompt, options.params, run);
                        Verdict v = parse_verdict(rec.completion, spec);
                        verdicts[a][run] = v.value;
                        bool truth_positive = anchors[a].label == Label::Positive;
                        switch (v.value) {
                            case VerdictValue::Positive:
                                truth_positive ? ++rm.counts.tp : ++rm.counts.fp;
                                break;
                            case VerdictValue::Negative:
                                truth_positive ? ++rm.counts.fn : ++rm.counts.tn;
                                break;
                            case VerdictValue::Unparseable:
                                // counts against the anchor's true class
                                truth_positive ? ++rm.counts.fn : ++rm.counts.fp;
                                ++rm.unparseable;
                                break;
                        }
                    }
                    rm.f = f_score(rm.counts);
                    rm.ba = balanced_accuracy(rm.counts);
                    cell.per_run.push_back(rm);
                    cell.unparseable_count += rm.unparseable;
                }
            } catch (const Error& e) {
                cell.partial = true;
                cell.partial_reason = e.code() + ": " + e.what();
            }

            if (!cell.per_run.empty()) {
                std::vector<double> fs, bas;
                for (const auto& rm : cell.per_run) {
                    fs.push_back(rm.f);
                    bas.push_back(rm.ba);
                }
                cell.f_score = mean(fs);
                cell.balanced_accuracy = mean(bas);
            }

            if (!cell.partial) {
                for (std::size_t a = 0; a < anchors.size(); ++a) {
                    int pos = 0, neg = 0, unp = 0;
                    for (int run = 0; run < runs; ++run) {
                        switch (verdicts[a][run]) {
                            case VerdictValue::Positive: ++pos; break;
                            case VerdictValue::Negative: ++neg; break;
                            case VerdictValue::Unparseable: ++unp; break;
                        }
                    }
                    VerdictValue majority = VerdictValue::Unparseable;
                    if (pos > neg && pos > unp) majority = VerdictValue::Positive;
                    else if (neg > pos && neg > unp) majority = VerdictValue::Negative;
                    bool truth_positive = anchors[a].label == Label::Positive;
                    switch (majority) {
                        case VerdictValue::Positive:
                            truth_positive ? ++cell.counts.tp : ++cell.counts.fp;
                            break;
                        case VerdictValue::Negative:
                            truth_positive ? ++cell.counts.fn : ++cell.counts.tn;
                            break;
                        case VerdictValue::Unparseable:
                            truth_positive ? ++cell.counts.fn : ++cell.counts.fp;
                            break;
                    }
                }
                cell.majority_f_score = f_score(cell.counts);
                cell.majority_balanced_accuracy = balanced_accuracy(cell.counts);
            }
            results.push_back(std::move(cell));
        }
    }

    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        if (a.partial != b.partial) return !a.partial;  // complete cells first
        if (a.balanced_accuracy != b.balanced_accuracy)
            return a.balanced_accuracy > b.balanced_accuracy;
        if (a.f_score != b.f_score) return a.f_score > b.f_score;
        if (a.spec.opposite_label != b.spec.opposite_label)
            return a.spec.opposite_label < b.spec.opposite_label;
        return a.spec.shot_mode < b.spec.shot_mode;
    });
    return results;
}

void write_calibration_csv(const std::vector<CalibrationResult>& results,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out << "opposite,shot_mode,f_score,balanced_accuracy,tp,fp,tn,fn,unparseable,runs\n";
    for (const auto& r : results) {
        out << csv::join_record({r.spec.opposite_label, to_string(r.spec.shot_mode),
                                 fixed6(r.f_score), fixed6(r.balanced_accuracy),
                                 std::to_string(r.counts.tp), std::to_string(r.counts.fp),
                                 std::to_string(r.counts.tn), std::to_string(r.counts.fn),
                                 std::to_string(r.unparseable_count), std::to_string(r.runs)})
            << "\n";
    }
}

void write_calibration_json(const std::vector<CalibrationResult>& results,
                            const std::string& path) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : results) {
        ordered_json obj;
        obj["opposite"] = r.spec.opposite_label;
        obj["positive"] = r.spec.positive_label;
        obj["shot_mode"] = to_string(r.spec.shot_mode);
        obj["f_score"] = r.f_score;
        obj["balanced_accuracy"] = r.balanced_accuracy;
        obj["majority_f_score"] = r.majority_f_score;
        obj["majority_balanced_accuracy"] = r.majority_balanced_accuracy;
        obj["majority_counts"] = counts_json(r.counts);
        obj["unparseable"] = r.unparseable_count;
        obj["runs"] = r.runs;
        obj["partial"] = r.partial;
        if (r.partial) obj["partial_reason"] = r.partial_reason;
        ordered_json per_run = ordered_json::array();
        for (const auto& rm : r.per_run) {
            per_run.push_back(ordered_json{{"run", rm.run_index},
                                           {"f_score", rm.f},
                                           {"balanced_accuracy", rm.ba},
                                           {"counts", counts_json(rm.counts)},
                                           {"unparseable", rm.unparseable}});
        }
        obj["per_run"] = per_run;
        arr.push_back(obj);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out << arr.dump(2) << "\n";
}

}  // namespace crowdscore
