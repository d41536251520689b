#include "crowdscore/score.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "crowdscore/csv.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::vector<double> rank_with_ties(const std::vector<double>& values) {
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (values[j] < values[i]) ++less;
            else if (values[j] == values[i]) ++equal;
        }
        ranks[i] = static_cast<double>(less) + 1.0 + (static_cast<double>(equal) - 1.0) / 2.0;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0, var_a = 0, var_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - mean_a, db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0) throw DegenerateInputError("first");
    if (var_b == 0.0) throw DegenerateInputError("second");
    return cov / std::sqrt(var_a * var_b);
}

/// Indices of rated jokes ordered by rating, ties keeping corpus order.
std::vector<std::size_t> rated_order_desc(const Corpus& corpus) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.jokes.size(); ++i)
        if (corpus.jokes[i].human_rating) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return *corpus.jokes[a].human_rating > *corpus.jokes[b].human_rating;
    });
    return idx;
}

}  // namespace

const char* to_string(ScorePolicy policy) {
    return policy == ScorePolicy::AllVotes ? "all" : "valid-only";
}

ScorePolicy score_policy_from_string(const std::string& name) {
    if (name == "all") return ScorePolicy::AllVotes;
    if (name == "valid-only") return ScorePolicy::ValidOnly;
    throw ConfigError("unknown score policy: " + name);
}

bool ballot_counted(const BallotRecord& ballot, ScorePolicy policy) {
    if (ballot.failed) return false;
    if (ballot.verdict.value == VerdictValue::Unparseable) return false;
    if (policy == ScorePolicy::ValidOnly && ballot.audit == AuditStatus::Invalid) return false;
    return true;
}

CrowdScore aggregate(const std::vector<BallotRecord>& ballots, ScorePolicy policy) {
    if (ballots.empty()) throw std::invalid_argument("aggregate: empty ballot group");
    CrowdScore score;
    score.joke_id = ballots.front().joke_id;
    score.run_index = ballots.front().run_index;
    score.policy = policy;
    for (const auto& ballot : ballots) {
        if (ballot.joke_id != score.joke_id || ballot.run_index != score.run_index)
            throw std::invalid_argument("aggregate: mixed (joke, run) group");
        if (!ballot_counted(ballot, policy)) continue;
        ++score.voters_counted;
        if (ballot.verdict.value == VerdictValue::Positive) ++score.raw;
    }
    if (score.voters_counted > 0)
        score.normalized = 1.0 + 3.0 * static_cast<double>(score.raw) /
                                     static_cast<double>(score.voters_counted);
    return score;
}

std::vector<CrowdScore> score_ballots(const std::vector<BallotRecord>& ballots,
                                      ScorePolicy policy) {
    std::vector<std::pair<std::string, int>> keys;  // first-appearance order
    std::map<std::pair<std::string, int>, std::vector<BallotRecord>> groups;
    for (const auto& ballot : ballots) {
        auto key = std::make_pair(ballot.joke_id, ballot.run_index);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) keys.push_back(key);
        it->second.push_back(ballot);
    }
    std::vector<CrowdScore> scores;
    scores.reserve(keys.size());
    for (const auto& key : keys) scores.push_back(aggregate(groups[key], policy));
    return scores;
}

RunMean mean_over_runs(const std::vector<CrowdScore>& scores_for_one_joke) {
    RunMean result;
    double sum = 0;
    for (const auto& score : scores_for_one_joke) {
        if (!scores_for_one_joke.empty() &&
            score.joke_id != scores_for_one_joke.front().joke_id)
            throw std::invalid_argument("mean_over_runs: mixed joke ids");
        if (score.normalized) {
            sum += *score.normalized;
            ++result.scored_runs;
        } else {
            ++result.unscored_runs;
        }
    }
    if (result.scored_runs == 0)
        throw AllRunsUnscoredError(
            scores_for_one_joke.empty() ? "(none)" : scores_for_one_joke.front().joke_id);
    result.mean = sum / result.scored_runs;
    return result;
}

double rank_correlation(const std::vector<double>& human, const std::vector<double>& crowd) {
    if (human.size() != crowd.size()) throw LengthMismatchError(human.size(), crowd.size());
    if (human.size() < 2) throw LengthMismatchError(human.size(), 2);
    return pearson(rank_with_ties(human), rank_with_ties(crowd));
}

ExtremesAgreement extremes_agreement(const Corpus& corpus,
                                     const std::vector<CrowdScore>& per_run_scores,
                                     std::size_t k, double threshold) {
    auto order = rated_order_desc(corpus);
    if (order.size() < 2 * k) throw InsufficientJokesError(order.size(), 2 * k);

    ExtremesAgreement agreement;
    agreement.k = static_cast<int>(k);
    auto in_set = [&](std::size_t from, std::size_t count, const std::string& id) {
        for (std::size_t i = from; i < from + count; ++i)
            if (corpus.jokes[order[i]].id == id) return true;
        return false;
    };
    for (const auto& score : per_run_scores) {
        if (!score.normalized) continue;
        if (in_set(0, k, score.joke_id)) {
            ++agreement.top_total;
            if (*score.normalized >= threshold) ++agreement.top_at_or_above;
        }
        if (in_set(order.size() - k, k, score.joke_id)) {
            ++agreement.bottom_total;
            if (*score.normalized > threshold) ++agreement.bottom_above;
        }
    }
    return agreement;
}

ComparisonReport build_report(const Corpus& corpus, const std::vector<BallotRecord>& ballots,
                              const std::vector<CrowdScore>& scores_all,
                              const std::vector<CrowdScore>& scores_valid,
                              std::size_t extremes_k) {
    ComparisonReport report;

    // audit accounting
    report.audit.total_ballots = static_cast<long>(ballots.size());
    for (const auto& ballot : ballots) {
        report.audit.invalid_by_persona.try_emplace(ballot.persona.name(), 0);
        if (ballot.failed) {
            ++report.audit.failed;
            continue;
        }
        if (ballot.verdict.value != VerdictValue::Unparseable) ++report.audit.parseable;
        switch (ballot.audit) {
            case AuditStatus::Valid: ++report.audit.valid; break;
            case AuditStatus::Invalid:
                ++report.audit.invalid;
                ++report.audit.invalid_by_persona[ballot.persona.name()];
                break;
            case AuditStatus::Inconclusive: ++report.audit.inconclusive; break;
            case AuditStatus::Skipped: ++report.audit.skipped; break;
        }
    }
    report.audit.audited =
        report.audit.valid + report.audit.invalid + report.audit.inconclusive;
    if (report.audit.audited > 0)
        report.audit.invalid_fraction = static_cast<double>(report.audit.invalid) /
                                        static_cast<double>(report.audit.audited);

    report.tally_pre_audit = persona_tally(ballots, TallyMode::PreAudit);
    report.tally_post_audit = persona_tally(ballots, TallyMode::PostAudit);

    // per-joke means
    auto means_by_joke = [](const std::vector<CrowdScore>& scores) {
        std::map<std::string, std::vector<CrowdScore>> grouped;
        for (const auto& s : scores) grouped[s.joke_id].push_back(s);
        std::map<std::string, double> means;
        for (const auto& [id, group] : grouped) {
            try {
                means[id] = mean_over_runs(group).mean;
            } catch (const AllRunsUnscoredError&) {
                // joke left without a mean
            }
        }
        return means;
    };
    auto mean_all = means_by_joke(scores_all);
    auto mean_valid = means_by_joke(scores_valid);

    for (std::size_t idx : rated_order_desc(corpus)) {
        const Joke& joke = corpus.jokes[idx];
        auto it_all = mean_all.find(joke.id);
        auto it_valid = mean_valid.find(joke.id);
        if (it_all == mean_all.end() && it_valid == mean_valid.end()) continue;
        PerJokeRow row;
        row.joke_id = joke.id;
        row.human_rating = *joke.human_rating;
        if (it_all != mean_all.end()) row.crowd_all = it_all->second;
        if (it_valid != mean_valid.end()) row.crowd_valid = it_valid->second;
        report.per_joke.push_back(std::move(row));
    }

    auto correlate = [&](auto accessor) -> std::optional<double> {
        std::vector<double> human, crowd;
        for (const auto& row : report.per_joke) {
            if (auto value = accessor(row)) {
                human.push_back(row.human_rating);
                crowd.push_back(*value);
            }
        }
        if (human.size() < 2) return std::nullopt;
        try {
            return rank_correlation(human, crowd);
        } catch (const DegenerateInputError&) {
            return std::nullopt;
        }
    };
    report.rank_correlation_all =
        correlate([](const PerJokeRow& row) { return row.crowd_all; });
    report.rank_correlation_valid =
        correlate([](const PerJokeRow& row) { return row.crowd_valid; });

    std::size_t rated = rated_order_desc(corpus).size();
    if (extremes_k > 0 && rated >= 2 * extremes_k)
        report.extremes = extremes_agreement(corpus, scores_all, extremes_k);
    else
        report.extremes.k = static_cast<int>(extremes_k);
    return report;
}

void write_scores_csv(const std::string& path, const std::vector<CrowdScore>& scores) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write scores: " + path);
    out << "joke_id,policy,run_index,raw,voters_counted,normalized\n";
    for (const auto& score : scores) {
        out << csv::join_record({score.joke_id, to_string(score.policy),
                                 std::to_string(score.run_index), std::to_string(score.raw),
                                 std::to_string(score.voters_counted),
                                 score.normalized ? fixed6(*score.normalized) : ""})
            << "\n";
    }
}

std::vector<CrowdScore> read_scores_csv(const std::string& path) {
    auto records = csv::read_file(path);
    if (records.empty() || records.front() !=
                               std::vector<std::string>{"joke_id", "policy", "run_index", "raw",
                                                        "voters_counted", "normalized"})
        throw ParseError(1, "-", "bad scores header");
    std::vector<CrowdScore> scores;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != 6) throw ParseError(r + 1, "-", "expected 6 fields");
        auto parse_int = [&](const std::string& text, const char* field) {
            int value = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc{} || ptr != text.data() + text.size())
                throw ParseError(r + 1, field, "bad integer: '" + text + "'");
            return value;
        };
        CrowdScore score;
        score.joke_id = rec[0];
        try {
            score.policy = score_policy_from_string(rec[1]);
        } catch (const ConfigError&) {
            throw ParseError(r + 1, "policy", "unknown policy: '" + rec[1] + "'");
        }
        score.run_index = parse_int(rec[2], "run_index");
        score.raw = parse_int(rec[3], "raw");
        score.voters_counted = parse_int(rec[4], "voters_counted");
        if (!rec[5].empty()) {
            double value = 0;
            auto [ptr, ec] = std::from_chars(rec[5].data(), rec[5].data() + rec[5].size(), value);
            if (ec != std::errc{}) throw ParseError(r + 1, "normalized", "bad number");
            (void)ptr;
            score.normalized = value;
        }
        scores.push_back(std::move(score));
    }
    return scores;
}

void write_report_json(const ComparisonReport& report, const std::string& path) {
    ordered_json obj;
    ordered_json table = ordered_json::array();
    for (const auto& row : report.per_joke) {
        ordered_json entry;
        entry["joke_id"] = row.joke_id;
        entry["human_rating"] = row.human_rating;
        entry["crowd_all_votes"] = row.crowd_all ? ordered_json(*row.crowd_all) : ordered_json(nullptr);
        entry["crowd_valid_only"] =
            row.crowd_valid ? ordered_json(*row.crowd_valid) : ordered_json(nullptr);
        table.push_back(entry);
    }
    obj["per_joke"] = table;
    obj["rank_correlation_all_votes"] = report.rank_correlation_all
                                            ? ordered_json(*report.rank_correlation_all)
                                            : ordered_json(nullptr);
    obj["rank_correlation_valid_only"] = report.rank_correlation_valid
                                             ? ordered_json(*report.rank_correlation_valid)
                                             : ordered_json(nullptr);
    obj["extremes"] = ordered_json{{"k", report.extremes.k},
                                   {"top_total", report.extremes.top_total},
                                   {"top_at_or_above_3", report.extremes.top_at_or_above},
                                   {"bottom_total", report.extremes.bottom_total},
                                   {"bottom_above_3", report.extremes.bottom_above}};
    obj["audit"] = ordered_json{{"total_ballots", report.audit.total_ballots},
                                {"parseable", report.audit.parseable},
                                {"valid", report.audit.valid},
                                {"invalid", report.audit.invalid},
                                {"inconclusive", report.audit.inconclusive},
                                {"skipped", report.audit.skipped},
                                {"failed", report.audit.failed},
                                {"audited", report.audit.audited},
                                {"invalid_fraction", report.audit.invalid_fraction},
                                {"invalid_by_persona", report.audit.invalid_by_persona}};
    obj["persona_tally_pre_audit"] = report.tally_pre_audit;
    obj["persona_tally_post_audit"] = report.tally_post_audit;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + path);
    out << obj.dump(2) << "\n";
}

void write_report_csv(const ComparisonReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + path);
    out << "joke_id,human_rating,crowd_all_votes,crowd_valid_only\n";
    for (const auto& row : report.per_joke) {
        out << csv::join_record({row.joke_id, fixed6(row.human_rating),
                                 row.crowd_all ? fixed6(*row.crowd_all) : "",
                                 row.crowd_valid ? fixed6(*row.crowd_valid) : ""})
            << "\n";
    }
}

void write_plot_data(const ComparisonReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write plot data: " + path);
    out << "position,human,crowd_all_votes,crowd_valid_only\n";
    int position = 0;
    for (const auto& row : report.per_joke) {
        out << csv::join_record({std::to_string(++position), fixed6(row.human_rating),
                                 row.crowd_all ? fixed6(*row.crowd_all) : "",
                                 row.crowd_valid ? fixed6(*row.crowd_valid) : ""})
            << "\n";
    }
}

}  // namespace crowdscore
