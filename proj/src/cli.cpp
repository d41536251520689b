#include "crowdscore/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

#include "crowdscore/calibration.hpp"
#include "crowdscore/config.hpp"
#include "crowdscore/crowd.hpp"
#include "crowdscore/dataset.hpp"
#include "crowdscore/digest.hpp"
#include "crowdscore/errors.hpp"
#include "crowdscore/live_backend.hpp"
#include "crowdscore/manifest.hpp"
#include "crowdscore/mock_backend.hpp"
#include "crowdscore/replay_backend.hpp"
#include "crowdscore/score.hpp"
#include "crowdscore/version.hpp"

namespace crowdscore {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kCalibrationCsv = "calibration.csv";
constexpr const char* kCalibrationJson = "calibration.json";
constexpr const char* kChosenSpec = "chosen_spec.json";
constexpr const char* kVoteSpec = "vote_spec.json";
constexpr const char* kBallots = "ballots.jsonl";
constexpr const char* kBallotsAudited = "ballots_audited.jsonl";
constexpr const char* kScores = "scores.csv";
constexpr const char* kReportJson = "report.json";
constexpr const char* kReportCsv = "report.csv";
constexpr const char* kPlotData = "plotdata.csv";

struct Overrides {
    std::string config_path;
    std::string backend_kind;
    std::string journal;
    std::string out;
    std::string corpus;
    std::string format;
    int runs = 0;
    bool runs_set = false;
    std::uint64_t seed = 0;
    bool seed_set = false;

    std::string spec_path;
    std::string ballots_path;
    std::string scores_path;
    std::string policy = "both";
    std::vector<std::string> opposites;
    bool plot_data = false;
    bool no_explanations = false;
};

RunConfig resolve_config(const Overrides& ov) {
    RunConfig config;
    if (!ov.config_path.empty()) config = RunConfig::from_file(ov.config_path);
    if (!ov.backend_kind.empty()) config.backend.kind = backend_kind_from_string(ov.backend_kind);
    if (!ov.journal.empty()) config.journal = ov.journal;
    if (!ov.out.empty()) config.out_dir = ov.out;
    if (!ov.corpus.empty()) config.dataset.path = ov.corpus;
    if (!ov.format.empty()) config.dataset.format = corpus_format_from_string(ov.format);
    if (ov.runs_set) config.runs = ov.runs;
    if (ov.seed_set) config.seed = ov.seed;
    if (!ov.opposites.empty()) config.calibration.opposites = ov.opposites;
    if (ov.plot_data) config.report.plot_data = true;
    if (ov.no_explanations) config.explanations = false;
    return config;
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
    switch (config.backend.kind) {
        case BackendKind::Mock: {
            auto rules = MockBackend::load_rules(config.backend.mock_rules);
            auto backend = std::make_unique<MockBackend>(std::move(rules),
                                                         config.backend.strict_mock);
            if (!config.journal.empty() && fs::exists(config.journal))
                backend->journal().import_file(config.journal);
            return backend;
        }
        case BackendKind::Replay:
            return std::make_unique<ReplayBackend>(config.journal);
        case BackendKind::Live: {
            LiveConfig live;
            live.endpoint_url = config.backend.endpoint_url;
            live.api_key_env = config.backend.api_key_env;
            live.concurrency = config.backend.concurrency;
            live.timeout_s = config.backend.timeout_s;
            auto backend = std::make_unique<LiveBackend>(live);
            if (!config.journal.empty() && fs::exists(config.journal))
                backend->journal().import_file(config.journal);
            return backend;
        }
    }
    throw ConfigError("unreachable backend kind");
}

void export_journal(Backend& backend, const RunConfig& config) {
    if (config.journal.empty() || backend.kind() == BackendKind::Replay) return;
    fs::path parent = fs::path(config.journal).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    backend.journal().export_file(config.journal);
}

Corpus load_config_corpus(const RunConfig& config) {
    if (config.dataset.path.empty())
        throw ConfigError("no corpus configured: set dataset.path or pass --corpus");
    return load_corpus(config.dataset.path, config.dataset.format);
}

/// Manifest assembly for one stage.
class StageManifest {
public:
    StageManifest(std::string stage, const RunConfig& config)
        : out_dir_(config.out_dir) {
        manifest_.stage = std::move(stage);
        manifest_.tool_version = kVersion;
        manifest_.config_digest = config.digest();
        manifest_.seed = config.seed;
        fs::create_directories(out_dir_);
    }

    void input(const std::string& path) {
        // paths under the output directory are recorded relative to it, so
        // replay runs into different directories produce identical manifests
        std::error_code ec;
        fs::path relative = fs::relative(path, out_dir_, ec);
        std::string recorded = path;
        if (!ec && !relative.empty() && relative.native().rfind("..", 0) != 0)
            recorded = relative.string();
        manifest_.inputs.emplace_back(recorded, sha256_file(path));
    }
    void output(const std::string& name) {
        manifest_.outputs.emplace_back(name, sha256_file((out_dir_ / name).string()));
    }
    fs::path path(const std::string& name) const { return out_dir_ / name; }

    void finish() {
        write_manifest(manifest_, (out_dir_ / (manifest_.stage + ".manifest.json")).string());
    }

private:
    fs::path out_dir_;
    Manifest manifest_;
};

ordered_json spec_to_json(const VotingQuestionSpec& spec, const VotingConfig& ids) {
    ordered_json obj;
    obj["positive_label"] = spec.positive_label;
    obj["opposite_label"] = spec.opposite_label;
    obj["shot_mode"] = to_string(spec.shot_mode);
    obj["exemplar_positive_id"] =
        spec.exemplar_positive ? spec.exemplar_positive->id : ids.exemplar_positive_id;
    obj["exemplar_negative_id"] =
        spec.exemplar_negative ? spec.exemplar_negative->id : ids.exemplar_negative_id;
    return obj;
}

const Joke& resolve_exemplar(const Corpus& corpus, const std::string& id,
                             const std::string& which) {
    if (id.empty())
        throw ConfigError("few-shot voting requires voting.exemplar_" + which + "_id");
    const Joke* joke = corpus.find(id);
    if (!joke) throw ConfigError("exemplar joke id not in corpus: " + id);
    return *joke;
}

VotingQuestionSpec spec_from_voting_config(const VotingConfig& voting, const Corpus& corpus) {
    VotingQuestionSpec spec;
    spec.positive_label = voting.positive_label;
    spec.opposite_label = voting.opposite_label;
    spec.shot_mode = voting.shot_mode;
    if (spec.shot_mode == ShotMode::FewShot) {
        spec.exemplar_positive = resolve_exemplar(corpus, voting.exemplar_positive_id, "positive");
        spec.exemplar_negative = resolve_exemplar(corpus, voting.exemplar_negative_id, "negative");
    }
    spec.validate();
    return spec;
}

VotingQuestionSpec spec_from_file(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    ordered_json obj = ordered_json::parse(in, nullptr, false);
    if (obj.is_discarded()) throw ParseError(1, "-", "spec file is not valid JSON: " + path);
    VotingConfig voting;
    voting.positive_label = obj.value("positive_label", "Funny");
    voting.opposite_label = obj.value("opposite_label", "");
    voting.shot_mode = shot_mode_from_string(obj.value("shot_mode", "zero"));
    voting.exemplar_positive_id = obj.value("exemplar_positive_id", "");
    voting.exemplar_negative_id = obj.value("exemplar_negative_id", "");
    return spec_from_voting_config(voting, corpus);
}

struct ResolvedSpec {
    VotingQuestionSpec spec;
    bool from_file = false;
    std::string source;  // path or "config"
};

/// Resolution order: --spec flag, vote_spec.json (effective spec of a prior
/// vote stage; skipped for the vote command itself so a fresh vote never
/// reads its own stale output), chosen_spec.json (calibration output), then
/// the config's voting block.
ResolvedSpec resolve_spec(const RunConfig& config, const Corpus& corpus,
                          const std::string& flag_path, bool include_vote_spec) {
    if (!flag_path.empty()) return {spec_from_file(flag_path, corpus), true, flag_path};
    if (include_vote_spec) {
        fs::path vote_spec = fs::path(config.out_dir) / kVoteSpec;
        if (fs::exists(vote_spec))
            return {spec_from_file(vote_spec.string(), corpus), true, vote_spec.string()};
    }
    fs::path chosen = fs::path(config.out_dir) / kChosenSpec;
    if (fs::exists(chosen))
        return {spec_from_file(chosen.string(), corpus), true, chosen.string()};
    return {spec_from_voting_config(config.voting, corpus), false, "config"};
}

/// Personas overwrite few-shot induction: a calibrated few-shot spec is
/// downgraded to zero-shot for persona voting. A few-shot spec declared
/// directly in the config alongside personas was already rejected by
/// RunConfig::validate.
VotingQuestionSpec effective_vote_spec(const ResolvedSpec& resolved,
                                       const std::vector<Persona>& personas) {
    bool any_persona = std::any_of(personas.begin(), personas.end(),
                                   [](const Persona& p) { return !p.is_none(); });
    if (resolved.spec.shot_mode == ShotMode::FewShot && any_persona) {
        if (!resolved.from_file)
            throw ConfigError(
                "voting.shot_mode 'few' cannot be combined with personas: few-shot exemplars "
                "overwrite personality induction");
        VotingQuestionSpec zero = resolved.spec;
        zero.shot_mode = ShotMode::ZeroShot;
        zero.exemplar_positive.reset();
        zero.exemplar_negative.reset();
        std::cout << "vote: few-shot calibrated spec downgraded to zero-shot for persona "
                     "induction (opposite label kept)\n";
        return zero;
    }
    return resolved.spec;
}

std::string default_ballots_path(const RunConfig& config) {
    fs::path audited = fs::path(config.out_dir) / kBallotsAudited;
    if (fs::exists(audited)) return audited.string();
    return (fs::path(config.out_dir) / kBallots).string();
}

// ---- stages -------------------------------------------------------------

int cmd_calibrate(const RunConfig& config) {
    Corpus corpus = load_config_corpus(config);
    auto anchors = select_anchor_set(corpus, static_cast<std::size_t>(config.calibration.anchor_k));

    SweepOptions options;
    options.positive_label = config.voting.positive_label;
    options.params = config.completion_params();
    bool wants_few = std::any_of(config.calibration.shot_modes.begin(),
                                 config.calibration.shot_modes.end(),
                                 [](ShotMode m) { return m == ShotMode::FewShot; });
    if (wants_few) {
        options.exemplar_positive =
            resolve_exemplar(corpus, config.voting.exemplar_positive_id, "positive");
        options.exemplar_negative =
            resolve_exemplar(corpus, config.voting.exemplar_negative_id, "negative");
    }

    auto backend = make_backend(config);
    auto results = run_sweep(anchors, config.calibration.opposites, config.calibration.shot_modes,
                             config.runs, *backend, options);
    export_journal(*backend, config);

    if (results.empty() || results.front().partial)
        throw TransportError("calibration produced no complete sweep cell");

    StageManifest stage("calibrate", config);
    stage.input(config.dataset.path);
    if (!config.backend.mock_rules.empty()) stage.input(config.backend.mock_rules);
    write_calibration_csv(results, stage.path(kCalibrationCsv).string());
    write_calibration_json(results, stage.path(kCalibrationJson).string());

    const CalibrationResult& best = results.front();
    ordered_json chosen = spec_to_json(best.spec, config.voting);
    chosen["f_score"] = best.f_score;
    chosen["balanced_accuracy"] = best.balanced_accuracy;
    {
        std::ofstream out(stage.path(kChosenSpec), std::ios::binary);
        if (!out) throw IoError("cannot write chosen spec");
        out << chosen.dump(2) << "\n";
    }
    stage.output(kCalibrationCsv);
    stage.output(kCalibrationJson);
    stage.output(kChosenSpec);
    stage.finish();

    std::cout << "calibrate: " << results.size() << " cells over " << anchors.size()
              << " anchors; chosen opposite='" << best.spec.opposite_label << "' shot="
              << to_string(best.spec.shot_mode) << "\n";
    return 0;
}

int cmd_vote(const RunConfig& config, const ResolvedSpec& resolved) {
    Corpus corpus = load_config_corpus(config);
    auto personas = config.persona_list();
    VotingQuestionSpec spec = effective_vote_spec(resolved, personas);

    CrowdOptions options;
    options.audit_enabled = false;
    options.explanations_enabled = config.explanations;
    options.invalid_policy = config.audit.invalid_policy;
    options.params = config.completion_params();

    auto backend = make_backend(config);
    auto ballots = run_crowd(corpus, personas, spec, config.runs, options, *backend);
    export_journal(*backend, config);

    StageManifest stage("vote", config);
    stage.input(config.dataset.path);
    if (resolved.from_file) stage.input(resolved.source);
    write_ballots(stage.path(kBallots).string(), ballots);
    {
        std::ofstream out(stage.path(kVoteSpec), std::ios::binary);
        if (!out) throw IoError("cannot write vote spec");
        out << spec_to_json(spec, config.voting).dump(2) << "\n";
    }
    stage.output(kBallots);
    stage.output(kVoteSpec);
    stage.finish();

    std::cout << "vote: " << ballots.size() << " ballots (" << corpus.jokes.size() << " jokes x "
              << personas.size() << " personas x " << config.runs << " runs)\n";
    return 0;
}

int cmd_audit(const RunConfig& config, const ResolvedSpec& resolved,
              const std::string& ballots_flag) {
    Corpus corpus = load_config_corpus(config);
    std::string ballots_path =
        ballots_flag.empty() ? (fs::path(config.out_dir) / kBallots).string() : ballots_flag;
    auto ballots = read_ballots(ballots_path);
    auto personas = config.persona_list();
    VotingQuestionSpec spec = effective_vote_spec(resolved, personas);

    CrowdOptions options;
    options.audit_enabled = true;
    options.explanations_enabled = true;
    options.invalid_policy = config.audit.invalid_policy;
    options.params = config.completion_params();

    auto backend = make_backend(config);
    auto audited = audit_ballots(std::move(ballots), corpus, spec, options, *backend);
    export_journal(*backend, config);

    long invalid = 0;
    for (const auto& ballot : audited)
        if (ballot.audit == AuditStatus::Invalid) ++invalid;

    StageManifest stage("audit", config);
    stage.input(config.dataset.path);
    stage.input(ballots_path);
    write_ballots(stage.path(kBallotsAudited).string(), audited);
    stage.output(kBallotsAudited);
    stage.finish();

    std::cout << "audit: " << audited.size() << " ballots, " << invalid << " invalidated\n";
    return 0;
}

int cmd_score(const RunConfig& config, const std::string& ballots_flag,
              const std::string& policy_name) {
    std::string ballots_path =
        ballots_flag.empty() ? default_ballots_path(config) : ballots_flag;
    auto ballots = read_ballots(ballots_path);

    std::vector<CrowdScore> scores;
    auto append = [&](ScorePolicy policy) {
        auto part = score_ballots(ballots, policy);
        scores.insert(scores.end(), part.begin(), part.end());
    };
    if (policy_name == "both") {
        append(ScorePolicy::AllVotes);
        append(ScorePolicy::ValidOnly);
    } else {
        append(score_policy_from_string(policy_name));
    }

    StageManifest stage("score", config);
    stage.input(ballots_path);
    write_scores_csv(stage.path(kScores).string(), scores);
    stage.output(kScores);
    stage.finish();

    std::cout << "score: " << scores.size() << " (joke, run, policy) rows from "
              << ballots.size() << " ballots\n";
    return 0;
}

int cmd_report(const RunConfig& config, const std::string& ballots_flag,
               const std::string& scores_flag) {
    Corpus corpus = load_config_corpus(config);
    std::string ballots_path =
        ballots_flag.empty() ? default_ballots_path(config) : ballots_flag;
    std::string scores_path =
        scores_flag.empty() ? (fs::path(config.out_dir) / kScores).string() : scores_flag;
    auto ballots = read_ballots(ballots_path);
    auto scores = read_scores_csv(scores_path);

    std::vector<CrowdScore> all, valid;
    for (const auto& score : scores)
        (score.policy == ScorePolicy::AllVotes ? all : valid).push_back(score);

    auto report = build_report(corpus, ballots, all, valid,
                               static_cast<std::size_t>(config.report.extremes_k));

    StageManifest stage("report", config);
    stage.input(config.dataset.path);
    stage.input(ballots_path);
    stage.input(scores_path);
    write_report_json(report, stage.path(kReportJson).string());
    write_report_csv(report, stage.path(kReportCsv).string());
    stage.output(kReportJson);
    stage.output(kReportCsv);
    if (config.report.plot_data) {
        write_plot_data(report, stage.path(kPlotData).string());
        stage.output(kPlotData);
    }
    stage.finish();

    std::cout << "report: " << report.per_joke.size() << " jokes; invalid fraction "
              << report.audit.invalid_fraction << "\n";
    return 0;
}

int run_chain(RunConfig config, const ResolvedSpec& spec, const std::string& out_dir) {
    config.out_dir = out_dir;
    cmd_vote(config, spec);
    if (config.audit.enabled) cmd_audit(config, spec, "");
    cmd_score(config, "", "both");
    cmd_report(config, "", "");
    return 0;
}

int cmd_replay_verify(const RunConfig& base_config, const std::string& spec_flag) {
    RunConfig config = base_config;
    config.backend.kind = BackendKind::Replay;
    if (config.journal.empty())
        throw ConfigError("replay-verify requires a journal (set journal or pass --journal)");

    Corpus corpus = load_config_corpus(config);
    ResolvedSpec spec = resolve_spec(config, corpus, spec_flag, true);

    fs::path verify_a = fs::path(config.out_dir) / "verify_a";
    fs::path verify_b = fs::path(config.out_dir) / "verify_b";
    fs::remove_all(verify_a);
    fs::remove_all(verify_b);
    run_chain(config, spec, verify_a.string());
    run_chain(config, spec, verify_b.string());

    std::map<std::string, std::string> hashes_a, hashes_b;
    auto collect = [](const fs::path& root, std::map<std::string, std::string>& out) {
        for (const auto& entry : fs::recursive_directory_iterator(root))
            if (entry.is_regular_file())
                out[fs::relative(entry.path(), root).string()] =
                    sha256_file(entry.path().string());
    };
    collect(verify_a, hashes_a);
    collect(verify_b, hashes_b);

    bool ok = hashes_a == hashes_b;
    if (ok) {
        std::cout << "replay-verify: OK (" << hashes_a.size() << " files byte-identical)\n";
        return 0;
    }
    std::cout << "replay-verify: MISMATCH\n";
    for (const auto& [name, hash] : hashes_a) {
        auto it = hashes_b.find(name);
        if (it == hashes_b.end()) std::cout << "  only in first run: " << name << "\n";
        else if (it->second != hash) std::cout << "  differs: " << name << "\n";
    }
    for (const auto& [name, hash] : hashes_b)
        if (!hashes_a.count(name)) std::cout << "  only in second run: " << name << "\n";
    return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"crowdscore: rate creative text artifacts with a crowd of persona-induced "
                 "LLM voters"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Overrides ov;
    app.add_option("--config", ov.config_path, "JSON config file");
    app.add_option("--backend", ov.backend_kind, "Backend kind: live, mock, or replay")
        ->check(CLI::IsMember({"live", "mock", "replay"}));
    app.add_option("--journal", ov.journal, "Completion journal path (JSONL)");
    app.add_option("--out", ov.out, "Output directory");
    app.add_option("--runs", ov.runs, "Number of repeated runs")->each([&](const std::string&) {
        ov.runs_set = true;
    });
    app.add_option("--seed", ov.seed, "Seed recorded in manifests")->each(
        [&](const std::string&) { ov.seed_set = true; });
    app.add_option("--corpus", ov.corpus, "Joke corpus file (overrides dataset.path)");
    app.add_option("--format", ov.format, "Corpus format: csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    auto* calibrate = app.add_subcommand("calibrate", "Sweep voting questions over anchors");
    calibrate->add_option("--opposites", ov.opposites,
                          "Opposite words to sweep (overrides calibration.opposites)");

    auto* vote = app.add_subcommand("vote", "Cast persona votes for every joke");
    vote->add_option("--spec", ov.spec_path, "Voting spec file (default: chosen_spec.json)");
    vote->add_flag("--no-explanations", ov.no_explanations,
                   "Skip explanation prompts (halves calls; audit stage then impossible)");

    auto* audit = app.add_subcommand("audit", "Audit ballot explanations");
    audit->add_option("--spec", ov.spec_path, "Voting spec file (default: vote_spec.json)");
    audit->add_option("--ballots", ov.ballots_path, "Ballot file (default: out/ballots.jsonl)");

    auto* score = app.add_subcommand("score", "Aggregate ballots into crowd scores");
    score->add_option("--ballots", ov.ballots_path,
                      "Ballot file (default: audited ballots when present)");
    score->add_option("--policy", ov.policy, "all, valid-only, or both")
        ->check(CLI::IsMember({"all", "valid-only", "both"}));

    auto* report = app.add_subcommand("report", "Compare crowd scores against human ratings");
    report->add_option("--ballots", ov.ballots_path, "Ballot file");
    report->add_option("--scores", ov.scores_path, "Scores file (default: out/scores.csv)");
    report->add_flag("--plot-data", ov.plot_data, "Also emit aligned plot series");

    auto* verify = app.add_subcommand("replay-verify",
                                      "Run the pipeline twice from the journal and compare");
    verify->add_option("--spec", ov.spec_path, "Voting spec file");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << ordered_json{{"error", ordered_json{{"kind", "config"},
                                                         {"code", "CliParse"},
                                                         {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 2;
    }

    try {
        RunConfig config = resolve_config(ov);
        config.validate();
        if (calibrate->parsed()) return cmd_calibrate(config);
        if (vote->parsed() || audit->parsed()) {
            Corpus corpus = load_config_corpus(config);
            ResolvedSpec spec = resolve_spec(config, corpus, ov.spec_path, audit->parsed());
            if (vote->parsed()) return cmd_vote(config, spec);
            return cmd_audit(config, spec, ov.ballots_path);
        }
        if (score->parsed()) return cmd_score(config, ov.ballots_path, ov.policy);
        if (report->parsed()) return cmd_report(config, ov.ballots_path, ov.scores_path);
        if (verify->parsed()) return cmd_replay_verify(config, ov.spec_path);
        throw ConfigError("no subcommand given");
    } catch (const Error& e) {
        std::cerr << ordered_json{{"error", ordered_json{{"kind", to_string(e.kind())},
                                                         {"code", e.code()},
                                                         {"message", e.what()}}}}
                         .dump()
                  << "\n";
        switch (e.kind()) {
            case ErrorKind::Config: return 2;
            case ErrorKind::Backend: return 3;
            case ErrorKind::Data: return 4;
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << ordered_json{{"error", ordered_json{{"kind", "internal"},
                                                         {"code", "Unexpected"},
                                                         {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 1;
    }
}

}  // namespace crowdscore
