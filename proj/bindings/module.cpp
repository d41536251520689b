#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "crowdscore/calibration.hpp"
#include "crowdscore/crowd.hpp"
#include "crowdscore/dataset.hpp"
#include "crowdscore/errors.hpp"
#include "crowdscore/live_backend.hpp"
#include "crowdscore/metrics.hpp"
#include "crowdscore/mock_backend.hpp"
#include "crowdscore/prompt.hpp"
#include "crowdscore/replay_backend.hpp"
#include "crowdscore/score.hpp"
#include "crowdscore/version.hpp"

namespace py = pybind11;
using namespace crowdscore;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Crowd-scoring engine: persona-induced LLM voters over creative text artifacts";
    m.attr("__version__") = kVersion;

    static py::exception<Error> error_type(m, "CrowdScoreError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, (e.code() + ": " + e.what()).c_str());
        }
    });

    // ---- dataset ---------------------------------------------------------

    py::class_<Joke>(m, "Joke")
        .def(py::init([](std::string id, std::string headline, std::string body,
                         std::string source, std::optional<double> human_rating) {
                 return Joke{std::move(id), std::move(headline), std::move(body),
                             std::move(source), human_rating};
             }),
             py::arg("id") = "", py::arg("headline") = "", py::arg("body") = "",
             py::arg("source") = "", py::arg("human_rating") = py::none())
        .def_readwrite("id", &Joke::id)
        .def_readwrite("headline", &Joke::headline)
        .def_readwrite("body", &Joke::body)
        .def_readwrite("source", &Joke::source)
        .def_readwrite("human_rating", &Joke::human_rating)
        .def("__repr__", [](const Joke& joke) { return "<Joke id='" + joke.id + "'>"; });

    py::enum_<Label>(m, "Label")
        .value("Positive", Label::Positive)
        .value("Negative", Label::Negative);

    py::class_<LabeledJoke>(m, "LabeledJoke")
        .def(py::init<>())
        .def_readwrite("joke", &LabeledJoke::joke)
        .def_readwrite("label", &LabeledJoke::label);

    py::class_<Corpus>(m, "Corpus")
        .def(py::init<>())
        .def_readwrite("jokes", &Corpus::jokes)
        .def_readwrite("provenance", &Corpus::provenance)
        .def("find",
             [](const Corpus& corpus, const std::string& id) -> std::optional<Joke> {
                 const Joke* joke = corpus.find(id);
                 if (!joke) return std::nullopt;
                 return *joke;
             })
        .def("__len__", [](const Corpus& corpus) { return corpus.jokes.size(); });

    py::enum_<CorpusFormat>(m, "CorpusFormat")
        .value("Csv", CorpusFormat::Csv)
        .value("Jsonl", CorpusFormat::Jsonl);

    m.def("load_corpus", &load_corpus, py::arg("path"),
          py::arg("format") = CorpusFormat::Csv);
    m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("path"),
          py::arg("format") = CorpusFormat::Csv);
    m.def("label_by_threshold", &label_by_threshold, py::arg("corpus"),
          py::arg("threshold") = 2.0);
    m.def("select_anchor_set", &select_anchor_set, py::arg("corpus"), py::arg("k"));

    // ---- prompt ----------------------------------------------------------

    py::enum_<ShotMode>(m, "ShotMode")
        .value("ZeroShot", ShotMode::ZeroShot)
        .value("FewShot", ShotMode::FewShot);

    py::enum_<PersonaKind>(m, "PersonaKind")
        .value("Affiliative", PersonaKind::Affiliative)
        .value("SelfEnhancing", PersonaKind::SelfEnhancing)
        .value("Aggressive", PersonaKind::Aggressive)
        .value("SelfDefeating", PersonaKind::SelfDefeating)
        .value("NoPersona", PersonaKind::None);

    py::class_<Persona>(m, "Persona")
        .def_static("affiliative", &Persona::affiliative)
        .def_static("self_enhancing", &Persona::self_enhancing)
        .def_static("aggressive", &Persona::aggressive)
        .def_static("self_defeating", &Persona::self_defeating)
        .def_static("none", &Persona::none)
        .def_static("from_name", &Persona::from_name, py::arg("name"))
        .def_static("all_humour_types", &Persona::all_humour_types)
        .def_readonly("kind", &Persona::kind)
        .def_readonly("humour_phrase", &Persona::humour_phrase)
        .def_property_readonly("name", &Persona::name)
        .def("__repr__", [](const Persona& p) { return "<Persona " + p.name() + ">"; });

    py::class_<Template>(m, "Template")
        .def(py::init<std::string, std::string>(), py::arg("name"), py::arg("body"))
        .def_property_readonly("name", &Template::name)
        .def_property_readonly("body", &Template::body)
        .def_property_readonly("required_slots", &Template::required_slots);

    py::enum_<UnknownSlotPolicy>(m, "UnknownSlotPolicy")
        .value("Error", UnknownSlotPolicy::Error)
        .value("Warn", UnknownSlotPolicy::Warn)
        .value("Ignore", UnknownSlotPolicy::Ignore);

    m.def(
        "render",
        [](const Template& tmpl, const SlotMap& slots, UnknownSlotPolicy policy) {
            return render(tmpl, slots, policy);
        },
        py::arg("template"), py::arg("slots"),
        py::arg("unknown_slot_policy") = UnknownSlotPolicy::Error);

    auto templates_mod = m.def_submodule("templates", "Canonical built-in prompt templates");
    templates_mod.def("voting_zero", &templates::voting_zero,
                      py::return_value_policy::reference);
    templates_mod.def("voting_few", &templates::voting_few,
                      py::return_value_policy::reference);
    templates_mod.def("personality", &templates::personality,
                      py::return_value_policy::reference);
    templates_mod.def("explanation", &templates::explanation,
                      py::return_value_policy::reference);
    templates_mod.def("explanation_baseline", &templates::explanation_baseline,
                      py::return_value_policy::reference);
    templates_mod.def("audit", &templates::audit, py::return_value_policy::reference);
    templates_mod.def("load_file", &templates::load_file, py::arg("path"));

    py::class_<VotingQuestionSpec>(m, "VotingQuestionSpec")
        .def(py::init([](std::string positive_label, std::string opposite_label,
                         ShotMode shot_mode, std::optional<Joke> exemplar_positive,
                         std::optional<Joke> exemplar_negative) {
                 VotingQuestionSpec spec;
                 spec.positive_label = std::move(positive_label);
                 spec.opposite_label = std::move(opposite_label);
                 spec.shot_mode = shot_mode;
                 spec.exemplar_positive = std::move(exemplar_positive);
                 spec.exemplar_negative = std::move(exemplar_negative);
                 return spec;
             }),
             py::arg("positive_label") = "Funny", py::arg("opposite_label") = "Boring",
             py::arg("shot_mode") = ShotMode::ZeroShot,
             py::arg("exemplar_positive") = py::none(),
             py::arg("exemplar_negative") = py::none())
        .def_readwrite("positive_label", &VotingQuestionSpec::positive_label)
        .def_readwrite("opposite_label", &VotingQuestionSpec::opposite_label)
        .def_readwrite("shot_mode", &VotingQuestionSpec::shot_mode)
        .def_readwrite("exemplar_positive", &VotingQuestionSpec::exemplar_positive)
        .def_readwrite("exemplar_negative", &VotingQuestionSpec::exemplar_negative)
        .def("validate", &VotingQuestionSpec::validate);

    m.def("build_voting_prompt", &build_voting_prompt, py::arg("spec"), py::arg("persona"),
          py::arg("joke"));
    m.def("build_explanation_prompt", &build_explanation_prompt, py::arg("spec"),
          py::arg("persona"), py::arg("joke"), py::arg("verdict_label"));
    m.def("build_audit_prompt", &build_audit_prompt, py::arg("joke"), py::arg("reasoning"),
          py::arg("classification"));

    // ---- backend ---------------------------------------------------------

    py::class_<CompletionParams>(m, "CompletionParams")
        .def(py::init<>())
        .def_readwrite("model", &CompletionParams::model)
        .def_readwrite("temperature", &CompletionParams::temperature)
        .def_readwrite("top_p", &CompletionParams::top_p)
        .def_readwrite("max_tokens", &CompletionParams::max_tokens)
        .def_readwrite("stop_sequences", &CompletionParams::stop_sequences);

    py::enum_<BackendKind>(m, "BackendKind")
        .value("Live", BackendKind::Live)
        .value("Mock", BackendKind::Mock)
        .value("Replay", BackendKind::Replay);

    py::class_<CompletionRecord>(m, "CompletionRecord")
        .def_readonly("digest", &CompletionRecord::digest)
        .def_readonly("prompt", &CompletionRecord::prompt)
        .def_readonly("params", &CompletionRecord::params)
        .def_readonly("completion", &CompletionRecord::completion)
        .def_readonly("backend_kind", &CompletionRecord::backend_kind)
        .def_readonly("timestamp", &CompletionRecord::timestamp)
        .def_readonly("attempt_index", &CompletionRecord::attempt_index);

    m.def("cache_key", &cache_key, py::arg("prompt"), py::arg("params"),
          py::arg("attempt_index") = 0);

    py::class_<CompletionJournal>(m, "CompletionJournal")
        .def("__len__", &CompletionJournal::size)
        .def("find", &CompletionJournal::find, py::arg("digest"))
        .def("records", &CompletionJournal::records)
        .def("export_file", &CompletionJournal::export_file, py::arg("path"))
        .def("import_file", &CompletionJournal::import_file, py::arg("path"));

    py::class_<Backend>(m, "Backend")
        .def("complete", &Backend::complete, py::arg("prompt"), py::arg("params"),
             py::arg("attempt_index") = 0)
        .def_property_readonly(
            "journal",
            [](Backend& backend) -> CompletionJournal& { return backend.journal(); },
            py::return_value_policy::reference_internal)
        .def_property_readonly("kind", &Backend::kind);

    py::enum_<MockMatcher>(m, "MockMatcher")
        .value("ExactPrompt", MockMatcher::ExactPrompt)
        .value("SubstringSet", MockMatcher::SubstringSet)
        .value("RegexPattern", MockMatcher::RegexPattern);

    py::class_<MockRule>(m, "MockRule")
        .def(py::init([](MockMatcher matcher, std::vector<std::string> patterns,
                         std::vector<std::string> responses, int priority) {
                 return MockRule{matcher, std::move(patterns), std::move(responses), priority};
             }),
             py::arg("matcher"), py::arg("patterns"), py::arg("responses"),
             py::arg("priority") = 0)
        .def_readwrite("matcher", &MockRule::matcher)
        .def_readwrite("patterns", &MockRule::patterns)
        .def_readwrite("responses", &MockRule::responses)
        .def_readwrite("priority", &MockRule::priority)
        .def("matches", &MockRule::matches, py::arg("prompt"));

    py::class_<MockBackend, Backend>(m, "MockBackend")
        .def(py::init<std::vector<MockRule>, bool>(), py::arg("rules"),
             py::arg("strict") = true)
        .def_static("load_rules", &MockBackend::load_rules, py::arg("path"))
        .def_static("save_rules", &MockBackend::save_rules, py::arg("path"),
                    py::arg("rules"));

    py::class_<ReplayBackend, Backend>(m, "ReplayBackend")
        .def(py::init<const std::string&>(), py::arg("journal_path"));

    py::class_<LiveConfig>(m, "LiveConfig")
        .def(py::init<>())
        .def_readwrite("endpoint_url", &LiveConfig::endpoint_url)
        .def_readwrite("api_key_env", &LiveConfig::api_key_env)
        .def_readwrite("concurrency", &LiveConfig::concurrency)
        .def_readwrite("timeout_s", &LiveConfig::timeout_s)
        .def_readwrite("max_retries", &LiveConfig::max_retries)
        .def_readwrite("backoff_base_ms", &LiveConfig::backoff_base_ms)
        .def_readwrite("backoff_cap_ms", &LiveConfig::backoff_cap_ms);

    py::class_<LiveBackend, Backend>(m, "LiveBackend")
        .def(py::init<LiveConfig>(), py::arg("config"));

    // ---- calibration -----------------------------------------------------

    py::enum_<VerdictValue>(m, "VerdictValue")
        .value("Positive", VerdictValue::Positive)
        .value("Negative", VerdictValue::Negative)
        .value("Unparseable", VerdictValue::Unparseable);

    py::class_<Verdict>(m, "Verdict")
        .def(py::init<>())
        .def_readwrite("value", &Verdict::value)
        .def_readwrite("raw_completion", &Verdict::raw_completion)
        .def_readwrite("matched_label", &Verdict::matched_label);

    m.def("parse_verdict", &parse_verdict, py::arg("completion"), py::arg("spec"));

    py::class_<ConfusionCounts>(m, "ConfusionCounts")
        .def(py::init([](long tp, long fp, long tn, long fn) {
                 return ConfusionCounts{tp, fp, tn, fn};
             }),
             py::arg("tp") = 0, py::arg("fp") = 0, py::arg("tn") = 0, py::arg("fn") = 0)
        .def_readwrite("tp", &ConfusionCounts::tp)
        .def_readwrite("fp", &ConfusionCounts::fp)
        .def_readwrite("tn", &ConfusionCounts::tn)
        .def_readwrite("fn", &ConfusionCounts::fn)
        .def("total", &ConfusionCounts::total);

    m.def("f_score", &f_score, py::arg("counts"));
    m.def("f_score_defined", &f_score_defined, py::arg("counts"));
    m.def("balanced_accuracy", &balanced_accuracy, py::arg("counts"));

    py::class_<RunMetrics>(m, "RunMetrics")
        .def_readonly("run_index", &RunMetrics::run_index)
        .def_readonly("counts", &RunMetrics::counts)
        .def_readonly("f", &RunMetrics::f)
        .def_readonly("ba", &RunMetrics::ba)
        .def_readonly("unparseable", &RunMetrics::unparseable);

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("spec", &CalibrationResult::spec)
        .def_readonly("counts", &CalibrationResult::counts)
        .def_readonly("f_score", &CalibrationResult::f_score)
        .def_readonly("balanced_accuracy", &CalibrationResult::balanced_accuracy)
        .def_readonly("majority_f_score", &CalibrationResult::majority_f_score)
        .def_readonly("majority_balanced_accuracy",
                      &CalibrationResult::majority_balanced_accuracy)
        .def_readonly("per_run", &CalibrationResult::per_run)
        .def_readonly("runs", &CalibrationResult::runs)
        .def_readonly("unparseable_count", &CalibrationResult::unparseable_count)
        .def_readonly("partial", &CalibrationResult::partial);

    py::class_<SweepOptions>(m, "SweepOptions")
        .def(py::init<>())
        .def_readwrite("positive_label", &SweepOptions::positive_label)
        .def_readwrite("exemplar_positive", &SweepOptions::exemplar_positive)
        .def_readwrite("exemplar_negative", &SweepOptions::exemplar_negative)
        .def_readwrite("params", &SweepOptions::params);

    m.def("run_sweep", &run_sweep, py::arg("anchors"), py::arg("opposites"),
          py::arg("shot_modes"), py::arg("runs"), py::arg("backend"), py::arg("options"));
    m.def("write_calibration_csv", &write_calibration_csv, py::arg("results"),
          py::arg("path"));
    m.def("write_calibration_json", &write_calibration_json, py::arg("results"),
          py::arg("path"));

    // ---- crowd -----------------------------------------------------------

    py::enum_<AuditStatus>(m, "AuditStatus")
        .value("Valid", AuditStatus::Valid)
        .value("Invalid", AuditStatus::Invalid)
        .value("Inconclusive", AuditStatus::Inconclusive)
        .value("Skipped", AuditStatus::Skipped);

    py::enum_<AuditDecision>(m, "AuditDecision")
        .value("Yes", AuditDecision::Yes)
        .value("No", AuditDecision::No)
        .value("Unparseable", AuditDecision::Unparseable);

    py::class_<AuditVerdict>(m, "AuditVerdict")
        .def_readonly("decision", &AuditVerdict::decision)
        .def_readonly("raw", &AuditVerdict::raw);

    py::enum_<InvalidVotePolicy>(m, "InvalidVotePolicy")
        .value("Discard", InvalidVotePolicy::Discard)
        .value("RepromptOnce", InvalidVotePolicy::RepromptOnce);

    py::class_<BallotRecord>(m, "BallotRecord")
        .def(py::init<>())
        .def_readwrite("joke_id", &BallotRecord::joke_id)
        .def_readwrite("persona", &BallotRecord::persona)
        .def_readwrite("run_index", &BallotRecord::run_index)
        .def_readwrite("verdict", &BallotRecord::verdict)
        .def_readwrite("explanation", &BallotRecord::explanation)
        .def_readwrite("audit", &BallotRecord::audit)
        .def_readwrite("prompts_digest", &BallotRecord::prompts_digest)
        .def_readwrite("failed", &BallotRecord::failed)
        .def_readwrite("failure_reason", &BallotRecord::failure_reason);

    py::class_<CrowdOptions>(m, "CrowdOptions")
        .def(py::init<>())
        .def_readwrite("audit_enabled", &CrowdOptions::audit_enabled)
        .def_readwrite("explanations_enabled", &CrowdOptions::explanations_enabled)
        .def_readwrite("invalid_policy", &CrowdOptions::invalid_policy)
        .def_readwrite("params", &CrowdOptions::params);

    m.def("cast_vote", &cast_vote, py::arg("joke"), py::arg("persona"), py::arg("spec"),
          py::arg("run_index"), py::arg("backend"), py::arg("params"));
    m.def("explain_vote", &explain_vote, py::arg("joke"), py::arg("persona"), py::arg("spec"),
          py::arg("verdict"), py::arg("run_index"), py::arg("backend"), py::arg("params"),
          py::arg("attempt_offset") = 0);
    m.def("audit_vote", &audit_vote, py::arg("joke"), py::arg("explanation"),
          py::arg("classification_label"), py::arg("run_index"), py::arg("backend"),
          py::arg("params"), py::arg("attempt_offset") = 0);
    m.def("run_crowd", &run_crowd, py::arg("corpus"), py::arg("personas"), py::arg("spec"),
          py::arg("runs"), py::arg("options"), py::arg("backend"));
    m.def("audit_ballots", &audit_ballots, py::arg("ballots"), py::arg("corpus"),
          py::arg("spec"), py::arg("options"), py::arg("backend"));

    py::enum_<TallyMode>(m, "TallyMode")
        .value("PreAudit", TallyMode::PreAudit)
        .value("PostAudit", TallyMode::PostAudit);

    m.def("persona_tally", &persona_tally, py::arg("ballots"), py::arg("mode"));
    m.def("write_ballots", &write_ballots, py::arg("path"), py::arg("ballots"));
    m.def("read_ballots", &read_ballots, py::arg("path"));

    // ---- score -----------------------------------------------------------

    py::enum_<ScorePolicy>(m, "ScorePolicy")
        .value("AllVotes", ScorePolicy::AllVotes)
        .value("ValidOnly", ScorePolicy::ValidOnly);

    py::class_<CrowdScore>(m, "CrowdScore")
        .def_readonly("joke_id", &CrowdScore::joke_id)
        .def_readonly("raw", &CrowdScore::raw)
        .def_readonly("voters_counted", &CrowdScore::voters_counted)
        .def_readonly("normalized", &CrowdScore::normalized)
        .def_readonly("policy", &CrowdScore::policy)
        .def_readonly("run_index", &CrowdScore::run_index);

    m.def("ballot_counted", &ballot_counted, py::arg("ballot"), py::arg("policy"));
    m.def("aggregate", &aggregate, py::arg("ballots"), py::arg("policy"));
    m.def("score_ballots", &score_ballots, py::arg("ballots"), py::arg("policy"));

    py::class_<RunMean>(m, "RunMean")
        .def_readonly("mean", &RunMean::mean)
        .def_readonly("scored_runs", &RunMean::scored_runs)
        .def_readonly("unscored_runs", &RunMean::unscored_runs);

    m.def("mean_over_runs", &mean_over_runs, py::arg("scores"));
    m.def("rank_correlation", &rank_correlation, py::arg("human"), py::arg("crowd"));

    py::class_<ExtremesAgreement>(m, "ExtremesAgreement")
        .def_readonly("k", &ExtremesAgreement::k)
        .def_readonly("top_total", &ExtremesAgreement::top_total)
        .def_readonly("top_at_or_above", &ExtremesAgreement::top_at_or_above)
        .def_readonly("bottom_total", &ExtremesAgreement::bottom_total)
        .def_readonly("bottom_above", &ExtremesAgreement::bottom_above);

    m.def("extremes_agreement", &extremes_agreement, py::arg("corpus"),
          py::arg("per_run_scores"), py::arg("k"), py::arg("threshold") = 3.0);

    py::class_<PerJokeRow>(m, "PerJokeRow")
        .def_readonly("joke_id", &PerJokeRow::joke_id)
        .def_readonly("human_rating", &PerJokeRow::human_rating)
        .def_readonly("crowd_all", &PerJokeRow::crowd_all)
        .def_readonly("crowd_valid", &PerJokeRow::crowd_valid);

    py::class_<AuditAccounting>(m, "AuditAccounting")
        .def_readonly("total_ballots", &AuditAccounting::total_ballots)
        .def_readonly("parseable", &AuditAccounting::parseable)
        .def_readonly("valid", &AuditAccounting::valid)
        .def_readonly("invalid", &AuditAccounting::invalid)
        .def_readonly("inconclusive", &AuditAccounting::inconclusive)
        .def_readonly("skipped", &AuditAccounting::skipped)
        .def_readonly("failed", &AuditAccounting::failed)
        .def_readonly("audited", &AuditAccounting::audited)
        .def_readonly("invalid_fraction", &AuditAccounting::invalid_fraction)
        .def_readonly("invalid_by_persona", &AuditAccounting::invalid_by_persona);

    py::class_<ComparisonReport>(m, "ComparisonReport")
        .def_readonly("per_joke", &ComparisonReport::per_joke)
        .def_readonly("rank_correlation_all", &ComparisonReport::rank_correlation_all)
        .def_readonly("rank_correlation_valid", &ComparisonReport::rank_correlation_valid)
        .def_readonly("extremes", &ComparisonReport::extremes)
        .def_readonly("audit", &ComparisonReport::audit)
        .def_readonly("tally_pre_audit", &ComparisonReport::tally_pre_audit)
        .def_readonly("tally_post_audit", &ComparisonReport::tally_post_audit);

    m.def("build_report", &build_report, py::arg("corpus"), py::arg("ballots"),
          py::arg("scores_all"), py::arg("scores_valid"), py::arg("extremes_k") = 10);
    m.def("write_scores_csv", &write_scores_csv, py::arg("path"), py::arg("scores"));
    m.def("read_scores_csv", &read_scores_csv, py::arg("path"));
    m.def("write_report_json", &write_report_json, py::arg("report"), py::arg("path"));
    m.def("write_report_csv", &write_report_csv, py::arg("report"), py::arg("path"));
    m.def("write_plot_data", &write_plot_data, py::arg("report"), py::arg("path"));
}
