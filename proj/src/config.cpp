#include "crowdscore/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "crowdscore/digest.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

template <typename T>
void read_into(const ordered_json& obj, const char* key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj[key].get<T>();
    } catch (const ordered_json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

void read_string_list(const ordered_json& obj, const char* key,
                      std::vector<std::string>& target) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_array()) throw ConfigError(std::string("config key '") + key +
                                                "' must be an array of strings");
    target.clear();
    for (const auto& item : obj[key]) {
        if (!item.is_string())
            throw ConfigError(std::string("config key '") + key + "' must contain strings");
        target.push_back(item.get<std::string>());
    }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path);
    ordered_json obj = ordered_json::parse(in, nullptr, false);
    if (obj.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return from_json(obj);
}

RunConfig RunConfig::from_json(const ordered_json& obj) {
    if (!obj.is_object()) throw ConfigError("config root must be a JSON object");
    check_keys(obj,
               {"backend", "journal", "dataset", "voting", "calibration", "personas", "runs",
                "audit", "explanations", "report", "out_dir", "seed"},
               "root");

    RunConfig config;
    if (obj.contains("backend")) {
        const auto& b = obj["backend"];
        check_keys(b,
                   {"kind", "endpoint_url", "api_key_env", "model", "temperature", "top_p",
                    "max_tokens", "stop", "concurrency", "timeout_s", "mock_rules",
                    "strict_mock"},
                   "backend");
        std::string kind = to_string(config.backend.kind);
        read_into(b, "kind", kind);
        config.backend.kind = backend_kind_from_string(kind);
        read_into(b, "endpoint_url", config.backend.endpoint_url);
        read_into(b, "api_key_env", config.backend.api_key_env);
        read_into(b, "model", config.backend.model);
        read_into(b, "temperature", config.backend.temperature);
        read_into(b, "top_p", config.backend.top_p);
        read_into(b, "max_tokens", config.backend.max_tokens);
        read_string_list(b, "stop", config.backend.stop);
        read_into(b, "concurrency", config.backend.concurrency);
        read_into(b, "timeout_s", config.backend.timeout_s);
        read_into(b, "mock_rules", config.backend.mock_rules);
        read_into(b, "strict_mock", config.backend.strict_mock);
    }
    read_into(obj, "journal", config.journal);
    if (obj.contains("dataset")) {
        const auto& d = obj["dataset"];
        check_keys(d, {"path", "format", "label_threshold"}, "dataset");
        read_into(d, "path", config.dataset.path);
        std::string format = "csv";
        read_into(d, "format", format);
        config.dataset.format = corpus_format_from_string(format);
        read_into(d, "label_threshold", config.dataset.label_threshold);
    }
    if (obj.contains("voting")) {
        const auto& v = obj["voting"];
        check_keys(v,
                   {"positive_label", "opposite_label", "shot_mode", "exemplar_positive_id",
                    "exemplar_negative_id"},
                   "voting");
        read_into(v, "positive_label", config.voting.positive_label);
        read_into(v, "opposite_label", config.voting.opposite_label);
        std::string mode = to_string(config.voting.shot_mode);
        read_into(v, "shot_mode", mode);
        config.voting.shot_mode = shot_mode_from_string(mode);
        read_into(v, "exemplar_positive_id", config.voting.exemplar_positive_id);
        read_into(v, "exemplar_negative_id", config.voting.exemplar_negative_id);
    }
    if (obj.contains("calibration")) {
        const auto& c = obj["calibration"];
        check_keys(c, {"opposites", "shot_modes", "anchor_k"}, "calibration");
        read_string_list(c, "opposites", config.calibration.opposites);
        if (c.contains("shot_modes")) {
            std::vector<std::string> modes;
            read_string_list(c, "shot_modes", modes);
            config.calibration.shot_modes.clear();
            for (const auto& m : modes)
                config.calibration.shot_modes.push_back(shot_mode_from_string(m));
        }
        read_into(c, "anchor_k", config.calibration.anchor_k);
    }
    read_string_list(obj, "personas", config.personas);
    read_into(obj, "runs", config.runs);
    if (obj.contains("audit")) {
        const auto& a = obj["audit"];
        check_keys(a, {"enabled", "invalid_policy"}, "audit");
        read_into(a, "enabled", config.audit.enabled);
        std::string policy = to_string(config.audit.invalid_policy);
        read_into(a, "invalid_policy", policy);
        config.audit.invalid_policy = invalid_vote_policy_from_string(policy);
    }
    read_into(obj, "explanations", config.explanations);
    if (obj.contains("report")) {
        const auto& r = obj["report"];
        check_keys(r, {"extremes_k", "plot_data"}, "report");
        read_into(r, "extremes_k", config.report.extremes_k);
        read_into(r, "plot_data", config.report.plot_data);
    }
    read_into(obj, "out_dir", config.out_dir);
    read_into(obj, "seed", config.seed);
    return config;
}

nlohmann::ordered_json RunConfig::to_json() const {
    ordered_json obj;
    obj["backend"] = ordered_json{{"kind", to_string(backend.kind)},
                                  {"endpoint_url", backend.endpoint_url},
                                  {"api_key_env", backend.api_key_env},
                                  {"model", backend.model},
                                  {"temperature", backend.temperature},
                                  {"top_p", backend.top_p},
                                  {"max_tokens", backend.max_tokens},
                                  {"stop", backend.stop},
                                  {"concurrency", backend.concurrency},
                                  {"timeout_s", backend.timeout_s},
                                  {"mock_rules", backend.mock_rules},
                                  {"strict_mock", backend.strict_mock}};
    obj["journal"] = journal;
    obj["dataset"] = ordered_json{{"path", dataset.path},
                                  {"format", dataset.format == CorpusFormat::Csv ? "csv" : "jsonl"},
                                  {"label_threshold", dataset.label_threshold}};
    obj["voting"] = ordered_json{{"positive_label", voting.positive_label},
                                 {"opposite_label", voting.opposite_label},
                                 {"shot_mode", to_string(voting.shot_mode)},
                                 {"exemplar_positive_id", voting.exemplar_positive_id},
                                 {"exemplar_negative_id", voting.exemplar_negative_id}};
    std::vector<std::string> modes;
    for (ShotMode mode : calibration.shot_modes) modes.emplace_back(to_string(mode));
    obj["calibration"] = ordered_json{{"opposites", calibration.opposites},
                                      {"shot_modes", modes},
                                      {"anchor_k", calibration.anchor_k}};
    obj["personas"] = personas;
    obj["runs"] = runs;
    obj["audit"] = ordered_json{{"enabled", audit.enabled},
                                {"invalid_policy", to_string(audit.invalid_policy)}};
    obj["explanations"] = explanations;
    obj["report"] =
        ordered_json{{"extremes_k", report.extremes_k}, {"plot_data", report.plot_data}};
    obj["seed"] = seed;
    return obj;
}

std::string RunConfig::digest() const {
    return sha256_hex(to_json().dump());
}

void RunConfig::validate() const {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (backend.temperature < 0) throw ConfigError("temperature must be >= 0");
    if (backend.top_p <= 0 || backend.top_p > 1) throw ConfigError("top_p must be in (0,1]");
    if (backend.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (backend.concurrency < 1) throw ConfigError("concurrency must be >= 1");
    if (backend.kind == BackendKind::Live && backend.endpoint_url.empty())
        throw ConfigError("live backend requires backend.endpoint_url");
    if (backend.kind == BackendKind::Mock && backend.mock_rules.empty())
        throw ConfigError("mock backend requires backend.mock_rules");
    if (backend.kind == BackendKind::Replay && journal.empty())
        throw ConfigError("replay backend requires a journal path");
    if (calibration.anchor_k < 1) throw ConfigError("calibration.anchor_k must be >= 1");
    if (calibration.opposites.empty())
        throw ConfigError("calibration.opposites must be non-empty");
    if (calibration.shot_modes.empty())
        throw ConfigError("calibration.shot_modes must be non-empty");
    if (report.extremes_k < 0) throw ConfigError("report.extremes_k must be >= 0");

    auto list = persona_list();
    if (list.empty()) throw ConfigError("persona list must be non-empty");
    for (std::size_t i = 0; i < list.size(); ++i)
        for (std::size_t j = i + 1; j < list.size(); ++j)
            if (list[i].name() == list[j].name())
                throw ConfigError("personas must be distinct: " + list[i].name());
    bool any_persona =
        std::any_of(list.begin(), list.end(), [](const Persona& p) { return !p.is_none(); });
    if (any_persona && voting.shot_mode == ShotMode::FewShot)
        throw ConfigError(
            "voting.shot_mode 'few' cannot be combined with personas: few-shot exemplars "
            "overwrite personality induction");
}

CompletionParams RunConfig::completion_params() const {
    CompletionParams params;
    params.model = backend.model;
    params.temperature = backend.temperature;
    params.top_p = backend.top_p;
    params.max_tokens = backend.max_tokens;
    params.stop_sequences = backend.stop;
    return params;
}

std::vector<Persona> RunConfig::persona_list() const {
    std::vector<Persona> list;
    list.reserve(personas.size());
    for (const auto& name : personas) list.push_back(Persona::from_name(name));
    return list;
}

}  // namespace crowdscore
