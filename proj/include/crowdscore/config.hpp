#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdscore/backend.hpp"
#include "crowdscore/crowd.hpp"
#include "crowdscore/dataset.hpp"
#include "crowdscore/prompt.hpp"

namespace crowdscore {

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string endpoint_url;
    std::string api_key_env = "CROWDSCORE_API_KEY";
    std::string model = "default";
    double temperature = 1.0;
    double top_p = 1.0;
    int max_tokens = 256;
    std::vector<std::string> stop;
    int concurrency = 4;
    int timeout_s = 60;
    std::string mock_rules;  // JSONL rule file for the mock backend
    bool strict_mock = true;
};

struct DatasetConfig {
    std::string path;
    CorpusFormat format = CorpusFormat::Csv;
    double label_threshold = 2.0;
};

struct VotingConfig {
    std::string positive_label = "Funny";
    std::string opposite_label = "Boring";
    ShotMode shot_mode = ShotMode::ZeroShot;
    std::string exemplar_positive_id;
    std::string exemplar_negative_id;
};

struct CalibrationConfig {
    std::vector<std::string> opposites = {"Not funny", "Dumb",    "Unfunny", "Not Amusing",
                                          "Sad",       "Serious", "Dull",    "Boring"};
    std::vector<ShotMode> shot_modes = {ShotMode::ZeroShot, ShotMode::FewShot};
    int anchor_k = 4;
};

struct AuditConfig {
    bool enabled = true;
    InvalidVotePolicy invalid_policy = InvalidVotePolicy::Discard;
};

struct ReportConfig {
    int extremes_k = 10;
    bool plot_data = false;
};

/// Whole-run configuration. Loaded from a JSON file (documented in the
/// README); every field can be overridden by a CLI flag, flags win.
struct RunConfig {
    BackendConfig backend;
    std::string journal;
    DatasetConfig dataset;
    VotingConfig voting;
    CalibrationConfig calibration;
    std::vector<std::string> personas = {"affiliative", "self-enhancing", "aggressive",
                                         "self-defeating"};
    int runs = 3;
    AuditConfig audit;
    bool explanations = true;
    ReportConfig report;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const nlohmann::ordered_json& obj);

    /// Canonical resolved form. Excludes out_dir so that runs differing only
    /// in output location share a config digest.
    nlohmann::ordered_json to_json() const;
    std::string digest() const;

    /// Whole-config validation, run before any backend call. Rejects
    /// few-shot voting combined with persona induction.
    void validate() const;

    CompletionParams completion_params() const;
    std::vector<Persona> persona_list() const;
};

}  // namespace crowdscore
