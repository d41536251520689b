#include "crowdscore/backend.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "crowdscore/digest.hpp"
#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

ordered_json record_to_json(const CompletionRecord& rec) {
    ordered_json obj;
    obj["digest"] = rec.digest;
    obj["prompt"] = rec.prompt;
    obj["model"] = rec.params.model;
    obj["temperature"] = rec.params.temperature;
    obj["top_p"] = rec.params.top_p;
    obj["max_tokens"] = rec.params.max_tokens;
    obj["stop"] = rec.params.stop_sequences;
    obj["backend"] = to_string(rec.backend_kind);
    obj["timestamp"] = rec.timestamp;
    obj["attempt"] = rec.attempt_index;
    obj["completion"] = rec.completion;
    return obj;
}

CompletionRecord record_from_json(const ordered_json& obj, std::size_t line) {
    try {
        CompletionRecord rec;
        rec.digest = obj.at("digest").get<std::string>();
        rec.prompt = obj.at("prompt").get<std::string>();
        rec.params.model = obj.at("model").get<std::string>();
        rec.params.temperature = obj.at("temperature").get<double>();
        rec.params.top_p = obj.at("top_p").get<double>();
        rec.params.max_tokens = obj.at("max_tokens").get<int>();
        rec.params.stop_sequences = obj.at("stop").get<std::vector<std::string>>();
        rec.backend_kind = backend_kind_from_string(obj.at("backend").get<std::string>());
        rec.timestamp = obj.at("timestamp").get<std::int64_t>();
        rec.attempt_index = obj.at("attempt").get<int>();
        rec.completion = obj.at("completion").get<std::string>();
        return rec;
    } catch (const ordered_json::exception& e) {
        throw CorruptJournalError(line, e.what());
    }
}

}  // namespace

const char* to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::Live: return "live";
        case BackendKind::Mock: return "mock";
        case BackendKind::Replay: return "replay";
    }
    return "mock";
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "live") return BackendKind::Live;
    if (name == "mock") return BackendKind::Mock;
    if (name == "replay") return BackendKind::Replay;
    throw ConfigError("unknown backend kind: " + name);
}

std::string cache_key(const std::string& prompt, const CompletionParams& params,
                      int attempt_index) {
    std::string attempt = std::to_string(attempt_index);
    std::string max_tokens = std::to_string(params.max_tokens);
    std::string temperature = fixed6(params.temperature);
    std::string top_p = fixed6(params.top_p);
    std::vector<std::string_view> parts = {"crowdscore-completion-v1", prompt,   params.model,
                                           temperature,               top_p,    max_tokens,
                                           attempt};
    for (const auto& stop : params.stop_sequences) parts.push_back(stop);
    return sha256_hex(parts);
}

void CompletionJournal::append(CompletionRecord record) {
    std::lock_guard lock(mutex_);
    index_[record.digest].push_back(records_.size());
    records_.push_back(std::move(record));
}

std::optional<CompletionRecord> CompletionJournal::find(const std::string& digest) const {
    return find_nth(digest, 0);
}

std::optional<CompletionRecord> CompletionJournal::find_nth(const std::string& digest,
                                                            std::size_t n) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(digest);
    if (it == index_.end() || n >= it->second.size()) return std::nullopt;
    return records_[it->second[n]];
}

std::size_t CompletionJournal::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::vector<CompletionRecord> CompletionJournal::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t CompletionJournal::export_file(const std::string& path) const {
    std::vector<CompletionRecord> snapshot = records();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write journal: " + path);
    for (const auto& rec : snapshot) out << record_to_json(rec).dump() << "\n";
    if (!out) throw IoError("journal write failed: " + path);
    return snapshot.size();
}

std::size_t CompletionJournal::import_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    std::string line;
    std::size_t line_no = 0, loaded = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw CorruptJournalError(line_no, "invalid JSON");
        append(record_from_json(obj, line_no));
        ++loaded;
    }
    return loaded;
}

}  // namespace crowdscore
