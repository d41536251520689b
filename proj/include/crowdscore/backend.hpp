#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace crowdscore {

/// Sampling parameters for one completion call. Temperature and top_p
/// default to 1 to maximize creativity; reproducibility comes from the
/// journal/replay mechanism, not from lowering them.
struct CompletionParams {
    std::string model;
    double temperature = 1.0;
    double top_p = 1.0;
    int max_tokens = 256;
    std::vector<std::string> stop_sequences;

    bool operator==(const CompletionParams&) const = default;
};

enum class BackendKind { Live, Mock, Replay };

const char* to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

/// One prompt/completion exchange. `completion` is the raw, untrimmed
/// provider output. `attempt_index` distinguishes deliberate re-samples of
/// the same prompt at temperature 1; it participates in the cache key.
struct CompletionRecord {
    std::string digest;
    std::string prompt;
    CompletionParams params;
    std::string completion;
    BackendKind backend_kind = BackendKind::Mock;
    std::int64_t timestamp = 0;
    int attempt_index = 0;
};

/// Content address of a completion call: SHA-256 over a canonical
/// serialization with fixed field order and fixed-precision numbers.
std::string cache_key(const std::string& prompt, const CompletionParams& params,
                      int attempt_index);

/// Append-only log of every completion call, with keyed lookup for replay.
/// Appends are serialized internally; safe to share across threads.
class CompletionJournal {
public:
    void append(CompletionRecord record);

    /// Keyed lookup; when the same digest was appended twice, the first
    /// record wins.
    std::optional<CompletionRecord> find(const std::string& digest) const;

    /// The n-th record appended under this digest (0-based). Identical
    /// prompts at the same attempt index share a digest (e.g. the same audit
    /// question for two personas); replay fidelity needs every occurrence.
    std::optional<CompletionRecord> find_nth(const std::string& digest, std::size_t n) const;

    std::size_t size() const;
    std::vector<CompletionRecord> records() const;

    /// JSONL, one record per line, fields in fixed order. Returns the number
    /// of records written/loaded. Import throws CorruptJournal on a bad line.
    std::size_t export_file(const std::string& path) const;
    std::size_t import_file(const std::string& path);

private:
    mutable std::mutex mutex_;
    std::vector<CompletionRecord> records_;
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

/// Completion provider. Implementations append every answered call to the
/// journal (replay serves *from* the journal and does not re-append).
class Backend {
public:
    virtual ~Backend() = default;

    virtual CompletionRecord complete(const std::string& prompt, const CompletionParams& params,
                                      int attempt_index = 0) = 0;
    virtual BackendKind kind() const = 0;

    CompletionJournal& journal() { return journal_; }
    const CompletionJournal& journal() const { return journal_; }

protected:
    CompletionJournal journal_;
};

}  // namespace crowdscore
