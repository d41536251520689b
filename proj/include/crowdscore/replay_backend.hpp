#pragma once

#include <string>

#include "crowdscore/backend.hpp"

namespace crowdscore {

/// Serves completions from a previously recorded journal, keyed by digest.
/// Repeated calls with the same digest replay the recorded occurrences in
/// order, so a run recorded against response-cycling mocks stays faithful.
/// Performs no network activity; a prompt absent from (or exhausted in) the
/// journal raises JournalMiss naming the digest.
class ReplayBackend : public Backend {
public:
    ReplayBackend() = default;

    /// Convenience: construct with a journal file preloaded.
    explicit ReplayBackend(const std::string& journal_path);

    CompletionRecord complete(const std::string& prompt, const CompletionParams& params,
                              int attempt_index = 0) override;
    BackendKind kind() const override { return BackendKind::Replay; }

private:
    std::mutex cursor_mutex_;
    std::unordered_map<std::string, std::size_t> cursors_;
};

}  // namespace crowdscore
