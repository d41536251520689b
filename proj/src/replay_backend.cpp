#include "crowdscore/replay_backend.hpp"

#include "crowdscore/errors.hpp"

namespace crowdscore {

ReplayBackend::ReplayBackend(const std::string& journal_path) {
    journal_.import_file(journal_path);
}

CompletionRecord ReplayBackend::complete(const std::string& prompt,
                                         const CompletionParams& params, int attempt_index) {
    std::string digest = cache_key(prompt, params, attempt_index);
    std::size_t occurrence;
    {
        std::lock_guard lock(cursor_mutex_);
        occurrence = cursors_[digest]++;
    }
    auto rec = journal_.find_nth(digest, occurrence);
    if (!rec) throw JournalMissError(digest);
    return *rec;
}

}  // namespace crowdscore
