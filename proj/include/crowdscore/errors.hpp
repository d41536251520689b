#pragma once

#include <stdexcept>
#include <string>

namespace crowdscore {

/// Coarse error category. The CLI maps these to exit codes
/// (config = 2, backend = 3, data = 4).
enum class ErrorKind { Config, Backend, Data };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }

    /// Stable machine-parsable identifier, e.g. "DuplicateId".
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

// ---- data errors --------------------------------------------------------

struct FileNotFoundError : Error {
    explicit FileNotFoundError(const std::string& path)
        : Error(ErrorKind::Data, "FileNotFound", "file not found: " + path) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what)
        : Error(ErrorKind::Data, "IoError", what) {}
};

struct ParseError : Error {
    ParseError(std::size_t row, const std::string& field, const std::string& detail)
        : Error(ErrorKind::Data, "ParseError",
                "row " + std::to_string(row) + ", field '" + field + "': " + detail),
          row(row), field(field) {}
    std::size_t row;
    std::string field;
};

struct DuplicateIdError : Error {
    explicit DuplicateIdError(const std::string& id)
        : Error(ErrorKind::Data, "DuplicateId", "duplicate joke id: " + id), id(id) {}
    std::string id;
};

struct MissingRatingError : Error {
    explicit MissingRatingError(const std::string& id)
        : Error(ErrorKind::Data, "MissingRating", "joke has no human rating: " + id), id(id) {}
    std::string id;
};

struct InsufficientJokesError : Error {
    InsufficientJokesError(std::size_t have, std::size_t need)
        : Error(ErrorKind::Data, "InsufficientJokes",
                "need " + std::to_string(need) + " rated jokes, have " + std::to_string(have)) {}
};

struct CorruptJournalError : Error {
    CorruptJournalError(std::size_t line, const std::string& detail)
        : Error(ErrorKind::Data, "CorruptJournal",
                "journal line " + std::to_string(line) + ": " + detail),
          line(line) {}
    std::size_t line;
};

struct EmptyClassError : Error {
    explicit EmptyClassError(const std::string& which)
        : Error(ErrorKind::Data, "EmptyClass", "no " + which + " examples evaluated") {}
};

struct EmptyReasoningError : Error {
    EmptyReasoningError()
        : Error(ErrorKind::Data, "EmptyReasoning", "audit prompt requires non-empty reasoning") {}
};

struct LengthMismatchError : Error {
    LengthMismatchError(std::size_t a, std::size_t b)
        : Error(ErrorKind::Data, "LengthMismatch",
                "series lengths differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

struct DegenerateInputError : Error {
    explicit DegenerateInputError(const std::string& which)
        : Error(ErrorKind::Data, "DegenerateInput", which + " series is constant") {}
};

struct AllRunsUnscoredError : Error {
    explicit AllRunsUnscoredError(const std::string& joke_id)
        : Error(ErrorKind::Data, "AllRunsUnscored", "no scored run for joke: " + joke_id) {}
};

// ---- config errors ------------------------------------------------------

struct ConfigError : Error {
    explicit ConfigError(const std::string& what)
        : Error(ErrorKind::Config, "ConfigError", what) {}
};

struct InvalidSpecError : Error {
    explicit InvalidSpecError(const std::string& what)
        : Error(ErrorKind::Config, "InvalidSpec", what) {}
};

struct MissingSlotError : Error {
    explicit MissingSlotError(const std::string& identifier)
        : Error(ErrorKind::Config, "MissingSlot", "unbound template slot: " + identifier),
          identifier(identifier) {}
    std::string identifier;
};

struct UnknownSlotError : Error {
    explicit UnknownSlotError(const std::string& identifier)
        : Error(ErrorKind::Config, "UnknownSlot",
                "binding does not match any template slot: " + identifier),
          identifier(identifier) {}
    std::string identifier;
};

// ---- backend errors -----------------------------------------------------

struct TransportError : Error {
    explicit TransportError(const std::string& what)
        : Error(ErrorKind::Backend, "TransportError", what) {}
};

struct AuthError : Error {
    explicit AuthError(const std::string& what)
        : Error(ErrorKind::Backend, "AuthError", what) {}
};

struct RateLimitedError : Error {
    explicit RateLimitedError(const std::string& what, double retry_after_s)
        : Error(ErrorKind::Backend, "RateLimited", what), retry_after_s(retry_after_s) {}
    double retry_after_s;
};

struct NoMockRuleMatchedError : Error {
    explicit NoMockRuleMatchedError(const std::string& prompt_head)
        : Error(ErrorKind::Backend, "NoMockRuleMatched",
                "no mock rule matches prompt starting with: " + prompt_head) {}
};

struct JournalMissError : Error {
    explicit JournalMissError(const std::string& digest)
        : Error(ErrorKind::Backend, "JournalMiss",
                "completion digest not present in replay journal: " + digest),
          digest(digest) {}
    std::string digest;
};

struct EmptyExplanationError : Error {
    EmptyExplanationError()
        : Error(ErrorKind::Backend, "EmptyExplanation",
                "backend returned an empty explanation twice") {}
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Backend: return "backend";
        case ErrorKind::Data: return "data";
    }
    return "unknown";
}

}  // namespace crowdscore
