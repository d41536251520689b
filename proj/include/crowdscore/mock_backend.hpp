#pragma once

#include <string>
#include <vector>

#include "crowdscore/backend.hpp"

namespace crowdscore {

enum class MockMatcher { ExactPrompt, SubstringSet, RegexPattern };

const char* to_string(MockMatcher matcher);
MockMatcher mock_matcher_from_string(const std::string& name);

/// Scripted completion rule. SubstringSet matches when *every* pattern
/// occurs in the prompt. `responses` is consumed round-robin across the
/// calls the rule answers.
struct MockRule {
    MockMatcher matcher = MockMatcher::ExactPrompt;
    std::vector<std::string> patterns;
    std::vector<std::string> responses;
    int priority = 0;

    bool matches(const std::string& prompt) const;
};

/// Deterministic scripted backend. At most one rule fires per prompt:
/// highest priority wins, ties broken by declaration order. In strict mode
/// an unmatched prompt raises NoMockRuleMatched; otherwise it completes to
/// the empty string. Journal timestamps are a logical call counter so that
/// identical call sequences produce byte-identical journals.
class MockBackend : public Backend {
public:
    explicit MockBackend(std::vector<MockRule> rules, bool strict = true);

    CompletionRecord complete(const std::string& prompt, const CompletionParams& params,
                              int attempt_index = 0) override;
    BackendKind kind() const override { return BackendKind::Mock; }

    /// JSONL rule files: one MockRule object per line. "pattern"/"response"
    /// accept either a string or an array of strings.
    static std::vector<MockRule> load_rules(const std::string& path);
    static void save_rules(const std::string& path, const std::vector<MockRule>& rules);

private:
    struct RuleState {
        MockRule rule;
        std::size_t next_response = 0;
    };
    std::vector<RuleState> rules_;  // sorted by (priority desc, declaration order)
    bool strict_;
    std::int64_t sequence_ = 0;
    std::mutex call_mutex_;
};

}  // namespace crowdscore
