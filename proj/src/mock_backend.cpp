#include "crowdscore/mock_backend.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "crowdscore/errors.hpp"

namespace crowdscore {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> string_or_array(const ordered_json& obj, const char* singular,
                                         const char* plural, std::size_t line) {
    const char* key = obj.contains(plural) ? plural : singular;
    if (!obj.contains(key))
        throw ParseError(line, plural, "missing field");
    const auto& value = obj[key];
    if (value.is_string()) return {value.get<std::string>()};
    if (value.is_array()) {
        std::vector<std::string> out;
        for (const auto& item : value) {
            if (!item.is_string()) throw ParseError(line, key, "expected strings");
            out.push_back(item.get<std::string>());
        }
        if (out.empty()) throw ParseError(line, key, "empty list");
        return out;
    }
    throw ParseError(line, key, "expected string or array of strings");
}

}  // namespace

const char* to_string(MockMatcher matcher) {
    switch (matcher) {
        case MockMatcher::ExactPrompt: return "exact";
        case MockMatcher::SubstringSet: return "substring-set";
        case MockMatcher::RegexPattern: return "regex";
    }
    return "exact";
}

MockMatcher mock_matcher_from_string(const std::string& name) {
    if (name == "exact") return MockMatcher::ExactPrompt;
    if (name == "substring-set") return MockMatcher::SubstringSet;
    if (name == "regex") return MockMatcher::RegexPattern;
    throw ConfigError("unknown mock matcher: " + name);
}

bool MockRule::matches(const std::string& prompt) const {
    switch (matcher) {
        case MockMatcher::ExactPrompt:
            return !patterns.empty() && prompt == patterns.front();
        case MockMatcher::SubstringSet:
            return std::all_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
                return prompt.find(p) != std::string::npos;
            });
        case MockMatcher::RegexPattern: {
            if (patterns.empty()) return false;
            std::regex re(patterns.front());
            return std::regex_search(prompt, re);
        }
    }
    return false;
}

MockBackend::MockBackend(std::vector<MockRule> rules, bool strict) : strict_(strict) {
    std::vector<std::size_t> order(rules.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rules[a].priority > rules[b].priority;
    });
    rules_.reserve(rules.size());
    for (std::size_t idx : order) rules_.push_back({std::move(rules[idx]), 0});
}

CompletionRecord MockBackend::complete(const std::string& prompt,
                                       const CompletionParams& params, int attempt_index) {
    std::lock_guard lock(call_mutex_);
    std::string completion;
    bool matched = false;
    for (auto& state : rules_) {
        if (!state.rule.matches(prompt)) continue;
        completion = state.rule.responses[state.next_response % state.rule.responses.size()];
        ++state.next_response;
        matched = true;
        break;
    }
    if (!matched && strict_)
        throw NoMockRuleMatchedError(prompt.substr(0, 60));

    CompletionRecord rec;
    rec.digest = cache_key(prompt, params, attempt_index);
    rec.prompt = prompt;
    rec.params = params;
    rec.completion = completion;
    rec.backend_kind = BackendKind::Mock;
    rec.timestamp = sequence_++;
    rec.attempt_index = attempt_index;
    journal_.append(rec);
    return rec;
}

std::vector<MockRule> MockBackend::load_rules(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);
    std::vector<MockRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw ParseError(line_no, "-", "invalid JSON rule");
        MockRule rule;
        rule.matcher = mock_matcher_from_string(obj.value("matcher", "exact"));
        rule.patterns = string_or_array(obj, "pattern", "patterns", line_no);
        rule.responses = string_or_array(obj, "response", "responses", line_no);
        rule.priority = obj.value("priority", 0);
        rules.push_back(std::move(rule));
    }
    return rules;
}

void MockBackend::save_rules(const std::string& path, const std::vector<MockRule>& rules) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write mock rules: " + path);
    for (const auto& rule : rules) {
        ordered_json obj;
        obj["matcher"] = to_string(rule.matcher);
        obj["patterns"] = rule.patterns;
        obj["responses"] = rule.responses;
        obj["priority"] = rule.priority;
        out << obj.dump() << "\n";
    }
}

}  // namespace crowdscore
