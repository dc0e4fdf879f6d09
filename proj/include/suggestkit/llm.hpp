#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace suggestkit {

struct ChatRequest {
    std::string model_id;
    std::string prompt;
    std::string system;  // optional system message
    double temperature = 0.0;
    int max_tokens = 256;
    // Lookup keys for scripted providers, most specific first. Remote providers ignore them.
    std::vector<std::string> script_keys;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string id() const = 0;
    // Must be safe to call concurrently.
    virtual std::string complete(const ChatRequest& request) const = 0;
};

// Canned responses keyed by prompt hash, trace key or query text.
class ScriptedProvider final : public ChatProvider {
public:
    static constexpr std::string_view kDefaultFallback =
        "1. What is a good bedtime routine?\n"
        "2. How long should naps last?\n"
        "3. When should night feedings stop?";

    explicit ScriptedProvider(std::map<std::string, std::string> script, bool strict = true,
                              std::string fallback = std::string(kDefaultFallback));

    // Line-delimited {"key","response"} records; duplicate keys are an error.
    static ScriptedProvider load(const std::filesystem::path& path, bool strict = true);
    static ScriptedProvider parse(std::string_view text, bool strict = true);

    std::string id() const override { return "scripted"; }
    std::string complete(const ChatRequest& request) const override;

    bool strict() const noexcept { return strict_; }
    std::size_t size() const noexcept { return script_.size(); }
    const std::map<std::string, std::string>& script() const noexcept { return script_; }

private:
    std::map<std::string, std::string> script_;
    bool strict_;
    std::string fallback_;
};

std::string serialize_script(const std::map<std::string, std::string>& script);

struct RemoteChatConfig {
    std::string base_url;
    std::string api_key;
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    int max_tokens = 256;
    int max_attempts = 3;
    std::chrono::milliseconds timeout{60000};
    std::chrono::milliseconds retry_backoff{200};

    // SUGGESTKIT_LLM_BASE_URL / SUGGESTKIT_LLM_API_KEY.
    static RemoteChatConfig from_env();
};

class RemoteChatProvider final : public ChatProvider {
public:
    explicit RemoteChatProvider(RemoteChatConfig config);
    std::string id() const override { return "remote:" + config_.model_id; }
    std::string complete(const ChatRequest& request) const override;

    const RemoteChatConfig& config() const noexcept { return config_; }

private:
    RemoteChatConfig config_;
};

// "scripted:<path>" (strict) or "remote".
std::unique_ptr<ChatProvider> make_chat_provider(std::string_view spec);

// ---------------------------------------------------------------------------

inline constexpr std::size_t kSuggestionCount = 3;

// Exactly three distinct questions, each ending in '?'. Only parse_suggestions
// and make() construct one, so an invalid set cannot exist.
class SuggestionSet {
public:
    static SuggestionSet make(std::vector<std::string> questions, std::string raw_text = {},
                              std::uint64_t prompt_hash = 0);

    const std::vector<std::string>& questions() const noexcept { return questions_; }
    const std::string& raw_text() const noexcept { return raw_text_; }
    std::uint64_t prompt_hash() const noexcept { return prompt_hash_; }

    // Questions joined by '\n'.
    std::string joined() const;

    bool operator==(const SuggestionSet&) const = default;

private:
    SuggestionSet() = default;
    std::vector<std::string> questions_;
    std::string raw_text_;
    std::uint64_t prompt_hash_ = 0;
};

// Lowercase with runs of whitespace collapsed; used for duplicate detection.
std::string fold_question(std::string_view question);

SuggestionSet parse_suggestions(std::string_view raw, std::uint64_t prompt_hash = 0);

enum class Verdict { A, B, Tie };
std::string_view verdict_name(Verdict v);

// Blind judge prompt: candidates appear only as "A" and "B".
std::string judge_prompt(std::string_view query, const SuggestionSet& a, const SuggestionSet& b);
// First of the tokens A, B, TIE (case-insensitive) wins.
Verdict parse_verdict(std::string_view judge_output);

Verdict judge_pair(const ChatProvider& judge, std::string_view query, const SuggestionSet& a,
                   const SuggestionSet& b, const std::string& model_id = {});

}  // namespace suggestkit
