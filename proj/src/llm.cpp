#include "suggestkit/llm.hpp"

#include <cctype>
#include <optional>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "jsonl.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit {

using nlohmann::json;

ScriptedProvider::ScriptedProvider(std::map<std::string, std::string> script, bool strict,
                                   std::string fallback)
    : script_(std::move(script)), strict_(strict), fallback_(std::move(fallback)) {}

ScriptedProvider ScriptedProvider::parse(std::string_view text, bool strict) {
    std::map<std::string, std::string> script;
    detail::for_each_record(text, "script", [&](const json& j, std::size_t line) {
        const std::string at = "script line " + std::to_string(line);
        auto key = detail::required_string(j, "key", at);
        auto response = j.at("response").get<std::string>();
        if (!script.emplace(key, std::move(response)).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate script key \"" + key + "\"");
        }
    });
    return ScriptedProvider(std::move(script), strict);
}

ScriptedProvider ScriptedProvider::load(const std::filesystem::path& path, bool strict) {
    return parse(detail::read_file(path), strict);
}

std::string ScriptedProvider::complete(const ChatRequest& request) const {
    std::vector<std::string> keys = request.script_keys;
    if (keys.empty()) keys.push_back(to_hex(fnv1a64(request.prompt)));
    for (const auto& k : keys) {
        if (auto it = script_.find(k); it != script_.end()) return it->second;
    }
    if (!strict_) return fallback_;
    std::string names;
    for (const auto& k : keys) {
        if (!names.empty()) names += ", ";
        names += "\"" + k + "\"";
    }
    throw Error(ErrorCode::MissingScriptKey, "no scripted response for key " + names);
}

std::string serialize_script(const std::map<std::string, std::string>& script) {
    std::string out;
    for (const auto& [key, response] : script) {
        out += detail::dump_line(json{{"key", key}, {"response", response}});
    }
    return out;
}

// ---------------------------------------------------------------------------

RemoteChatConfig RemoteChatConfig::from_env() {
    RemoteChatConfig c;
    c.base_url = detail::env_or("SUGGESTKIT_LLM_BASE_URL");
    c.api_key = detail::env_or("SUGGESTKIT_LLM_API_KEY");
    c.model_id = detail::env_or("SUGGESTKIT_LLM_MODEL", c.model_id);
    return c;
}

RemoteChatProvider::RemoteChatProvider(RemoteChatConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error(ErrorCode::InvalidInput, "remote chat provider needs a base URL (SUGGESTKIT_LLM_BASE_URL)");
    }
    detail::parse_base_url(config_.base_url);
}

std::string RemoteChatProvider::complete(const ChatRequest& request) const {
    if (request.prompt.empty()) throw Error(ErrorCode::InvalidInput, "chat request has an empty prompt");
    json messages = json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    json body = {{"model", request.model_id.empty() ? config_.model_id : request.model_id},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};

    detail::PostOptions opts;
    opts.api_key = config_.api_key;
    opts.max_attempts = config_.max_attempts;
    opts.timeout = config_.timeout;
    opts.backoff = config_.retry_backoff;
    const json response = detail::post_json(config_.base_url, "/chat/completions", body, opts);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Malformed, "chat response has no choices[0].message.content");
    }
}

std::unique_ptr<ChatProvider> make_chat_provider(std::string_view spec) {
    constexpr std::string_view kScripted = "scripted:";
    if (spec.starts_with(kScripted)) {
        return std::make_unique<ScriptedProvider>(
            ScriptedProvider::load(std::string(spec.substr(kScripted.size())), true));
    }
    if (spec == "remote") return std::make_unique<RemoteChatProvider>(RemoteChatConfig::from_env());
    throw Error(ErrorCode::InvalidInput,
                "unknown provider '" + std::string(spec) + "' (scripted:<path>|remote)");
}

// ---------------------------------------------------------------------------
// Suggestion parsing

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// "1.", "2)", "Q1:", "-", "*", "•" followed by whitespace or end.
std::string_view strip_marker(std::string_view line) {
    line = trim_view(line);
    if (line.starts_with("- ") || line.starts_with("* ") || line == "-" || line == "*") {
        return trim_view(line.substr(1));
    }
    if (line.starts_with("\xE2\x80\xA2")) return trim_view(line.substr(3));
    std::size_t i = 0;
    if (i < line.size() && (line[i] == 'Q' || line[i] == 'q')) ++i;
    const std::size_t digits_begin = i;
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i > digits_begin && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
        const std::size_t after = i + 1;
        if (after == line.size() || std::isspace(static_cast<unsigned char>(line[after]))) {
            return trim_view(line.substr(after));
        }
    }
    return line;
}

bool is_question(std::string_view text) {
    if (text.empty() || text.back() != '?') return false;
    auto stem = text;
    while (!stem.empty() && (stem.back() == '?' || std::isspace(static_cast<unsigned char>(stem.back())))) {
        stem.remove_suffix(1);
    }
    return !stem.empty();
}

}  // namespace

std::string fold_question(std::string_view question) {
    std::string out;
    bool pending_space = false;
    for (char c : trim_view(question)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

SuggestionSet SuggestionSet::make(std::vector<std::string> questions, std::string raw_text,
                                  std::uint64_t prompt_hash) {
    if (questions.size() != kSuggestionCount) {
        throw Error(ErrorCode::TooFewQuestions, "a suggestion set needs exactly 3 questions, got " +
                                                    std::to_string(questions.size()));
    }
    std::unordered_set<std::string> seen;
    for (auto& q : questions) {
        q = std::string(trim_view(q));
        if (!is_question(q)) {
            throw Error(ErrorCode::Malformed, "not a question: \"" + q + "\"");
        }
        if (!seen.insert(fold_question(q)).second) {
            throw Error(ErrorCode::DuplicateQuestion, "duplicate question: \"" + q + "\"");
        }
    }
    SuggestionSet s;
    s.questions_ = std::move(questions);
    s.raw_text_ = raw_text.empty() ? s.joined() : std::move(raw_text);
    s.prompt_hash_ = prompt_hash;
    return s;
}

std::string SuggestionSet::joined() const {
    std::string out;
    for (const auto& q : questions_) {
        if (!out.empty()) out += "\n";
        out += q;
    }
    return out;
}

SuggestionSet parse_suggestions(std::string_view raw, std::uint64_t prompt_hash) {
    if (trim_view(raw).empty()) throw Error(ErrorCode::TooFewQuestions, "empty model output: found 0 of 3");
    std::vector<std::string> questions;
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while (pos <= raw.size() && questions.size() < kSuggestionCount) {
        std::size_t end = raw.find('\n', pos);
        if (end == std::string_view::npos) end = raw.size();
        const auto candidate = strip_marker(raw.substr(pos, end - pos));
        pos = end + 1;
        if (!is_question(candidate)) continue;
        if (!seen.insert(fold_question(candidate)).second) {
            throw Error(ErrorCode::DuplicateQuestion, "duplicate question: \"" + std::string(candidate) + "\"");
        }
        questions.emplace_back(candidate);
    }
    if (questions.size() < kSuggestionCount) {
        throw Error(ErrorCode::TooFewQuestions,
                    "found " + std::to_string(questions.size()) + " of 3 questions");
    }
    return SuggestionSet::make(std::move(questions), std::string(raw), prompt_hash);
}

// ---------------------------------------------------------------------------
// Judging

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::A: return "A";
        case Verdict::B: return "B";
        case Verdict::Tie: return "TIE";
    }
    return "TIE";
}

std::string judge_prompt(std::string_view query, const SuggestionSet& a, const SuggestionSet& b) {
    std::string out =
        "You are comparing two sets of suggestion questions written for the same user query. "
        "Judge each set on correctness, relevance and soundness. "
        "Answer with exactly one token: A, B, or TIE.\n\n";
    out += "Query: " + std::string(query) + "\n\n";
    auto render = [&](std::string_view label, const SuggestionSet& s) {
        out += "Set " + std::string(label) + ":\n";
        for (std::size_t i = 0; i < s.questions().size(); ++i) {
            out += std::to_string(i + 1) + ". " + s.questions()[i] + "\n";
        }
    };
    render("A", a);
    out += "\n";
    render("B", b);
    return out;
}

Verdict parse_verdict(std::string_view judge_output) {
    std::string token;
    auto check = [&token]() -> std::optional<Verdict> {
        if (token == "A") return Verdict::A;
        if (token == "B") return Verdict::B;
        if (token == "TIE") return Verdict::Tie;
        return std::nullopt;
    };
    for (std::size_t i = 0; i <= judge_output.size(); ++i) {
        const char c = i < judge_output.size() ? judge_output[i] : ' ';
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            continue;
        }
        if (auto v = check()) return *v;
        token.clear();
    }
    throw Error(ErrorCode::NoVerdict, "no verdict token (A, B or TIE) in judge output");
}

Verdict judge_pair(const ChatProvider& judge, std::string_view query, const SuggestionSet& a,
                   const SuggestionSet& b, const std::string& model_id) {
    if (a.questions() == b.questions()) {
        throw Error(ErrorCode::InvalidInput, "judge candidates are identical");
    }
    ChatRequest req;
    req.model_id = model_id;
    req.prompt = judge_prompt(query, a, b);
    req.max_tokens = 16;
    req.script_keys = {to_hex(fnv1a64(req.prompt))};
    return parse_verdict(judge.complete(req));
}

}  // namespace suggestkit
