#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace suggestkit {

enum class ErrorCode {
    InvalidInput,      // precondition violated by caller input
    Malformed,         // unparseable record or response
    DuplicateId,
    EmptyCorpus,
    EmptyText,
    DimensionMismatch,
    EmptyPool,
    Transport,         // retryable remote failure
    MissingScriptKey,
    TooFewQuestions,
    DuplicateQuestion,
    NoVerdict,
    MissingLabel,
    RetrievalMismatch,
    Io,
};

std::string_view error_code_name(ErrorCode code);

// Pipeline stage names used to tag errors raised inside engine.suggest.
namespace stage {
inline constexpr std::string_view kEmbed = "embed";
inline constexpr std::string_view kRetrieve = "retrieve";
inline constexpr std::string_view kAssemble = "assemble";
inline constexpr std::string_view kComplete = "complete";
inline constexpr std::string_view kParse = "parse";
inline constexpr std::string_view kIngest = "ingest";
inline constexpr std::string_view kRequest = "request";
}  // namespace stage

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string stage = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& message() const noexcept { return message_; }

    // Number of attempts made before a Transport error was surfaced (0 otherwise).
    int attempts() const noexcept { return attempts_; }
    Error& with_attempts(int n) {
        attempts_ = n;
        return *this;
    }

    // Copy of this error tagged with a stage; an existing tag is kept.
    Error tagged(std::string_view stage) const;

private:
    ErrorCode code_;
    std::string message_;
    std::string stage_;
    int attempts_ = 0;
};

}  // namespace suggestkit
