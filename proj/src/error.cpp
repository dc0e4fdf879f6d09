#include "suggestkit/error.hpp"

namespace suggestkit {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid_input";
        case ErrorCode::Malformed: return "malformed";
        case ErrorCode::DuplicateId: return "duplicate_id";
        case ErrorCode::EmptyCorpus: return "empty_corpus";
        case ErrorCode::EmptyText: return "empty_text";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::EmptyPool: return "empty_pool";
        case ErrorCode::Transport: return "transport";
        case ErrorCode::MissingScriptKey: return "missing_script_key";
        case ErrorCode::TooFewQuestions: return "too_few_questions";
        case ErrorCode::DuplicateQuestion: return "duplicate_question";
        case ErrorCode::NoVerdict: return "no_verdict";
        case ErrorCode::MissingLabel: return "missing_label";
        case ErrorCode::RetrievalMismatch: return "retrieval_mismatch";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

namespace {
std::string compose(const std::string& stage, const std::string& message) {
    return stage.empty() ? message : stage + ": " + message;
}
}  // namespace

Error::Error(ErrorCode code, std::string message, std::string stage)
    : std::runtime_error(compose(stage, message)),
      code_(code),
      message_(std::move(message)),
      stage_(std::move(stage)) {}

Error Error::tagged(std::string_view stage) const {
    if (!stage_.empty()) return *this;
    Error e(code_, message_, std::string(stage));
    e.attempts_ = attempts_;
    return e;
}

}  // namespace suggestkit
