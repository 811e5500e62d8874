#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace inval {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Subtitle or dataset text that does not follow its grammar. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ProviderError : public Error {
public:
    enum class Kind { transport, auth, empty, protocol };
    ProviderError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class RenderError : public Error {
public:
    explicit RenderError(std::string placeholder)
        : Error("missing binding for placeholder '" + placeholder + "'"),
          placeholder_(std::move(placeholder)) {}
    const std::string& placeholder() const noexcept { return placeholder_; }

private:
    std::string placeholder_;
};

class AnswerError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure with the pipeline stage it came from ("chat", "rewrite_subtitle", ...).
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// A chatting failure; `round` is 1-based.
class RoundError : public StageError {
public:
    RoundError(int round, const std::string& what)
        : StageError("chat", "round " + std::to_string(round) + ": " + what), round_(round) {}
    int round() const noexcept { return round_; }

private:
    int round_;
};

}  // namespace inval
