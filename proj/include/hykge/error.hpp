#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hykge {

/// Malformed input while loading graphs, stopwords, datasets, or configs.
class IngestError : public std::runtime_error {
public:
    IngestError(std::string source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)),
          line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

/// Failure reported by (or while reaching) an external model provider.
/// `status` is the HTTP status when the remote answered, 0 for transport errors.
class ProviderError : public std::runtime_error {
public:
    ProviderError(const std::string& what, bool retryable, int status = 0, std::string body = {})
        : std::runtime_error(what), retryable_(retryable), status_(status), body_(std::move(body)) {}

    bool retryable() const noexcept { return retryable_; }
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_; }

private:
    bool retryable_;
    int status_;
    std::string body_;
};

/// A pipeline stage failed; `stage` names it (e.g. "hypothesis", "reader").
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace hykge
