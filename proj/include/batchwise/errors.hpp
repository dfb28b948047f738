#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

namespace batchwise {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- prompt building ----

class EmptyExemplarsError : public Error { public: using Error::Error; };
class DivisibilityError : public Error { public: using Error::Error; };
class EmptyBatchError : public Error { public: using Error::Error; };
class BatchSizeError : public Error { public: using Error::Error; };
class InvalidFieldError : public Error { public: using Error::Error; };

// ---- response parsing ----

class LengthMismatchError : public Error { public: using Error::Error; };

// ---- grouping ----

class DegenerateTextError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class InvalidEmbeddingError : public Error { public: using Error::Error; };

// ---- cost model ----

class DomainError : public Error { public: using Error::Error; };

// ---- llm client ----

/// Retryable: the backend asked us to slow down (HTTP 429 or equivalent).
class RateLimitedError : public Error {
public:
    explicit RateLimitedError(const std::string& what,
                              std::optional<std::chrono::milliseconds> retry_after = {})
        : Error(what), retry_after(retry_after) {}

    std::optional<std::chrono::milliseconds> retry_after;
};

/// Retryable: connection failure, timeout, or a 5xx response.
class TransportError : public Error { public: using Error::Error; };

/// Fatal: the request was rejected; carries the upstream message verbatim.
class BadRequestError : public Error { public: using Error::Error; };

/// Fatal: retry budget exceeded.
class ExhaustedError : public Error { public: using Error::Error; };

/// Fatal: the oracle mock has no answer for a sample id in the prompt.
class UnknownSampleError : public Error { public: using Error::Error; };

// ---- harness ----

class ParseError : public Error { public: using Error::Error; };
class DuplicateIdError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

} // namespace batchwise
