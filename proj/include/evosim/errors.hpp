#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace evosim {

// Every error carries a stable one-line code (printed by the CLI) plus a
// human-readable message. `retryable` marks transient provider failures.
class EvoError : public std::runtime_error {
public:
    EvoError(std::string code, const std::string& message, bool retryable = false)
        : std::runtime_error(code + ": " + message),
          code_(std::move(code)),
          retryable_(retryable) {}

    const std::string& code() const { return code_; }
    bool retryable() const { return retryable_; }

    // Number of provider attempts made before this error surfaced.
    // Zero unless set by the retry wrapper.
    int attempts = 0;

private:
    std::string code_;
    bool retryable_;
};

namespace errc {
inline constexpr const char* invalid_bundle   = "invalid-bundle";
inline constexpr const char* generation       = "generation";
inline constexpr const char* precondition     = "precondition";
inline constexpr const char* script_miss      = "script-miss";
inline constexpr const char* queue_exhausted  = "queue-exhausted";
inline constexpr const char* auth             = "auth";
inline constexpr const char* transient        = "transient";
inline constexpr const char* retry_exhausted  = "retry-exhausted";
inline constexpr const char* review_parse     = "review-parse";
inline constexpr const char* cap_exceeded     = "cap-exceeded";
inline constexpr const char* config_schema    = "config-schema";
inline constexpr const char* unknown_series   = "unknown-series";
inline constexpr const char* series_diverged  = "series-diverged";
inline constexpr const char* io               = "io";
}  // namespace errc

}  // namespace evosim
