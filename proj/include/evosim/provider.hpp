#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "evosim/errors.hpp"

namespace evosim {

// Structured label attached to every completion call. Drives scripted lookup
// and the run journal. `module_name` is one of: dialogue, memory, reflect,
// guidance, plan, interview, review, judge.
struct CallTag {
    std::string agent_id;
    std::string module_name;
    int round_index = 0;
    int turn_index = 0;
};

struct CompletionRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.7;  // [0, 2]
    int max_tokens = 512;
    CallTag tag;
};

struct CompletionResponse {
    std::string text;
    std::string provider_name;
    long latency_ms = 0;
};

// Uniform gateway to text generation. Live and scripted implementations are
// interchangeable; callers never branch on provider identity.
class Provider {
public:
    virtual ~Provider() = default;
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

inline void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

// Runs `fn` up to policy.max_attempts times, sleeping base_delay*multiplier^k
// between attempts k and k+1. Non-retryable errors surface immediately; the
// last retryable error surfaces after exhaustion with `attempts` filled in.
template <typename Fn>
auto with_retry(Fn&& fn, const RetryPolicy& policy, const SleepFn& sleep = default_sleep)
    -> decltype(fn()) {
    if (policy.max_attempts < 1)
        throw EvoError(errc::precondition, "retry policy needs max_attempts >= 1");
    std::chrono::milliseconds delay = policy.base_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (EvoError& e) {
            if (!e.retryable()) {
                e.attempts = attempt;
                throw;
            }
            if (attempt >= policy.max_attempts) {
                EvoError out(errc::retry_exhausted,
                             std::string(e.what()) + " (attempts=" + std::to_string(attempt) + ")");
                out.attempts = attempt;
                throw out;
            }
            sleep(delay);
            delay = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(delay.count()) * policy.multiplier));
        }
    }
}

namespace detail {

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace detail

inline std::string request_hash(const CompletionRequest& req) {
    std::string material = req.system_text;
    material += '\x1f';
    material += req.user_text;
    material += '\x1f';
    material += std::to_string(req.temperature);
    material += '\x1f';
    material += std::to_string(req.max_tokens);
    return detail::to_hex(detail::fnv1a64(material));
}

struct JournalEntry {
    CallTag tag;
    std::string request_hash;
    std::string response_text;
    std::string provider_name;
};

// Append-only record of every completion made during a run.
class CallJournal {
public:
    void record(JournalEntry e) {
        std::lock_guard<std::mutex> lock(mutex_);
        entries_.push_back(std::move(e));
    }

    const std::vector<JournalEntry>& entries() const { return entries_; }

    int count_module(const std::string& module_name) const {
        int n = 0;
        for (const auto& e : entries_)
            if (e.tag.module_name == module_name) ++n;
        return n;
    }

    int count_module_round(const std::string& module_name, int round_index) const {
        int n = 0;
        for (const auto& e : entries_)
            if (e.tag.module_name == module_name && e.tag.round_index == round_index) ++n;
        return n;
    }

private:
    std::mutex mutex_;
    std::vector<JournalEntry> entries_;
};

// Wraps a provider so every call (tag, request hash, response) lands in the
// journal exactly once.
class RecordingProvider : public Provider {
public:
    RecordingProvider(Provider& inner, CallJournal& journal)
        : inner_(inner), journal_(journal) {}

    CompletionResponse complete(const CompletionRequest& req) override {
        CompletionResponse resp = inner_.complete(req);
        journal_.record({req.tag, request_hash(req), resp.text, resp.provider_name});
        return resp;
    }

private:
    Provider& inner_;
    CallJournal& journal_;
};

}  // namespace evosim
