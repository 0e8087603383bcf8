#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "exai5g/errors.hpp"

namespace exai5g {

struct LlmConfig {
    /// Label used in reports; defaults to model_name.
    std::string name;
    /// Full chat-completions URL, e.g. http://localhost:11434/v1/chat/completions
    std::string endpoint_url;
    std::string model_name;
    double temperature = 0.1;
    int max_tokens = 250;
    double timeout_s = 60.0;
    int retries = 2;
    /// First backoff delay; doubles per retry.
    double backoff_s = 1.0;
    /// Environment variable holding the bearer token; unset or empty means no auth header.
    std::string api_key_env = "EXAI5G_LLM_API_KEY";
    /// Only read by the mock providers.
    std::uint64_t mock_seed = 0;

    const std::string& label() const { return name.empty() ? model_name : name; }
    void validate(const std::string& field = "llm") const;
};

inline LlmConfig named_llm(std::string name) {
    LlmConfig c;
    c.name = std::move(name);
    return c;
}

/// Request/response log shared by the HTTP providers. The API key is never written.
class AuditLog {
public:
    void record(std::string key, std::string line);
    /// JSON lines sorted by key, so concurrent runs still produce identical files.
    std::string dump() const;

private:
    mutable std::mutex mu_;
    std::multimap<std::string, std::string> entries_;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Chat-completion JSON over HTTP(S): a single user message, temperature and max_tokens.
class HttpChatClient : public ChatProvider {
public:
    explicit HttpChatClient(LlmConfig cfg, AuditLog* audit = nullptr, std::string audit_key = {});
    std::string complete(const std::string& prompt) override;

private:
    LlmConfig cfg_;
    AuditLog* audit_;
    std::string audit_key_;
};

/// Offline stand-in for a generator model. Reads the feature list out of the
/// prompt and writes 3 or 4 bullets whose wording follows each attribution sign.
class MockGenerator : public ChatProvider {
public:
    explicit MockGenerator(std::uint64_t seed) : seed_(seed) {}
    std::string complete(const std::string& prompt) override;

private:
    std::uint64_t seed_;
};

/// Offline judge replying "Actionability Score: k"; k is fixed when given,
/// otherwise derived from a hash of the prompt in 3..5.
class MockJudge : public ChatProvider {
public:
    explicit MockJudge(int fixed_score = 0, std::uint64_t seed = 0) : fixed_(fixed_score), seed_(seed) {}
    std::string complete(const std::string& prompt) override;

private:
    int fixed_;
    std::uint64_t seed_;
};

/// Returns the same text for every prompt.
class FixedProvider : public ChatProvider {
public:
    explicit FixedProvider(std::string reply) : reply_(std::move(reply)) {}
    std::string complete(const std::string&) override { return reply_; }

private:
    std::string reply_;
};

/// One-shot chat completion against `cfg`.
std::string complete(const LlmConfig& cfg, const std::string& prompt);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// One vector per text, all of the same width.
    virtual std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) = 0;
};

/// Term-frequency vectors over lowercased [a-z0-9.]+ tokens, with the
/// vocabulary taken from the batch itself; L2-normalized.
class TfEmbedder : public EmbeddingProvider {
public:
    std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) override;
    static std::vector<std::string> tokenize(const std::string& text);
};

/// OpenAI-style embeddings endpoint: POST {model, input: [...]} and read data[i].embedding.
class HttpEmbedder : public EmbeddingProvider {
public:
    explicit HttpEmbedder(LlmConfig cfg, AuditLog* audit = nullptr) : cfg_(std::move(cfg)), audit_(audit) {}
    std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& texts) override;

private:
    LlmConfig cfg_;
    AuditLog* audit_;
};

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0);

/// Runs fn(i) for i in [0, n) on at most `max_in_flight` threads. Results keep
/// index order; the lowest-index exception is rethrown after all work ends.
template <typename R>
std::vector<R> bounded_map(std::size_t n, int max_in_flight, const std::function<R(std::size_t)>& fn) {
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, max_in_flight));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < std::min(threads, n); ++t) pool.emplace_back(worker);
        worker();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace exai5g
