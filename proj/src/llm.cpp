#include "exai5g/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <httplib.h>
#include "json.hpp"

namespace exai5g {

namespace {

struct UrlParts {
    std::string origin;
    std::string path;
};

UrlParts split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigInvalid("endpoint_url", "not an http(s) URL: '" + url + "'");
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string api_key(const LlmConfig& cfg) {
    if (cfg.api_key_env.empty()) return {};
    const char* v = std::getenv(cfg.api_key_env.c_str());
    return v ? std::string(v) : std::string();
}

std::string attempt_key(const std::string& base, int attempt) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%03d", attempt);
    return base + buf;
}

/// POSTs `body` with retries on transport failures and 5xx. Returns the 2xx body.
std::string post_json(const LlmConfig& cfg, const std::string& body, AuditLog* audit, const std::string& audit_key) {
    const UrlParts url = split_url(cfg.endpoint_url);
    const std::string key = api_key(cfg);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    const int attempts = std::max(0, cfg.retries) + 1;
    const auto timeout = std::chrono::microseconds(static_cast<long long>(cfg.timeout_s * 1e6));
    std::string last;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client cli(url.origin);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        auto res = cli.Post(url.path, headers, body, "application/json");

        nlohmann::ordered_json log;
        log["provider"] = cfg.label();
        log["url"] = cfg.endpoint_url;
        log["attempt"] = attempt;
        log["authorization"] = key.empty() ? "none" : "Bearer [redacted]";
        log["request"] = nlohmann::json::parse(body, nullptr, false);
        if (!res) {
            last = httplib::to_string(res.error());
            log["error"] = last;
        } else {
            log["status"] = res->status;
            log["response"] = res->body;
        }
        if (audit) audit->record(attempt_key(audit_key, attempt), log.dump());

        if (res) {
            if (res->status >= 200 && res->status < 300) return res->body;
            if (res->status < 500) throw ApiError(res->status, res->body);
            last = "HTTP " + std::to_string(res->status) + ": " + res->body;
        }
        if (attempt < attempts && cfg.backoff_s > 0.0) {
            const double delay = cfg.backoff_s * std::ldexp(1.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::microseconds(static_cast<long long>(delay * 1e6)));
        }
    }
    throw TransportError(attempts, last);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct PromptFeature {
    std::string name;
    double value = 0.0;
    bool negative = false;
};

// Lines of the form "- name (Value: v, Attribution: a)".
std::vector<PromptFeature> prompt_features(const std::string& prompt) {
    static const std::regex re(R"(^- (\S+) \(Value: ([^,]+), Attribution: ([^)]+)\)\s*$)");
    std::vector<PromptFeature> out;
    std::istringstream in(prompt);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        // The sign is read from the text so "-0.0000" still counts as negative.
        if (std::regex_match(line, m, re)) out.push_back({m[1].str(), std::stod(m[2].str()), m[3].str().starts_with('-')});
    }
    return out;
}

std::string prompt_class(const std::string& prompt) {
    static const std::regex re(R"(classified as '([^']*)')");
    std::smatch m;
    return std::regex_search(prompt, m, re) ? m[1].str() : std::string("this");
}

}  // namespace

void LlmConfig::validate(const std::string& field) const {
    if (!(temperature >= 0.0)) throw ConfigInvalid(field + ".temperature", "must be >= 0");
    if (max_tokens <= 0) throw ConfigInvalid(field + ".max_tokens", "must be > 0");
    if (!(timeout_s > 0.0)) throw ConfigInvalid(field + ".timeout_s", "must be > 0");
    if (retries < 0) throw ConfigInvalid(field + ".retries", "must be >= 0");
    if (!(backoff_s >= 0.0)) throw ConfigInvalid(field + ".backoff_s", "must be >= 0");
    if (label().empty()) throw ConfigInvalid(field + ".name", "needs a name or model_name");
}

void AuditLog::record(std::string key, std::string line) {
    std::lock_guard lock(mu_);
    entries_.emplace(std::move(key), std::move(line));
}

std::string AuditLog::dump() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& [k, line] : entries_) out += line + "\n";
    return out;
}

HttpChatClient::HttpChatClient(LlmConfig cfg, AuditLog* audit, std::string audit_key)
    : cfg_(std::move(cfg)), audit_(audit), audit_key_(std::move(audit_key)) {
    cfg_.validate();
    split_url(cfg_.endpoint_url);
}

std::string HttpChatClient::complete(const std::string& prompt) {
    nlohmann::ordered_json req;
    req["model"] = cfg_.model_name;
    req["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
    req["temperature"] = cfg_.temperature;
    req["max_tokens"] = cfg_.max_tokens;
    req["stream"] = false;
    const std::string body = post_json(cfg_, req.dump(), audit_, audit_key_);
    std::string text;
    try {
        const auto j = nlohmann::json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) text = content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ApiError(200, "unexpected response shape (" + std::string(e.what()) + "): " + body);
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw EmptyResponse(cfg_.label() + " returned no text");
    }
    return text;
}

std::string complete(const LlmConfig& cfg, const std::string& prompt) { return HttpChatClient(cfg).complete(prompt); }

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
    }
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string MockGenerator::complete(const std::string& prompt) {
    static constexpr const char* kHigh[] = {"high", "large", "elevated"};
    static constexpr const char* kLow[] = {"low", "small", "minimal"};
    const auto feats = prompt_features(prompt);
    const std::string cls = prompt_class(prompt);
    const std::uint64_t h = fnv1a(prompt, seed_);
    const std::size_t n = std::min<std::size_t>(feats.size(), 3 + (h & 1u));
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = feats[i];
        const std::size_t pick = (h >> (8 + 2 * i)) % 3;
        const std::string value = fmt("%.4f", f.value);
        if (!f.negative) {
            out += "- The `" + f.name + "` value of " + value + " is " + kHigh[pick] +
                   " and a key indicator for this " + cls + " classification.\n";
        } else {
            out += "- The `" + f.name + "` value of " + value + " is " + kLow[pick] +
                   " and not a concern for this classification.\n";
        }
    }
    return out;
}

std::string MockJudge::complete(const std::string& prompt) {
    const int score = fixed_ > 0 ? fixed_ : 3 + static_cast<int>(fnv1a(prompt, seed_) % 3);
    return "Actionability Score: " + std::to_string(score);
}

std::vector<std::string> TfEmbedder::tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const char lower = static_cast<char>(std::tolower(c));
        if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '.') {
            cur += lower;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<Eigen::VectorXd> TfEmbedder::embed(const std::vector<std::string>& texts) {
    std::map<std::string, Eigen::Index> vocab;
    std::vector<std::vector<std::string>> toks;
    for (const auto& t : texts) {
        toks.push_back(tokenize(t));
        for (const auto& w : toks.back()) vocab.emplace(w, 0);
    }
    Eigen::Index next = 0;
    for (auto& [w, id] : vocab) id = next++;
    std::vector<Eigen::VectorXd> out;
    for (const auto& ts : toks) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(next);
        for (const auto& w : ts) v(vocab.at(w)) += 1.0;
        const double norm = v.norm();
        if (norm > 0.0) v /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Eigen::VectorXd> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    nlohmann::ordered_json req;
    req["model"] = cfg_.model_name;
    req["input"] = texts;
    std::string body;
    try {
        body = post_json(cfg_, req.dump(), audit_, "embed/" + cfg_.label());
    } catch (const ExternalServiceError& e) {
        throw EmbeddingFailure(e.what());
    }
    std::vector<Eigen::VectorXd> out;
    try {
        const auto j = nlohmann::json::parse(body);
        for (const auto& item : j.at("data")) {
            const auto vals = item.at("embedding").get<std::vector<double>>();
            out.push_back(Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        }
    } catch (const nlohmann::json::exception& e) {
        throw EmbeddingFailure(std::string("unexpected embeddings response: ") + e.what());
    }
    if (out.size() != texts.size()) throw EmbeddingFailure("embedding count does not match input count");
    for (const auto& v : out) {
        if (v.size() != out.front().size() || v.size() == 0) throw EmbeddingFailure("embedding widths differ");
    }
    return out;
}

}  // namespace exai5g
