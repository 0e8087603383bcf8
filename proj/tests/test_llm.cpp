#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "exai5g/explain.hpp"
#include "exai5g/llm.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace exai5g;

namespace {

/// Chat endpoint on localhost that answers from a scripted list of statuses.
class ScriptedServer {
public:
    explicit ScriptedServer(std::vector<int> statuses, std::string content = "- ok")
        : statuses_(std::move(statuses)), content_(std::move(content)) {
        svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const std::size_t n = calls_++;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            const int status = n < statuses_.size() ? statuses_[n] : 200;
            res.status = status;
            if (status == 200) {
                nlohmann::json j;
                j["choices"] = {{{"message", {{"role", "assistant"}, {"content", content_}}}}};
                res.set_content(j.dump(), "application/json");
            } else {
                res.set_content("{\"error\":\"scripted\"}", "application/json");
            }
        });
        svr_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            const auto in = nlohmann::json::parse(req.body).at("input");
            nlohmann::json data = nlohmann::json::array();
            for (std::size_t i = 0; i < in.size(); ++i) {
                const double len = double(in[i].get<std::string>().size());
                data.push_back({{"index", i}, {"embedding", {len, 1.0, 0.0}}});
            }
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
        });
        port_ = svr_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { svr_.listen_after_bind(); });
        svr_.wait_until_ready();
    }
    ~ScriptedServer() {
        svr_.stop();
        thread_.join();
    }

    LlmConfig config(int retries, const std::string& path = "/v1/chat/completions") const {
        LlmConfig c;
        c.name = "scripted";
        c.model_name = "test-model";
        c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + path;
        c.retries = retries;
        c.backoff_s = 0.01;
        c.timeout_s = 5;
        c.api_key_env = "EXAI5G_TEST_KEY";
        return c;
    }
    std::size_t calls() const { return calls_; }
    const std::string& last_body() const { return last_body_; }
    const std::string& last_auth() const { return last_auth_; }

private:
    httplib::Server svr_;
    std::thread thread_;
    int port_ = 0;
    std::vector<int> statuses_;
    std::string content_;
    std::atomic<std::size_t> calls_{0};
    std::string last_body_;
    std::string last_auth_;
};

}  // namespace

TEST_SUITE("llm") {
    TEST_CASE("fixed provider returns its text verbatim") {
        FixedProvider p("  - exactly this\n");
        CHECK(p.complete("anything") == "  - exactly this\n");
    }

    TEST_CASE("two 500s then 200 succeeds with retries=3") {
        ScriptedServer s({500, 500, 200}, "- The answer");
        HttpChatClient c(s.config(3));
        CHECK(c.complete("hello") == "- The answer");
        CHECK(s.calls() == 3);
        const auto body = nlohmann::json::parse(s.last_body());
        CHECK(body["model"] == "test-model");
        CHECK(body["messages"].size() == 1);
        CHECK(body["messages"][0]["role"] == "user");
        CHECK(body["messages"][0]["content"] == "hello");
        CHECK(body["temperature"] == 0.1);
        CHECK(body["max_tokens"] == 250);
    }

    TEST_CASE("exhausted retries raise TransportError with the attempt count") {
        ScriptedServer s({503, 503, 503, 503});
        HttpChatClient c(s.config(2));
        try {
            c.complete("x");
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.attempts() == 3);
        }
        CHECK(s.calls() == 3);
    }

    TEST_CASE("client errors are not retried") {
        ScriptedServer s({401});
        HttpChatClient c(s.config(3));
        CHECK_THROWS_AS(c.complete("x"), ApiError);
        CHECK(s.calls() == 1);
    }

    TEST_CASE("blank replies raise EmptyResponse") {
        ScriptedServer s({200}, "   \n");
        HttpChatClient c(s.config(0));
        CHECK_THROWS_AS(c.complete("x"), EmptyResponse);
    }

    TEST_CASE("unreachable endpoint is a transport failure") {
        LlmConfig c;
        c.name = "nowhere";
        c.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
        c.retries = 1;
        c.backoff_s = 0.0;
        c.timeout_s = 1;
        try {
            HttpChatClient(c).complete("x");
            FAIL("expected TransportError");
        } catch (const TransportError& e) {
            CHECK(e.attempts() == 2);
        }
    }

    TEST_CASE("API key goes in the header and never into the audit log") {
        ::setenv("EXAI5G_TEST_KEY", "sk-secret-123", 1);
        ScriptedServer s({500, 200});
        AuditLog audit;
        HttpChatClient c(s.config(1), &audit, "gen/x/1");
        c.complete("x");
        ::unsetenv("EXAI5G_TEST_KEY");
        CHECK(s.last_auth() == "Bearer sk-secret-123");
        const auto log = audit.dump();
        CHECK(log.find("sk-secret-123") == std::string::npos);
        CHECK(log.find("[redacted]") != std::string::npos);
        CHECK(std::count(log.begin(), log.end(), '\n') == 2);
    }

    TEST_CASE("invalid configuration is rejected") {
        LlmConfig c;
        c.name = "x";
        c.endpoint_url = "ftp://host/path";
        CHECK_THROWS_AS(HttpChatClient{c}, ConfigInvalid);
        c.endpoint_url = "http://host/v1";
        c.retries = -1;
        CHECK_THROWS_AS(c.validate(), ConfigInvalid);
    }

    TEST_CASE("remote embedder reads one vector per input") {
        ScriptedServer s({});
        HttpEmbedder e(s.config(0, "/v1/embeddings"));
        const auto v = e.embed({"ab", "abcd"});
        REQUIRE(v.size() == 2);
        CHECK(v[0](0) == 2.0);
        CHECK(v[1](0) == 4.0);
    }

    TEST_CASE("mock generator follows attribution signs") {
        ExplanationRequest req;
        req.cls_name = "DoS_MQTT";
        req.clause = "class(DoS_MQTT) :- tcp.stream > 500000.0000";
        req.top5 = {{"frame.time_relative", 812.4183, 0.5},
                    {"tcp.time_relative", 0.0, -0.00000001},
                    {"tcp.stream", 598269.0, 0.2},
                    {"ip.len", 60.0, -0.1},
                    {"tcp.len", 0.0, 0.05}};
        const std::string prompt = build_generator_prompt(req);
        MockGenerator g(1);
        const auto text = g.complete(prompt);
        CHECK(text == MockGenerator(1).complete(prompt));
        CHECK(text.find("`frame.time_relative` value of 812.4183 is") != std::string::npos);
        CHECK(text.find("`tcp.time_relative` value of 0.0000 is") != std::string::npos);
        const auto tcp_time = text.find("`tcp.time_relative`");
        CHECK(text.find("not a concern", tcp_time) < text.find('\n', tcp_time));
    }

    TEST_CASE("mock judge replies in the rubric format") {
        CHECK(MockJudge(3).complete("anything") == "Actionability Score: 3");
        const auto r = MockJudge(0, 2).complete("abc");
        CHECK(r.rfind("Actionability Score: ", 0) == 0);
        const int k = r.back() - '0';
        CHECK(k >= 3);
        CHECK(k <= 5);
    }

    TEST_CASE("TF embedder: identical texts 1, disjoint texts 0") {
        TfEmbedder e;
        const auto v = e.embed({"high tcp.stream value", "high tcp.stream value", "benign idle flow"});
        CHECK(v[0].dot(v[1]) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v[0].dot(v[2]) == 0.0);
        CHECK(TfEmbedder::tokenize("The `tcp.window_size.1` IS 64!") ==
              std::vector<std::string>{"the", "tcp.window", "size.1", "is", "64"});
    }

    TEST_CASE("bounded map keeps order and rethrows the first failure") {
        const auto out = bounded_map<int>(50, 4, [](std::size_t i) { return int(i * i); });
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == int(i * i));
        std::atomic<int> done{0};
        try {
            bounded_map<int>(20, 3, [&](std::size_t i) -> int {
                ++done;
                if (i == 7 || i == 12) throw std::runtime_error("fail " + std::to_string(i));
                return 0;
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "fail 7");
        }
        CHECK(done == 20);
    }
}
