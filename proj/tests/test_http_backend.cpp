#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "etva/errors.hpp"
#include "etva/llm_backend.hpp"

using namespace etva;
using namespace etva::llm;
using nlohmann::json;

namespace {

// Local OpenAI-compatible stub; `handler` decides each response.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::atomic<int> hits{0};

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void reply(httplib::Response& res, const std::string& content) {
  res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                  "application/json");
}

CompletionRequest hello() {
  CompletionRequest r;
  r.model_name = "test-model";
  r.messages = {ChatMessage::text(Role::User, "hello")};
  return r;
}

HttpConfig fast(const std::string& url) {
  HttpConfig c;
  c.endpoint_url = url;
  c.api_key_env = "ETVA_TEST_TOKEN";
  c.initial_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(5);
  return c;
}

}  // namespace

TEST_SUITE("http_backend") {
  TEST_CASE("two 5xx then success on attempt 3") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      static std::atomic<int> n{0};
      if (++n <= 2) {
        res.status = 503;
        res.set_content("busy", "text/plain");
      } else {
        reply(res, "hi");
      }
    });
    HttpBackend b(fast(server.url()));
    CHECK(b.complete(hello()) == "hi");
    CHECK(b.last_attempts() == 3);
    CHECK(server.hits == 3);
  }

  TEST_CASE("429 is retried, 400 is not") {
    std::atomic<int> calls{0};
    StubServer throttled([&](const httplib::Request&, httplib::Response& res) {
      if (calls++ == 0) {
        res.status = 429;
      } else {
        reply(res, "ok");
      }
    });
    HttpBackend b(fast(throttled.url()));
    CHECK(b.complete(hello()) == "ok");
    CHECK(b.last_attempts() == 2);

    StubServer bad([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    HttpBackend c(fast(bad.url()));
    CHECK_THROWS_AS(c.complete(hello()), TransportError);
    CHECK(bad.hits == 1);
  }

  TEST_CASE("auth failures are not retried") {
    StubServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    HttpBackend b(fast(server.url()));
    CHECK_THROWS_AS(b.complete(hello()), AuthError);
    CHECK(server.hits == 1);
  }

  TEST_CASE("gives up after max_attempts") {
    StubServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    auto cfg = fast(server.url());
    cfg.max_attempts = 3;
    HttpBackend b(cfg);
    CHECK_THROWS_AS(b.complete(hello()), TransportError);
    CHECK(server.hits == 3);
    CHECK(b.last_attempts() == 3);
  }

  TEST_CASE("unreachable endpoint is a transport error") {
    auto cfg = fast("http://127.0.0.1:1/v1");
    cfg.max_attempts = 2;
    HttpBackend b(cfg);
    CHECK_THROWS_AS(b.complete(hello()), TransportError);
  }

  TEST_CASE("bearer token from the configured env var, body on the wire") {
    ::setenv("ETVA_TEST_TOKEN", "sekrit", 1);
    std::string auth, model;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
      auth = req.get_header_value("Authorization");
      model = json::parse(req.body)["model"];
      reply(res, "ok");
    });
    HttpBackend b(fast(server.url()));
    CHECK(b.complete(hello()) == "ok");
    CHECK(auth == "Bearer sekrit");
    CHECK(model == "test-model");
    ::unsetenv("ETVA_TEST_TOKEN");
  }

  TEST_CASE("malformed success body is a schema error") {
    StubServer server([](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
    HttpBackend b(fast(server.url()));
    CHECK_THROWS_AS(b.complete(hello()), SchemaError);
  }

  TEST_CASE("in-flight requests are capped") {
    std::atomic<int> current{0}, peak{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      const int now = ++current;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(30));
      --current;
      reply(res, "ok");
    });
    auto cfg = fast(server.url());
    cfg.max_in_flight = 2;
    HttpBackend b(cfg);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { b.complete(hello()); });
    for (auto& t : threads) t.join();
    CHECK(server.hits == 6);
    CHECK(peak.load() <= 2);
  }
}
