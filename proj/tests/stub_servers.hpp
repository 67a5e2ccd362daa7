#pragma once

// In-process HTTP stubs for the external scorer and embedder protocols.

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace skb::test {

class StubServer {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;

  // handler receives the parsed request body and returns the response body.
  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      requests_.fetch_add(1);
      nlohmann::json body = nlohmann::json::parse(req.body);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        bodies_.push_back(body);
      }
      if (fail_first_ > 0 && failures_served_.fetch_add(1) < fail_first_) {
        res.status = 500;
        res.set_content("{\"error\":\"injected\"}", "application/json");
        return;
      }
      res.set_content(handler_(body).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int request_count() const { return requests_.load(); }
  void fail_first(int n) { fail_first_ = n; }
  std::vector<nlohmann::json> bodies() {
    std::lock_guard<std::mutex> lock(mutex_);
    return bodies_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> failures_served_{0};
  int fail_first_ = 0;
  std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
};

// Scores every doc by its text length.
inline nlohmann::json length_scorer(const nlohmann::json& body) {
  nlohmann::json out;
  std::vector<double> scores;
  for (const auto& doc : body.at("docs")) {
    scores.push_back(static_cast<double>(doc.at("text").get<std::string>().size()));
  }
  out["scores"] = scores;
  return out;
}

}  // namespace skb::test
