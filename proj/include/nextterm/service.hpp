#pragma once

// HTTP front end for the planner.
//
//   GET  /healthz     -> {"status":"ok","checkpoint":"<id>"}
//   GET  /v1/catalog  -> {"courses":[...],"failure_rates":{...}}
//   POST /v1/score    -> PlanResponse
//
// Errors: 400 {"error":"bad_request"}, 422 {"error":"unknown_course","course":...},
// 500 {"error":"internal"}.

#include <memory>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nextterm/checkpoint.hpp"
#include "nextterm/error.hpp"
#include "nextterm/planner.hpp"

namespace nextterm {

struct ServiceOptions {
  std::string cors_origin = "*";
};

class PlannerService {
 public:
  PlannerService(Checkpoint checkpoint, ServiceOptions options = {})
      : checkpoint_(std::move(checkpoint)),
        id_(nextterm::checkpoint_id(checkpoint_)),
        options_(std::move(options)),
        server_(std::make_unique<httplib::Server>()) {
    install_routes();
  }

  const std::string& checkpoint_id() const noexcept { return id_; }
  const Checkpoint& checkpoint() const noexcept { return checkpoint_; }

  // Blocks until stop().
  bool listen(const std::string& host, int port) { return server_->listen(host, port); }

  // Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }
  bool listen_after_bind() { return server_->listen_after_bind(); }

  void wait_until_ready() const { server_->wait_until_ready(); }
  void stop() { server_->stop(); }

  // Request handling without the socket layer; returns (status, body).
  std::pair<int, nlohmann::json> handle_score(const std::string& body) const {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return {400, {{"error", "bad_request"}, {"message", std::string("invalid JSON: ") + e.what()}}};
    }
    try {
      const auto query = parse_plan_query(doc);
      const auto response = score_plans(checkpoint_.params, checkpoint_.catalog, query, id_);
      return {200, plan_response_to_json(response)};
    } catch (const UnknownCourseError& e) {
      return {422, {{"error", "unknown_course"}, {"course", e.course()}}};
    } catch (const ValidationError& e) {
      return {400, {{"error", "bad_request"}, {"message", e.what()}}};
    } catch (const std::exception& e) {
      return {500, {{"error", "internal"}, {"message", e.what()}}};
    }
  }

  nlohmann::json catalog_json() const {
    return {{"courses", checkpoint_.catalog.courses()}, {"failure_rates", checkpoint_.failure_rates}};
  }

 private:
  void reply(httplib::Response& res, int status, const nlohmann::json& body) const {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void install_routes() {
    server_->set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"}, {"checkpoint", id_}});
    });
    server_->Get("/v1/catalog",
                 [this](const httplib::Request&, httplib::Response& res) { reply(res, 200, catalog_json()); });
    server_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
      auto [status, body] = handle_score(req.body);
      reply(res, status, body);
    });
    server_->set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unknown error";
      try {
        if (ep) std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      reply(res, 500, {{"error", "internal"}, {"message", what}});
    });
  }

  const Checkpoint checkpoint_;
  const std::string id_;
  const ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace nextterm
