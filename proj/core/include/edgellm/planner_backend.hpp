#pragma once

// External text-completion backends. One request/response exchange per
// decision: the rendered prompt is POSTed as text/plain and the response body
// must be the answer object itself. Endpoint, credential and timeout come
// from the environment:
//   EDGELLM_PLANNER_URL        http(s)://host[:port]/path
//   EDGELLM_PLANNER_TOKEN      sent as "Authorization: Bearer <token>"
//   EDGELLM_PLANNER_TIMEOUT_S  per-call budget in seconds

#include <cstdint>
#include <optional>
#include <string>

#include "edgellm/agentic.hpp"

namespace edgellm {

struct HttpEndpoint {
  std::string url;
  std::string token;
  double timeout_s = 20.0;

  // nullopt when EDGELLM_PLANNER_URL is unset or empty.
  static std::optional<HttpEndpoint> from_env(double default_timeout_s);
};

// POSTs `prompt` and returns the body of a 2xx response; throws
// std::runtime_error on any transport failure, timeout or non-2xx status.
std::string http_complete(const HttpEndpoint& endpoint, const std::string& prompt);

// Outbound requests attempted by this process.
std::uint64_t network_calls();

class HttpPlannerBackend : public PlannerBackend {
 public:
  explicit HttpPlannerBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const PlannerRequest& request) override;
  std::string name() const override { return "external"; }

 private:
  HttpEndpoint endpoint_;
};

class HttpDeployBackend : public DeployBackend {
 public:
  explicit HttpDeployBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string complete(const DeployRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

}  // namespace edgellm
