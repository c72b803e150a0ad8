#include "edgellm/planner_backend.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <stdexcept>

#include <httplib.h>

namespace edgellm {

namespace {

std::atomic<std::uint64_t> g_network_calls{0};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::optional<HttpEndpoint> HttpEndpoint::from_env(double default_timeout_s) {
  HttpEndpoint e;
  e.url = env_or_empty("EDGELLM_PLANNER_URL");
  if (e.url.empty()) return std::nullopt;
  e.token = env_or_empty("EDGELLM_PLANNER_TOKEN");
  e.timeout_s = default_timeout_s;
  const std::string t = env_or_empty("EDGELLM_PLANNER_TIMEOUT_S");
  if (!t.empty()) {
    try {
      const double v = std::stod(t);
      if (v > 0 && std::isfinite(v)) e.timeout_s = v;
    } catch (const std::exception&) {
    }
  }
  return e;
}

std::uint64_t network_calls() { return g_network_calls.load(); }

std::string http_complete(const HttpEndpoint& endpoint, const std::string& prompt) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint.url, m, kUrl)) throw std::runtime_error("malformed endpoint URL");
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  ++g_network_calls;
  httplib::Client client(base);
  const auto secs = static_cast<time_t>(endpoint.timeout_s);
  const auto usecs = static_cast<time_t>((endpoint.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);
  auto res = client.Post(path, headers, prompt, "text/plain");
  if (!res) throw std::runtime_error("request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw std::runtime_error("endpoint returned status " + std::to_string(res->status));
  }
  return res->body;
}

std::string HttpPlannerBackend::complete(const PlannerRequest& request) {
  return http_complete(endpoint_, request.prompt);
}

std::string HttpDeployBackend::complete(const DeployRequest& request) {
  return http_complete(endpoint_, request.prompt);
}

}  // namespace edgellm
