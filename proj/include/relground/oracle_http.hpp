#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "relground/oracle.hpp"

namespace relground {

// Live transport for the chat-completion endpoint. Retries with exponential
// backoff starting at one second, doubling up to cfg.max_retries.
inline std::string http_chat_completion(const std::string& prompt, const OracleConfig& cfg) {
    std::string url = cfg.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw input_error("oracle endpoint_url missing scheme");
    std::string scheme = url.substr(0, scheme_end);
    std::string rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    std::string host = path_start == std::string::npos ? rest : rest.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : rest.substr(path_start);
    if (scheme != "http")
        throw input_error("live oracle transport supports http endpoints only; point "
                          "endpoint_url at an http gateway or use mock/replay mode");

    json body{{"model", cfg.model_name},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
    httplib::Headers headers;
    if (const char* key = std::getenv("ORACLE_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error = "no attempts made";
    double backoff_seconds = 1.0;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(backoff_seconds * 1000)));
            backoff_seconds *= 2;
        }
        httplib::Client client(host);
        client.set_read_timeout(static_cast<time_t>(cfg.timeout_seconds), 0);
        client.set_connection_timeout(static_cast<time_t>(cfg.timeout_seconds), 0);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure (no response)";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            last_error = std::string("malformed completion payload: ") + e.what();
        }
    }
    throw input_error("oracle call failed after " + std::to_string(cfg.max_retries + 1) +
                      " attempts: " + last_error);
}

inline void enable_http_transport() { chat_transport() = &http_chat_completion; }

}  // namespace relground
