#ifndef DSD_SUMMARIZER_HTTP_HPP
#define DSD_SUMMARIZER_HTTP_HPP

#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dsd/cop.hpp"

namespace dsd {

// Optional client for an external LLM summarizer endpoint. POSTs
// {"prompt": <fine>} to <url>/summarize and expects {"coarse":..., "mid":...}.
// Configured via SUMMARIZER_URL / SUMMARIZER_KEY; never required by tests.
class HttpSummarizer : public Summarizer {
public:
    HttpSummarizer(std::string url, std::string key, int timeout_s = 10)
        : url_(std::move(url)), key_(std::move(key)), timeout_s_(timeout_s) {}

    std::pair<std::string, std::string> coarse_mid(const std::string& fine) override {
        httplib::Client cli(url_);
        cli.set_connection_timeout(timeout_s_);
        cli.set_read_timeout(timeout_s_);
        httplib::Headers headers;
        if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
        nlohmann::json body = {{"prompt", fine}};
        auto res = cli.Post("/summarize", headers, body.dump(), "application/json");
        if (!res) throw SummarizerError("HttpSummarizer: request to " + url_ + " failed");
        if (res->status != 200)
            throw SummarizerError("HttpSummarizer: HTTP " + std::to_string(res->status));
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            return {j.at("coarse").get<std::string>(), j.at("mid").get<std::string>()};
        } catch (const nlohmann::json::exception& e) {
            throw SummarizerError(std::string("HttpSummarizer: bad response: ") + e.what());
        }
    }

private:
    std::string url_, key_;
    int timeout_s_;
};

}  // namespace dsd

#endif
