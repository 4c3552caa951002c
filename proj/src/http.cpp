#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "litsim/assess.hpp"
#include "litsim/policy.hpp"

namespace litsim {
namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(std::string_view url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos) {
        throw Error("url without scheme: " + std::string(url));
    }
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string_view::npos) {
        return {std::string(url), "/"};
    }
    return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

bool retryable_status(int status)
{
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

namespace policy {

HttpChatTransport::HttpChatTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

nlohmann::json HttpChatTransport::build_request(const std::string& model, const PromptMessages& messages,
                                                const Decoding& decoding)
{
    nlohmann::json j;
    j["model"] = model;
    j["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
        j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    j["temperature"] = decoding.temperature;
    j["top_p"] = decoding.top_p;
    return j;
}

std::string HttpChatTransport::parse_response(std::string_view body)
{
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        throw TransportError("chat response is not JSON", false);
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw TransportError("chat response has no choices", false);
    }
    const auto& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw TransportError("chat response has no assistant text", false);
    }
    return choice["message"]["content"].get<std::string>();
}

std::string HttpChatTransport::send(const PromptMessages& messages, const Decoding& decoding)
{
    const auto url = split_url(endpoint_.url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint_.timeout);
    client.set_read_timeout(endpoint_.timeout);
    client.set_write_timeout(endpoint_.timeout);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    }
    const auto body = build_request(endpoint_.model, messages, decoding).dump();
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
        throw TransportError("chat request failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status != 200) {
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status),
                             retryable_status(res->status));
    }
    return parse_response(res->body);
}

}  // namespace policy

namespace assess {

HttpFullTextFetcher::HttpFullTextFetcher(std::string url_template) : url_template_(std::move(url_template)) {}

std::optional<std::string> HttpFullTextFetcher::fetch_html(std::string_view paper_id)
{
    std::string url = url_template_;
    const auto slot = url.find("{id}");
    if (slot == std::string::npos) {
        throw Error("full-text url template lacks {id}: " + url_template_);
    }
    url.replace(slot, 4, paper_id);
    const auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(std::chrono::seconds(60));
    auto res = client.Get(parts.path);
    if (!res || res->status != 200) {
        return std::nullopt;
    }
    return res->body;
}

}  // namespace assess
}  // namespace litsim
