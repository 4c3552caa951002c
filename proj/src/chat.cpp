#include "litsim/policy.hpp"

#include <algorithm>
#include <thread>

namespace litsim::policy {

Sleeper real_sleeper()
{
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string ScriptedTransport::send(const PromptMessages& messages, const Decoding&)
{
    requests_.push_back(messages);
    if (steps_.empty()) {
        throw TransportError("scripted transport has no reply left", false);
    }
    Step step = std::move(steps_.front());
    steps_.pop_front();
    if (step.fail) {
        throw TransportError(step.text, step.retryable);
    }
    return step.text;
}

ChatResult chat_complete(ChatTransport& transport, const PromptMessages& messages, const Decoding& decoding,
                         const RetryPolicy& retry, const Sleeper& sleep)
{
    ChatResult result;
    auto backoff = retry.initial_backoff;
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            result.text = transport.send(messages, decoding);
            return result;
        } catch (const TransportError& e) {
            result.errors.push_back(e.what());
            if (!e.retryable() || attempt >= retry.max_transport_retries) {
                return result;
            }
        }
        ++result.transport_retries;
        result.backoffs.push_back(backoff);
        if (sleep) {
            sleep(backoff);
        }
        backoff = std::min(backoff * 2, retry.max_backoff);
    }
}

}  // namespace litsim::policy
