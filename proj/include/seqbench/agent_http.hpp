#pragma once

// Separated from agent.hpp so only translation units that actually speak
// HTTP pay for the httplib include.

#include <httplib.h>

#include "seqbench/agent.hpp"

namespace seqbench {

/// Transport B: POST the request document to a configured URL; the reply is
/// the response body. Sends SEQBENCH_AGENT_TOKEN (if set) as a bearer token.
class HttpTransport : public AgentTransport {
public:
    /// `url` has the form http://host:port/path.
    explicit HttpTransport(const std::string& url) {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw TransportFailureError("agent http: bad url '" + url + "'");
        std::string rest = url.substr(scheme_end + 3);
        auto slash = rest.find('/');
        host_ = slash == std::string::npos ? rest : rest.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : rest.substr(slash);
        client_ = std::make_unique<httplib::Client>("http://" + host_);
        client_->set_read_timeout(120, 0);
        if (const char* token = std::getenv("SEQBENCH_AGENT_TOKEN"))
            client_->set_bearer_token_auth(token);
    }

    std::string exchange(const std::string& request_line) override {
        auto res = client_->Post(path_, request_line, "application/json");
        if (!res)
            throw TransportFailureError("agent http: no response from " + host_);
        if (res->status != 200)
            throw TransportFailureError("agent http: status " + std::to_string(res->status));
        return res->body;
    }

private:
    std::string host_;
    std::string path_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace seqbench
