#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "seqbench/trajectory.hpp"

namespace seqbench {

SEQBENCH_DEFINE_ERROR(ParseFailureError);
SEQBENCH_DEFINE_ERROR(TransportFailureError);

/// One request to an external proposal agent. `space` and `history` are in
/// original naming; masking to the wire vocabulary happens in
/// agent_exchange when a NameMap is supplied.
struct AgentRequest {
    std::string task;       // omitted on the wire under the masked condition
    std::string condition;  // domain_aware | domain_agnostic
    Objective objective = Objective::maximize;
    int iteration = 0;
    const ParameterSpace* space = nullptr;
    std::vector<std::pair<Design, double>> history;  // validated designs, original units
    std::string note;  // clarification appended on retries
};

struct AgentReply {
    Design raw;        // original naming, unvalidated values
    Design validated;  // cleaned against the space
    std::vector<std::string> corrections;
    int retries_used = 0;
};

/// Line-oriented request/reply channel. Implementations raise
/// TransportFailureError when the peer is unreachable or the channel breaks.
class AgentTransport {
public:
    virtual ~AgentTransport() = default;
    virtual std::string exchange(const std::string& request_line) = 0;
};

/// In-process transport for tests and embedding.
class CallbackTransport : public AgentTransport {
public:
    explicit CallbackTransport(std::function<std::string(const std::string&)> fn)
        : fn_(std::move(fn)) {}
    std::string exchange(const std::string& request_line) override {
        return fn_(request_line);
    }

private:
    std::function<std::string(const std::string&)> fn_;
};

/// Transport A: line-delimited exchange over a child-process pipe.
/// The child reads one JSON request per line on stdin and writes one reply
/// line on stdout; it stays alive across iterations.
class PipeTransport : public AgentTransport {
public:
    explicit PipeTransport(std::string command) : command_(std::move(command)) {}

    ~PipeTransport() override { shutdown(); }

    std::string exchange(const std::string& request_line) override {
        if (!child_running_) spawn();
        std::string msg = request_line;
        msg.push_back('\n');
        if (std::fwrite(msg.data(), 1, msg.size(), to_child_) != msg.size() ||
            std::fflush(to_child_) != 0) {
            shutdown();
            throw TransportFailureError("agent pipe: write failed");
        }
        char* line = nullptr;
        size_t cap = 0;
        ssize_t len = ::getline(&line, &cap, from_child_);
        if (len < 0) {
            std::free(line);
            shutdown();
            throw TransportFailureError("agent pipe: child closed the stream");
        }
        std::string reply(line, static_cast<size_t>(len));
        std::free(line);
        while (!reply.empty() && (reply.back() == '\n' || reply.back() == '\r'))
            reply.pop_back();
        return reply;
    }

private:
    void spawn() {
        int to_pipe[2], from_pipe[2];
        if (::pipe(to_pipe) != 0 || ::pipe(from_pipe) != 0)
            throw TransportFailureError("agent pipe: pipe() failed");
        pid_ = ::fork();
        if (pid_ < 0) throw TransportFailureError("agent pipe: fork() failed");
        if (pid_ == 0) {
            ::dup2(to_pipe[0], STDIN_FILENO);
            ::dup2(from_pipe[1], STDOUT_FILENO);
            ::close(to_pipe[0]);
            ::close(to_pipe[1]);
            ::close(from_pipe[0]);
            ::close(from_pipe[1]);
            ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            std::_Exit(127);
        }
        ::close(to_pipe[0]);
        ::close(from_pipe[1]);
        to_child_ = ::fdopen(to_pipe[1], "w");
        from_child_ = ::fdopen(from_pipe[0], "r");
        if (!to_child_ || !from_child_)
            throw TransportFailureError("agent pipe: fdopen() failed");
        child_running_ = true;
    }

    void shutdown() {
        if (to_child_) std::fclose(to_child_);
        if (from_child_) std::fclose(from_child_);
        to_child_ = from_child_ = nullptr;
        if (child_running_ && pid_ > 0) {
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
        child_running_ = false;
        pid_ = -1;
    }

    std::string command_;
    pid_t pid_ = -1;
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
    bool child_running_ = false;
};

namespace detail {

inline nlohmann::json space_to_wire_json(const ParameterSpace& space) {
    nlohmann::json params = nlohmann::json::array();
    for (const ParameterSpec& p : space.params()) {
        nlohmann::json pj;
        pj["name"] = p.name;
        if (p.is_numeric()) {
            pj["kind"] = "numeric";
            pj["lower"] = p.lower;
            pj["upper"] = p.upper;
            if (!p.unit.empty()) pj["unit"] = p.unit;
        } else {
            pj["kind"] = "categorical";
            pj["options"] = p.options;
        }
        params.push_back(std::move(pj));
    }
    return {{"params", std::move(params)}};
}

}  // namespace detail

/// Serializes the request exactly as it crosses the wire. With `mask`,
/// parameter names, options and the task identity are translated to the
/// domain-agnostic vocabulary.
inline nlohmann::json agent_request_to_json(const AgentRequest& req, const NameMap* mask,
                                            const ParameterSpace& wire_space) {
    nlohmann::json j;
    j["type"] = "propose_request";
    j["condition"] = req.condition;
    j["objective"] = to_string(req.objective);
    j["iteration"] = req.iteration;
    if (!mask && !req.task.empty()) j["task"] = req.task;
    j["space"] = detail::space_to_wire_json(wire_space);
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [design, score] : req.history) {
        Design d = mask ? mask->mask(design) : design;
        hist.push_back({{"design", design_to_json(d)}, {"score", score}});
    }
    j["history"] = std::move(hist);
    if (!req.note.empty()) j["note"] = req.note;
    return j;
}

/// Sends the request and parses one proposed design back, retrying with a
/// clarification note on malformed replies (up to `max_retries` resends).
/// The reply must be one design object or a 1-element array of them, naming
/// only parameters of the sent space.
inline AgentReply agent_exchange(const AgentRequest& req, AgentTransport& transport,
                                 const NameMap* mask = nullptr, int max_retries = 2) {
    if (!req.space) throw Error("agent_exchange: request has no space");
    ParameterSpace masked_space;
    const ParameterSpace* wire_space = req.space;
    if (mask) {
        masked_space = mask_space(*req.space).first;
        wire_space = &masked_space;
    }

    std::string note;
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        AgentRequest current = req;
        current.note = note;
        std::string reply_line =
            transport.exchange(agent_request_to_json(current, mask, *wire_space).dump());
        try {
            nlohmann::json j = nlohmann::json::parse(reply_line);
            if (j.is_array()) {
                if (j.size() != 1)
                    throw Error("expected exactly one design, got " +
                                std::to_string(j.size()));
                j = j.front();
            }
            Design wire_design = design_from_json(j);
            // surface unknown names against the wire-side space first
            for (const auto& [name, value] : wire_design.values) wire_space->at(name);
            Design raw = mask ? mask->unmask(wire_design) : wire_design;
            ValidatedDesign v = validate_design(*req.space, raw);
            return AgentReply{std::move(raw), std::move(v.design), std::move(v.corrections),
                              attempt};
        } catch (const nlohmann::json::exception& e) {
            last_error = e.what();
        } catch (const Error& e) {
            last_error = e.what();
        }
        note = "Previous reply could not be used (" + last_error +
               "). Return ONLY one JSON object (or a 1-element array) whose keys are "
               "the parameter names from `space`.";
    }
    throw ParseFailureError("agent reply unusable after " + std::to_string(max_retries) +
                            " retries: " + last_error);
}

}  // namespace seqbench
