#include "rsvlts/remote_grounder.hpp"

#include <chrono>
#include <iostream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace rsvlts {

namespace {

// Splits "http://host:port/path" into (scheme://host:port, /path).
std::pair<std::string, std::string> split_url(const std::string& url) {
    const size_t scheme = url.find("://");
    const size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

}  // namespace

RemoteGrounder::RemoteGrounder(RemoteGrounderConfig config) : config_(std::move(config)) {
    if (config_.url.empty())
        throw std::invalid_argument("RemoteGrounder: endpoint URL not configured "
                                    "(flag --grounder-url or env RSVLTS_GROUNDER_URL)");
}

CandidateSet RemoteGrounder::query(const CandidateSet& in, const SubInstruction& step) {
    nlohmann::json body;
    body["image_path"] = config_.image_path;
    body["instruction"] = step.raw_text.empty() ? step.describe() : step.raw_text;
    auto candidates = nlohmann::json::array();
    for (const Candidate& c : in.entries) {
        auto flat = nlohmann::json::array();
        for (const Point& p : c.box.corners) {
            flat.push_back(p.x);
            flat.push_back(p.y);
        }
        candidates.push_back(flat);
    }
    body["candidates"] = candidates;

    const auto [host, path] = split_url(config_.url);
    std::string reply_text;
    bool ok = false;
    int backoff_ms = config_.backoff_initial_ms;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            ++retries_;
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(host);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        auto res = client.Post(path, body.dump(), "application/json");
        if (res && res->status == 200) {
            reply_text = res->body;
            ok = true;
            break;
        }
    }
    if (!ok)
        throw std::runtime_error("RemoteGrounder: transport failure after " +
                                 std::to_string(config_.max_attempts) + " attempts to " +
                                 config_.url + " (step: " + step.describe() + ")");

    CandidateSet out;
    out.provenance = in.provenance;
    out.provenance.push_back(step.describe());
    try {
        const auto reply = nlohmann::json::parse(reply_text);
        const std::string text = reply.at("text").get<std::string>();
        const CoordSpace pixel{CoordMode::pixel};
        const auto payload = std::get<RboxList>(parse_answer(text, TaskTag::grounding, pixel));
        for (size_t i = 0; i < payload.boxes.size(); ++i)
            out.entries.push_back({"r" + std::to_string(i), payload.boxes[i]});
    } catch (const std::exception& e) {
        ++parse_failures_;
        std::cerr << "RemoteGrounder: unparseable reply for step " << step.describe() << ": "
                  << e.what() << "\n";
    }
    return out;
}

CandidateSet RemoteGrounder::ground_category(const SubInstruction& step) {
    return query(CandidateSet{}, step);
}

CandidateSet RemoteGrounder::filter_spatial(const CandidateSet& in, const SubInstruction& step) {
    return query(in, step);
}

CandidateSet RemoteGrounder::filter_attribute(const CandidateSet& in, const SubInstruction& step) {
    return query(in, step);
}

CandidateSet RemoteGrounder::rank_superlative(const CandidateSet& in, const SubInstruction& step) {
    return query(in, step);
}

}  // namespace rsvlts
