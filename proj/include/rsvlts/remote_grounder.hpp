#pragma once

#include <string>

#include "rsvlts/condparse.hpp"

// Grounder adapter that forwards each sub-instruction to a model behind an
// HTTP endpoint. Wire format: POST JSON
//   {"image_path":...,"instruction":...,"candidates":[[x1,y1,...,x4,y4],...]}
// reply {"text":"..."} where the text carries point-set boxes. Replies that
// do not parse count as an empty set (tracked in parse_failures).

namespace rsvlts {

struct RemoteGrounderConfig {
    std::string url;          // e.g. http://127.0.0.1:8400/ground
    std::string image_path;
    int timeout_seconds = 30;
    int max_attempts = 3;     // transport retries with exponential backoff
    int backoff_initial_ms = 100;
};

class RemoteGrounder : public Grounder {
  public:
    explicit RemoteGrounder(RemoteGrounderConfig config);

    CandidateSet ground_category(const SubInstruction& step) override;
    CandidateSet filter_spatial(const CandidateSet& in, const SubInstruction& step) override;
    CandidateSet filter_attribute(const CandidateSet& in, const SubInstruction& step) override;
    CandidateSet rank_superlative(const CandidateSet& in, const SubInstruction& step) override;

    int retries() const { return retries_; }
    int parse_failures() const { return parse_failures_; }

  private:
    CandidateSet query(const CandidateSet& in, const SubInstruction& step);

    RemoteGrounderConfig config_;
    int retries_ = 0;
    int parse_failures_ = 0;
};

}  // namespace rsvlts
