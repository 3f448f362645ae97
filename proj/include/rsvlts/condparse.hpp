#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rsvlts/textcodec.hpp"

// Multi-condition instruction decomposition and iterative resolution.
// A deterministic grammar stands in for the paper's parser LLM; the
// Grounder interface abstracts whatever answers one condition at a time
// (the bundled oracle over a SceneGraph, or a remote model).

namespace rsvlts {

enum class ConditionKind { select_category, spatial_relation, attribute, superlative, opaque };

enum class SpatialRelation {
    east_of, west_of, north_of, south_of, left_of, right_of, above, below, near
};

enum class SuperlativeMetric { largest, smallest, count };

std::string relation_name(SpatialRelation r);
std::optional<SpatialRelation> relation_from_name(const std::string& name);
std::string metric_name(SuperlativeMetric m);

struct SubInstruction {
    ConditionKind kind = ConditionKind::opaque;
    std::string raw_text;  // the source clause

    std::string category;                 // select_category
    SpatialRelation relation{};           // spatial_relation
    std::string reference;                // spatial_relation
    std::string attr_key, attr_value;     // attribute
    SuperlativeMetric metric{};           // superlative

    std::string describe() const;
};

struct ConditionChain {
    std::vector<SubInstruction> steps;  // execution order; category first
};

// Deterministic decomposition. Order: category, attributes, spatial
// relations, superlatives. Unrecognized instructions come back as a single
// opaque step (pass-through mode).
ConditionChain parse_conditions(const std::string& instruction);

struct SceneEntity {
    std::string id;
    std::string category;
    RotatedBox rbb;
    std::map<std::string, std::string> attributes;  // e.g. color, size
    std::string role;                               // region role, e.g. "river"

    Point center() const;
};

struct SceneGraph {
    int width = 0;
    int height = 0;
    std::vector<SceneEntity> entities;

    void validate() const;
};

SceneGraph scene_graph_from_json(const std::string& json_text);
SceneGraph read_scene_graph_file(const std::string& path);

struct Candidate {
    std::string id;
    RotatedBox box;
};

struct CandidateSet {
    std::vector<Candidate> entries;
    std::vector<std::string> provenance;  // chain steps already applied
};

class Grounder {
  public:
    virtual ~Grounder() = default;
    virtual CandidateSet ground_category(const SubInstruction& step) = 0;
    virtual CandidateSet filter_spatial(const CandidateSet& in, const SubInstruction& step) = 0;
    virtual CandidateSet filter_attribute(const CandidateSet& in, const SubInstruction& step) = 0;
    virtual CandidateSet rank_superlative(const CandidateSet& in, const SubInstruction& step) = 0;
};

// Exact grounder over a synthetic scene graph. Spatial semantics use box
// centers against the reference region's extremal coordinates; "east" is
// +x (image right), "north" is -y (image up). "near" keeps candidates
// whose center lies within 0.2 * image diagonal of a reference center.
class OracleGrounder : public Grounder {
  public:
    explicit OracleGrounder(SceneGraph scene);

    CandidateSet ground_category(const SubInstruction& step) override;
    CandidateSet filter_spatial(const CandidateSet& in, const SubInstruction& step) override;
    CandidateSet filter_attribute(const CandidateSet& in, const SubInstruction& step) override;
    CandidateSet rank_superlative(const CandidateSet& in, const SubInstruction& step) override;

    const SceneGraph& scene() const { return scene_; }

  private:
    SceneGraph scene_;
};

struct ResolveStep {
    std::string description;
    size_t in_count = 0;
    size_t out_count = 0;
};

struct ResolveResult {
    RboxList boxes;
    std::vector<std::string> entity_ids;
    std::vector<ResolveStep> trace;
};

// Runs the chain sequentially; empty intermediate sets short-circuit.
// Candidate counts are monotonically non-increasing after the first step.
ResolveResult resolve(const ConditionChain& chain, Grounder& grounder);

// Strips a leading category plural ("planes" -> "plane").
std::string singularize(const std::string& noun);

std::string chain_to_json(const ConditionChain& chain);

}  // namespace rsvlts
