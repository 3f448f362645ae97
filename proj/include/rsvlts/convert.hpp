#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsvlts/record.hpp"

// Converters from raw annotations (scenes, change masks, geotags) to
// rsvlts/1 instruction records, plus the prompt-file writer for an
// external box+points promptable segmenter.

namespace rsvlts {

struct SceneObject {
    std::string id;
    std::string category;
    std::optional<RotatedBox> rbb;
    std::optional<BinaryMask> mask;
    std::map<std::string, std::string> attributes;
};

struct SceneAnnotation {
    std::string image;
    int width = 0;
    int height = 0;
    std::vector<SceneObject> objects;

    void validate() const;
    std::vector<std::string> categories() const;  // sorted, unique
};

struct ConvertConfig {
    CoordMode mode = CoordMode::normalized;
    int bins = 1000;
    int n_keypoints = 3;
    double trace_eps = 1.0;
};

// FNV-1a; stable across platforms, drives deterministic template choice.
std::uint64_t stable_hash(std::string_view s);

// Deterministic per-task paraphrase bank; "{}" is the category slot.
const std::vector<std::string>& prompt_bank(TaskTag tag);
std::string pick_prompt(TaskTag tag, const std::string& record_id, const std::string& category);

InstructionRecord convert_detection(const SceneAnnotation& sa, const std::string& category,
                                    const ConvertConfig& cfg);
InstructionRecord convert_segmentation(const SceneAnnotation& sa, const std::string& category,
                                       const ConvertConfig& cfg);
InstructionRecord convert_change(const BinaryMask& change_mask, const std::string& image_a,
                                 const std::string& image_b, const std::string& caption,
                                 const ConvertConfig& cfg);
InstructionRecord convert_geoloc(const std::string& image, const std::string& city, double lat,
                                 double lon, const ConvertConfig& cfg);

// One JSON object per seg record:
//   {"image":...,"targets":[{"box":[x1,y1,x2,y2],"points":[[x,y],...],"labels":[1,...]}]}
// Coordinates are pixels (denormalized); labels are all 1 (foreground).
std::string segmenter_prompt_line(const InstructionRecord& record);
void emit_segmenter_prompts(const std::vector<InstructionRecord>& records, const std::string& path);

// SceneAnnotation ingestion: one JSON object per line, masks referenced by
// path (P4/P5) and resolved against `base_dir`.
SceneAnnotation scene_from_json(const std::string& json_text, const std::string& base_dir);
std::vector<SceneAnnotation> read_scenes_file(const std::string& path);

}  // namespace rsvlts
