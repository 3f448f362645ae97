#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rsvlts/geometry.hpp"

// The text protocol between instruction records and a model: task tags,
// set-of-points answer serialization, and tolerant parsing of model output.
//
// Answer grammar (all on a single line):
//   point-set  := "{" [pair ("," pair)*] "}"        e.g. "{(100, 100), (200, 100)}"
//   detection  := point-set (8 numbers each, 4 corners) joined by "; " | "{}"
//   seg        := "box " point-set " points " point-set, targets joined by "; " | "{}"
//   change     := closed point-set (first vertex repeated last) joined by "; " | "{}"
//   geoloc     := "[" city ", (" lat ", " lon ")]"
//   caption    := free text

namespace rsvlts {

enum class TaskTag { detection, grounding, seg, change, geoloc, caption, identify };

// Bracketed lowercase token, e.g. "[seg]".
std::string tag_token(TaskTag tag);
std::optional<TaskTag> tag_from_token(const std::string& token);
std::string tag_name(TaskTag tag);                      // without brackets
std::optional<TaskTag> tag_from_name(const std::string& name);

enum class CoordMode { pixel, normalized };

struct CoordSpace {
    CoordMode mode = CoordMode::normalized;
    int bins = 1000;
    int image_w = 0;
    int image_h = 0;

    void validate() const;
};

struct SegTarget {
    HorizontalBox box;
    std::vector<Point> keypoints;
    bool operator==(const SegTarget&) const = default;
};

struct GeoLocAnswer {
    std::string city;
    GeoPoint location;
    bool operator==(const GeoLocAnswer&) const = default;
};

struct RboxList {
    std::vector<RotatedBox> boxes;
    bool operator==(const RboxList& o) const;
};
struct SegPrompt {
    std::vector<SegTarget> targets;
    bool operator==(const SegPrompt&) const = default;
};
struct PolyList {
    std::vector<Polygon> polygons;
    bool operator==(const PolyList& o) const;
};
struct Caption {
    std::string text;
    bool operator==(const Caption&) const = default;
};

using AnswerPayload = std::variant<RboxList, SegPrompt, PolyList, GeoLocAnswer, Caption>;

bool payload_matches_tag(const AnswerPayload& payload, TaskTag tag);
bool payload_empty(const AnswerPayload& payload);

struct ParseFailure : std::runtime_error {
    explicit ParseFailure(const std::string& what, size_t position = std::string::npos)
        : std::runtime_error(what), position(position) {}
    size_t position;
};

// Pixel -> bin: floor(p * bins / extent) clamped to [0, bins-1].
// Bin -> pixel: (b + 0.5) * extent / bins. Pixel mode is identity.
std::vector<Point> normalize(const std::vector<Point>& points, const CoordSpace& space);
std::vector<Point> denormalize(const std::vector<Point>& points, const CoordSpace& space);

// "{(x1, y1), (x2, y2), ...}"; integral coordinates print as integers.
std::string serialize_point_set(const std::vector<Point>& points);

// Tolerant inverse: extracts the first balanced {...} group, accepts
// arbitrary whitespace, trailing commas, and surrounding prose.
std::vector<Point> parse_point_set(const std::string& text);

std::string serialize_answer(const AnswerPayload& payload, const CoordSpace& space);
AnswerPayload parse_answer(const std::string& text, TaskTag tag, const CoordSpace& space);

// "[tag] prompt" composition and decomposition.
std::string build_instruction(TaskTag tag, const std::string& prompt);
std::pair<std::optional<TaskTag>, std::string> split_instruction(const std::string& text);

// Shortest roundtrip decimal form; integral values print without a point.
std::string format_number(double v);

}  // namespace rsvlts
