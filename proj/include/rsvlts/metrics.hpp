#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsvlts/record.hpp"

// Scoring of model outputs against ground-truth records, per task.
// Conventions (documented, applied throughout): precision of an empty
// prediction set is 1; rates over zero comparable items are 1 (vacuous);
// unparseable predictions count as parse failures and score as empty.

namespace rsvlts {

struct BoxMatching {
    std::vector<std::pair<size_t, size_t>> pairs;  // (gt index, pred index)
    std::vector<double> ious;                      // per pair
    size_t tp = 0, fp = 0, fn = 0;
};

// Greedy matching by descending rotated IoU; each side used at most once;
// pairs below `iou_thresh` stay unmatched. Deterministic tie break by
// (gt index, pred index).
BoxMatching match_boxes(const RboxList& gt, const RboxList& pred, double iou_thresh);

struct PixelScore {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    size_t tp = 0, fp = 0, fn = 0;
};

// Rasterizes both polygon sets (pixel space) and compares bitwise.
PixelScore score_change(const std::vector<Polygon>& gt_polys,
                        const std::vector<Polygon>& pred_polys, int width, int height);

struct GeoScore {
    double km_error = 0.0;
    bool city_match = false;
};

// Haversine distance + case-insensitive trimmed city comparison.
GeoScore score_geoloc(const GeoLocAnswer& gt, const GeoLocAnswer& pred);

struct TaskCounts {
    size_t samples = 0;
    size_t parse_failures = 0;
};

struct DetectionReport {
    size_t tp = 0, fp = 0, fn = 0;
    double precision = 1.0, recall = 1.0, f1 = 1.0;
    double mean_iou = 1.0;  // over matched pairs; 1 when nothing to compare
};

struct SegReport {
    double mean_box_iou = 1.0;          // matched-IoU mass / max(#gt, #pred)
    double keypoint_in_box_rate = 1.0;  // pred keypoints inside matched gt box
};

struct GeolocReport {
    double mean_km = 0.0, median_km = 0.0;
    double city_match_rate = 1.0;
};

struct CaptionReport {
    double exact_rate = 1.0;
    double normalized_rate = 1.0;  // lowercase, trimmed, punctuation-stripped
};

struct EvalReport {
    std::map<std::string, TaskCounts> counts;  // keyed by task name
    std::optional<DetectionReport> detection;  // detection + grounding records
    std::optional<SegReport> segmentation;
    std::optional<PixelScore> change;
    std::optional<GeolocReport> geoloc;
    std::optional<CaptionReport> caption;      // caption + identify records

    std::string to_json() const;
    std::string to_table() const;
};

EvalReport evaluate(const std::vector<InstructionRecord>& gt,
                    const std::vector<InstructionRecord>& pred, double iou_thresh = 0.5);
EvalReport evaluate_files(const std::string& gt_path, const std::string& pred_path,
                          double iou_thresh = 0.5);

std::string normalize_caption(const std::string& text);

}  // namespace rsvlts
