#include "rsvlts/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rsvlts {

using ordered_json = nlohmann::ordered_json;

namespace {

double safe_ratio(size_t num, size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

BoxMatching match_boxes(const RboxList& gt, const RboxList& pred, double iou_thresh) {
    if (!(iou_thresh > 0.0 && iou_thresh <= 1.0))
        throw std::invalid_argument("match_boxes: threshold must be in (0, 1]");
    struct Entry {
        double iou;
        size_t gi, pi;
    };
    std::vector<Entry> entries;
    for (size_t gi = 0; gi < gt.boxes.size(); ++gi)
        for (size_t pi = 0; pi < pred.boxes.size(); ++pi) {
            const double iou = rotated_iou(gt.boxes[gi], pred.boxes[pi]);
            if (iou >= iou_thresh) entries.push_back({iou, gi, pi});
        }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.gi != b.gi) return a.gi < b.gi;
        return a.pi < b.pi;
    });
    BoxMatching m;
    std::vector<bool> gt_used(gt.boxes.size(), false), pred_used(pred.boxes.size(), false);
    for (const Entry& e : entries) {
        if (gt_used[e.gi] || pred_used[e.pi]) continue;
        gt_used[e.gi] = pred_used[e.pi] = true;
        m.pairs.emplace_back(e.gi, e.pi);
        m.ious.push_back(e.iou);
    }
    m.tp = m.pairs.size();
    m.fp = pred.boxes.size() - m.tp;
    m.fn = gt.boxes.size() - m.tp;
    return m;
}

PixelScore score_change(const std::vector<Polygon>& gt_polys,
                        const std::vector<Polygon>& pred_polys, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("score_change: non-positive dims");
    const BinaryMask gt = rasterize_polygons(gt_polys, width, height);
    const BinaryMask pred = rasterize_polygons(pred_polys, width, height);
    PixelScore s;
    for (size_t i = 0; i < gt.bits.size(); ++i) {
        if (gt.bits[i] && pred.bits[i]) ++s.tp;
        else if (pred.bits[i]) ++s.fp;
        else if (gt.bits[i]) ++s.fn;
    }
    s.precision = safe_ratio(s.tp, s.tp + s.fp);
    s.recall = safe_ratio(s.tp, s.tp + s.fn);
    s.f1 = (s.tp + s.fp + s.fn == 0) ? 1.0 : f1_of(s.precision, s.recall);
    return s;
}

GeoScore score_geoloc(const GeoLocAnswer& gt, const GeoLocAnswer& pred) {
    GeoScore s;
    s.km_error = haversine_km(gt.location, pred.location);
    auto canon = [](const std::string& text) {
        std::string out;
        for (const char c : text)
            if (!std::isspace(static_cast<unsigned char>(c)))
                out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    s.city_match = canon(gt.city) == canon(pred.city);
    return s;
}

std::string normalize_caption(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (const char c : text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += static_cast<char>(std::tolower(u));
        } else if (std::isspace(u)) {
            pending_space = true;
        }
        // punctuation dropped
    }
    return out;
}

namespace {

struct Accumulators {
    // detection + grounding
    size_t det_tp = 0, det_fp = 0, det_fn = 0;
    double det_iou_sum = 0.0;
    // seg
    double seg_iou_mass = 0.0;
    size_t seg_slots = 0;
    size_t seg_kp_total = 0, seg_kp_inside = 0;
    // change
    size_t chg_tp = 0, chg_fp = 0, chg_fn = 0;
    // geoloc
    std::vector<double> km_errors;
    size_t city_matches = 0, geo_scored = 0;
    // caption
    size_t cap_exact = 0, cap_norm = 0, cap_total = 0;
};

std::vector<Polygon> to_pixel_polys(const PolyList& polys, const CoordSpace& space) {
    std::vector<Polygon> out;
    for (const Polygon& p : polys.polygons) {
        std::vector<Point> verts = denormalize(p.vertices, space);
        out.push_back(Polygon{std::move(verts)});
    }
    return out;
}

bool point_in_hbb(const Point& p, const HorizontalBox& b) {
    return p.x >= b.min.x && p.x <= b.max.x && p.y >= b.min.y && p.y <= b.max.y;
}

void score_sample(const InstructionRecord& gt, const AnswerPayload& gt_payload,
                  const AnswerPayload& pred_payload, double iou_thresh, Accumulators& acc) {
    switch (gt.tag) {
        case TaskTag::detection:
        case TaskTag::grounding: {
            const auto& g = std::get<RboxList>(gt_payload);
            const auto& p = std::get<RboxList>(pred_payload);
            const BoxMatching m = match_boxes(g, p, iou_thresh);
            acc.det_tp += m.tp;
            acc.det_fp += m.fp;
            acc.det_fn += m.fn;
            acc.det_iou_sum += std::accumulate(m.ious.begin(), m.ious.end(), 0.0);
            break;
        }
        case TaskTag::seg: {
            const auto& g = std::get<SegPrompt>(gt_payload);
            const auto& p = std::get<SegPrompt>(pred_payload);
            // Greedy matching of targets by horizontal box IoU.
            struct Entry {
                double iou;
                size_t gi, pi;
            };
            std::vector<Entry> entries;
            for (size_t gi = 0; gi < g.targets.size(); ++gi)
                for (size_t pi = 0; pi < p.targets.size(); ++pi)
                    entries.push_back(
                        {horizontal_iou(g.targets[gi].box, p.targets[pi].box), gi, pi});
            std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
                if (a.iou != b.iou) return a.iou > b.iou;
                if (a.gi != b.gi) return a.gi < b.gi;
                return a.pi < b.pi;
            });
            std::vector<bool> gu(g.targets.size(), false), pu(p.targets.size(), false);
            acc.seg_slots += std::max(g.targets.size(), p.targets.size());
            for (const Entry& e : entries) {
                if (gu[e.gi] || pu[e.pi] || e.iou <= 0.0) continue;
                gu[e.gi] = pu[e.pi] = true;
                acc.seg_iou_mass += e.iou;
                for (const Point& kp : p.targets[e.pi].keypoints) {
                    ++acc.seg_kp_total;
                    if (point_in_hbb(kp, g.targets[e.gi].box)) ++acc.seg_kp_inside;
                }
            }
            // Keypoints of unmatched predictions count as misses.
            for (size_t pi = 0; pi < p.targets.size(); ++pi)
                if (!pu[pi]) acc.seg_kp_total += p.targets[pi].keypoints.size();
            break;
        }
        case TaskTag::change: {
            if (gt.space.image_w <= 0 || gt.space.image_h <= 0)
                throw std::invalid_argument("evaluate: change record " + gt.id +
                                            " lacks image dimensions");
            const auto gt_px = to_pixel_polys(std::get<PolyList>(gt_payload), gt.space);
            const auto pr_px = to_pixel_polys(std::get<PolyList>(pred_payload), gt.space);
            const PixelScore s = score_change(gt_px, pr_px, gt.space.image_w, gt.space.image_h);
            acc.chg_tp += s.tp;
            acc.chg_fp += s.fp;
            acc.chg_fn += s.fn;
            break;
        }
        case TaskTag::geoloc: {
            const GeoScore s = score_geoloc(std::get<GeoLocAnswer>(gt_payload),
                                            std::get<GeoLocAnswer>(pred_payload));
            acc.km_errors.push_back(s.km_error);
            if (s.city_match) ++acc.city_matches;
            ++acc.geo_scored;
            break;
        }
        case TaskTag::caption:
        case TaskTag::identify: {
            const auto& g = std::get<Caption>(gt_payload);
            const auto& p = std::get<Caption>(pred_payload);
            ++acc.cap_total;
            if (g.text == p.text) ++acc.cap_exact;
            if (normalize_caption(g.text) == normalize_caption(p.text)) ++acc.cap_norm;
            break;
        }
    }
}

AnswerPayload empty_payload_for(TaskTag tag) {
    switch (tag) {
        case TaskTag::detection:
        case TaskTag::grounding: return RboxList{};
        case TaskTag::seg: return SegPrompt{};
        case TaskTag::change: return PolyList{};
        case TaskTag::geoloc: return GeoLocAnswer{"", {0.0, 0.0}};
        case TaskTag::caption:
        case TaskTag::identify: return Caption{""};
    }
    return Caption{""};
}

}  // namespace

EvalReport evaluate(const std::vector<InstructionRecord>& gt,
                    const std::vector<InstructionRecord>& pred, double iou_thresh) {
    std::map<std::string, const InstructionRecord*> pred_by_id;
    for (const InstructionRecord& p : pred) pred_by_id[p.id] = &p;
    std::vector<std::string> missing;
    std::set<std::string> gt_ids;
    for (const InstructionRecord& g : gt) {
        gt_ids.insert(g.id);
        if (!pred_by_id.count(g.id)) missing.push_back(g.id);
    }
    for (const InstructionRecord& p : pred)
        if (!gt_ids.count(p.id)) missing.push_back(p.id);
    if (!missing.empty()) {
        std::string what = "evaluate: id mismatch:";
        for (const std::string& id : missing) what += " " + id;
        throw std::invalid_argument(what);
    }

    EvalReport report;
    Accumulators acc;
    bool has_det = false, has_seg = false, has_chg = false, has_geo = false, has_cap = false;
    for (const InstructionRecord& g : gt) {
        const std::string task = tag_name(g.tag);
        ++report.counts[task].samples;
        const AnswerPayload gt_payload = g.payload();
        AnswerPayload pred_payload = empty_payload_for(g.tag);
        bool geo_parse_failed = false;
        try {
            pred_payload = parse_answer(pred_by_id.at(g.id)->answer, g.tag, g.space);
        } catch (const ParseFailure&) {
            ++report.counts[task].parse_failures;
            geo_parse_failed = true;
        }
        switch (g.tag) {
            case TaskTag::detection:
            case TaskTag::grounding: has_det = true; break;
            case TaskTag::seg: has_seg = true; break;
            case TaskTag::change: has_chg = true; break;
            case TaskTag::geoloc: has_geo = true; break;
            default: has_cap = true; break;
        }
        // Unparseable geolocation cannot score as "empty"; it is excluded
        // from the distance mean and only reported as a parse failure.
        if (g.tag == TaskTag::geoloc && geo_parse_failed) continue;
        score_sample(g, gt_payload, pred_payload, iou_thresh, acc);
    }

    if (has_det) {
        DetectionReport d;
        d.tp = acc.det_tp;
        d.fp = acc.det_fp;
        d.fn = acc.det_fn;
        d.precision = safe_ratio(d.tp, d.tp + d.fp);
        d.recall = safe_ratio(d.tp, d.tp + d.fn);
        d.f1 = (d.tp + d.fp + d.fn == 0) ? 1.0 : f1_of(d.precision, d.recall);
        d.mean_iou = d.tp > 0 ? acc.det_iou_sum / static_cast<double>(d.tp)
                              : (d.fp + d.fn == 0 ? 1.0 : 0.0);
        report.detection = d;
    }
    if (has_seg) {
        SegReport s;
        s.mean_box_iou = acc.seg_slots > 0 ? acc.seg_iou_mass / static_cast<double>(acc.seg_slots) : 1.0;
        s.keypoint_in_box_rate = safe_ratio(acc.seg_kp_inside, acc.seg_kp_total);
        report.segmentation = s;
    }
    if (has_chg) {
        PixelScore c;
        c.tp = acc.chg_tp;
        c.fp = acc.chg_fp;
        c.fn = acc.chg_fn;
        c.precision = safe_ratio(c.tp, c.tp + c.fp);
        c.recall = safe_ratio(c.tp, c.tp + c.fn);
        c.f1 = (c.tp + c.fp + c.fn == 0) ? 1.0 : f1_of(c.precision, c.recall);
        report.change = c;
    }
    if (has_geo) {
        GeolocReport g;
        if (!acc.km_errors.empty()) {
            g.mean_km = std::accumulate(acc.km_errors.begin(), acc.km_errors.end(), 0.0) /
                        static_cast<double>(acc.km_errors.size());
            std::vector<double> sorted = acc.km_errors;
            std::sort(sorted.begin(), sorted.end());
            const size_t n = sorted.size();
            g.median_km = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
        }
        g.city_match_rate = safe_ratio(acc.city_matches, acc.geo_scored);
        report.geoloc = g;
    }
    if (has_cap) {
        CaptionReport c;
        c.exact_rate = safe_ratio(acc.cap_exact, acc.cap_total);
        c.normalized_rate = safe_ratio(acc.cap_norm, acc.cap_total);
        report.caption = c;
    }
    return report;
}

EvalReport evaluate_files(const std::string& gt_path, const std::string& pred_path,
                          double iou_thresh) {
    return evaluate(read_records_file(gt_path), read_records_file(pred_path), iou_thresh);
}

std::string EvalReport::to_json() const {
    ordered_json j;
    ordered_json counts_json;
    for (const auto& [task, c] : counts) {
        ordered_json entry;
        entry["samples"] = c.samples;
        entry["parse_failures"] = c.parse_failures;
        counts_json[task] = entry;
    }
    j["counts"] = counts_json;
    if (detection) {
        ordered_json d;
        d["tp"] = detection->tp;
        d["fp"] = detection->fp;
        d["fn"] = detection->fn;
        d["precision"] = detection->precision;
        d["recall"] = detection->recall;
        d["f1"] = detection->f1;
        d["mean_iou"] = detection->mean_iou;
        j["detection"] = d;
    }
    if (segmentation) {
        ordered_json s;
        s["mean_box_iou"] = segmentation->mean_box_iou;
        s["keypoint_in_box_rate"] = segmentation->keypoint_in_box_rate;
        j["segmentation"] = s;
    }
    if (change) {
        ordered_json c;
        c["precision"] = change->precision;
        c["recall"] = change->recall;
        c["f1"] = change->f1;
        j["change"] = c;
    }
    if (geoloc) {
        ordered_json g;
        g["mean_km"] = geoloc->mean_km;
        g["median_km"] = geoloc->median_km;
        g["city_match_rate"] = geoloc->city_match_rate;
        j["geoloc"] = g;
    }
    if (caption) {
        ordered_json c;
        c["exact_rate"] = caption->exact_rate;
        c["normalized_rate"] = caption->normalized_rate;
        j["caption"] = c;
    }
    return j.dump(2);
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    auto row = [&](const std::string& name, const std::string& value) {
        out << name;
        for (size_t i = name.size(); i < 28; ++i) out << ' ';
        out << value << "\n";
    };
    for (const auto& [task, c] : counts)
        row(task, std::to_string(c.samples) + " samples, " + std::to_string(c.parse_failures) +
                      " parse failures");
    if (detection) {
        row("detection precision", format_number(detection->precision));
        row("detection recall", format_number(detection->recall));
        row("detection f1", format_number(detection->f1));
        row("detection mean iou", format_number(detection->mean_iou));
    }
    if (segmentation) {
        row("seg mean box iou", format_number(segmentation->mean_box_iou));
        row("seg keypoint-in-box", format_number(segmentation->keypoint_in_box_rate));
    }
    if (change) {
        row("change precision", format_number(change->precision));
        row("change recall", format_number(change->recall));
        row("change f1", format_number(change->f1));
    }
    if (geoloc) {
        row("geoloc mean km", format_number(geoloc->mean_km));
        row("geoloc median km", format_number(geoloc->median_km));
        row("geoloc city match", format_number(geoloc->city_match_rate));
    }
    if (caption) {
        row("caption exact", format_number(caption->exact_rate));
        row("caption normalized", format_number(caption->normalized_rate));
    }
    return out.str();
}

}  // namespace rsvlts
