#include "rsvlts/convert.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "rsvlts/mask_io.hpp"

namespace rsvlts {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void SceneAnnotation::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("scene: non-positive dimensions");
    for (const SceneObject& o : objects)
        if (!o.rbb && !o.mask)
            throw std::invalid_argument("scene object " + o.id + ": needs rbb or mask");
}

std::vector<std::string> SceneAnnotation::categories() const {
    std::set<std::string> cats;
    for (const SceneObject& o : objects) cats.insert(o.category);
    return {cats.begin(), cats.end()};
}

std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

const std::vector<std::string>& prompt_bank(TaskTag tag) {
    static const std::vector<std::string> detection{
        "Detect all {} in the image.",
        "Find every {} present in this image.",
        "Locate all instances of {} in the image.",
        "Please detect each {} shown in the image.",
        "Identify the positions of all {} in the scene.",
    };
    static const std::vector<std::string> seg{
        "Segment all {} in the image.",
        "Provide segmentation prompts for every {} in the image.",
        "Mark each {} in this image for segmentation.",
        "Segment the {} regions in this image.",
        "Generate box and point prompts for all {} in the image.",
    };
    static const std::vector<std::string> change{
        "What changed between the two images?",
        "Outline the regions that changed from the first image to the second.",
        "Locate the changes between these two images.",
        "Mark every changed area across the image pair.",
        "Identify the change regions between the two acquisitions.",
    };
    static const std::vector<std::string> geoloc{
        "Where was this image taken?",
        "Pinpoint the location where this image was captured.",
        "Identify the city and coordinates of this image.",
        "Which place does this image show?",
        "Give the geographic location of this image.",
    };
    static const std::vector<std::string> grounding{
        "What's the location of {} in this image?",
        "Where is {} in this image?",
        "Point out {} in the image.",
        "Locate {} in this image.",
        "Find {} in the image.",
    };
    static const std::vector<std::string> identify{
        "Could you describe the object at {}?",
        "What is the object at {}?",
        "Describe the object located at {}.",
        "What does the region {} contain?",
        "Tell me about the object at {}.",
    };
    switch (tag) {
        case TaskTag::detection: return detection;
        case TaskTag::seg: return seg;
        case TaskTag::change: return change;
        case TaskTag::geoloc: return geoloc;
        case TaskTag::grounding: return grounding;
        default: return identify;
    }
}

std::string pick_prompt(TaskTag tag, const std::string& record_id, const std::string& category) {
    const auto& bank = prompt_bank(tag);
    std::string tpl = bank[stable_hash(record_id) % bank.size()];
    const size_t slot = tpl.find("{}");
    if (slot != std::string::npos) tpl.replace(slot, 2, category);
    return tpl;
}

namespace {

std::string image_stem(const std::string& path) { return fs::path(path).stem().string(); }

CoordSpace make_space(const ConvertConfig& cfg, int w, int h) {
    CoordSpace space;
    space.mode = cfg.mode;
    space.bins = cfg.bins;
    space.image_w = w;
    space.image_h = h;
    space.validate();
    return space;
}

RotatedBox normalize_box(const RotatedBox& b, const CoordSpace& space) {
    const auto pts = normalize({b.corners.begin(), b.corners.end()}, space);
    RotatedBox out;
    std::copy(pts.begin(), pts.end(), out.corners.begin());
    return out;
}

RotatedBox object_rbb(const SceneObject& o) {
    if (o.rbb) return *o.rbb;
    // Mask-only object: fall back to the axis-aligned bounds.
    const HorizontalBox hbb = mask_to_hbb(*o.mask);
    RotatedBox b;
    b.corners = {{{hbb.min.x, hbb.min.y}, {hbb.max.x, hbb.min.y},
                  {hbb.max.x, hbb.max.y}, {hbb.min.x, hbb.max.y}}};
    return b;
}

}  // namespace

InstructionRecord convert_detection(const SceneAnnotation& sa, const std::string& category,
                                    const ConvertConfig& cfg) {
    sa.validate();
    InstructionRecord r;
    r.id = image_stem(sa.image) + ":detection:" + category;
    r.tag = TaskTag::detection;
    r.images = {sa.image};
    r.space = make_space(cfg, sa.width, sa.height);
    RboxList answer;
    for (const SceneObject& o : sa.objects)
        if (o.category == category) answer.boxes.push_back(normalize_box(object_rbb(o), r.space));
    r.set_payload(answer);
    r.prompt = build_instruction(r.tag, pick_prompt(r.tag, r.id, category));
    r.meta["category"] = category;
    return r;
}

InstructionRecord convert_segmentation(const SceneAnnotation& sa, const std::string& category,
                                       const ConvertConfig& cfg) {
    sa.validate();
    InstructionRecord r;
    r.id = image_stem(sa.image) + ":seg:" + category;
    r.tag = TaskTag::seg;
    r.images = {sa.image};
    r.space = make_space(cfg, sa.width, sa.height);
    SegPrompt answer;
    for (const SceneObject& o : sa.objects) {
        if (o.category != category) continue;
        if (!o.mask)
            throw std::invalid_argument("convert_segmentation: object " + o.id + " has no mask");
        SegTarget t;
        const HorizontalBox hbb = mask_to_hbb(*o.mask);
        const auto box_pts = normalize({hbb.min, hbb.max}, r.space);
        t.box = {box_pts[0], box_pts[1]};
        t.keypoints = normalize(sample_keypoints(*o.mask, cfg.n_keypoints), r.space);
        answer.targets.push_back(std::move(t));
    }
    r.set_payload(answer);
    r.prompt = build_instruction(r.tag, pick_prompt(r.tag, r.id, category));
    r.meta["category"] = category;
    return r;
}

InstructionRecord convert_change(const BinaryMask& change_mask, const std::string& image_a,
                                 const std::string& image_b, const std::string& caption,
                                 const ConvertConfig& cfg) {
    InstructionRecord r;
    r.id = image_stem(image_a) + ":change";
    r.tag = TaskTag::change;
    r.images = {image_a, image_b};
    r.space = make_space(cfg, change_mask.width, change_mask.height);
    PolyList answer;
    for (const Polygon& poly : trace_mask_to_polygons(change_mask, cfg.trace_eps)) {
        std::vector<Point> verts = normalize(poly.vertices, r.space);
        // Bin rounding can collapse neighbouring vertices.
        std::vector<Point> cleaned;
        for (const Point& p : verts)
            if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
        while (cleaned.size() > 1 && cleaned.front() == cleaned.back()) cleaned.pop_back();
        if (cleaned.size() < 3) continue;
        if (signed_area(cleaned) == 0.0) continue;
        answer.polygons.push_back(Polygon{std::move(cleaned)});
    }
    r.set_payload(answer);
    r.prompt = build_instruction(
        r.tag, caption.empty() ? pick_prompt(r.tag, r.id, "") : caption);
    return r;
}

InstructionRecord convert_geoloc(const std::string& image, const std::string& city, double lat,
                                 double lon, const ConvertConfig& cfg) {
    InstructionRecord r;
    r.id = image_stem(image) + ":geoloc";
    r.tag = TaskTag::geoloc;
    r.images = {image};
    // Geolocation answers carry lat/lon, not image coordinates.
    r.space = CoordSpace{CoordMode::pixel, cfg.bins, 0, 0};
    GeoLocAnswer g{city, {lat, lon}};
    g.location.validate();
    r.set_payload(g);
    r.prompt = build_instruction(r.tag, pick_prompt(r.tag, r.id, ""));
    return r;
}

std::string segmenter_prompt_line(const InstructionRecord& record) {
    if (record.tag != TaskTag::seg)
        throw std::invalid_argument("segmenter prompts require seg records, got " +
                                    tag_name(record.tag) + " in " + record.id);
    const auto payload = std::get<SegPrompt>(record.payload());
    ordered_json j;
    j["image"] = record.images.front();
    ordered_json targets = ordered_json::array();
    for (const SegTarget& t : payload.targets) {
        const auto box_px = denormalize({t.box.min, t.box.max}, record.space);
        const auto pts_px = denormalize(t.keypoints, record.space);
        ordered_json entry;
        entry["box"] = {box_px[0].x, box_px[0].y, box_px[1].x, box_px[1].y};
        ordered_json points = ordered_json::array();
        for (const Point& p : pts_px) points.push_back({p.x, p.y});
        entry["points"] = points;
        entry["labels"] = std::vector<int>(pts_px.size(), 1);
        targets.push_back(entry);
    }
    j["targets"] = targets;
    return j.dump();
}

void emit_segmenter_prompts(const std::vector<InstructionRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open prompt file for writing: " + path);
    for (const InstructionRecord& r : records) out << segmenter_prompt_line(r) << "\n";
}

SceneAnnotation scene_from_json(const std::string& json_text, const std::string& base_dir) {
    const ordered_json j = ordered_json::parse(json_text);
    SceneAnnotation sa;
    sa.image = j.at("image").get<std::string>();
    sa.width = j.at("width").get<int>();
    sa.height = j.at("height").get<int>();
    int auto_id = 0;
    for (const auto& obj : j.value("objects", ordered_json::array())) {
        SceneObject o;
        o.id = obj.value("id", image_stem(sa.image) + ":o" + std::to_string(auto_id));
        ++auto_id;
        o.category = obj.at("category").get<std::string>();
        if (obj.contains("corners")) {
            const auto nums = obj.at("corners").get<std::vector<double>>();
            if (nums.size() != 8)
                throw std::invalid_argument("scene object " + o.id + ": corners needs 8 numbers");
            RotatedBox b;
            for (size_t i = 0; i < 4; ++i) b.corners[i] = {nums[2 * i], nums[2 * i + 1]};
            o.rbb = b;
        } else if (obj.contains("params")) {
            const auto nums = obj.at("params").get<std::vector<double>>();
            if (nums.size() != 5)
                throw std::invalid_argument("scene object " + o.id + ": params needs 5 numbers");
            o.rbb = rbb_from_params({nums[0], nums[1], nums[2], nums[3], nums[4]});
        }
        if (obj.contains("mask")) {
            const fs::path p = fs::path(base_dir) / obj.at("mask").get<std::string>();
            o.mask = read_mask_file(p.string());
        }
        if (obj.contains("attributes"))
            o.attributes = obj.at("attributes").get<std::map<std::string, std::string>>();
        sa.objects.push_back(std::move(o));
    }
    sa.validate();
    return sa;
}

std::vector<SceneAnnotation> read_scenes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    const std::string base_dir = fs::path(path).parent_path().string();
    std::vector<SceneAnnotation> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(scene_from_json(line, base_dir));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace rsvlts
