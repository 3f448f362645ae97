#include "rsvlts/textcodec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace rsvlts {

namespace {

constexpr std::array<std::pair<TaskTag, const char*>, 7> kTags{{
    {TaskTag::detection, "detection"},
    {TaskTag::grounding, "grounding"},
    {TaskTag::seg, "seg"},
    {TaskTag::change, "change"},
    {TaskTag::geoloc, "geoloc"},
    {TaskTag::caption, "caption"},
    {TaskTag::identify, "identify"},
}};

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// All decimal numbers in a string slice, with their start offsets.
std::vector<double> scan_numbers(const std::string& text, size_t begin, size_t end) {
    std::vector<double> out;
    size_t i = begin;
    while (i < end) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            ((c == '-' || c == '+' || c == '.') && i + 1 < end &&
             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            double value = 0.0;
            const char* first = text.data() + i;
            const char* last = text.data() + end;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec == std::errc{}) {
                out.push_back(value);
                i = static_cast<size_t>(ptr - text.data());
                continue;
            }
        }
        ++i;
    }
    return out;
}

std::vector<Point> numbers_to_points(const std::vector<double>& nums, const std::string& context) {
    if (nums.size() % 2 != 0)
        throw ParseFailure("odd coordinate count in point set: " + context);
    std::vector<Point> pts;
    pts.reserve(nums.size() / 2);
    for (size_t i = 0; i < nums.size(); i += 2) pts.push_back({nums[i], nums[i + 1]});
    return pts;
}

// [begin, end) offsets of every {...} group, left to right.
std::vector<std::pair<size_t, size_t>> brace_groups(const std::string& text) {
    std::vector<std::pair<size_t, size_t>> groups;
    size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
        const size_t close = text.find('}', pos);
        if (close == std::string::npos) break;
        groups.emplace_back(pos, close + 1);
        pos = close + 1;
    }
    return groups;
}

double round_coord(double v, const CoordSpace& space) {
    if (space.mode == CoordMode::normalized) return static_cast<double>(std::llround(v));
    return v;
}

void append_point_set(std::string& out, const std::vector<Point>& pts, const CoordSpace& space) {
    out += '{';
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i) out += ", ";
        out += '(';
        out += format_number(round_coord(pts[i].x, space));
        out += ", ";
        out += format_number(round_coord(pts[i].y, space));
        out += ')';
    }
    out += '}';
}

void check_finite(const std::vector<Point>& pts) {
    for (const Point& p : pts)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("serialize: non-finite coordinate");
}

}  // namespace

bool RboxList::operator==(const RboxList& o) const {
    if (boxes.size() != o.boxes.size()) return false;
    for (size_t i = 0; i < boxes.size(); ++i)
        if (boxes[i].corners != o.boxes[i].corners) return false;
    return true;
}

bool PolyList::operator==(const PolyList& o) const {
    if (polygons.size() != o.polygons.size()) return false;
    for (size_t i = 0; i < polygons.size(); ++i)
        if (polygons[i].vertices != o.polygons[i].vertices) return false;
    return true;
}

std::string tag_name(TaskTag tag) {
    for (const auto& [t, name] : kTags)
        if (t == tag) return name;
    return "unknown";
}

std::string tag_token(TaskTag tag) { return "[" + tag_name(tag) + "]"; }

std::optional<TaskTag> tag_from_name(const std::string& name) {
    for (const auto& [t, n] : kTags)
        if (name == n) return t;
    return std::nullopt;
}

std::optional<TaskTag> tag_from_token(const std::string& token) {
    if (token.size() < 3 || token.front() != '[' || token.back() != ']') return std::nullopt;
    return tag_from_name(token.substr(1, token.size() - 2));
}

void CoordSpace::validate() const {
    if (bins < 2) throw std::invalid_argument("CoordSpace: bins must be >= 2");
    if (mode == CoordMode::normalized && (image_w <= 0 || image_h <= 0))
        throw std::invalid_argument("CoordSpace: image dims required in normalized mode");
}

bool payload_matches_tag(const AnswerPayload& payload, TaskTag tag) {
    switch (tag) {
        case TaskTag::detection:
        case TaskTag::grounding:
            return std::holds_alternative<RboxList>(payload);
        case TaskTag::seg:
            return std::holds_alternative<SegPrompt>(payload);
        case TaskTag::change:
            return std::holds_alternative<PolyList>(payload);
        case TaskTag::geoloc:
            return std::holds_alternative<GeoLocAnswer>(payload);
        case TaskTag::caption:
        case TaskTag::identify:
            return std::holds_alternative<Caption>(payload);
    }
    return false;
}

bool payload_empty(const AnswerPayload& payload) {
    if (const auto* r = std::get_if<RboxList>(&payload)) return r->boxes.empty();
    if (const auto* s = std::get_if<SegPrompt>(&payload)) return s->targets.empty();
    if (const auto* p = std::get_if<PolyList>(&payload)) return p->polygons.empty();
    if (const auto* c = std::get_if<Caption>(&payload)) return c->text.empty();
    return false;
}

std::string format_number(double v) {
    if (std::floor(v) == v && std::abs(v) < 1e15) {
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(v));
        return std::string(buf, ptr);
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<Point> normalize(const std::vector<Point>& points, const CoordSpace& space) {
    space.validate();
    if (space.mode == CoordMode::pixel) return points;
    std::vector<Point> out;
    out.reserve(points.size());
    const double bins = space.bins;
    auto to_bin = [&](double p, int extent) {
        const double b = std::floor(p * bins / extent);
        return std::clamp(b, 0.0, bins - 1.0);
    };
    for (const Point& p : points) out.push_back({to_bin(p.x, space.image_w), to_bin(p.y, space.image_h)});
    return out;
}

std::vector<Point> denormalize(const std::vector<Point>& points, const CoordSpace& space) {
    space.validate();
    if (space.mode == CoordMode::pixel) return points;
    std::vector<Point> out;
    out.reserve(points.size());
    const double bins = space.bins;
    for (const Point& p : points)
        out.push_back({(p.x + 0.5) * space.image_w / bins, (p.y + 0.5) * space.image_h / bins});
    return out;
}

std::string serialize_point_set(const std::vector<Point>& points) {
    check_finite(points);
    std::string out;
    append_point_set(out, points, CoordSpace{CoordMode::pixel});
    return out;
}

std::vector<Point> parse_point_set(const std::string& text) {
    const auto groups = brace_groups(text);
    if (groups.empty()) throw ParseFailure("no point-set group found in: " + text);
    const auto [b, e] = groups.front();
    return numbers_to_points(scan_numbers(text, b, e), text.substr(b, e - b));
}

namespace {

std::vector<Point> box_corner_points(const RotatedBox& b) {
    return {b.corners.begin(), b.corners.end()};
}

RotatedBox points_to_rbox(const std::vector<Point>& pts, const std::string& context) {
    if (pts.size() != 4) throw ParseFailure("expected 4 corners, got " +
                                            std::to_string(pts.size()) + " in: " + context);
    RotatedBox b;
    // Source corner order is kept verbatim (reserialization is byte-exact);
    // downstream geometry accepts either winding.
    std::copy(pts.begin(), pts.end(), b.corners.begin());
    return b;
}

// True when the whole answer is a single empty group, i.e. "{}".
bool is_empty_answer(const std::string& text) {
    const std::string t = trim(text);
    const auto groups = brace_groups(t);
    return groups.size() == 1 && scan_numbers(t, groups[0].first, groups[0].second).empty();
}

size_t find_keyword(const std::string& text, const std::string& word, size_t from) {
    size_t pos = from;
    while ((pos = text.find(word, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
        const size_t after = pos + word.size();
        const bool right_ok = after >= text.size() ||
                              !std::isalnum(static_cast<unsigned char>(text[after]));
        if (left_ok && right_ok) return pos;
        pos = after;
    }
    return std::string::npos;
}

}  // namespace

std::string serialize_answer(const AnswerPayload& payload, const CoordSpace& space) {
    std::string out;
    if (const auto* r = std::get_if<RboxList>(&payload)) {
        if (r->boxes.empty()) return "{}";
        for (size_t i = 0; i < r->boxes.size(); ++i) {
            if (i) out += "; ";
            const auto pts = box_corner_points(r->boxes[i]);
            check_finite(pts);
            append_point_set(out, pts, space);
        }
    } else if (const auto* s = std::get_if<SegPrompt>(&payload)) {
        if (s->targets.empty()) return "{}";
        for (size_t i = 0; i < s->targets.size(); ++i) {
            if (i) out += "; ";
            const SegTarget& t = s->targets[i];
            check_finite(t.keypoints);
            out += "box ";
            append_point_set(out, {t.box.min, t.box.max}, space);
            out += " points ";
            append_point_set(out, t.keypoints, space);
        }
    } else if (const auto* p = std::get_if<PolyList>(&payload)) {
        if (p->polygons.empty()) return "{}";
        for (size_t i = 0; i < p->polygons.size(); ++i) {
            if (i) out += "; ";
            std::vector<Point> closed = p->polygons[i].vertices;
            check_finite(closed);
            closed.push_back(closed.front());  // wire form is closed
            append_point_set(out, closed, space);
        }
    } else if (const auto* g = std::get_if<GeoLocAnswer>(&payload)) {
        g->location.validate();
        out = "[" + g->city + ", (" + format_number(g->location.lat) + ", " +
              format_number(g->location.lon) + ")]";
    } else if (const auto* c = std::get_if<Caption>(&payload)) {
        out = c->text;
    }
    return out;
}

AnswerPayload parse_answer(const std::string& text, TaskTag tag, const CoordSpace& space) {
    space.validate();
    switch (tag) {
        case TaskTag::detection:
        case TaskTag::grounding: {
            RboxList out;
            if (is_empty_answer(text)) return out;
            const auto groups = brace_groups(text);
            if (groups.empty()) throw ParseFailure("no box group found in: " + text);
            for (const auto& [b, e] : groups) {
                const std::string ctx = text.substr(b, e - b);
                out.boxes.push_back(points_to_rbox(numbers_to_points(scan_numbers(text, b, e), ctx), ctx));
            }
            return out;
        }
        case TaskTag::seg: {
            SegPrompt out;
            if (is_empty_answer(text)) return out;
            size_t pos = 0;
            while (true) {
                const size_t box_kw = find_keyword(text, "box", pos);
                if (box_kw == std::string::npos) break;
                const auto groups = brace_groups(text.substr(box_kw));
                if (groups.size() < 2)
                    throw ParseFailure("seg target missing box/points groups", box_kw);
                const auto box_pts = numbers_to_points(
                    scan_numbers(text, box_kw + groups[0].first, box_kw + groups[0].second), text);
                if (box_pts.size() != 2)
                    throw ParseFailure("seg box group must hold 2 points", box_kw);
                const size_t pts_kw = find_keyword(text, "points", box_kw);
                if (pts_kw == std::string::npos || pts_kw > box_kw + groups[1].first)
                    throw ParseFailure("seg target missing points keyword", box_kw);
                const auto key_pts = numbers_to_points(
                    scan_numbers(text, box_kw + groups[1].first, box_kw + groups[1].second), text);
                SegTarget t;
                t.box.min = {std::min(box_pts[0].x, box_pts[1].x), std::min(box_pts[0].y, box_pts[1].y)};
                t.box.max = {std::max(box_pts[0].x, box_pts[1].x), std::max(box_pts[0].y, box_pts[1].y)};
                t.keypoints = key_pts;
                out.targets.push_back(std::move(t));
                pos = box_kw + groups[1].second;
            }
            if (out.targets.empty()) throw ParseFailure("no seg targets found in: " + text);
            return out;
        }
        case TaskTag::change: {
            PolyList out;
            if (is_empty_answer(text)) return out;
            const auto groups = brace_groups(text);
            if (groups.empty()) throw ParseFailure("no polygon group found in: " + text);
            for (const auto& [b, e] : groups) {
                auto pts = numbers_to_points(scan_numbers(text, b, e), text.substr(b, e - b));
                if (pts.size() >= 4 && pts.front() == pts.back()) pts.pop_back();
                if (pts.size() < 3) throw ParseFailure("polygon group with fewer than 3 vertices", b);
                out.polygons.push_back(Polygon{std::move(pts)});
            }
            return out;
        }
        case TaskTag::geoloc: {
            const size_t open = text.find('[');
            const size_t close = text.find(']', open == std::string::npos ? 0 : open);
            if (open == std::string::npos || close == std::string::npos)
                throw ParseFailure("no [city, (lat, lon)] group in: " + text);
            const std::string inner = text.substr(open + 1, close - open - 1);
            const size_t paren = inner.rfind('(');
            if (paren == std::string::npos)
                throw ParseFailure("no coordinate pair in geoloc answer: " + text);
            const auto nums = scan_numbers(inner, paren, inner.size());
            if (nums.size() != 2) throw ParseFailure("geoloc needs exactly 2 coordinates: " + text);
            std::string city = inner.substr(0, paren);
            const size_t comma = city.rfind(',');
            if (comma != std::string::npos) city = city.substr(0, comma);
            GeoLocAnswer g{trim(city), {nums[0], nums[1]}};
            try {
                g.location.validate();
            } catch (const std::invalid_argument& e) {
                throw ParseFailure(e.what());
            }
            return g;
        }
        case TaskTag::caption:
        case TaskTag::identify:
            return Caption{trim(text)};
    }
    throw ParseFailure("unknown task tag");
}

std::string build_instruction(TaskTag tag, const std::string& prompt) {
    const auto [existing, rest] = split_instruction(prompt);
    if (existing == tag) return prompt;
    return tag_token(tag) + " " + prompt;
}

std::pair<std::optional<TaskTag>, std::string> split_instruction(const std::string& text) {
    size_t b = 0;
    while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    if (b < text.size() && text[b] == '[') {
        const size_t close = text.find(']', b);
        if (close != std::string::npos) {
            const auto tag = tag_from_name(text.substr(b + 1, close - b - 1));
            if (tag) {
                size_t r = close + 1;
                while (r < text.size() && std::isspace(static_cast<unsigned char>(text[r]))) ++r;
                return {*tag, text.substr(r)};
            }
        }
    }
    return {std::nullopt, text};
}

}  // namespace rsvlts
