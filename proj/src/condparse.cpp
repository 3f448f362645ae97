#include "rsvlts/condparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rsvlts {

using ordered_json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kHeadVerbs{
    "detect", "find", "locate", "segment", "identify", "show", "select",
    "ground", "outline", "mark", "spot", "get"};

const std::set<std::string> kSkipWords{
    "all", "the", "a", "an", "any", "every", "each", "please", "me", "us",
    "what", "whats", "what's", "where", "wheres", "is", "are", "in", "on", "at",
    "this", "that", "image", "picture", "scene", "photo", "location",
    "position", "of", "out", "instances", "instance", "one", "ones", "and"};

const std::set<std::string> kColors{
    "red", "green", "blue", "yellow", "white", "black", "gray", "grey",
    "orange", "purple", "brown", "pink", "cyan"};

std::optional<std::string> size_value(const std::string& w) {
    if (w == "large" || w == "big" || w == "huge") return "large";
    if (w == "small" || w == "tiny" || w == "little") return "small";
    return std::nullopt;
}

std::optional<SuperlativeMetric> superlative_value(const std::string& w) {
    if (w == "largest" || w == "biggest" || w == "hugest") return SuperlativeMetric::largest;
    if (w == "smallest" || w == "tiniest" || w == "littlest") return SuperlativeMetric::smallest;
    return std::nullopt;
}

std::optional<SpatialRelation> direction_value(const std::string& w) {
    if (w == "east" || w == "eastern") return SpatialRelation::east_of;
    if (w == "west" || w == "western") return SpatialRelation::west_of;
    if (w == "north" || w == "northern") return SpatialRelation::north_of;
    if (w == "south" || w == "southern") return SpatialRelation::south_of;
    if (w == "left") return SpatialRelation::left_of;
    if (w == "right") return SpatialRelation::right_of;
    if (w == "above" || w == "over") return SpatialRelation::above;
    if (w == "below" || w == "under" || w == "beneath") return SpatialRelation::below;
    if (w == "near" || w == "nearby" || w == "beside" || w == "close" || w == "next")
        return SpatialRelation::near;
    return std::nullopt;
}

// Words skipped between a direction word and its reference noun.
const std::set<std::string> kRefSkip{"bank", "side", "of", "the", "a", "an", "to", "from"};

struct Token {
    std::string lower;
    std::string original;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        std::string lower = cur;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        tokens.push_back({lower, cur});
        cur.clear();
    };
    for (const char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '\'' || ch == '-') cur += ch;
        else flush();
    }
    flush();
    return tokens;
}

std::string join_tokens(const std::vector<Token>& tokens, size_t lo, size_t hi) {
    std::string out;
    for (size_t i = lo; i <= hi && i < tokens.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i].lower;
    }
    return out;
}

}  // namespace

std::string relation_name(SpatialRelation r) {
    switch (r) {
        case SpatialRelation::east_of: return "east_of";
        case SpatialRelation::west_of: return "west_of";
        case SpatialRelation::north_of: return "north_of";
        case SpatialRelation::south_of: return "south_of";
        case SpatialRelation::left_of: return "left_of";
        case SpatialRelation::right_of: return "right_of";
        case SpatialRelation::above: return "above";
        case SpatialRelation::below: return "below";
        case SpatialRelation::near: return "near";
    }
    return "unknown";
}

std::optional<SpatialRelation> relation_from_name(const std::string& name) {
    for (const SpatialRelation r :
         {SpatialRelation::east_of, SpatialRelation::west_of, SpatialRelation::north_of,
          SpatialRelation::south_of, SpatialRelation::left_of, SpatialRelation::right_of,
          SpatialRelation::above, SpatialRelation::below, SpatialRelation::near})
        if (relation_name(r) == name) return r;
    return std::nullopt;
}

std::string metric_name(SuperlativeMetric m) {
    switch (m) {
        case SuperlativeMetric::largest: return "largest";
        case SuperlativeMetric::smallest: return "smallest";
        case SuperlativeMetric::count: return "count";
    }
    return "unknown";
}

std::string singularize(const std::string& noun) {
    if (noun.size() > 3 && noun.ends_with("ies")) return noun.substr(0, noun.size() - 3) + "y";
    if (noun.size() > 3 && noun.ends_with("es")) {
        const std::string base = noun.substr(0, noun.size() - 2);
        if (base.ends_with("s") || base.ends_with("x") || base.ends_with("ch") || base.ends_with("sh"))
            return base;
    }
    if (noun.size() > 2 && noun.ends_with("s") && !noun.ends_with("ss"))
        return noun.substr(0, noun.size() - 1);
    return noun;
}

std::string SubInstruction::describe() const {
    switch (kind) {
        case ConditionKind::select_category: return "select_category(" + category + ")";
        case ConditionKind::spatial_relation:
            return "spatial_relation(" + relation_name(relation) + ", " + reference + ")";
        case ConditionKind::attribute: return "attribute(" + attr_key + ", " + attr_value + ")";
        case ConditionKind::superlative: return "superlative(" + metric_name(metric) + ")";
        case ConditionKind::opaque: return "opaque(" + raw_text + ")";
    }
    return "unknown";
}

ConditionChain parse_conditions(const std::string& instruction) {
    const std::vector<Token> tokens = tokenize(instruction);

    // "how many" / "count" mark the count superlative.
    std::vector<SubInstruction> superlatives;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (const auto m = superlative_value(tokens[i].lower)) {
            SubInstruction s;
            s.kind = ConditionKind::superlative;
            s.metric = *m;
            s.raw_text = tokens[i].lower;
            superlatives.push_back(std::move(s));
        } else if (tokens[i].lower == "count" ||
                   (tokens[i].lower == "how" && i + 1 < tokens.size() &&
                    tokens[i + 1].lower == "many")) {
            SubInstruction s;
            s.kind = ConditionKind::superlative;
            s.metric = SuperlativeMetric::count;
            s.raw_text = tokens[i].lower;
            superlatives.push_back(std::move(s));
        }
    }

    // Category head: first token that is not a verb, a skip word, an
    // adjective, or a direction word.
    size_t category_idx = tokens.size();
    size_t head_idx = 0;
    bool saw_head = false;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const std::string& w = tokens[i].lower;
        if (kHeadVerbs.contains(w)) {
            if (!saw_head) {
                head_idx = i;
                saw_head = true;
            }
            continue;
        }
        if (kSkipWords.contains(w) || kColors.contains(w) || size_value(w) ||
            superlative_value(w) || w == "count" || w == "how" || w == "many")
            continue;
        if (direction_value(w)) break;  // no category before the spatial phrase
        category_idx = i;
        break;
    }
    if (category_idx >= tokens.size()) {
        SubInstruction opaque;
        opaque.kind = ConditionKind::opaque;
        opaque.raw_text = instruction;
        return ConditionChain{{std::move(opaque)}};
    }

    ConditionChain chain;
    SubInstruction head;
    head.kind = ConditionKind::select_category;
    head.category = singularize(tokens[category_idx].lower);
    head.raw_text = join_tokens(tokens, saw_head ? head_idx : category_idx, category_idx);
    chain.steps.push_back(std::move(head));

    // Adjectives preceding the category modify it.
    for (size_t i = 0; i < category_idx; ++i) {
        const std::string& w = tokens[i].lower;
        SubInstruction attr;
        attr.kind = ConditionKind::attribute;
        attr.raw_text = w;
        if (kColors.contains(w)) {
            attr.attr_key = "color";
            attr.attr_value = w == "grey" ? "gray" : w;
            chain.steps.push_back(std::move(attr));
        } else if (const auto sv = size_value(w)) {
            attr.attr_key = "size";
            attr.attr_value = *sv;
            chain.steps.push_back(std::move(attr));
        }
    }

    // Spatial phrases after the category.
    for (size_t i = category_idx + 1; i < tokens.size(); ++i) {
        const auto rel = direction_value(tokens[i].lower);
        if (!rel) continue;
        size_t j = i + 1;
        while (j < tokens.size() && kRefSkip.contains(tokens[j].lower)) ++j;
        if (j >= tokens.size()) continue;
        SubInstruction sp;
        sp.kind = ConditionKind::spatial_relation;
        sp.relation = *rel;
        sp.reference = singularize(tokens[j].lower);
        sp.raw_text = join_tokens(tokens, i, j);
        chain.steps.push_back(std::move(sp));
        i = j;
    }

    for (SubInstruction& s : superlatives) chain.steps.push_back(std::move(s));
    return chain;
}

Point SceneEntity::center() const {
    Point c;
    for (const Point& p : rbb.corners) {
        c.x += p.x / 4.0;
        c.y += p.y / 4.0;
    }
    return c;
}

void SceneGraph::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("scene graph: non-positive dims");
    std::set<std::string> ids;
    for (const SceneEntity& e : entities) {
        if (!ids.insert(e.id).second)
            throw std::invalid_argument("scene graph: duplicate entity id " + e.id);
        for (const Point& p : e.rbb.corners)
            if (p.x < -1e-6 || p.y < -1e-6 || p.x > width + 1e-6 || p.y > height + 1e-6)
                throw std::invalid_argument("scene graph: entity " + e.id + " out of bounds");
    }
}

SceneGraph scene_graph_from_json(const std::string& json_text) {
    const ordered_json j = ordered_json::parse(json_text);
    SceneGraph sg;
    sg.width = j.at("width").get<int>();
    sg.height = j.at("height").get<int>();
    for (const auto& ent : j.value("entities", ordered_json::array())) {
        SceneEntity e;
        e.id = ent.at("id").get<std::string>();
        e.category = ent.at("category").get<std::string>();
        if (ent.contains("corners")) {
            const auto nums = ent.at("corners").get<std::vector<double>>();
            if (nums.size() != 8)
                throw std::invalid_argument("entity " + e.id + ": corners needs 8 numbers");
            for (size_t i = 0; i < 4; ++i) e.rbb.corners[i] = {nums[2 * i], nums[2 * i + 1]};
        } else {
            const auto nums = ent.at("params").get<std::vector<double>>();
            if (nums.size() != 5)
                throw std::invalid_argument("entity " + e.id + ": params needs 5 numbers");
            e.rbb = rbb_from_params({nums[0], nums[1], nums[2], nums[3], nums[4]});
        }
        if (ent.contains("attributes"))
            e.attributes = ent.at("attributes").get<std::map<std::string, std::string>>();
        e.role = ent.value("role", "");
        sg.entities.push_back(std::move(e));
    }
    sg.validate();
    return sg;
}

SceneGraph read_scene_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene graph file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return scene_graph_from_json(buf.str());
}

OracleGrounder::OracleGrounder(SceneGraph scene) : scene_(std::move(scene)) {
    scene_.validate();
}

CandidateSet OracleGrounder::ground_category(const SubInstruction& step) {
    CandidateSet out;
    out.provenance.push_back(step.describe());
    if (step.kind == ConditionKind::opaque) return out;  // oracle cannot ground free text
    for (const SceneEntity& e : scene_.entities)
        if (singularize(e.category) == step.category) out.entries.push_back({e.id, e.rbb});
    return out;
}

CandidateSet OracleGrounder::filter_spatial(const CandidateSet& in, const SubInstruction& step) {
    // Reference region: entities matching the reference noun by category or role.
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    std::vector<Point> ref_centers;
    bool have_ref = false;
    for (const SceneEntity& e : scene_.entities) {
        if (singularize(e.category) != step.reference && singularize(e.role) != step.reference)
            continue;
        ref_centers.push_back(e.center());
        for (const Point& p : e.rbb.corners) {
            if (!have_ref) {
                min_x = max_x = p.x;
                min_y = max_y = p.y;
                have_ref = true;
            } else {
                min_x = std::min(min_x, p.x);
                max_x = std::max(max_x, p.x);
                min_y = std::min(min_y, p.y);
                max_y = std::max(max_y, p.y);
            }
        }
    }
    CandidateSet out;
    out.provenance = in.provenance;
    out.provenance.push_back(step.describe());
    if (!have_ref) return out;
    const double near_radius = 0.2 * std::hypot(scene_.width, scene_.height);
    for (const Candidate& c : in.entries) {
        Point ctr;
        for (const Point& p : c.box.corners) {
            ctr.x += p.x / 4.0;
            ctr.y += p.y / 4.0;
        }
        bool keep = false;
        switch (step.relation) {
            case SpatialRelation::east_of:
            case SpatialRelation::right_of: keep = ctr.x > max_x; break;
            case SpatialRelation::west_of:
            case SpatialRelation::left_of: keep = ctr.x < min_x; break;
            case SpatialRelation::north_of:
            case SpatialRelation::above: keep = ctr.y < min_y; break;
            case SpatialRelation::south_of:
            case SpatialRelation::below: keep = ctr.y > max_y; break;
            case SpatialRelation::near:
                for (const Point& rc : ref_centers)
                    keep = keep || std::hypot(ctr.x - rc.x, ctr.y - rc.y) <= near_radius;
                break;
        }
        if (keep) out.entries.push_back(c);
    }
    return out;
}

CandidateSet OracleGrounder::filter_attribute(const CandidateSet& in, const SubInstruction& step) {
    CandidateSet out;
    out.provenance = in.provenance;
    out.provenance.push_back(step.describe());
    for (const Candidate& c : in.entries) {
        const auto it = std::find_if(scene_.entities.begin(), scene_.entities.end(),
                                     [&](const SceneEntity& e) { return e.id == c.id; });
        if (it == scene_.entities.end()) continue;
        const auto attr = it->attributes.find(step.attr_key);
        if (attr != it->attributes.end() && attr->second == step.attr_value)
            out.entries.push_back(c);
    }
    return out;
}

CandidateSet OracleGrounder::rank_superlative(const CandidateSet& in, const SubInstruction& step) {
    CandidateSet out;
    out.provenance = in.provenance;
    out.provenance.push_back(step.describe());
    if (step.metric == SuperlativeMetric::count || in.entries.empty()) {
        out.entries = in.entries;
        return out;
    }
    const Candidate* best = &in.entries.front();
    double best_area = polygon_area(box_to_polygon(best->box));
    for (const Candidate& c : in.entries) {
        const double area = polygon_area(box_to_polygon(c.box));
        const bool better = step.metric == SuperlativeMetric::largest
                                ? (area > best_area || (area == best_area && c.id < best->id))
                                : (area < best_area || (area == best_area && c.id < best->id));
        if (better) {
            best = &c;
            best_area = area;
        }
    }
    out.entries.push_back(*best);
    return out;
}

ResolveResult resolve(const ConditionChain& chain, Grounder& grounder) {
    if (chain.steps.empty()) throw std::invalid_argument("resolve: empty chain");
    ResolveResult result;
    CandidateSet current;
    for (size_t i = 0; i < chain.steps.size(); ++i) {
        const SubInstruction& step = chain.steps[i];
        const size_t in_count = current.entries.size();
        if (i == 0) {
            current = grounder.ground_category(step);
        } else if (current.entries.empty()) {
            // Filters of the empty set are the empty set.
            current.provenance.push_back(step.describe());
        } else {
            CandidateSet next;
            switch (step.kind) {
                case ConditionKind::spatial_relation:
                    next = grounder.filter_spatial(current, step);
                    break;
                case ConditionKind::attribute:
                    next = grounder.filter_attribute(current, step);
                    break;
                case ConditionKind::superlative:
                    next = grounder.rank_superlative(current, step);
                    break;
                default:
                    throw std::invalid_argument("resolve: step " + std::to_string(i) +
                                                " is not a filter: " + step.describe());
            }
            if (next.entries.size() > current.entries.size())
                throw std::logic_error("resolve: candidate set grew at step " + step.describe());
            current = std::move(next);
        }
        result.trace.push_back({step.describe(), in_count, current.entries.size()});
    }
    for (const Candidate& c : current.entries) {
        result.entity_ids.push_back(c.id);
        result.boxes.boxes.push_back(c.box);
    }
    return result;
}

std::string chain_to_json(const ConditionChain& chain) {
    ordered_json steps = ordered_json::array();
    for (const SubInstruction& s : chain.steps) {
        ordered_json j;
        switch (s.kind) {
            case ConditionKind::select_category:
                j["kind"] = "select_category";
                j["category"] = s.category;
                break;
            case ConditionKind::spatial_relation:
                j["kind"] = "spatial_relation";
                j["relation"] = relation_name(s.relation);
                j["reference"] = s.reference;
                break;
            case ConditionKind::attribute:
                j["kind"] = "attribute";
                j["key"] = s.attr_key;
                j["value"] = s.attr_value;
                break;
            case ConditionKind::superlative:
                j["kind"] = "superlative";
                j["metric"] = metric_name(s.metric);
                break;
            case ConditionKind::opaque:
                j["kind"] = "opaque";
                break;
        }
        j["raw"] = s.raw_text;
        steps.push_back(j);
    }
    ordered_json root;
    root["steps"] = steps;
    return root.dump(2);
}

}  // namespace rsvlts
