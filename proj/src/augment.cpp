#include "rsvlts/augment.hpp"

#include <cctype>
#include <random>
#include <stdexcept>

#include "rsvlts/condparse.hpp"
#include "rsvlts/convert.hpp"

namespace rsvlts {

namespace {

bool eligible_tag(TaskTag tag) {
    return tag == TaskTag::detection || tag == TaskTag::grounding || tag == TaskTag::seg ||
           tag == TaskTag::change;
}

bool vowel_start(const std::string& s) {
    if (s.empty()) return false;
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Article with lowercase first letter: "a large pond".
std::string lowercase_phrase(const std::string& caption) {
    std::string out = caption;
    if (!out.empty()) out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
    return out;
}

// The forward image: for change pairs, the caption refers to the
// post-change acquisition.
std::string caption_image(const InstructionRecord& r) {
    return r.tag == TaskTag::change ? r.images.back() : r.images.front();
}

InstructionRecord make_caption_record(const InstructionRecord& r, const std::string& record_id,
                                      const std::string& answer_text, const std::string& caption) {
    InstructionRecord out;
    out.id = record_id;
    out.tag = TaskTag::identify;
    out.images = {caption_image(r)};
    out.space = r.space;
    out.prompt = build_instruction(TaskTag::identify,
                                   "Could you describe the object at " + answer_text + "?");
    out.answer = caption;
    out.meta["cyclic_of"] = r.id;
    out.meta["cyclic_source_task"] = tag_name(r.tag);
    if (r.tag == TaskTag::change) {
        out.meta["cyclic_image_a"] = r.images[0];
        out.meta["cyclic_image_b"] = r.images[1];
    }
    return out;
}

// Splits a multi-object payload into one payload per object.
std::vector<AnswerPayload> per_object(const AnswerPayload& payload) {
    std::vector<AnswerPayload> out;
    if (const auto* r = std::get_if<RboxList>(&payload)) {
        for (const RotatedBox& b : r->boxes) out.push_back(RboxList{{b}});
    } else if (const auto* s = std::get_if<SegPrompt>(&payload)) {
        for (const SegTarget& t : s->targets) out.push_back(SegPrompt{{t}});
    } else if (const auto* p = std::get_if<PolyList>(&payload)) {
        for (const Polygon& poly : p->polygons) out.push_back(PolyList{{poly}});
    }
    return out;
}

}  // namespace

std::optional<std::string> object_phrase(const std::string& prompt) {
    const auto [tag, rest] = split_instruction(prompt);
    const ConditionChain chain = parse_conditions(rest);
    if (chain.steps.empty() || chain.steps.front().kind != ConditionKind::select_category)
        return std::nullopt;
    // Size adjectives precede color adjectives: "A small red ship".
    std::string sizes, others;
    for (const SubInstruction& s : chain.steps) {
        if (s.kind == ConditionKind::superlative && s.metric == SuperlativeMetric::largest)
            sizes += "large ";
        else if (s.kind == ConditionKind::superlative && s.metric == SuperlativeMetric::smallest)
            sizes += "small ";
        else if (s.kind == ConditionKind::attribute && s.attr_key == "size")
            sizes += s.attr_value + " ";
        else if (s.kind == ConditionKind::attribute)
            others += s.attr_value + " ";
    }
    const std::string noun_phrase = sizes + others + chain.steps.front().category;
    return (vowel_start(noun_phrase) ? "An " : "A ") + noun_phrase;
}

std::optional<InstructionRecord> rec_to_region_caption(const InstructionRecord& r) {
    if (!eligible_tag(r.tag)) return std::nullopt;
    if (payload_empty(r.payload())) return std::nullopt;
    const auto caption = object_phrase(r.prompt);
    if (!caption) return std::nullopt;
    return make_caption_record(r, r.id + "#cap", r.answer, *caption);
}

std::vector<InstructionRecord> rec_to_region_captions(const InstructionRecord& r) {
    if (!eligible_tag(r.tag)) return {};
    const AnswerPayload payload = r.payload();
    if (payload_empty(payload)) return {};
    const auto caption = object_phrase(r.prompt);
    if (!caption) return {};
    const auto parts = per_object(payload);
    if (parts.size() == 1)  // keep the source answer text byte-for-byte
        return {make_caption_record(r, r.id + "#cap0", r.answer, *caption)};
    std::vector<InstructionRecord> out;
    for (size_t i = 0; i < parts.size(); ++i)
        out.push_back(make_caption_record(r, r.id + "#cap" + std::to_string(i),
                                          serialize_answer(parts[i], r.space), *caption));
    return out;
}

InstructionRecord region_caption_to_rec(const InstructionRecord& r) {
    if (r.tag != TaskTag::identify)
        throw std::invalid_argument("region_caption_to_rec: record " + r.id + " is not identify");
    const auto source_tag_name = r.meta.count("cyclic_source_task")
                                     ? r.meta.at("cyclic_source_task")
                                     : std::string("grounding");
    const TaskTag source_tag = tag_from_name(source_tag_name).value_or(TaskTag::grounding);

    const auto [tag, rest] = split_instruction(r.prompt);
    // Throws ParseFailure when the prompt carries no point set.
    const AnswerPayload payload = parse_answer(rest, source_tag, r.space);
    if (payload_empty(payload)) throw ParseFailure("no point set in prompt of " + r.id);

    InstructionRecord out;
    out.id = r.id + "#rec";
    out.tag = source_tag == TaskTag::detection ? TaskTag::grounding : source_tag;
    if (out.tag == TaskTag::change) {
        if (r.meta.count("cyclic_image_a") && r.meta.count("cyclic_image_b"))
            out.images = {r.meta.at("cyclic_image_a"), r.meta.at("cyclic_image_b")};
        else
            out.images = {r.images.front(), r.images.front()};
    } else {
        out.images = {r.images.front()};
    }
    out.space = r.space;
    out.set_payload(payload);
    const std::string phrase = lowercase_phrase(r.answer.empty() ? "the object" : r.answer);
    out.prompt = build_instruction(out.tag,
                                   "What's the location of " + phrase + " in this image?");
    out.meta["cyclic_of"] = r.id;
    return out;
}

std::vector<InstructionRecord> augment_corpus(const std::vector<InstructionRecord>& records,
                                              double ratio, std::uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("augment: ratio must be in [0, 1]");
    std::vector<InstructionRecord> out = records;
    std::mt19937_64 rng(seed);
    for (const InstructionRecord& r : records) {
        // 53-bit draw; platform-independent, unlike the distribution classes.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        auto captions = rec_to_region_captions(r);
        if (captions.empty()) continue;  // ineligible; draw still consumed for stability
        if (u >= ratio) continue;
        for (auto& c : captions) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace rsvlts
