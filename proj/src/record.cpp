#include "rsvlts/record.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rsvlts {

using ordered_json = nlohmann::ordered_json;

void InstructionRecord::validate() const {
    if (id.empty()) throw std::invalid_argument("record: empty id");
    const size_t expected_images = tag == TaskTag::change ? 2 : 1;
    if (images.size() != expected_images)
        throw std::invalid_argument("record " + id + ": task " + tag_name(tag) + " requires " +
                                    std::to_string(expected_images) + " image(s), got " +
                                    std::to_string(images.size()));
    space.validate();
    const AnswerPayload p = payload();  // throws ParseFailure on bad answer text
    if (!payload_matches_tag(p, tag))
        throw std::invalid_argument("record " + id + ": answer does not match task " + tag_name(tag));
}

std::string record_to_json(const InstructionRecord& r) {
    ordered_json j;
    j["schema"] = "rsvlts/1";
    j["id"] = r.id;
    j["task"] = tag_name(r.tag);
    j["images"] = r.images;
    j["prompt"] = r.prompt;
    j["answer"] = r.answer;
    ordered_json space;
    space["mode"] = r.space.mode == CoordMode::pixel ? "pixel" : "normalized";
    space["bins"] = r.space.bins;
    space["width"] = r.space.image_w;
    space["height"] = r.space.image_h;
    j["space"] = space;
    if (!r.meta.empty()) j["meta"] = r.meta;
    return j.dump();
}

InstructionRecord record_from_json(const std::string& line) {
    const ordered_json j = ordered_json::parse(line);
    if (j.value("schema", "") != "rsvlts/1")
        throw std::invalid_argument("record: unsupported schema '" + j.value("schema", "") + "'");
    InstructionRecord r;
    r.id = j.at("id").get<std::string>();
    const auto tag = tag_from_name(j.at("task").get<std::string>());
    if (!tag) throw std::invalid_argument("record " + r.id + ": unknown task");
    r.tag = *tag;
    r.images = j.at("images").get<std::vector<std::string>>();
    r.prompt = j.at("prompt").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    if (j.contains("space")) {
        const auto& s = j.at("space");
        r.space.mode = s.value("mode", "normalized") == "pixel" ? CoordMode::pixel : CoordMode::normalized;
        r.space.bins = s.value("bins", 1000);
        r.space.image_w = s.value("width", 0);
        r.space.image_h = s.value("height", 0);
    }
    if (j.contains("meta")) r.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return r;
}

std::vector<InstructionRecord> read_records_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records file: " + path);
    std::vector<InstructionRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_records_file(const std::vector<InstructionRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open records file for writing: " + path);
    for (const InstructionRecord& r : records) out << record_to_json(r) << "\n";
}

}  // namespace rsvlts
