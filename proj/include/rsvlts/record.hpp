#pragma once

#include <map>
#include <string>
#include <vector>

#include "rsvlts/textcodec.hpp"

// The "rsvlts/1" JSON Lines record format. One object per line:
//   {"schema":"rsvlts/1","id":...,"task":...,"images":[...],"prompt":...,
//    "answer":"<serialized answer text>","space":{...},"meta":{...}}
// The answer field stores the wire text, so files are byte-stable.

namespace rsvlts {

struct InstructionRecord {
    std::string id;
    TaskTag tag = TaskTag::detection;
    std::vector<std::string> images;  // 2 for change, 1 otherwise
    std::string prompt;               // includes the leading "[tag] " token
    std::string answer;               // serialized AnswerPayload text
    CoordSpace space;
    std::map<std::string, std::string> meta;

    AnswerPayload payload() const { return parse_answer(answer, tag, space); }
    void set_payload(const AnswerPayload& p) { answer = serialize_answer(p, space); }

    // Checks tag/image-count coupling and that the answer parses to the
    // variant the tag requires.
    void validate() const;
};

std::string record_to_json(const InstructionRecord& r);
InstructionRecord record_from_json(const std::string& line);

std::vector<InstructionRecord> read_records_file(const std::string& path);
void write_records_file(const std::vector<InstructionRecord>& records, const std::string& path);

}  // namespace rsvlts
