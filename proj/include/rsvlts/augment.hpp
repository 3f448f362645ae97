#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rsvlts/record.hpp"

// Cyclic-referring self-augmentation: a localizing record (boxes, seg
// prompts, or change polygons) becomes a region-caption record whose prompt
// embeds the answer's point-set text byte-for-byte, and vice versa.

namespace rsvlts {

// Forward transform over the whole answer. Returns nullopt when the record
// is ineligible: wrong task, empty answer, or no extractable object phrase.
std::optional<InstructionRecord> rec_to_region_caption(const InstructionRecord& r);

// Forward transform, one caption record per object (multi-object answers
// would otherwise make the region ambiguous).
std::vector<InstructionRecord> rec_to_region_captions(const InstructionRecord& r);

// Backward transform. Throws ParseFailure when the prompt holds no
// parseable point set.
InstructionRecord region_caption_to_rec(const InstructionRecord& r);

// Appends cyclic counterparts for a seeded deterministic sample of eligible
// records: originals first, in input order, never mutated.
std::vector<InstructionRecord> augment_corpus(const std::vector<InstructionRecord>& records,
                                              double ratio, std::uint64_t seed);

// "A large pond"-style phrase from a localizing prompt, or nullopt when the
// prompt has no recognizable category head.
std::optional<std::string> object_phrase(const std::string& prompt);

}  // namespace rsvlts
