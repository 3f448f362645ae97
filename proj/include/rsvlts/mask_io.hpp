#pragma once

#include <iosfwd>
#include <string>

#include "rsvlts/geometry.hpp"

// Binary mask I/O: portable bitmap (P4) and portable graymap (P5).
// Reading treats any gray value > 127 as set; the writer emits P4 with
// rows padded to a byte boundary, bit-exact across runs.

namespace rsvlts {

BinaryMask read_mask(std::istream& in);
BinaryMask read_mask_file(const std::string& path);

void write_mask_p4(const BinaryMask& mask, std::ostream& out);
void write_mask_p4_file(const BinaryMask& mask, const std::string& path);

}  // namespace rsvlts
