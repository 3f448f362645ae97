#include "rsvlts/mask_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace rsvlts {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
int read_header_int(std::istream& in) {
    int c = in.peek();
    while (c == '#' || std::isspace(c)) {
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("pnm: malformed header");
    return value;
}

}  // namespace

BinaryMask read_mask(std::istream& in) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '4' && magic[1] != '5'))
        throw std::runtime_error("pnm: expected P4 or P5 magic");
    const bool graymap = magic[1] == '5';
    const int width = read_header_int(in);
    const int height = read_header_int(in);
    if (width <= 0 || height <= 0) throw std::runtime_error("pnm: non-positive dimensions");
    int maxval = 255;
    if (graymap) {
        maxval = read_header_int(in);
        if (maxval <= 0 || maxval > 255) throw std::runtime_error("pnm: unsupported maxval");
    }
    in.get();  // single whitespace before raster

    BinaryMask mask(width, height);
    if (graymap) {
        std::vector<char> row(width);
        for (int y = 0; y < height; ++y) {
            in.read(row.data(), width);
            if (!in) throw std::runtime_error("pnm: truncated raster");
            for (int x = 0; x < width; ++x)
                mask.set(x, y, static_cast<unsigned char>(row[x]) > 127);
        }
    } else {
        const int stride = (width + 7) / 8;
        std::vector<char> row(stride);
        for (int y = 0; y < height; ++y) {
            in.read(row.data(), stride);
            if (!in) throw std::runtime_error("pnm: truncated raster");
            for (int x = 0; x < width; ++x) {
                const unsigned char byte = static_cast<unsigned char>(row[x / 8]);
                mask.set(x, y, (byte >> (7 - x % 8)) & 1);
            }
        }
    }
    return mask;
}

BinaryMask read_mask_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open mask file: " + path);
    return read_mask(in);
}

void write_mask_p4(const BinaryMask& mask, std::ostream& out) {
    out << "P4\n" << mask.width << " " << mask.height << "\n";
    const int stride = (mask.width + 7) / 8;
    std::vector<char> row(stride);
    for (int y = 0; y < mask.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < mask.width; ++x)
            if (mask.get(x, y)) row[x / 8] |= static_cast<char>(1 << (7 - x % 8));
        out.write(row.data(), stride);
    }
}

void write_mask_p4_file(const BinaryMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open mask file for writing: " + path);
    write_mask_p4(mask, out);
}

}  // namespace rsvlts
