#include <doctest.h>

#include <sstream>

#include "rsvlts/mask_io.hpp"
#include "testgen.hpp"

using namespace rsvlts;
namespace tg = rsvlts::testgen;

TEST_CASE("p5 read with comment and threshold at 127") {
    std::ostringstream raw;
    raw << "P5\n# comment line\n3 2\n255\n";
    const unsigned char gray[6] = {0, 127, 128, 255, 1, 200};
    raw.write(reinterpret_cast<const char*>(gray), 6);
    std::istringstream in(raw.str());
    const BinaryMask m = read_mask(in);
    CHECK(m.width == 3);
    CHECK(m.height == 2);
    CHECK_FALSE(m.get(0, 0));
    CHECK_FALSE(m.get(1, 0));  // 127 is not set
    CHECK(m.get(2, 0));        // 128 is
    CHECK(m.get(0, 1));
    CHECK_FALSE(m.get(1, 1));
    CHECK(m.get(2, 1));
}

TEST_CASE("p4 writer is bit-exact and row-padded") {
    BinaryMask m(9, 2);  // 9 columns forces a padded second byte per row
    m.set(0, 0);
    m.set(8, 0);
    m.set(4, 1);
    std::ostringstream out;
    write_mask_p4(m, out);
    const std::string bytes = out.str();
    const std::string header = "P4\n9 2\n";
    REQUIRE(bytes.substr(0, header.size()) == header);
    REQUIRE(bytes.size() == header.size() + 4);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 0]) == 0b10000000);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 1]) == 0b10000000);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 2]) == 0b00001000);
    CHECK(static_cast<unsigned char>(bytes[header.size() + 3]) == 0b00000000);
}

TEST_CASE("p4 roundtrip preserves random masks") {
    tg::Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        const BinaryMask m = tg::random_blob(rng, 37, 23);
        std::ostringstream out;
        write_mask_p4(m, out);
        std::istringstream in(out.str());
        const BinaryMask back = read_mask(in);
        CHECK(back.bits == m.bits);
    }
}

TEST_CASE("bad magic rejected") {
    std::istringstream in("P6\n2 2\n255\n....");
    CHECK_THROWS(read_mask(in));
}

TEST_CASE("truncated raster rejected") {
    std::istringstream in("P5\n4 4\n255\nab");
    CHECK_THROWS(read_mask(in));
}
