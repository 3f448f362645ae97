#include <doctest.h>

#include <cmath>
#include <random>

#include "rsvlts/textcodec.hpp"
#include "testgen.hpp"

using namespace rsvlts;
namespace tg = rsvlts::testgen;

namespace {

CoordSpace pixel_space() {
    CoordSpace s;
    s.mode = CoordMode::pixel;
    return s;
}

}  // namespace

TEST_CASE("tag tokens") {
    CHECK(tag_token(TaskTag::seg) == "[seg]");
    CHECK(tag_token(TaskTag::change) == "[change]");
    CHECK(tag_token(TaskTag::geoloc) == "[geoloc]");
    CHECK(tag_token(TaskTag::identify) == "[identify]");
    CHECK(tag_from_token("[detection]") == TaskTag::detection);
    CHECK(tag_from_token("[grounding]") == TaskTag::grounding);
    CHECK_FALSE(tag_from_token("[nope]").has_value());
    for (TaskTag t : {TaskTag::detection, TaskTag::grounding, TaskTag::seg, TaskTag::change,
                      TaskTag::geoloc, TaskTag::caption, TaskTag::identify}) {
        CHECK(tag_from_token(tag_token(t)) == t);
        CHECK(tag_from_name(tag_name(t)) == t);
    }
}

TEST_CASE("normalize and denormalize") {
    CoordSpace s;
    s.mode = CoordMode::normalized;
    s.bins = 1000;
    s.image_w = 1024;
    s.image_h = 1024;

    SUBCASE("midpoint of 1024 maps to bin 500") {
        const auto out = normalize({{512, 512}}, s);
        CHECK(out[0].x == 500);
        CHECK(out[0].y == 500);
    }
    SUBCASE("pixel mode is identity") {
        const auto out = normalize({{3.25, 777.5}}, pixel_space());
        CHECK(out[0] == Point{3.25, 777.5});
        CHECK(denormalize(out, pixel_space())[0] == Point{3.25, 777.5});
    }
    SUBCASE("clamped to valid bins") {
        const auto out = normalize({{-5, 2000}}, s);
        CHECK(out[0].x == 0);
        CHECK(out[0].y == 999);
    }
    SUBCASE("roundtrip error bounded by a bin width") {
        // one quantization floor plus the half-bin reconstruction offset
        const double bound = 1024.0 / 1000.0;
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 1024.0);
        for (int i = 0; i < 1000; ++i) {
            const Point p{u(rng), u(rng)};
            const Point back = denormalize(normalize({p}, s), s)[0];
            CHECK(std::abs(back.x - p.x) <= bound);
            CHECK(std::abs(back.y - p.y) <= bound);
        }
    }
}

TEST_CASE("serialize_point_set wire form") {
    const std::vector<Point> pond = {{100, 100}, {100, 200}, {200, 200}, {200, 100}};
    CHECK(serialize_point_set(pond) == "{(100, 100), (100, 200), (200, 200), (200, 100)}");
    CHECK(serialize_point_set({}) == "{}");
    CHECK(serialize_point_set({{3, 4}}) == "{(3, 4)}");
    CHECK(serialize_point_set({{1.5, -2.25}}) == "{(1.5, -2.25)}");
    CHECK_THROWS(serialize_point_set({{std::nan(""), 0}}));
}

TEST_CASE("parse_point_set tolerance") {
    const auto pond = parse_point_set("{(100,100),(100,200),(200,200),(200,100)}");
    REQUIRE(pond.size() == 4);
    CHECK(pond[0] == Point{100, 100});
    CHECK(pond[3] == Point{200, 100});

    const auto prose = parse_point_set("The answer is {( 3 , 4 )}.");
    REQUIRE(prose.size() == 1);
    CHECK(prose[0] == Point{3, 4});

    const auto trailing = parse_point_set("{(1, 2), (3, 4),}");
    CHECK(trailing.size() == 2);

    CHECK(parse_point_set("{}").empty());
    CHECK_THROWS_AS(parse_point_set("no points here"), ParseFailure);
    CHECK_THROWS_AS(parse_point_set("{(1, 2, 3)}"), ParseFailure);
}

TEST_CASE("point set roundtrip property") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> coord(-1000, 1000);
    std::uniform_int_distribution<int> len(0, 12);
    for (int i = 0; i < 10000; ++i) {
        std::vector<Point> pts(len(rng));
        for (auto& p : pts) p = {double(coord(rng)), double(coord(rng))};
        const std::string text = serialize_point_set(pts);
        CHECK(text.find('\n') == std::string::npos);
        CHECK(serialize_point_set(pts) == text);  // stable across calls
        const auto back = parse_point_set(text);
        REQUIRE(back.size() == pts.size());
        for (size_t k = 0; k < pts.size(); ++k) CHECK(back[k] == pts[k]);
    }
}

TEST_CASE("change answers close the polygon on the wire") {
    Polygon pond;
    pond.vertices = {{100, 100}, {100, 200}, {200, 200}, {200, 100}};
    PolyList pl;
    pl.polygons = {pond};
    const std::string text = serialize_answer(pl, pixel_space());
    CHECK(text == "{(100, 100), (100, 200), (200, 200), (200, 100), (100, 100)}");
    const auto back = std::get<PolyList>(parse_answer(text, TaskTag::change, pixel_space()));
    REQUIRE(back.polygons.size() == 1);
    CHECK(back.polygons[0].vertices == pond.vertices);  // closure stripped
}

TEST_CASE("geoloc answer roundtrip") {
    GeoLocAnswer g{"Hangzhou", {30.25, 120.17}};
    const std::string text = serialize_answer(g, pixel_space());
    CHECK(text == "[Hangzhou, (30.25, 120.17)]");
    const auto back = std::get<GeoLocAnswer>(parse_answer(text, TaskTag::geoloc, pixel_space()));
    CHECK(back == g);
}

TEST_CASE("seg answer wire form and roundtrip") {
    SegPrompt sp;
    SegTarget t;
    t.box = {{10, 20}, {30, 40}};
    t.keypoints = {{15, 25}, {22, 33}};
    sp.targets = {t};
    const std::string text = serialize_answer(sp, pixel_space());
    CHECK(text == "box {(10, 20), (30, 40)} points {(15, 25), (22, 33)}");
    const auto back = std::get<SegPrompt>(parse_answer(text, TaskTag::seg, pixel_space()));
    CHECK(back == sp);

    CHECK(serialize_answer(SegPrompt{}, pixel_space()) == "{}");
    CHECK(std::get<SegPrompt>(parse_answer("{}", TaskTag::seg, pixel_space())).targets.empty());
}

TEST_CASE("detection answer roundtrip over random boxes") {
    tg::Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        RboxList rl;
        std::uniform_int_distribution<int> n(0, 4);
        const int k = n(rng);
        for (int j = 0; j < k; ++j) {
            RotatedBox b = tg::random_box(rng);
            for (auto& c : b.corners) {  // wire form with integral coordinates
                c.x = std::floor(c.x);
                c.y = std::floor(c.y);
            }
            rl.boxes.push_back(b);
        }
        const std::string text = serialize_answer(rl, pixel_space());
        const auto back = std::get<RboxList>(parse_answer(text, TaskTag::detection, pixel_space()));
        CHECK(back == rl);
    }
}

TEST_CASE("normalized mode serializes integer bins") {
    CoordSpace s;
    s.mode = CoordMode::normalized;
    s.bins = 1000;
    s.image_w = 2048;
    s.image_h = 2048;
    PolyList pl;
    pl.polygons.push_back(Polygon{normalize({{0, 0}, {0, 2048}, {2048, 2048}}, s)});
    const std::string text = serialize_answer(pl, s);
    CHECK(text == "{(0, 0), (0, 999), (999, 999), (0, 0)}");
}

TEST_CASE("parse_answer rejects tag mismatch shapes") {
    // detection needs 8 numbers per group
    CHECK_THROWS_AS(parse_answer("{(1, 2), (3, 4)}", TaskTag::detection, pixel_space()),
                    ParseFailure);
    CHECK_THROWS_AS(parse_answer("nothing", TaskTag::geoloc, pixel_space()), ParseFailure);
}

TEST_CASE("instruction build and split") {
    CHECK(build_instruction(TaskTag::seg, "segment all ponds") == "[seg] segment all ponds");
    const auto [tag, rest] = split_instruction("[change] what changed near the road?");
    CHECK(tag == TaskTag::change);
    CHECK(rest == "what changed near the road?");

    const auto [none_tag, all] = split_instruction("plain question");
    CHECK_FALSE(none_tag.has_value());
    CHECK(all == "plain question");

    const auto [unk, keep] = split_instruction("[mystery] keep me whole");
    CHECK_FALSE(unk.has_value());
    CHECK(keep == "[mystery] keep me whole");

    for (TaskTag t : {TaskTag::detection, TaskTag::grounding, TaskTag::seg, TaskTag::change,
                      TaskTag::geoloc, TaskTag::caption, TaskTag::identify}) {
        const auto [rt, rs] = split_instruction(build_instruction(t, "do the thing"));
        CHECK(rt == t);
        CHECK(rs == "do the thing");
    }
}

TEST_CASE("format_number") {
    CHECK(format_number(100) == "100");
    CHECK(format_number(-3) == "-3");
    CHECK(format_number(0) == "0");
    CHECK(format_number(30.25) == "30.25");
    CHECK(format_number(0.5) == "0.5");
}
