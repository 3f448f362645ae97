#include <doctest.h>

#include <variant>

#include "rsvlts/augment.hpp"
#include "rsvlts/convert.hpp"
#include "testgen.hpp"

using namespace rsvlts;
namespace tg = rsvlts::testgen;

namespace {

CoordSpace pixel_space() {
    CoordSpace s;
    s.mode = CoordMode::pixel;
    return s;
}

InstructionRecord pond_record() {
    InstructionRecord r;
    r.id = "pond0";
    r.tag = TaskTag::grounding;
    r.images = {"pond.png"};
    r.space = pixel_space();
    r.prompt =
        build_instruction(TaskTag::grounding, "What's the location of the largest pond in this image?");
    RotatedBox box;
    box.corners = {{{100, 100}, {100, 200}, {200, 200}, {200, 100}}};
    r.set_payload(RboxList{{box}});
    return r;
}

// A pool of grounding/detection records with k boxes each, plus ineligible ones.
std::vector<InstructionRecord> random_corpus(tg::Rng& rng, int n) {
    std::vector<InstructionRecord> out;
    const std::vector<std::string> cats{"plane", "ship", "pond", "car", "harbor"};
    for (int i = 0; i < n; ++i) {
        InstructionRecord r;
        r.id = "r" + std::to_string(i);
        r.tag = (i % 3 == 0) ? TaskTag::detection : TaskTag::grounding;
        r.images = {"img" + std::to_string(i) + ".png"};
        r.space = pixel_space();
        const std::string cat = cats[rng() % cats.size()];
        r.prompt = build_instruction(r.tag, "Find every " + cat + " present in this image.");
        RboxList boxes;
        const size_t k = 1 + rng() % 3;
        for (size_t j = 0; j < k; ++j) {
            RotatedBox b = tg::random_box(rng);
            for (auto& c : b.corners) {
                c.x = std::floor(c.x);
                c.y = std::floor(c.y);
            }
            boxes.boxes.push_back(b);
        }
        r.set_payload(boxes);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST_CASE("pond record maps to the canonical caption pair") {
    const auto cap = rec_to_region_caption(pond_record());
    REQUIRE(cap.has_value());
    CHECK(cap->tag == TaskTag::identify);
    CHECK(cap->prompt ==
          "[identify] Could you describe the object at "
          "{(100, 100), (100, 200), (200, 200), (200, 100)}?");
    CHECK(cap->answer == "A large pond");

    const InstructionRecord back = region_caption_to_rec(*cap);
    CHECK(back.tag == TaskTag::grounding);
    CHECK(back.answer == pond_record().answer);
    CHECK(back.prompt ==
          "[grounding] What's the location of a large pond in this image?");
}

TEST_CASE("records with empty answers are skipped") {
    InstructionRecord r = pond_record();
    r.set_payload(RboxList{});
    CHECK_FALSE(rec_to_region_caption(r).has_value());
    CHECK(rec_to_region_captions(r).empty());
}

TEST_CASE("non-localizing tasks are skipped") {
    InstructionRecord r;
    r.id = "g0";
    r.tag = TaskTag::geoloc;
    r.images = {"x.png"};
    r.space = pixel_space();
    r.prompt = build_instruction(TaskTag::geoloc, "Where was this image taken?");
    r.set_payload(GeoLocAnswer{"Hangzhou", {30.25, 120.17}});
    CHECK_FALSE(rec_to_region_caption(r).has_value());
}

TEST_CASE("embedded coordinates equal the source answer byte for byte") {
    tg::Rng rng(44);
    for (const InstructionRecord& r : random_corpus(rng, 50)) {
        const auto cap = rec_to_region_caption(r);
        REQUIRE(cap.has_value());
        CHECK(cap->prompt.find(r.answer) != std::string::npos);
        for (const InstructionRecord& c : rec_to_region_captions(r)) {
            const auto payload = c.payload();  // identify answers are plain captions
            CHECK(std::holds_alternative<Caption>(payload));
            c.validate();
        }
    }
}

TEST_CASE("multi-object records split into one caption per object") {
    tg::Rng rng(45);
    InstructionRecord r;
    r.id = "multi";
    r.tag = TaskTag::detection;
    r.images = {"m.png"};
    r.space = pixel_space();
    r.prompt = build_instruction(TaskTag::detection, "Detect all planes in the image.");
    RboxList boxes;
    for (int i = 0; i < 3; ++i) {
        RotatedBox b = tg::random_box(rng);
        for (auto& c : b.corners) {
            c.x = std::floor(c.x);
            c.y = std::floor(c.y);
        }
        boxes.boxes.push_back(b);
    }
    r.set_payload(boxes);
    const auto caps = rec_to_region_captions(r);
    REQUIRE(caps.size() == 3);
    for (size_t i = 0; i < caps.size(); ++i) {
        CHECK(caps[i].id == "multi#cap" + std::to_string(i));
        const std::string expect = serialize_answer(RboxList{{boxes.boxes[i]}}, r.space);
        CHECK(caps[i].prompt.find(expect) != std::string::npos);
        // each caption round-trips to a single-box grounding record
        const InstructionRecord back = region_caption_to_rec(caps[i]);
        CHECK(back.answer == expect);
    }
}

TEST_CASE("backward transform needs a point set in the prompt") {
    InstructionRecord r;
    r.id = "c0";
    r.tag = TaskTag::identify;
    r.images = {"x.png"};
    r.space = pixel_space();
    r.prompt = build_instruction(TaskTag::identify, "Could you describe the object?");
    r.answer = "A pond";
    CHECK_THROWS_AS(region_caption_to_rec(r), ParseFailure);

    r.tag = TaskTag::caption;
    CHECK_THROWS_AS(region_caption_to_rec(r), std::invalid_argument);
}

TEST_CASE("involution preserves the answer payload over 1000 records") {
    tg::Rng rng(46);
    int checked = 0;
    for (const InstructionRecord& r : random_corpus(rng, 1000)) {
        const auto cap = rec_to_region_caption(r);
        REQUIRE(cap.has_value());
        const InstructionRecord back = region_caption_to_rec(*cap);
        CHECK(back.answer == r.answer);
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("augment_corpus ratio and determinism") {
    tg::Rng rng(47);
    const auto corpus = random_corpus(rng, 80);

    SUBCASE("ratio 0 returns the input unchanged") {
        const auto out = augment_corpus(corpus, 0.0, 1);
        REQUIRE(out.size() == corpus.size());
        for (size_t i = 0; i < corpus.size(); ++i)
            CHECK(record_to_json(out[i]) == record_to_json(corpus[i]));
    }
    SUBCASE("ratio 1 appends a counterpart for every eligible object") {
        size_t expected = corpus.size();
        for (const auto& r : corpus) expected += rec_to_region_captions(r).size();
        const auto out = augment_corpus(corpus, 1.0, 1);
        CHECK(out.size() == expected);
        // originals preserved in order at the front
        for (size_t i = 0; i < corpus.size(); ++i)
            CHECK(record_to_json(out[i]) == record_to_json(corpus[i]));
        for (size_t i = corpus.size(); i < out.size(); ++i) out[i].validate();
    }
    SUBCASE("same seed reproduces byte-identical output") {
        const auto a = augment_corpus(corpus, 0.5, 7);
        const auto b = augment_corpus(corpus, 0.5, 7);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i)
            CHECK(record_to_json(a[i]) == record_to_json(b[i]));
        CHECK(a.size() > corpus.size());
        CHECK(a.size() < augment_corpus(corpus, 1.0, 7).size());
    }
    SUBCASE("out-of-range ratio rejected") {
        CHECK_THROWS_AS(augment_corpus(corpus, 1.5, 1), std::invalid_argument);
    }
}

TEST_CASE("object phrase extraction") {
    CHECK(object_phrase("[detection] Detect all planes in the image.") == "A plane");
    CHECK(object_phrase("[grounding] What's the location of the smallest red ship in this image?") ==
          "A small red ship");
    CHECK(object_phrase("[detection] Find every airport present in this image.") == "An airport");
    CHECK_FALSE(object_phrase("[caption] please?").has_value());
}
