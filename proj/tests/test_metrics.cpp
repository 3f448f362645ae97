#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rsvlts/metrics.hpp"
#include "testgen.hpp"

using namespace rsvlts;
namespace tg = rsvlts::testgen;

namespace {

RotatedBox axis_box(double x1, double y1, double x2, double y2) {
    RotatedBox b;
    b.corners = {{{x1, y1}, {x2, y1}, {x2, y2}, {x1, y2}}};
    return b;
}

// Exhaustive best-first matching: repeatedly take the globally best
// remaining pair above threshold (ties by gt index, then pred index).
BoxMatching oracle_match(const RboxList& gt, const RboxList& pred, double thresh) {
    BoxMatching m;
    std::vector<bool> gu(gt.boxes.size(), false), pu(pred.boxes.size(), false);
    while (true) {
        double best = -1.0;
        size_t bg = 0, bp = 0;
        for (size_t gi = 0; gi < gt.boxes.size(); ++gi) {
            if (gu[gi]) continue;
            for (size_t pi = 0; pi < pred.boxes.size(); ++pi) {
                if (pu[pi]) continue;
                const double iou = rotated_iou(gt.boxes[gi], pred.boxes[pi]);
                if (iou > best) {
                    best = iou;
                    bg = gi;
                    bp = pi;
                }
            }
        }
        if (best < thresh) break;
        gu[bg] = pu[bp] = true;
        m.pairs.emplace_back(bg, bp);
        m.ious.push_back(best);
    }
    m.tp = m.pairs.size();
    m.fp = pred.boxes.size() - m.tp;
    m.fn = gt.boxes.size() - m.tp;
    return m;
}

CoordSpace pixel_space(int w = 0, int h = 0) {
    CoordSpace s;
    s.mode = CoordMode::pixel;
    s.image_w = w;
    s.image_h = h;
    return s;
}

InstructionRecord make_record(const std::string& id, TaskTag tag, const AnswerPayload& payload,
                              const CoordSpace& space) {
    InstructionRecord r;
    r.id = id;
    r.tag = tag;
    r.images = tag == TaskTag::change ? std::vector<std::string>{"a.png", "b.png"}
                                      : std::vector<std::string>{"x.png"};
    r.space = space;
    r.prompt = build_instruction(tag, "fixture");
    r.set_payload(payload);
    return r;
}

}  // namespace

TEST_CASE("match_boxes basics") {
    const RotatedBox unit = axis_box(0, 0, 1, 1);

    SUBCASE("identical single box") {
        RboxList one{{unit}};
        const BoxMatching m = match_boxes(one, one, 0.5);
        CHECK(m.tp == 1);
        CHECK(m.fp == 0);
        CHECK(m.fn == 0);
        CHECK(m.ious[0] == doctest::Approx(1.0));
    }
    SUBCASE("iou one third misses the 0.5 threshold") {
        RboxList gt{{unit}};
        RboxList pred{{axis_box(0.5, 0, 1.5, 1)}};  // overlap 0.5, union 1.5
        CHECK(rotated_iou(gt.boxes[0], pred.boxes[0]) == doctest::Approx(1.0 / 3.0));
        const BoxMatching m = match_boxes(gt, pred, 0.5);
        CHECK(m.tp == 0);
        CHECK(m.fp == 1);
        CHECK(m.fn == 1);
    }
    SUBCASE("empty sides") {
        const BoxMatching m = match_boxes(RboxList{}, RboxList{{unit}}, 0.5);
        CHECK(m.tp == 0);
        CHECK(m.fp == 1);
        CHECK(m.fn == 0);
        CHECK(match_boxes(RboxList{}, RboxList{}, 0.5).tp == 0);
    }
    SUBCASE("invalid threshold") {
        CHECK_THROWS_AS(match_boxes(RboxList{}, RboxList{}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(match_boxes(RboxList{}, RboxList{}, 1.5), std::invalid_argument);
    }
}

TEST_CASE("greedy matching equals the best-first oracle at n <= 5") {
    tg::Rng rng(61);
    std::uniform_int_distribution<int> n(0, 5);
    for (int trial = 0; trial < 60; ++trial) {
        RboxList gt, pred;
        const int ng = n(rng), np = n(rng);
        for (int i = 0; i < ng; ++i) gt.boxes.push_back(tg::random_box(rng, 100.0));
        for (int i = 0; i < np; ++i) {
            // bias some predictions toward gt boxes so matches exist
            if (i < ng && trial % 2 == 0) {
                RotatedBox b = gt.boxes[i];
                for (auto& c : b.corners) c.x += 1.0;
                pred.boxes.push_back(b);
            } else {
                pred.boxes.push_back(tg::random_box(rng, 100.0));
            }
        }
        const BoxMatching a = match_boxes(gt, pred, 0.3);
        const BoxMatching b = oracle_match(gt, pred, 0.3);
        CHECK(a.pairs == b.pairs);
        CHECK(a.tp == b.tp);
        CHECK(a.fp == b.fp);
        CHECK(a.fn == b.fn);
    }
}

TEST_CASE("score_change conventions") {
    Polygon rect;
    rect.vertices = {{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    Polygon shifted;
    shifted.vertices = {{5, 0}, {15, 0}, {15, 10}, {5, 10}};

    SUBCASE("identical polygon lists") {
        const PixelScore s = score_change({rect}, {rect}, 20, 10);
        CHECK(s.f1 == doctest::Approx(1.0));
        CHECK(s.fp == 0);
        CHECK(s.fn == 0);
    }
    SUBCASE("empty prediction against nonempty gt") {
        const PixelScore s = score_change({rect}, {}, 20, 10);
        CHECK(s.precision == 1.0);  // no positive predictions
        CHECK(s.recall == 0.0);
        CHECK(s.f1 == 0.0);
    }
    SUBCASE("both empty is vacuously perfect") {
        const PixelScore s = score_change({}, {}, 20, 10);
        CHECK(s.f1 == 1.0);
    }
    SUBCASE("half overlap cross-checked by direct pixel counting") {
        const PixelScore s = score_change({rect}, {shifted}, 20, 10);
        // independent count over pixel centers
        size_t tp = 0, fp = 0, fn = 0;
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 20; ++x) {
                const Point c{x + 0.5, y + 0.5};
                const bool in_gt = point_in_polygon(c, rect);
                const bool in_pred = point_in_polygon(c, shifted);
                if (in_gt && in_pred) ++tp;
                else if (in_pred) ++fp;
                else if (in_gt) ++fn;
            }
        CHECK(s.tp == tp);
        CHECK(s.fp == fp);
        CHECK(s.fn == fn);
        CHECK(s.tp == 50);
        CHECK(s.precision == doctest::Approx(0.5));
        CHECK(s.recall == doctest::Approx(0.5));
        CHECK(s.f1 == doctest::Approx(0.5));
    }
}

TEST_CASE("score_geoloc") {
    const GeoLocAnswer hz{"Hangzhou", {30.25, 120.17}};
    SUBCASE("identical") {
        const GeoScore s = score_geoloc(hz, hz);
        CHECK(s.km_error == doctest::Approx(0.0));
        CHECK(s.city_match);
    }
    SUBCASE("case and spacing insensitive city comparison") {
        const GeoScore s = score_geoloc(hz, {" hang zhou ", {30.25, 120.17}});
        CHECK(s.city_match);
        CHECK_FALSE(score_geoloc(hz, {"Shanghai", hz.location}).city_match);
    }
    SUBCASE("equator quarter turn") {
        const GeoScore s = score_geoloc({"a", {0, 0}}, {"a", {0, 90}});
        CHECK(s.km_error == doctest::Approx(10007.543).epsilon(1e-4));
    }
}

TEST_CASE("normalize_caption") {
    CHECK(normalize_caption("A Large Pond.") == "a large pond");
    CHECK(normalize_caption("  a   large\tpond ") == "a large pond");
    CHECK(normalize_caption("") == "");
}

TEST_CASE("evaluate is perfect on self") {
    tg::Rng rng(77);
    std::vector<InstructionRecord> gt;
    for (int i = 0; i < 10; ++i) {
        RboxList boxes;
        for (int j = 0; j < 3; ++j) {
            RotatedBox b = tg::random_box(rng, 500.0);
            for (auto& c : b.corners) {
                c.x = std::floor(c.x);
                c.y = std::floor(c.y);
            }
            boxes.boxes.push_back(b);
        }
        gt.push_back(make_record("d" + std::to_string(i), TaskTag::detection, boxes,
                                 pixel_space()));
    }
    Polygon rect;
    rect.vertices = {{2, 2}, {30, 2}, {30, 20}, {2, 20}};
    gt.push_back(make_record("c0", TaskTag::change, PolyList{{rect}}, pixel_space(40, 30)));
    gt.push_back(make_record("g0", TaskTag::geoloc, GeoLocAnswer{"Hangzhou", {30.25, 120.17}},
                             pixel_space()));
    SegTarget t;
    t.box = {{5, 5}, {20, 25}};
    t.keypoints = {{10, 10}, {12, 20}};
    gt.push_back(make_record("s0", TaskTag::seg, SegPrompt{{t}}, pixel_space()));
    gt.push_back(make_record("t0", TaskTag::caption, Caption{"A pond."}, pixel_space()));

    const EvalReport rep = evaluate(gt, gt, 0.5);
    CHECK(rep.detection->f1 == doctest::Approx(1.0));
    CHECK(rep.detection->mean_iou == doctest::Approx(1.0));
    CHECK(rep.change->f1 == doctest::Approx(1.0));
    CHECK(rep.geoloc->mean_km == doctest::Approx(0.0));
    CHECK(rep.geoloc->city_match_rate == 1.0);
    CHECK(rep.segmentation->mean_box_iou == doctest::Approx(1.0));
    CHECK(rep.segmentation->keypoint_in_box_rate == 1.0);
    CHECK(rep.caption->exact_rate == 1.0);
    for (const auto& [task, c] : rep.counts) CHECK(c.parse_failures == 0);
    CHECK(rep.to_json() == evaluate(gt, gt, 0.5).to_json());  // byte-stable

    SUBCASE("prediction order within a sample does not matter") {
        std::vector<InstructionRecord> pred = gt;
        auto boxes = std::get<RboxList>(pred[0].payload());
        std::reverse(boxes.boxes.begin(), boxes.boxes.end());
        pred[0].set_payload(boxes);
        const EvalReport rep2 = evaluate(gt, pred, 0.5);
        CHECK(rep2.detection->f1 == doctest::Approx(1.0));
        CHECK(rep2.detection->mean_iou == doctest::Approx(1.0));
    }
    SUBCASE("id mismatch is an error listing the ids") {
        std::vector<InstructionRecord> pred = gt;
        pred.pop_back();
        CHECK_THROWS_WITH_AS(evaluate(gt, pred, 0.5), doctest::Contains("t0"),
                             std::invalid_argument);
    }
    SUBCASE("garbled answers all count as parse failures") {
        std::vector<InstructionRecord> pred = gt;
        for (auto& p : pred) p.answer = "((((garbage";
        const EvalReport rep2 = evaluate(gt, pred, 0.5);
        size_t failures = 0, samples = 0;
        for (const auto& [task, c] : rep2.counts) {
            failures += c.parse_failures;
            samples += c.samples;
        }
        // caption answers are free text and always parse
        CHECK(failures == samples - 1);
        CHECK(rep2.detection->recall == doctest::Approx(0.0));
        CHECK(rep2.change->recall == doctest::Approx(0.0));
        CHECK(rep2.change->precision == 1.0);
    }
}

TEST_CASE("hand-computed mixed fixture") {
    const CoordSpace px = pixel_space();
    const RotatedBox b1 = axis_box(0, 0, 10, 10);
    const RotatedBox b2 = axis_box(20, 0, 40, 10);
    const RotatedBox b3 = axis_box(50, 50, 60, 70);

    std::vector<InstructionRecord> gt, pred;
    auto add = [&](const InstructionRecord& g, const InstructionRecord& p) {
        gt.push_back(g);
        pred.push_back(p);
    };

    // two detections found exactly
    add(make_record("d1", TaskTag::detection, RboxList{{b1, b2}}, px),
        make_record("d1", TaskTag::detection, RboxList{{b2, b1}}, px));
    // one missed (empty prediction)
    add(make_record("d2", TaskTag::detection, RboxList{{b3}}, px),
        make_record("d2", TaskTag::detection, RboxList{}, px));
    // one garbled (parse failure scored as empty)
    {
        InstructionRecord p = make_record("d3", TaskTag::detection, RboxList{{b3}}, px);
        InstructionRecord bad = p;
        bad.answer = "sorry, no idea";
        add(p, bad);
    }
    // geoloc: one degree of longitude east at latitude 30
    add(make_record("g1", TaskTag::geoloc, GeoLocAnswer{"Hangzhou", {30.0, 120.0}}, px),
        make_record("g1", TaskTag::geoloc, GeoLocAnswer{"hangzhou", {30.0, 121.0}}, px));
    // geoloc garbled: excluded from the distance stats
    {
        InstructionRecord g = make_record("g2", TaskTag::geoloc,
                                          GeoLocAnswer{"Beijing", {39.9, 116.4}}, px);
        InstructionRecord bad = g;
        bad.answer = "somewhere north";
        add(g, bad);
    }
    // captions: one exact, one matching only after normalization
    add(make_record("t1", TaskTag::caption, Caption{"A pond"}, px),
        make_record("t1", TaskTag::caption, Caption{"A pond"}, px));
    add(make_record("t2", TaskTag::caption, Caption{"A Large Pond."}, px),
        make_record("t2", TaskTag::caption, Caption{"a large pond"}, px));
    // change: half-overlap rectangles
    {
        Polygon rect{{{0, 0}, {10, 0}, {10, 10}, {0, 10}}};
        Polygon shifted{{{5, 0}, {15, 0}, {15, 10}, {5, 10}}};
        add(make_record("c1", TaskTag::change, PolyList{{rect}}, pixel_space(20, 10)),
            make_record("c1", TaskTag::change, PolyList{{shifted}}, pixel_space(20, 10)));
    }
    // seg: identical prompt
    {
        SegTarget t;
        t.box = {{1, 1}, {9, 9}};
        t.keypoints = {{4, 4}};
        add(make_record("s1", TaskTag::seg, SegPrompt{{t}}, px),
            make_record("s1", TaskTag::seg, SegPrompt{{t}}, px));
    }
    // identify: exact
    add(make_record("i1", TaskTag::identify, Caption{"A ship"}, px),
        make_record("i1", TaskTag::identify, Caption{"A ship"}, px));

    REQUIRE(gt.size() == 10);
    const EvalReport rep = evaluate(gt, pred, 0.5);

    CHECK(rep.counts.at("detection").samples == 3);
    CHECK(rep.counts.at("detection").parse_failures == 1);
    CHECK(rep.counts.at("geoloc").parse_failures == 1);
    CHECK(rep.counts.at("caption").samples == 2);
    CHECK(rep.counts.at("identify").samples == 1);

    // detection: tp=2 (d1), fn=2 (d2, d3), fp=0
    CHECK(rep.detection->tp == 2);
    CHECK(rep.detection->fp == 0);
    CHECK(rep.detection->fn == 2);
    CHECK(rep.detection->precision == doctest::Approx(1.0));
    CHECK(rep.detection->recall == doctest::Approx(0.5));
    CHECK(rep.detection->f1 == doctest::Approx(2.0 / 3.0));
    CHECK(rep.detection->mean_iou == doctest::Approx(1.0));

    // geoloc: only g1 scored; 1 deg lon at lat 30 is about 96.3 km
    CHECK(rep.geoloc->mean_km == doctest::Approx(96.3).epsilon(1e-3));
    CHECK(rep.geoloc->median_km == doctest::Approx(rep.geoloc->mean_km));
    CHECK(rep.geoloc->city_match_rate == doctest::Approx(1.0));

    // caption (caption + identify pooled): 2 of 3 exact, 3 of 3 normalized
    CHECK(rep.caption->exact_rate == doctest::Approx(2.0 / 3.0));
    CHECK(rep.caption->normalized_rate == doctest::Approx(1.0));

    CHECK(rep.change->precision == doctest::Approx(0.5));
    CHECK(rep.change->recall == doctest::Approx(0.5));
    CHECK(rep.change->f1 == doctest::Approx(0.5));

    CHECK(rep.segmentation->mean_box_iou == doctest::Approx(1.0));
    CHECK(rep.segmentation->keypoint_in_box_rate == doctest::Approx(1.0));

    // report renders in both shapes
    CHECK(rep.to_json().find("\"detection\"") != std::string::npos);
    CHECK(rep.to_table().find("detection f1") != std::string::npos);
}
