#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rsvlts/augment.hpp"
#include "rsvlts/condparse.hpp"
#include "rsvlts/metrics.hpp"

namespace py = pybind11;
using namespace rsvlts;

namespace {

using PyPoints = std::vector<std::pair<double, double>>;

std::vector<Point> to_points(const PyPoints& pts) {
    std::vector<Point> out;
    out.reserve(pts.size());
    for (const auto& [x, y] : pts) out.push_back({x, y});
    return out;
}

PyPoints from_points(const std::vector<Point>& pts) {
    PyPoints out;
    out.reserve(pts.size());
    for (const Point& p : pts) out.emplace_back(p.x, p.y);
    return out;
}

RotatedBox to_box(const PyPoints& corners) {
    if (corners.size() != 4)
        throw std::invalid_argument("a rotated box needs exactly 4 corners");
    RotatedBox b;
    for (size_t i = 0; i < 4; ++i) b.corners[i] = {corners[i].first, corners[i].second};
    return b;
}

CoordSpace pixel_space() {
    CoordSpace s;
    s.mode = CoordMode::pixel;
    return s;
}

}  // namespace

PYBIND11_MODULE(_rsvlts, m) {
    m.doc() = "set-of-points toolkit: geometry, text codec, condition parsing, evaluation";

    // geometry
    m.def("rbb_from_params",
          [](double cx, double cy, double w, double h, double theta) {
              const RotatedBox b = rbb_from_params({cx, cy, w, h, theta});
              return from_points({b.corners.begin(), b.corners.end()});
          },
          py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"), py::arg("theta"),
          "Four clockwise corners of a center/extent/angle box.");
    m.def("rbb_to_params",
          [](const PyPoints& corners) {
              const BoxParams p = rbb_to_params(to_box(corners));
              return std::make_tuple(p.cx, p.cy, p.w, p.h, p.theta);
          },
          py::arg("corners"), "Inverse of rbb_from_params; returns (cx, cy, w, h, theta).");
    m.def("rotated_iou",
          [](const PyPoints& a, const PyPoints& b) { return rotated_iou(to_box(a), to_box(b)); },
          py::arg("a"), py::arg("b"));
    m.def("polygon_area",
          [](const PyPoints& verts) { return polygon_area(Polygon{to_points(verts)}); },
          py::arg("vertices"));
    m.def("haversine_km",
          [](double lat1, double lon1, double lat2, double lon2) {
              return haversine_km({lat1, lon1}, {lat2, lon2});
          },
          py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));

    // text codec
    m.def("serialize_point_set",
          [](const PyPoints& pts) { return serialize_point_set(to_points(pts)); },
          py::arg("points"), "\"{(x1, y1), (x2, y2)}\" wire form.");
    m.def("parse_point_set",
          [](const std::string& text) { return from_points(parse_point_set(text)); },
          py::arg("text"), "Tolerant inverse; raises ValueError when no point set is found.");
    m.def("build_instruction",
          [](const std::string& tag, const std::string& prompt) {
              const auto t = tag_from_name(tag);
              if (!t) throw std::invalid_argument("unknown task tag: " + tag);
              return build_instruction(*t, prompt);
          },
          py::arg("tag"), py::arg("prompt"));
    m.def("split_instruction",
          [](const std::string& text) {
              const auto [tag, rest] = split_instruction(text);
              return std::make_pair(tag ? tag_name(*tag) : std::string(), rest);
          },
          py::arg("text"), "Returns (tag_name or \"\", remainder).");

    // condition parsing and resolution
    m.def("decompose",
          [](const std::string& instruction) { return chain_to_json(parse_conditions(instruction)); },
          py::arg("instruction"), "Condition chain as a JSON string.");
    m.def("resolve",
          [](const std::string& instruction, const std::string& scene_json) {
              OracleGrounder grounder(scene_graph_from_json(scene_json));
              const ResolveResult r = resolve(parse_conditions(instruction), grounder);
              py::dict out;
              out["ids"] = r.entity_ids;
              out["answer"] = serialize_answer(r.boxes, pixel_space());
              py::list trace;
              for (const ResolveStep& s : r.trace) {
                  py::dict step;
                  step["step"] = s.description;
                  step["in"] = s.in_count;
                  step["out"] = s.out_count;
                  trace.append(step);
              }
              out["trace"] = trace;
              return out;
          },
          py::arg("instruction"), py::arg("scene_json"),
          "Iteratively resolves the instruction against a scene-graph oracle.");

    // cyclic augmentation over serialized records
    m.def("cycle_record",
          [](const std::string& record_json) {
              const auto cap = rec_to_region_caption(record_from_json(record_json));
              return cap ? py::object(py::str(record_to_json(*cap))) : py::object(py::none());
          },
          py::arg("record_json"),
          "Region-caption counterpart of a localizing record, or None when ineligible.");
    m.def("augment_file",
          [](const std::string& input, const std::string& output, double ratio,
             std::uint64_t seed) {
              const auto out = augment_corpus(read_records_file(input), ratio, seed);
              write_records_file(out, output);
              return out.size();
          },
          py::arg("input"), py::arg("output"), py::arg("ratio"), py::arg("seed"));

    // evaluation
    m.def("evaluate_files",
          [](const std::string& gt, const std::string& pred, double iou_thresh) {
              return evaluate_files(gt, pred, iou_thresh).to_json();
          },
          py::arg("gt"), py::arg("pred"), py::arg("iou_thresh") = 0.5,
          "Scores prediction records against ground truth; returns the report as JSON.");

    py::register_exception<ParseFailure>(m, "ParseFailure", PyExc_ValueError);
}
