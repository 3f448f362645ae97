#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

// Geometry primitives for the set-of-points task representations.
// Image convention: origin top-left, x rightward, y downward.
// All types are immutable values; all operations are pure functions.

namespace rsvlts {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
};

// Axis-aligned box given by top-left and bottom-right points (inclusive).
struct HorizontalBox {
    Point min;
    Point max;

    bool operator==(const HorizontalBox&) const = default;
    void validate() const;
};

// Rectangle under rotation, stored as 4 corners in clockwise order
// (in image coordinates), first corner = the rotated top-left.
struct RotatedBox {
    std::array<Point, 4> corners;

    // Checks rectangle-ness: clockwise orientation, opposite edges
    // parallel and equal within 1e-6 * diagonal.
    void validate() const;
    double diagonal() const;
};

// Center/extent/angle parameterization used by several upstream datasets.
struct BoxParams {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;  // radians, in [-pi/2, pi/2)

    void validate() const;
};

// Simple polygon, stored OPEN (closure implicit). The text layer repeats
// the first vertex when serializing.
struct Polygon {
    std::vector<Point> vertices;

    void validate() const;
};

// Row-major boolean grid.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // size = width * height, 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

    bool get(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
};

struct GeoPoint {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]

    bool operator==(const GeoPoint&) const = default;
    void validate() const;
};

// Signed shoelace area over an open vertex ring. Negative for clockwise
// loops in image coordinates (y down), positive for counterclockwise.
double signed_area(const std::vector<Point>& ring);

double polygon_area(const Polygon& poly);

RotatedBox rbb_from_params(const BoxParams& p);

// Inverse of rbb_from_params. Corner order of the reconstruction may be a
// rotation of the input's; the vertex set roundtrips within 1e-6 * diagonal.
BoxParams rbb_to_params(const RotatedBox& b);

// Sutherland-Hodgman clip of `subject` against a convex `clipper`.
// Returns an empty polygon (0 vertices) when the intersection is empty or
// degenerate. Throws std::invalid_argument if the clipper is not convex.
Polygon convex_clip(const Polygon& subject, const Polygon& clipper);

Polygon box_to_polygon(const RotatedBox& b);
Polygon box_to_polygon(const HorizontalBox& b);

// area(a ∩ b) / area(a ∪ b), computed by convex clipping. Symmetric.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

double horizontal_iou(const HorizontalBox& a, const HorizontalBox& b);

// Even-odd crossing test with a half-open edge rule (an edge's lower-y
// endpoint is excluded), so rasterization partitions shared edges.
bool point_in_polygon(const Point& pt, const Polygon& poly);

// Scanline even-odd fill: pixel (i, j) set iff its center (i+0.5, j+0.5)
// is inside poly. Bit-identical to per-pixel point_in_polygon.
BinaryMask rasterize_polygon(const Polygon& poly, int width, int height);

// Fills the union of several polygons (each filled even-odd, then OR-ed).
BinaryMask rasterize_polygons(const std::vector<Polygon>& polys, int width, int height);

// Tight bounds of set pixels, inclusive corners. Throws on an empty mask.
HorizontalBox mask_to_hbb(const BinaryMask& mask);

// Deterministic keypoint prompts: point 1 is the distance-transform argmax
// (most interior set pixel, row-major tie break), the rest come from
// farthest-point sampling within the mask.
std::vector<Point> sample_keypoints(const BinaryMask& mask, int n);

// Outer boundary of each 4-connected component, traced along pixel corners
// and Douglas-Peucker simplified with `simplify_eps`. Holes are discarded;
// components smaller than `min_component_px` pixels are dropped (noise
// specks in change masks).
std::vector<Polygon> trace_mask_to_polygons(const BinaryMask& mask, double simplify_eps,
                                            int min_component_px = 4);

// Great-circle distance, spherical Earth with radius 6371.0 km.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

}  // namespace rsvlts
