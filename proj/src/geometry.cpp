#include "rsvlts/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace rsvlts {

namespace {

bool finite(const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double dist2(const Point& a, const Point& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

void HorizontalBox::validate() const {
    if (!finite(min) || !finite(max)) throw std::invalid_argument("HorizontalBox: non-finite corner");
    if (min.x > max.x || min.y > max.y) throw std::invalid_argument("HorizontalBox: min must not exceed max");
}

double RotatedBox::diagonal() const {
    return std::sqrt(std::max(dist2(corners[0], corners[2]), dist2(corners[1], corners[3])));
}

void RotatedBox::validate() const {
    for (const Point& c : corners)
        if (!finite(c)) throw std::invalid_argument("RotatedBox: non-finite corner");
    std::vector<Point> ring(corners.begin(), corners.end());
    const double area = signed_area(ring);
    if (!(area < 0.0)) throw std::invalid_argument("RotatedBox: corners must be clockwise with nonzero area");
    const double tol = 1e-6 * diagonal();
    const double e01 = std::sqrt(dist2(corners[0], corners[1]));
    const double e12 = std::sqrt(dist2(corners[1], corners[2]));
    const double e23 = std::sqrt(dist2(corners[2], corners[3]));
    const double e30 = std::sqrt(dist2(corners[3], corners[0]));
    if (std::abs(e01 - e23) > tol || std::abs(e12 - e30) > tol)
        throw std::invalid_argument("RotatedBox: opposite edges differ in length");
    // Rectangle: adjacent edges orthogonal.
    const double dx1 = corners[1].x - corners[0].x, dy1 = corners[1].y - corners[0].y;
    const double dx2 = corners[2].x - corners[1].x, dy2 = corners[2].y - corners[1].y;
    if (std::abs(dx1 * dx2 + dy1 * dy2) > tol * diagonal())
        throw std::invalid_argument("RotatedBox: adjacent edges not orthogonal");
}

void BoxParams::validate() const {
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw std::invalid_argument("BoxParams: non-finite center");
    if (!(w > 0.0)) throw std::invalid_argument("BoxParams: w must be > 0");
    if (!(h > 0.0)) throw std::invalid_argument("BoxParams: h must be > 0");
    constexpr double half_pi = 1.5707963267948966;
    if (!(theta >= -half_pi && theta < half_pi)) throw std::invalid_argument("BoxParams: theta out of [-pi/2, pi/2)");
}

void Polygon::validate() const {
    if (vertices.size() < 3) throw std::invalid_argument("Polygon: fewer than 3 vertices");
    for (size_t i = 0; i < vertices.size(); ++i) {
        if (!finite(vertices[i])) throw std::invalid_argument("Polygon: non-finite vertex");
        const Point& next = vertices[(i + 1) % vertices.size()];
        if (vertices[i] == next) throw std::invalid_argument("Polygon: repeated consecutive vertex");
    }
    if (signed_area(vertices) == 0.0) throw std::invalid_argument("Polygon: zero area");
}

size_t BinaryMask::count() const {
    return static_cast<size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void GeoPoint::validate() const {
    if (!(lat >= -90.0 && lat <= 90.0)) throw std::invalid_argument("GeoPoint: lat out of [-90, 90]");
    if (!(lon >= -180.0 && lon <= 180.0)) throw std::invalid_argument("GeoPoint: lon out of [-180, 180]");
}

double signed_area(const std::vector<Point>& ring) {
    // Trapezoid form: negative for clockwise loops in image coordinates.
    double acc = 0.0;
    for (size_t i = 0; i < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % ring.size()];
        acc += (b.x - a.x) * (b.y + a.y);
    }
    return acc / 2.0;
}

double polygon_area(const Polygon& poly) { return std::abs(signed_area(poly.vertices)); }

RotatedBox rbb_from_params(const BoxParams& p) {
    p.validate();
    const double c = std::cos(p.theta), s = std::sin(p.theta);
    const double hw = p.w / 2.0, hh = p.h / 2.0;
    const std::array<Point, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
    RotatedBox out;
    for (size_t i = 0; i < 4; ++i) {
        out.corners[i] = {p.cx + local[i].x * c - local[i].y * s,
                          p.cy + local[i].x * s + local[i].y * c};
    }
    return out;
}

BoxParams rbb_to_params(const RotatedBox& b) {
    b.validate();
    BoxParams p;
    p.cx = (b.corners[0].x + b.corners[1].x + b.corners[2].x + b.corners[3].x) / 4.0;
    p.cy = (b.corners[0].y + b.corners[1].y + b.corners[2].y + b.corners[3].y) / 4.0;
    const double ex = b.corners[1].x - b.corners[0].x;
    const double ey = b.corners[1].y - b.corners[0].y;
    p.w = std::hypot(ex, ey);
    p.h = std::hypot(b.corners[2].x - b.corners[1].x, b.corners[2].y - b.corners[1].y);
    p.theta = std::atan2(ey, ex);
    // Reduce mod pi into [-pi/2, pi/2); a rectangle is invariant under a
    // half-turn so w/h are unchanged.
    constexpr double pi = 3.141592653589793;
    if (p.theta >= pi / 2.0) p.theta -= pi;
    if (p.theta < -pi / 2.0) p.theta += pi;
    if (p.theta >= pi / 2.0) p.theta = -pi / 2.0;
    return p;
}

Polygon box_to_polygon(const RotatedBox& b) {
    return Polygon{{b.corners.begin(), b.corners.end()}};
}

Polygon box_to_polygon(const HorizontalBox& b) {
    return Polygon{{{b.min.x, b.min.y}, {b.max.x, b.min.y}, {b.max.x, b.max.y}, {b.min.x, b.max.y}}};
}

Polygon convex_clip(const Polygon& subject, const Polygon& clipper) {
    const auto& cv = clipper.vertices;
    if (cv.size() < 3) throw std::invalid_argument("convex_clip: clipper needs >= 3 vertices");
    // Convexity: all cross products share one sign (zeros allowed).
    double sign = 0.0;
    for (size_t i = 0; i < cv.size(); ++i) {
        const double cr = cross(cv[i], cv[(i + 1) % cv.size()], cv[(i + 2) % cv.size()]);
        if (cr != 0.0) {
            if (sign == 0.0) sign = cr > 0 ? 1.0 : -1.0;
            else if (cr * sign < 0.0) throw std::invalid_argument("convex_clip: clipper not convex");
        }
    }
    if (sign == 0.0) throw std::invalid_argument("convex_clip: degenerate clipper");

    std::vector<Point> output = subject.vertices;
    for (size_t i = 0; i < cv.size() && !output.empty(); ++i) {
        const Point& a = cv[i];
        const Point& b = cv[(i + 1) % cv.size()];
        auto inside = [&](const Point& p) { return sign * cross(a, b, p) >= 0.0; };
        auto intersect = [&](const Point& p, const Point& q) {
            const double d1 = cross(a, b, p), d2 = cross(a, b, q);
            const double t = d1 / (d1 - d2);
            return Point{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        };
        std::vector<Point> input;
        input.swap(output);
        for (size_t j = 0; j < input.size(); ++j) {
            const Point& cur = input[j];
            const Point& prev = input[(j + input.size() - 1) % input.size()];
            if (inside(cur)) {
                if (!inside(prev)) output.push_back(intersect(prev, cur));
                output.push_back(cur);
            } else if (inside(prev)) {
                output.push_back(intersect(prev, cur));
            }
        }
    }
    // Drop duplicate consecutive vertices produced by touching edges.
    std::vector<Point> cleaned;
    for (const Point& p : output) {
        if (cleaned.empty() || dist2(cleaned.back(), p) > 1e-18) cleaned.push_back(p);
    }
    while (cleaned.size() > 1 && dist2(cleaned.front(), cleaned.back()) <= 1e-18) cleaned.pop_back();
    if (cleaned.size() < 3 || std::abs(signed_area(cleaned)) == 0.0) return Polygon{};
    return Polygon{std::move(cleaned)};
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
    const Polygon pa = box_to_polygon(a);
    const Polygon pb = box_to_polygon(b);
    const double area_a = polygon_area(pa);
    const double area_b = polygon_area(pb);
    if (area_a == 0.0 && area_b == 0.0) return 0.0;
    const Polygon inter = convex_clip(pa, pb);
    const double ai = inter.vertices.empty() ? 0.0 : polygon_area(inter);
    const double uni = area_a + area_b - ai;
    return uni > 0.0 ? ai / uni : 0.0;
}

double horizontal_iou(const HorizontalBox& a, const HorizontalBox& b) {
    const double ix = std::max(0.0, std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x));
    const double iy = std::max(0.0, std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y));
    const double ai = ix * iy;
    const double uni = (a.max.x - a.min.x) * (a.max.y - a.min.y) +
                       (b.max.x - b.min.x) * (b.max.y - b.min.y) - ai;
    return uni > 0.0 ? ai / uni : (ai > 0.0 ? 1.0 : 0.0);
}

namespace {

// Shared crossing rule for point_in_polygon and the scanline fill: an edge
// contributes on [min_y, max_y) so shared edges are counted once.
void row_crossings(const std::vector<Point>& vs, double y, std::vector<double>& xs) {
    xs.clear();
    for (size_t i = 0; i < vs.size(); ++i) {
        const Point& p = vs[i];
        const Point& q = vs[(i + 1) % vs.size()];
        if ((p.y <= y && y < q.y) || (q.y <= y && y < p.y)) {
            const double t = (y - p.y) / (q.y - p.y);
            xs.push_back(p.x + t * (q.x - p.x));
        }
    }
}

}  // namespace

bool point_in_polygon(const Point& pt, const Polygon& poly) {
    std::vector<double> xs;
    row_crossings(poly.vertices, pt.y, xs);
    int parity = 0;
    for (double x : xs)
        if (x > pt.x) parity ^= 1;
    return parity != 0;
}

BinaryMask rasterize_polygon(const Polygon& poly, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("rasterize_polygon: non-positive canvas");
    BinaryMask mask(width, height);
    std::vector<double> xs;
    for (int j = 0; j < height; ++j) {
        const double y = j + 0.5;
        row_crossings(poly.vertices, y, xs);
        if (xs.empty()) continue;
        std::sort(xs.begin(), xs.end());
        // Center x = i + 0.5 is inside iff an odd number of crossings lies
        // strictly to its right; equivalently fill between crossing pairs.
        // Center x = cx is inside iff xs[2k] <= cx < xs[2k+1], which equals
        // the odd-count-of-crossings-right-of-cx rule in point_in_polygon.
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            int lo = static_cast<int>(std::ceil(xs[k] - 0.5));
            int hi = static_cast<int>(std::floor(xs[k + 1] - 0.5));
            if (static_cast<double>(hi) + 0.5 >= xs[k + 1]) --hi;
            lo = std::max(lo, 0);
            hi = std::min(hi, width - 1);
            for (int i = lo; i <= hi; ++i) mask.set(i, j);
        }
    }
    return mask;
}

BinaryMask rasterize_polygons(const std::vector<Polygon>& polys, int width, int height) {
    BinaryMask acc(width, height);
    for (const Polygon& p : polys) {
        const BinaryMask m = rasterize_polygon(p, width, height);
        for (size_t i = 0; i < acc.bits.size(); ++i) acc.bits[i] |= m.bits[i];
    }
    return acc;
}

HorizontalBox mask_to_hbb(const BinaryMask& mask) {
    int min_x = mask.width, min_y = mask.height, max_x = -1, max_y = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.get(x, y)) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
    if (max_x < 0) throw std::invalid_argument("mask_to_hbb: empty mask");
    return HorizontalBox{{static_cast<double>(min_x), static_cast<double>(min_y)},
                         {static_cast<double>(max_x), static_cast<double>(max_y)}};
}

std::vector<Point> sample_keypoints(const BinaryMask& mask, int n) {
    if (n < 0) throw std::invalid_argument("sample_keypoints: negative n");
    if (n == 0) return {};
    std::vector<std::pair<int, int>> set_pixels;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.get(x, y)) set_pixels.emplace_back(x, y);
    if (set_pixels.empty()) throw std::invalid_argument("sample_keypoints: empty mask");

    // City-block distance to the nearest background pixel (or image border),
    // by multi-source BFS from the complement.
    const int w = mask.width, h = mask.height;
    std::vector<int> dist(static_cast<size_t>(w) * h, -1);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!mask.get(x, y)) {
                dist[static_cast<size_t>(y) * w + x] = 0;
                queue.emplace_back(x, y);
            }
    // Outside the image counts as background: border set pixels start at 1.
    // Appending them after all the 0-seeds keeps the BFS order monotone.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((x == 0 || y == 0 || x == w - 1 || y == h - 1) &&
                dist[static_cast<size_t>(y) * w + x] < 0) {
                dist[static_cast<size_t>(y) * w + x] = 1;
                queue.emplace_back(x, y);
            }
    static constexpr int dx[4] = {1, -1, 0, 0};
    static constexpr int dy[4] = {0, 0, 1, -1};
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        const int d = dist[static_cast<size_t>(y) * w + x];
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            int& nd = dist[static_cast<size_t>(ny) * w + nx];
            if (nd < 0) {
                nd = d + 1;
                queue.emplace_back(nx, ny);
            }
        }
    }
    // Border pixels of a full mask would otherwise read 1 from the virtual
    // outside ring; interior distances account for that seed already.

    // Argmax in row-major order.
    std::pair<int, int> best = set_pixels.front();
    int best_d = -1;
    for (const auto& [x, y] : set_pixels) {
        const int d = dist[static_cast<size_t>(y) * w + x];
        if (d > best_d) {
            best_d = d;
            best = {x, y};
        }
    }
    std::vector<Point> out;
    out.push_back({static_cast<double>(best.first), static_cast<double>(best.second)});
    // Farthest-point sampling for the remainder, row-major tie break.
    while (static_cast<int>(out.size()) < n) {
        std::pair<int, int> far = set_pixels.front();
        double far_d = -1.0;
        for (const auto& [x, y] : set_pixels) {
            const Point p{static_cast<double>(x), static_cast<double>(y)};
            double d_min = std::numeric_limits<double>::infinity();
            for (const Point& q : out) d_min = std::min(d_min, dist2(p, q));
            if (d_min > far_d) {
                far_d = d_min;
                far = {x, y};
            }
        }
        out.push_back({static_cast<double>(far.first), static_cast<double>(far.second)});
    }
    return out;
}

namespace {

struct CornerEdge {
    int x0, y0, x1, y1;
};

void douglas_peucker(const std::vector<Point>& pts, size_t lo, size_t hi, double eps,
                     std::vector<bool>& keep) {
    if (hi <= lo + 1) return;
    const Point& a = pts[lo];
    const Point& b = pts[hi];
    const double len = std::sqrt(dist2(a, b));
    double max_d = -1.0;
    size_t max_i = lo;
    for (size_t i = lo + 1; i < hi; ++i) {
        double d;
        if (len == 0.0) {
            d = std::sqrt(dist2(pts[i], a));
        } else {
            d = std::abs(cross(a, b, pts[i])) / len;
        }
        if (d > max_d) {
            max_d = d;
            max_i = i;
        }
    }
    // Drop only strictly-sub-eps deviations so that on an integer pixel grid a
    // 1-px-deep step survives eps = 1 (a long shallow notch can hold a lot of
    // area); exactly-collinear runs still collapse at eps = 0.
    if (max_d > eps || (max_d == eps && eps > 0.0)) {
        keep[max_i] = true;
        douglas_peucker(pts, lo, max_i, eps, keep);
        douglas_peucker(pts, max_i, hi, eps, keep);
    }
}

std::vector<Point> simplify_ring(const std::vector<Point>& ring, double eps) {
    if (ring.size() <= 3) return ring;
    // Split the closed ring at its two mutually farthest vertices and run
    // Douglas-Peucker on each half.
    size_t a = 0, b = ring.size() / 2;
    double best = -1.0;
    for (size_t i = 0; i < ring.size(); ++i)
        for (size_t j = i + 1; j < ring.size(); ++j) {
            const double d = dist2(ring[i], ring[j]);
            if (d > best) {
                best = d;
                a = i;
                b = j;
            }
        }
    std::vector<Point> rotated;
    rotated.reserve(ring.size() + 1);
    for (size_t i = 0; i < ring.size(); ++i) rotated.push_back(ring[(a + i) % ring.size()]);
    rotated.push_back(ring[a]);  // close
    const size_t mid = (b + ring.size() - a) % ring.size();
    std::vector<bool> keep(rotated.size(), false);
    keep.front() = keep[mid] = true;
    douglas_peucker(rotated, 0, mid, eps, keep);
    douglas_peucker(rotated, mid, rotated.size() - 1, eps, keep);
    std::vector<Point> out;
    for (size_t i = 0; i + 1 < rotated.size(); ++i)
        if (keep[i]) out.push_back(rotated[i]);
    return out;
}

}  // namespace

std::vector<Polygon> trace_mask_to_polygons(const BinaryMask& mask, double simplify_eps,
                                            int min_component_px) {
    if (simplify_eps < 0.0) throw std::invalid_argument("trace_mask_to_polygons: negative eps");
    const int w = mask.width, h = mask.height;
    std::vector<int> comp(static_cast<size_t>(w) * h, -1);
    int n_comp = 0;
    std::vector<size_t> comp_size;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.get(x, y) || comp[static_cast<size_t>(y) * w + x] >= 0) continue;
            const int id = n_comp++;
            comp_size.push_back(0);
            std::deque<std::pair<int, int>> stack{{x, y}};
            comp[static_cast<size_t>(y) * w + x] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++comp_size[id];
                static constexpr int dx[4] = {1, -1, 0, 0};
                static constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!mask.get(nx, ny)) continue;
                    int& c = comp[static_cast<size_t>(ny) * w + nx];
                    if (c < 0) {
                        c = id;
                        stack.emplace_back(nx, ny);
                    }
                }
            }
        }

    std::vector<Polygon> out;
    for (int id = 0; id < n_comp; ++id) {
        if (comp_size[id] < static_cast<size_t>(std::max(1, min_component_px))) continue;
        // Directed boundary edges with the component on the left when walking
        // clockwise (image coordinates). Keyed by start corner.
        auto in_comp = [&](int x, int y) {
            return x >= 0 && y >= 0 && x < w && y < h && comp[static_cast<size_t>(y) * w + x] == id;
        };
        std::multimap<std::pair<int, int>, std::pair<int, int>> edges;  // start -> end
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (!in_comp(x, y)) continue;
                if (!in_comp(x, y - 1)) edges.insert({{x, y}, {x + 1, y}});
                if (!in_comp(x + 1, y)) edges.insert({{x + 1, y}, {x + 1, y + 1}});
                if (!in_comp(x, y + 1)) edges.insert({{x + 1, y + 1}, {x, y + 1}});
                if (!in_comp(x - 1, y)) edges.insert({{x, y + 1}, {x, y}});
            }

        std::vector<std::vector<Point>> loops;
        while (!edges.empty()) {
            auto it = edges.begin();
            const auto start = it->first;
            auto cur = start;
            auto next = it->second;
            edges.erase(it);
            std::vector<Point> loop{{static_cast<double>(cur.first), static_cast<double>(cur.second)}};
            while (next != start) {
                loop.push_back({static_cast<double>(next.first), static_cast<double>(next.second)});
                auto range = edges.equal_range(next);
                if (range.first == range.second) break;  // should not happen on a closed boundary
                auto pick = range.first;
                if (std::distance(range.first, range.second) > 1) {
                    // Pinch corner: prefer the tightest right turn relative to
                    // the incoming direction so loops stay simple.
                    const int in_dx = next.first - cur.first;
                    const int in_dy = next.second - cur.second;
                    int best_score = std::numeric_limits<int>::min();
                    for (auto cand = range.first; cand != range.second; ++cand) {
                        const int out_dx = cand->second.first - next.first;
                        const int out_dy = cand->second.second - next.second;
                        // cross > 0: left turn in image coords; we want right.
                        const int cr = in_dx * out_dy - in_dy * out_dx;
                        const int score = cr < 0 ? 2 : (cr == 0 ? 1 : 0);
                        if (score > best_score) {
                            best_score = score;
                            pick = cand;
                        }
                    }
                }
                cur = next;
                next = pick->second;
                edges.erase(pick);
            }
            loops.push_back(std::move(loop));
        }
        // Outer boundary is the clockwise loop (negative signed area) with
        // the largest extent; holes run the other way and are discarded.
        const std::vector<Point>* outer = nullptr;
        double best_area = 0.0;
        for (const auto& loop : loops) {
            const double a = signed_area(loop);
            if (a < 0.0 && -a > best_area) {
                best_area = -a;
                outer = &loop;
            }
        }
        if (!outer) continue;
        std::vector<Point> simplified = simplify_ring(*outer, simplify_eps);
        if (simplified.size() < 3) continue;
        Polygon poly{std::move(simplified)};
        if (std::abs(signed_area(poly.vertices)) == 0.0) continue;
        out.push_back(std::move(poly));
    }
    return out;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    a.validate();
    b.validate();
    constexpr double radius_km = 6371.0;
    constexpr double deg = 3.141592653589793 / 180.0;
    const double dlat = (b.lat - a.lat) * deg;
    const double dlon = (b.lon - a.lon) * deg;
    const double s = std::sin(dlat / 2.0) * std::sin(dlat / 2.0) +
                     std::cos(a.lat * deg) * std::cos(b.lat * deg) *
                         std::sin(dlon / 2.0) * std::sin(dlon / 2.0);
    return 2.0 * radius_km * std::asin(std::min(1.0, std::sqrt(s)));
}

}  // namespace rsvlts
