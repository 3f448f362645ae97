#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rsvlts/condparse.hpp"
#include "rsvlts/geometry.hpp"

// Randomized fixtures and independent oracles. Everything here is
// test-side machinery: the oracles deliberately avoid the library's
// implementation path for the quantity they check.

namespace rsvlts::testgen {

using Rng = std::mt19937_64;

// Membership-count IoU over the joint bounding window of both boxes,
// `resolution` cells per axis. Uses the even-odd point test, not clipping.
double grid_iou(const RotatedBox& a, const RotatedBox& b, int resolution);

BoxParams random_params(Rng& rng, double extent = 1000.0);
RotatedBox random_box(Rng& rng, double extent = 1000.0);

// Star-shaped (hence simple) polygon around a random center.
Polygon random_polygon(Rng& rng, double extent = 100.0);

// Union of a few overlapping rectangles; always >= 16 set pixels.
BinaryMask random_blob(Rng& rng, int width, int height);

// Pixel IoU of two masks of equal dimensions.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// A generated multi-condition query with its ground-truth condition set.
struct GenInstruction {
    std::string text;
    std::string category;                                   // singular
    std::optional<std::string> color;
    std::optional<std::pair<SpatialRelation, std::string>> spatial;
    std::optional<SuperlativeMetric> metric;
    size_t expected_steps = 1;
};

SceneGraph random_scene(Rng& rng);
GenInstruction random_instruction(Rng& rng, const SceneGraph& scene);

// One-shot conjunction evaluation of the generated conditions, written
// independently of OracleGrounder/resolve. Returns sorted entity ids.
std::vector<std::string> brute_force_resolve(const SceneGraph& scene, const GenInstruction& gen);

}  // namespace rsvlts::testgen
