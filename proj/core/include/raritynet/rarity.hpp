#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "raritynet/image.hpp"

namespace raritynet {

// Two-ring sampling geometry. The outer ring always carries twice the
// neighbors of the inner one; the index formulas in the encoder rely on
// that ratio. Defaults: inner radius 1 with 8 neighbors, outer radius 2
// with 16.
struct RingParams {
    double r1 = 1.0;  // inner radius
    double r2 = 2.0;  // outer radius
    int p = 8;        // neighbors on r1; outer ring gets 2*p

    int q() const { return 2 * p; }
    void validate() const;  // throws std::invalid_argument
};

// Four per-pixel code maps, one per encoding direction. Codes fit in
// p bits (p <= 8).
struct RarityResponse {
    int width = 0;
    int height = 0;
    int p = 8;  // code width in bits, from the RingParams that produced it
    std::array<std::vector<uint8_t>, 4> maps;

    uint8_t code(int eta, int x, int y) const {  // eta in 1..4
        return maps[eta - 1][static_cast<size_t>(y) * width + x];
    }
};

struct CodeMap {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> codes;
};

// Concatenated per-block code histograms, [eta][block row][block col][bin].
struct FeatureVector {
    int grid = 0;
    int p = 0;
    int eta_count = 0;
    std::vector<double> values;
};

// Differences whose magnitude falls below this are treated as ties and
// rejected by both sign tests. Keeps the offset/scale/inversion
// invariances exact under floating-point evaluation.
inline constexpr double kSignTieEps = 1e-9;

// Bilinear sample on a ring around (x, y): angle 2*pi*idx/count, index 0
// at the 0-degree direction, counter-clockwise, clamp-to-edge.
double sample_ring(const GrayImage& img, int x, int y, double radius, int count, int idx);

// The inter-radial descriptor: four code maps from sign tests on
// anchor-minus-partner differences across the two rings.
RarityResponse encode_rarity(const GrayImage& img, const RingParams& rp = {});

// Classic LBP baseline: bit i set iff the ring sample is >= center.
CodeMap encode_lbp(const GrayImage& img, double radius, int count);

FeatureVector block_histograms(const RarityResponse& resp, int grid);

double l1_distance(const FeatureVector& a, const FeatureVector& b);

// One grayscale image per code map, for PGM export.
GrayImage map_as_image(const RarityResponse& resp, int eta);

std::string feature_to_json(const FeatureVector& fv);
FeatureVector feature_from_json(const std::string& text);

}  // namespace raritynet
