#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace raritynet {

// Grayscale image with real-valued intensities in [0, 255].
// Intensities stay real through the whole pipeline; quantization to
// bytes happens only at PGM I/O.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major, height * width

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }

    bool operator==(const GrayImage& o) const = default;
};

struct PgmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary P5 portable graymap, maxval <= 255. '#' comments allowed in the header.
GrayImage load_pgm(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> save_pgm(const GrayImage& img);

GrayImage load_pgm_file(const std::string& path);
void save_pgm_file(const GrayImage& img, const std::string& path);

// Bilinear sample with clamp-to-edge coordinates. Evaluated as two lerps so
// constant cells reproduce the constant exactly.
double bilinear_sample(const GrayImage& img, double x, double y);

// Rotation about the image center, bilinear, clamp-to-edge. |angle_deg| <= 180.
GrayImage rotate(const GrayImage& img, double angle_deg);

GrayImage hflip(const GrayImage& img);

// Rotations at {-30,-15,0,+15,+30} degrees followed by the horizontal flip
// of each, in that order. Always 10 images.
std::vector<GrayImage> augment_set(const GrayImage& img);

}  // namespace raritynet
