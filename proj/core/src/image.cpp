#include "raritynet/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace raritynet {

namespace {

// Header token reader for P5: skips whitespace and '#' comments.
struct HeaderCursor {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    bool at_end() const { return pos >= bytes.size(); }

    void skip_space_and_comments() {
        while (!at_end()) {
            uint8_t c = bytes[pos];
            if (c == '#') {
                while (!at_end() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_int(const char* what) {
        skip_space_and_comments();
        if (at_end() || !std::isdigit(bytes[pos]))
            throw PgmError(std::string("malformed header: expected ") + what);
        long v = 0;
        while (!at_end() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000) throw PgmError(std::string("malformed header: huge ") + what);
            ++pos;
        }
        return v;
    }
};

}  // namespace

GrayImage load_pgm(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw PgmError("malformed header: missing magic");
    if (bytes[1] != '5')
        throw PgmError(std::string("unsupported magic \"P") + static_cast<char>(bytes[1]) + "\"");

    HeaderCursor cur{bytes, 2};
    long w = cur.read_int("width");
    long h = cur.read_int("height");
    long maxval = cur.read_int("maxval");
    if (w <= 0 || h <= 0) throw PgmError("malformed header: non-positive dimensions");
    if (maxval <= 0 || maxval > 255) throw PgmError("maxval > 255 not supported");
    if (cur.at_end() || !std::isspace(bytes[cur.pos]))
        throw PgmError("malformed header: missing separator after maxval");
    ++cur.pos;

    size_t need = static_cast<size_t>(w) * static_cast<size_t>(h);
    if (bytes.size() - cur.pos < need) throw PgmError("truncated payload");

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    for (size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<double>(bytes[cur.pos + i]);
    return img;
}

std::vector<uint8_t> save_pgm(const GrayImage& img) {
    char header[64];
    int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", img.width, img.height);
    std::vector<uint8_t> out(header, header + n);
    out.reserve(out.size() + img.data.size());
    for (double v : img.data) {
        long q = static_cast<long>(std::floor(v + 0.5));  // round half up
        if (q < 0) q = 0;
        if (q > 255) q = 255;
        out.push_back(static_cast<uint8_t>(q));
    }
    return out;
}

GrayImage load_pgm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw PgmError("cannot open \"" + path + "\"");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return load_pgm(bytes);
}

void save_pgm_file(const GrayImage& img, const std::string& path) {
    auto bytes = save_pgm(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw PgmError("cannot write \"" + path + "\"");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

double bilinear_sample(const GrayImage& img, double x, double y) {
    const double xmax = img.width - 1.0;
    const double ymax = img.height - 1.0;
    if (x < 0.0) x = 0.0;
    if (x > xmax) x = xmax;
    if (y < 0.0) y = 0.0;
    if (y > ymax) y = ymax;

    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = x0 + 1 < img.width ? x0 + 1 : img.width - 1;
    int y1 = y0 + 1 < img.height ? y0 + 1 : img.height - 1;
    double fx = x - x0;
    double fy = y - y0;

    double top = img.at(x0, y0) + fx * (img.at(x1, y0) - img.at(x0, y0));
    double bot = img.at(x0, y1) + fx * (img.at(x1, y1) - img.at(x0, y1));
    return top + fy * (bot - top);
}

GrayImage rotate(const GrayImage& img, double angle_deg) {
    if (std::abs(angle_deg) > 180.0)
        throw std::invalid_argument("rotate: |angle| must be <= 180");
    if (angle_deg == 0.0) return img;

    const double rad = angle_deg * (std::acos(-1.0) / 180.0);
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;

    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse mapping: rotate the output coordinate back into the source
            double dx = x - cx;
            double dy = y - cy;
            double sx = cx + c * dx + s * dy;
            double sy = cy - s * dx + c * dy;
            out.at(x, y) = bilinear_sample(img, sx, sy);
        }
    }
    return out;
}

GrayImage hflip(const GrayImage& img) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

std::vector<GrayImage> augment_set(const GrayImage& img) {
    static const double angles[] = {-30.0, -15.0, 0.0, 15.0, 30.0};
    std::vector<GrayImage> out;
    out.reserve(10);
    for (double a : angles) out.push_back(rotate(img, a));
    for (int i = 0; i < 5; ++i) out.push_back(hflip(out[i]));
    return out;
}

}  // namespace raritynet
