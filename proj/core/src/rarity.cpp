#include "raritynet/rarity.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "raritynet/parallel.hpp"

namespace raritynet {

int detail_max_threads = 1;
void set_max_threads(int n) { detail_max_threads = n > 1 ? n : 1; }
int max_threads() { return detail_max_threads; }

void RingParams::validate() const {
    if (!(0.0 < r1 && r1 < r2)) throw std::invalid_argument("RingParams: need 0 < r1 < r2");
    if (p < 4 || p > 8) throw std::invalid_argument("RingParams: need 4 <= p <= 8");
}

namespace {

// Offsets that should land on the integer grid (cos/sin of multiples of
// 90 degrees) must do so exactly, otherwise clamped border samples pick
// up interpolation noise.
double snap(double v) {
    double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

struct RingOffsets {
    std::vector<double> dx, dy;
    RingOffsets(double radius, int count) : dx(count), dy(count) {
        const double two_pi = 2.0 * std::acos(-1.0);
        for (int i = 0; i < count; ++i) {
            double th = two_pi * i / count;
            dx[i] = snap(radius * std::cos(th));
            dy[i] = snap(-radius * std::sin(th));
        }
    }
};

}  // namespace

double sample_ring(const GrayImage& img, int x, int y, double radius, int count, int idx) {
    if (idx < 0 || idx >= count) throw std::out_of_range("sample_ring: idx out of range");
    const double two_pi = 2.0 * std::acos(-1.0);
    double th = two_pi * idx / count;
    return bilinear_sample(img, x + snap(radius * std::cos(th)), y + snap(-radius * std::sin(th)));
}

RarityResponse encode_rarity(const GrayImage& img, const RingParams& rp) {
    rp.validate();
    int need = static_cast<int>(2 * rp.r2) + 1;
    if (img.width < need || img.height < need)
        throw std::invalid_argument("encode_rarity: image smaller than 2*r2+1");

    const int p = rp.p;
    const int q = rp.q();
    const RingOffsets inner(rp.r1, p);
    const RingOffsets outer(rp.r2, q);

    // Index tables for the four directions. k = mod(eta,2)+1 selects the
    // anchor ring; the two partners sit on the other ring at f2 and f3.
    // eta 1,3: anchor on the outer ring at 2i, partners inner at i+1 and i.
    // eta 2,4: anchor on the inner ring at i, partners outer at 2i-1 and 2i+1.
    struct EtaPlan {
        bool anchor_outer;
        std::vector<int> anchor, f2, f3;
        bool dark_to_bright;  // true: J1 (both diffs > 0); false: J2
    };
    std::array<EtaPlan, 4> plans;
    for (int eta = 1; eta <= 4; ++eta) {
        int k = eta % 2 + 1;
        int psi = k / 2 + 2 * (k % 2);
        int sign = (k % 2 == 0) ? 1 : -1;  // (-1)^k
        int partner_count = psi * p;       // neighbor count of the partner ring
        EtaPlan& pl = plans[eta - 1];
        pl.anchor_outer = (k == 2);
        pl.dark_to_bright = (eta <= 2);
        pl.anchor.resize(p);
        pl.f2.resize(p);
        pl.f3.resize(p);
        for (int i = 0; i < p; ++i) {
            pl.anchor[i] = i * k;
            pl.f2[i] = ((psi * i + sign) % partner_count + partner_count) % partner_count;
            pl.f3[i] = psi * i + k % 2;
        }
    }

    RarityResponse resp;
    resp.width = img.width;
    resp.height = img.height;
    resp.p = p;
    for (auto& m : resp.maps) m.assign(static_cast<size_t>(img.width) * img.height, 0);

    parallel_for(0, img.height, [&](int y) {
        std::vector<double> si(p), so(q);
        for (int x = 0; x < img.width; ++x) {
            for (int i = 0; i < p; ++i)
                si[i] = bilinear_sample(img, x + inner.dx[i], y + inner.dy[i]);
            for (int i = 0; i < q; ++i)
                so[i] = bilinear_sample(img, x + outer.dx[i], y + outer.dy[i]);
            for (int e = 0; e < 4; ++e) {
                const EtaPlan& pl = plans[e];
                const std::vector<double>& anchors = pl.anchor_outer ? so : si;
                const std::vector<double>& partners = pl.anchor_outer ? si : so;
                unsigned code = 0;
                for (int i = 0; i < p; ++i) {
                    double a = anchors[pl.anchor[i]];
                    double t = a - partners[pl.f2[i]];
                    double u = a - partners[pl.f3[i]];
                    bool bit = pl.dark_to_bright ? (t > kSignTieEps && u > kSignTieEps)
                                                 : (t < -kSignTieEps && u < -kSignTieEps);
                    code |= static_cast<unsigned>(bit) << i;
                }
                resp.maps[e][static_cast<size_t>(y) * img.width + x] =
                    static_cast<uint8_t>(code);
            }
        }
    });
    return resp;
}

CodeMap encode_lbp(const GrayImage& img, double radius, int count) {
    if (count < 1 || count > 8) throw std::invalid_argument("encode_lbp: need 1 <= count <= 8");
    int need = static_cast<int>(2 * radius) + 1;
    if (img.width < need || img.height < need)
        throw std::invalid_argument("encode_lbp: image smaller than 2*radius+1");

    const RingOffsets ring(radius, count);
    CodeMap out;
    out.width = img.width;
    out.height = img.height;
    out.codes.assign(static_cast<size_t>(img.width) * img.height, 0);
    parallel_for(0, img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            double center = img.at(x, y);
            unsigned code = 0;
            for (int i = 0; i < count; ++i) {
                double s = bilinear_sample(img, x + ring.dx[i], y + ring.dy[i]);
                code |= static_cast<unsigned>(s >= center) << i;
            }
            out.codes[static_cast<size_t>(y) * img.width + x] = static_cast<uint8_t>(code);
        }
    });
    return out;
}

FeatureVector block_histograms(const RarityResponse& resp, int grid) {
    if (grid < 1) throw std::invalid_argument("block_histograms: grid must be >= 1");
    if (resp.width < grid || resp.height < grid)
        throw std::invalid_argument("block_histograms: image dims smaller than grid");

    const int p = resp.p;
    const int bins = 1 << p;
    FeatureVector fv;
    fv.grid = grid;
    fv.p = p;
    fv.eta_count = 4;
    fv.values.assign(static_cast<size_t>(4) * grid * grid * bins, 0.0);

    int bw = resp.width / grid;
    int bh = resp.height / grid;
    for (int e = 0; e < 4; ++e) {
        for (int y = 0; y < resp.height; ++y) {
            int br = y / bh;
            if (br >= grid) br = grid - 1;  // remainder rows go to the last block
            for (int x = 0; x < resp.width; ++x) {
                int bc = x / bw;
                if (bc >= grid) bc = grid - 1;
                uint8_t code = resp.maps[e][static_cast<size_t>(y) * resp.width + x];
                size_t idx = ((static_cast<size_t>(e) * grid + br) * grid + bc) *
                                 static_cast<size_t>(bins) +
                             code;
                fv.values[idx] += 1.0;
            }
        }
    }
    return fv;
}

double l1_distance(const FeatureVector& a, const FeatureVector& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("l1_distance: length mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) sum += std::abs(a.values[i] - b.values[i]);
    return sum;
}

GrayImage map_as_image(const RarityResponse& resp, int eta) {
    if (eta < 1 || eta > 4) throw std::out_of_range("map_as_image: eta must be in 1..4");
    GrayImage img(resp.width, resp.height);
    const auto& m = resp.maps[eta - 1];
    for (size_t i = 0; i < m.size(); ++i) img.data[i] = static_cast<double>(m[i]);
    return img;
}

std::string feature_to_json(const FeatureVector& fv) {
    nlohmann::json j;
    j["grid"] = fv.grid;
    j["p"] = fv.p;
    j["eta_count"] = fv.eta_count;
    j["values"] = fv.values;
    return j.dump();
}

FeatureVector feature_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FeatureVector fv;
    fv.grid = j.at("grid").get<int>();
    fv.p = j.at("p").get<int>();
    fv.eta_count = j.at("eta_count").get<int>();
    fv.values = j.at("values").get<std::vector<double>>();
    return fv;
}

}  // namespace raritynet
