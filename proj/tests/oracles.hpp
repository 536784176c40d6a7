// Brute-force reference implementations used only by tests. Everything
// here is written as a direct transcription of the defining formulas,
// independent of the optimized library code paths it checks.
#pragma once

#include <cmath>
#include <vector>

#include "raritynet/image.hpp"
#include "raritynet/rarity.hpp"
#include "raritynet/tensor.hpp"

namespace oracle {

inline double bilinear(const raritynet::GrayImage& img, double x, double y) {
    x = std::min(std::max(x, 0.0), img.width - 1.0);
    y = std::min(std::max(y, 0.0), img.height - 1.0);
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fx = x - x0, fy = y - y0;
    double top = img.at(x0, y0) + fx * (img.at(x1, y0) - img.at(x0, y0));
    double bot = img.at(x0, y1) + fx * (img.at(x1, y1) - img.at(x0, y1));
    return top + fy * (bot - top);
}

inline double ring_sample(const raritynet::GrayImage& img, int cx, int cy, double radius,
                          int count, int idx) {
    const double two_pi = 2.0 * std::acos(-1.0);
    double th = two_pi * idx / count;
    double dx = radius * std::cos(th);
    double dy = -radius * std::sin(th);
    // same grid-snap measurement rule as the library
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    return bilinear(img, cx + dx, cy + dy);
}

// Literal enumeration of every (eta, i) triplet:
//   k = mod(eta,2)+1, psi(k) = floor(k/2) + 2*mod(k,2)
//   anchor on ring r_k at index i*k; partner ring is the other ring
//   f2 = mod(psi(k)*i + (-1)^k, psi(k)*p), f3 = psi(k)*i + mod(k,2)
//   T = anchor - partner(f2), U = anchor - partner(f3)
//   bit i = J1(T,U) for eta 1..2, J2(T,U) for eta 3..4
inline int rarity_code(const raritynet::GrayImage& img, int cx, int cy, int eta, double r1,
                       double r2, int p) {
    const double tie = 1e-9;  // shared sign-test tie rule
    int k = eta % 2 + 1;
    int psi = k / 2 + 2 * (k % 2);
    int sign = (k % 2 == 0) ? 1 : -1;
    double anchor_r = (k == 1) ? r1 : r2;
    int anchor_count = (k == 1) ? p : 2 * p;
    double partner_r = (k == 1) ? r2 : r1;
    int partner_count = psi * p;

    int code = 0;
    for (int i = 0; i < p; ++i) {
        double anchor = ring_sample(img, cx, cy, anchor_r, anchor_count, i * k);
        int f2 = ((psi * i + sign) % partner_count + partner_count) % partner_count;
        int f3 = psi * i + k % 2;
        double t = anchor - ring_sample(img, cx, cy, partner_r, partner_count, f2);
        double u = anchor - ring_sample(img, cx, cy, partner_r, partner_count, f3);
        bool bit = (eta <= 2) ? (t > tie && u > tie) : (t < -tie && u < -tie);
        code |= static_cast<int>(bit) << i;
    }
    return code;
}

// Naive direct convolution with same-ceil zero padding; sextuple loop.
inline raritynet::Tensor conv2d(const raritynet::Tensor& in, const raritynet::Tensor& w,
                                const raritynet::Tensor& b, int stride) {
    int ih = in.shape[0], iw = in.shape[1], cin = in.shape[2];
    int z = w.shape[0], cout = w.shape[3];
    int oh = (ih + stride - 1) / stride, ow = (iw + stride - 1) / stride;
    int pad_h = std::max(0, (oh - 1) * stride + z - ih) / 2;
    int pad_w = std::max(0, (ow - 1) * stride + z - iw) / 2;
    raritynet::Tensor out({oh, ow, cout});
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int oc = 0; oc < cout; ++oc) {
                double acc = b.data[oc];
                for (int ky = 0; ky < z; ++ky)
                    for (int kx = 0; kx < z; ++kx)
                        for (int ic = 0; ic < cin; ++ic) {
                            int iy = oy * stride - pad_h + ky;
                            int ix = ox * stride - pad_w + kx;
                            if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                            acc += in.data[(static_cast<size_t>(iy) * iw + ix) * cin + ic] *
                                   w.data[((static_cast<size_t>(ky) * z + kx) * cin + ic) *
                                              cout +
                                          oc];
                        }
                out.data[(static_cast<size_t>(oy) * ow + ox) * cout + oc] = acc;
            }
    return out;
}

inline raritynet::Tensor matvec(const raritynet::Tensor& x, const raritynet::Tensor& w,
                                const raritynet::Tensor& b) {
    int n = x.shape[0], m = w.shape[1];
    raritynet::Tensor out({m});
    for (int o = 0; o < m; ++o) {
        double acc = b.data[o];
        for (int i = 0; i < n; ++i) acc += x.data[i] * w.data[static_cast<size_t>(i) * m + o];
        out.data[o] = acc;
    }
    return out;
}

inline raritynet::GrayImage random_image(raritynet::Rng& rng, int w, int h, int maxval = 200) {
    raritynet::GrayImage img(w, h);
    for (double& v : img.data) v = static_cast<double>(rng.uniform_int(0, maxval));
    return img;
}

}  // namespace oracle
