#include "raritynet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace raritynet {

void ConvSpec::validate() const {
    if (kernel != 1 && kernel != 3 && kernel != 5 && kernel != 7)
        throw std::invalid_argument("ConvSpec: kernel must be one of {1,3,5,7}");
    if (stride != 1 && stride != 2 && stride != 4)
        throw std::invalid_argument("ConvSpec: stride must be one of {1,2,4}");
    if (in_channels < 1 || out_channels < 1)
        throw std::invalid_argument("ConvSpec: channel counts must be positive");
}

namespace {

NodePtr make_op(Tensor value, std::vector<NodePtr> inputs,
                std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    bool any = false;
    for (const auto& in : n->inputs) any = any || in->needs_grad || in->backprop;
    n->needs_grad = any;
    if (any) n->backprop = std::move(backprop);
    return n;
}

void check_same_shape(const std::vector<NodePtr>& xs) {
    for (size_t i = 1; i < xs.size(); ++i)
        if (xs[i]->value.shape != xs[0]->value.shape)
            throw std::invalid_argument("elementwise: shape mismatch");
}

}  // namespace

NodePtr conv2d(const NodePtr& input, const NodePtr& weights, const NodePtr& bias,
               const ConvSpec& spec) {
    spec.validate();
    const Tensor& in = input->value;
    const Tensor& w = weights->value;
    const Tensor& b = bias->value;
    const int z = spec.kernel, s = spec.stride;
    const int cin = spec.in_channels, cout = spec.out_channels;
    if (in.rank() != 3 || in.dim(2) != cin)
        throw std::invalid_argument("conv2d: input shape mismatch");
    if (w.shape != std::vector<int>{z, z, cin, cout})
        throw std::invalid_argument("conv2d: weight shape mismatch");
    if (b.shape != std::vector<int>{cout})
        throw std::invalid_argument("conv2d: bias shape mismatch");

    const int ih = in.dim(0), iw = in.dim(1);
    const int oh = ConvSpec::out_dim(ih, s), ow = ConvSpec::out_dim(iw, s);
    const int pad_h = std::max(0, (oh - 1) * s + z - ih) / 2;
    const int pad_w = std::max(0, (ow - 1) * s + z - iw) / 2;

    Tensor out({oh, ow, cout});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            double* acc = &out.at3(oy, ox, 0);
            for (int oc = 0; oc < cout; ++oc) acc[oc] = b.data[oc];
            const int iy0 = oy * s - pad_h, ix0 = ox * s - pad_w;
            for (int ky = 0; ky < z; ++ky) {
                const int iy = iy0 + ky;
                if (iy < 0 || iy >= ih) continue;
                for (int kx = 0; kx < z; ++kx) {
                    const int ix = ix0 + kx;
                    if (ix < 0 || ix >= iw) continue;
                    const double* irow =
                        &in.data[(static_cast<size_t>(iy) * iw + ix) * cin];
                    const double* wrow =
                        &w.data[((static_cast<size_t>(ky) * z + kx) * cin) * cout];
                    for (int ic = 0; ic < cin; ++ic) {
                        const double a = irow[ic];
                        const double* wk = wrow + static_cast<size_t>(ic) * cout;
                        for (int oc = 0; oc < cout; ++oc) acc[oc] += a * wk[oc];
                    }
                }
            }
        }
    }

    return make_op(std::move(out), {input, weights, bias}, [=](Node& n) {
        Tensor& din = n.inputs[0]->ensure_grad();
        Tensor& dw = n.inputs[1]->ensure_grad();
        Tensor& db = n.inputs[2]->ensure_grad();
        const Tensor& inv = n.inputs[0]->value;
        const Tensor& wv = n.inputs[1]->value;
        for (int oy = 0; oy < n.value.dim(0); ++oy) {
            for (int ox = 0; ox < n.value.dim(1); ++ox) {
                const double* g = &n.grad.at3(oy, ox, 0);
                for (int oc = 0; oc < cout; ++oc) db.data[oc] += g[oc];
                const int iy0 = oy * s - pad_h, ix0 = ox * s - pad_w;
                for (int ky = 0; ky < z; ++ky) {
                    const int iy = iy0 + ky;
                    if (iy < 0 || iy >= ih) continue;
                    for (int kx = 0; kx < z; ++kx) {
                        const int ix = ix0 + kx;
                        if (ix < 0 || ix >= iw) continue;
                        const double* irow =
                            &inv.data[(static_cast<size_t>(iy) * iw + ix) * cin];
                        double* dirow = &din.at3(iy, ix, 0);
                        const size_t wbase = (static_cast<size_t>(ky) * z + kx) * cin;
                        for (int ic = 0; ic < cin; ++ic) {
                            const double a = irow[ic];
                            const double* wk = &wv.data[(wbase + ic) * cout];
                            double* dwk = &dw.data[(wbase + ic) * cout];
                            double dacc = 0.0;
                            for (int oc = 0; oc < cout; ++oc) {
                                dacc += g[oc] * wk[oc];
                                dwk[oc] += a * g[oc];
                            }
                            dirow[ic] += dacc;
                        }
                    }
                }
            }
        }
    });
}

NodePtr relu(const NodePtr& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make_op(std::move(out), {x}, [](Node& n) {
        Tensor& dx = n.inputs[0]->ensure_grad();
        const Tensor& xv = n.inputs[0]->value;
        for (size_t i = 0; i < dx.data.size(); ++i)
            if (xv.data[i] > 0.0) dx.data[i] += n.grad.data[i];
    });
}

NodePtr add(const std::vector<NodePtr>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("add: need at least 2 inputs");
    check_same_shape(xs);
    Tensor out = xs[0]->value;
    for (size_t k = 1; k < xs.size(); ++k)
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += xs[k]->value.data[i];
    return make_op(std::move(out), xs, [](Node& n) {
        for (auto& in : n.inputs) {
            Tensor& d = in->ensure_grad();
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += n.grad.data[i];
        }
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape({a, b});
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        Tensor& da = n.inputs[0]->ensure_grad();
        Tensor& db = n.inputs[1]->ensure_grad();
        for (size_t i = 0; i < da.data.size(); ++i) {
            da.data[i] += n.grad.data[i];
            db.data[i] -= n.grad.data[i];
        }
    });
}

NodePtr mean4(const std::vector<NodePtr>& xs) {
    if (xs.size() != 4) throw std::invalid_argument("mean4: need exactly 4 inputs");
    check_same_shape(xs);
    Tensor out = xs[0]->value;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (xs[0]->value.data[i] + xs[1]->value.data[i] + xs[2]->value.data[i] +
                       xs[3]->value.data[i]) *
                      0.25;
    }
    return make_op(std::move(out), xs, [](Node& n) {
        for (auto& in : n.inputs) {
            Tensor& d = in->ensure_grad();
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += 0.25 * n.grad.data[i];
        }
    });
}

NodePtr max4(const std::vector<NodePtr>& xs) {
    if (xs.size() != 4) throw std::invalid_argument("max4: need exactly 4 inputs");
    check_same_shape(xs);
    Tensor out = xs[0]->value;
    auto which = std::make_shared<std::vector<uint8_t>>(out.data.size(), 0);
    for (size_t i = 0; i < out.data.size(); ++i) {
        double best = xs[0]->value.data[i];
        uint8_t arg = 0;
        for (uint8_t k = 1; k < 4; ++k) {
            double v = xs[k]->value.data[i];
            if (v > best) {  // ties keep the lowest index
                best = v;
                arg = k;
            }
        }
        out.data[i] = best;
        (*which)[i] = arg;
    }
    return make_op(std::move(out), xs, [which](Node& n) {
        for (size_t i = 0; i < n.grad.data.size(); ++i) {
            Tensor& d = n.inputs[(*which)[i]]->ensure_grad();
            d.data[i] += n.grad.data[i];
        }
    });
}

NodePtr elementwise(ElemOp op, const std::vector<NodePtr>& xs) {
    switch (op) {
        case ElemOp::Add: return add(xs);
        case ElemOp::Sub:
            if (xs.size() != 2) throw std::invalid_argument("sub: need exactly 2 inputs");
            return sub(xs[0], xs[1]);
        case ElemOp::Mean4: return mean4(xs);
        case ElemOp::Max4: return max4(xs);
    }
    throw std::invalid_argument("elementwise: unknown op");
}

NodePtr concat_channels(const std::vector<NodePtr>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
    int h = xs[0]->value.dim(0), w = xs[0]->value.dim(1);
    int ctotal = 0;
    for (const auto& x : xs) {
        if (x->value.rank() != 3 || x->value.dim(0) != h || x->value.dim(1) != w)
            throw std::invalid_argument("concat_channels: spatial mismatch");
        ctotal += x->value.dim(2);
    }
    Tensor out({h, w, ctotal});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int off = 0;
            for (const auto& in : xs) {
                int c = in->value.dim(2);
                const double* src = &in->value.at3(y, x, 0);
                double* dst = &out.at3(y, x, off);
                for (int i = 0; i < c; ++i) dst[i] = src[i];
                off += c;
            }
        }
    }
    return make_op(std::move(out), xs, [h, w](Node& n) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double* g = &n.grad.at3(y, x, 0);
                int off = 0;
                for (auto& in : n.inputs) {
                    int c = in->value.dim(2);
                    double* d = &in->ensure_grad().at3(y, x, 0);
                    for (int i = 0; i < c; ++i) d[i] += g[off + i];
                    off += c;
                }
            }
        }
    });
}

NodePtr concat_vec(const std::vector<NodePtr>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_vec: no inputs");
    int total = 0;
    for (const auto& x : xs) {
        if (x->value.rank() != 1) throw std::invalid_argument("concat_vec: rank-1 inputs only");
        total += x->value.dim(0);
    }
    Tensor out({total});
    int off = 0;
    for (const auto& x : xs) {
        std::copy(x->value.data.begin(), x->value.data.end(), out.data.begin() + off);
        off += x->value.dim(0);
    }
    return make_op(std::move(out), xs, [](Node& n) {
        int off = 0;
        for (auto& in : n.inputs) {
            Tensor& d = in->ensure_grad();
            for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += n.grad.data[off + i];
            off += static_cast<int>(d.data.size());
        }
    });
}

NodePtr flatten(const NodePtr& x) {
    if (x->value.rank() != 3) throw std::invalid_argument("flatten: rank-3 input only");
    Tensor out({static_cast<int>(x->value.size())});
    out.data = x->value.data;
    return make_op(std::move(out), {x}, [](Node& n) {
        Tensor& d = n.inputs[0]->ensure_grad();
        for (size_t i = 0; i < d.data.size(); ++i) d.data[i] += n.grad.data[i];
    });
}

NodePtr global_avg_pool(const NodePtr& x) {
    if (x->value.rank() != 3) throw std::invalid_argument("global_avg_pool: rank-3 input only");
    const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
    Tensor out({c});
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int cc = 0; cc < c; ++cc) out.data[cc] += x->value.at3(y, xx, cc);
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (double& v : out.data) v *= inv;
    return make_op(std::move(out), {x}, [h, w, c, inv](Node& n) {
        Tensor& d = n.inputs[0]->ensure_grad();
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                for (int cc = 0; cc < c; ++cc) d.at3(y, xx, cc) += inv * n.grad.data[cc];
    });
}

NodePtr avg_pool_2x2(const NodePtr& x) {
    if (x->value.rank() != 3) throw std::invalid_argument("avg_pool_2x2: rank-3 input only");
    const int ih = x->value.dim(0), iw = x->value.dim(1), c = x->value.dim(2);
    const int oh = (ih + 1) / 2, ow = (iw + 1) / 2;
    Tensor out({oh, ow, c});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            int y1 = std::min(2 * oy + 2, ih), x1 = std::min(2 * ox + 2, iw);
            int cellcount = (y1 - 2 * oy) * (x1 - 2 * ox);
            for (int cc = 0; cc < c; ++cc) {
                double sum = 0.0;
                for (int y = 2 * oy; y < y1; ++y)
                    for (int xx = 2 * ox; xx < x1; ++xx) sum += x->value.at3(y, xx, cc);
                out.at3(oy, ox, cc) = sum / cellcount;
            }
        }
    }
    return make_op(std::move(out), {x}, [ih, iw, c, oh, ow](Node& n) {
        Tensor& d = n.inputs[0]->ensure_grad();
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int y1 = std::min(2 * oy + 2, ih), x1 = std::min(2 * ox + 2, iw);
                double inv = 1.0 / ((y1 - 2 * oy) * (x1 - 2 * ox));
                for (int cc = 0; cc < c; ++cc) {
                    double g = inv * n.grad.at3(oy, ox, cc);
                    for (int y = 2 * oy; y < y1; ++y)
                        for (int xx = 2 * ox; xx < x1; ++xx) d.at3(y, xx, cc) += g;
                }
            }
        }
    });
}

NodePtr fully_connected(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
    if (x->value.rank() != 1 || w->value.rank() != 2)
        throw std::invalid_argument("fully_connected: x must be rank-1, w rank-2");
    const int n_in = x->value.dim(0), n_out = w->value.dim(1);
    if (w->value.dim(0) != n_in || b->value.shape != std::vector<int>{n_out})
        throw std::invalid_argument("fully_connected: shape mismatch");
    Tensor out({n_out});
    out.data = b->value.data;
    for (int i = 0; i < n_in; ++i) {
        const double xi = x->value.data[i];
        const double* wrow = &w->value.data[static_cast<size_t>(i) * n_out];
        for (int o = 0; o < n_out; ++o) out.data[o] += xi * wrow[o];
    }
    return make_op(std::move(out), {x, w, b}, [n_in, n_out](Node& n) {
        Tensor& dx = n.inputs[0]->ensure_grad();
        Tensor& dw = n.inputs[1]->ensure_grad();
        Tensor& db = n.inputs[2]->ensure_grad();
        const Tensor& xv = n.inputs[0]->value;
        const Tensor& wv = n.inputs[1]->value;
        for (int o = 0; o < n_out; ++o) db.data[o] += n.grad.data[o];
        for (int i = 0; i < n_in; ++i) {
            const double* wrow = &wv.data[static_cast<size_t>(i) * n_out];
            double* dwrow = &dw.data[static_cast<size_t>(i) * n_out];
            double acc = 0.0;
            for (int o = 0; o < n_out; ++o) {
                acc += n.grad.data[o] * wrow[o];
                dwrow[o] += xv.data[i] * n.grad.data[o];
            }
            dx.data[i] += acc;
        }
    });
}

std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits, int label) {
    const int n = static_cast<int>(logits.size());
    if (label < 0 || label >= n)
        throw std::out_of_range("softmax_cross_entropy: label out of range");
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    double sum = 0.0;
    Tensor grad(logits.shape);
    for (int i = 0; i < n; ++i) {
        grad.data[i] = std::exp(logits.data[i] - m);
        sum += grad.data[i];
    }
    double loss = std::log(sum) - (logits.data[label] - m);
    for (int i = 0; i < n; ++i) grad.data[i] /= sum;
    grad.data[label] -= 1.0;
    return {loss, std::move(grad)};
}

NodePtr softmax_cross_entropy(const NodePtr& logits, int label) {
    auto [loss, dlogits] = softmax_cross_entropy(logits->value, label);
    Tensor out({1});
    out.data[0] = loss;
    auto saved = std::make_shared<Tensor>(std::move(dlogits));
    return make_op(std::move(out), {logits}, [saved](Node& n) {
        Tensor& d = n.inputs[0]->ensure_grad();
        for (size_t i = 0; i < d.data.size(); ++i)
            d.data[i] += n.grad.data[0] * saved->data[i];
    });
}

void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdConfig& cfg) {
    if (param.shape != grad.shape) throw std::invalid_argument("sgd_step: shape mismatch");
    if (velocity.shape != param.shape) velocity = Tensor(param.shape);
    for (size_t i = 0; i < param.data.size(); ++i) {
        double v = cfg.momentum * velocity.data[i] + grad.data[i] +
                   cfg.weight_decay * param.data[i];
        velocity.data[i] = v;
        param.data[i] =
            static_cast<double>(static_cast<float>(param.data[i] - cfg.lr * v));
    }
}

double grad_check(const std::function<NodePtr()>& build_loss,
                  const std::vector<NodePtr>& params, double eps,
                  int samples_per_param, uint64_t seed) {
    zero_grad(params);
    backward(build_loss());
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->ensure_grad());

    Rng rng(seed);
    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& value = params[pi]->value;
        const int64_t n = value.size();
        std::vector<int64_t> idx;
        if (samples_per_param <= 0 || samples_per_param >= n) {
            idx.resize(n);
            for (int64_t i = 0; i < n; ++i) idx[i] = i;
        } else {
            for (int s = 0; s < samples_per_param; ++s)
                idx.push_back(static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(n)));
        }
        for (int64_t i : idx) {
            const double save = value.data[i];
            value.data[i] = save + eps;
            double fp = build_loss()->value.data[0];
            value.data[i] = save - eps;
            double fm = build_loss()->value.data[0];
            value.data[i] = save;
            double numeric = (fp - fm) / (2.0 * eps);
            double a = analytic[pi].data[i];
            double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace raritynet
