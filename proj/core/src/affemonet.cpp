#include "raritynet/affemonet.hpp"

#include <cmath>
#include <cstring>

namespace raritynet {

void NetConfig::validate() const {
    if (input_size < 24 || input_size % 8 != 0)
        throw std::invalid_argument("NetConfig: input_size must be >= 24 and divisible by 8");
    if (num_classes < 2) throw std::invalid_argument("NetConfig: num_classes must be >= 2");
    ring.validate();
}

NodePtr Model::param(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return p.node;
    throw std::invalid_argument("unknown parameter \"" + name + "\"");
}

std::vector<NodePtr> Model::param_nodes() const {
    std::vector<NodePtr> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.node);
    return out;
}

namespace {

// Topology constants: stream depths and kernel sets.
constexpr int kImageDepth = 4;    // L1/L2 and per-code-map conv depth
constexpr int kHbefDepth = 32;    // refine conv depth; HBEF output is 2x this
constexpr int kA1Depth = 32;
constexpr int kA2Depth = 64;
constexpr int kMssecDepth = 96;
constexpr int kRuccfDepth = 16;
constexpr int kHiddenFc = 128;

int head_input_len(int m) {
    int spatial = (m / 8 + 1) / 2;  // ceil(M/16) for M divisible by 8
    return spatial * spatial * kMssecDepth + 3 * kRuccfDepth;
}

struct Builder {
    Model& model;
    Rng& rng;

    void conv_param(const std::string& name, int z, int cin, int cout) {
        Tensor w({z, z, cin, cout});
        double bound = std::sqrt(6.0 / (static_cast<double>(z) * z * cin));
        for (double& v : w.data)
            v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
        model.params.push_back({name + ".w", make_parameter(std::move(w)), {}});
        model.params.push_back({name + ".b", make_parameter(Tensor({cout})), {}});
    }

    void fc_param(const std::string& name, int n_in, int n_out) {
        Tensor w({n_in, n_out});
        double bound = std::sqrt(6.0 / n_in);
        for (double& v : w.data)
            v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
        model.params.push_back({name + ".w", make_parameter(std::move(w)), {}});
        model.params.push_back({name + ".b", make_parameter(Tensor({n_out})), {}});
    }
};

NodePtr conv_relu(const Model& m, const std::string& name, const NodePtr& x, int z,
                  int cin, int cout, int stride) {
    ConvSpec spec{z, cin, cout, stride};
    return relu(conv2d(x, m.param(name + ".w"), m.param(name + ".b"), spec));
}

}  // namespace

Model build(const NetConfig& config) {
    config.validate();
    Model model;
    model.config = config;
    Rng rng(config.seed);
    Builder b{model, rng};

    b.conv_param("hbef.l1", 3, 1, kImageDepth);
    b.conv_param("hbef.l2", 7, 1, kImageDepth);
    for (int l = 0; l < 4; ++l)
        b.conv_param("hbef.r" + std::to_string(l), 3, 1, kImageDepth);
    b.conv_param("hbef.refine3", 3, kImageDepth, kHbefDepth);
    b.conv_param("hbef.refine7", 7, kImageDepth, kHbefDepth);

    b.conv_param("mssec.a1.k3", 3, 2 * kHbefDepth, kA1Depth);
    b.conv_param("mssec.a1.k5", 5, 2 * kHbefDepth, kA1Depth);
    b.conv_param("mssec.a1.k7", 7, 2 * kHbefDepth, kA1Depth);
    b.conv_param("mssec.a1.proj", 1, 2 * kHbefDepth, kA1Depth);
    b.conv_param("mssec.a2.k1", 1, kA1Depth, kA2Depth);
    b.conv_param("mssec.a2.k3", 3, kA1Depth, kA2Depth);
    b.conv_param("mssec.a2.k5", 5, kA1Depth, kA2Depth);
    b.conv_param("mssec.a2.k7", 7, kA1Depth, kA2Depth);
    b.conv_param("mssec.out.k1", 1, kA2Depth, kMssecDepth);
    b.conv_param("mssec.out.k3", 3, kA2Depth, kMssecDepth);
    b.conv_param("mssec.out.k5", 5, kA2Depth, kMssecDepth);
    b.conv_param("mssec.out.k7", 7, kA2Depth, kMssecDepth);
    b.conv_param("mssec.skip", 1, kA1Depth, kMssecDepth);

    for (int t = 1; t <= 4; ++t)
        b.conv_param("ruccf.q" + std::to_string(t), 3, 1, kRuccfDepth);

    b.fc_param("head.fc1", head_input_len(config.input_size), kHiddenFc);
    b.fc_param("head.fc2", kHiddenFc, kHiddenFc);
    b.fc_param("head.fc3", kHiddenFc, config.num_classes);
    return model;
}

int64_t param_count(const Model& model) {
    int64_t n = 0;
    for (const auto& p : model.params) n += p.node->value.size();
    return n;
}

NodePtr hbef_forward(const Model& model, const NodePtr& image,
                     const std::array<NodePtr, 4>& rarity) {
    NodePtr l1 = conv_relu(model, "hbef.l1", image, 3, 1, kImageDepth, 2);
    NodePtr l2 = conv_relu(model, "hbef.l2", image, 7, 1, kImageDepth, 2);

    // one shared conv per code map, reused across both branches
    std::array<NodePtr, 4> rconv;
    for (int l = 0; l < 4; ++l)
        rconv[l] =
            conv_relu(model, "hbef.r" + std::to_string(l), rarity[l], 3, 1, kImageDepth, 2);

    std::vector<NodePtr> blocks;
    blocks.reserve(8);
    for (int bidx = 0; bidx < 8; ++bidx) {
        const NodePtr& branch = (bidx / 4 == 0) ? l1 : l2;
        blocks.push_back(sub(branch, rconv[bidx % 4]));
    }
    NodePtr s = concat_channels(blocks);

    NodePtr fine3 = conv_relu(model, "hbef.refine3", l1, 3, kImageDepth, kHbefDepth, 1);
    NodePtr fine7 = conv_relu(model, "hbef.refine7", l2, 7, kImageDepth, kHbefDepth, 1);
    return concat_channels({sub(s, fine3), sub(s, fine7)});
}

NodePtr mssec_forward(const Model& model, const NodePtr& h) {
    const int hc = 2 * kHbefDepth;
    NodePtr proj = conv2d(avg_pool_2x2(h), model.param("mssec.a1.proj.w"),
                          model.param("mssec.a1.proj.b"), ConvSpec{1, hc, kA1Depth, 1});
    NodePtr a1 = relu(add({conv2d(h, model.param("mssec.a1.k3.w"), model.param("mssec.a1.k3.b"),
                                  ConvSpec{3, hc, kA1Depth, 2}),
                           conv2d(h, model.param("mssec.a1.k5.w"), model.param("mssec.a1.k5.b"),
                                  ConvSpec{5, hc, kA1Depth, 2}),
                           conv2d(h, model.param("mssec.a1.k7.w"), model.param("mssec.a1.k7.b"),
                                  ConvSpec{7, hc, kA1Depth, 2}),
                           proj}));

    auto branch = [&](const std::string& name, const NodePtr& x, int z, int cin, int cout,
                      int stride) {
        return conv2d(x, model.param(name + ".w"), model.param(name + ".b"),
                      ConvSpec{z, cin, cout, stride});
    };
    NodePtr a2 = relu(add({branch("mssec.a2.k3", a1, 3, kA1Depth, kA2Depth, 2),
                           branch("mssec.a2.k5", a1, 5, kA1Depth, kA2Depth, 2),
                           branch("mssec.a2.k7", a1, 7, kA1Depth, kA2Depth, 2),
                           branch("mssec.a2.k1", a1, 1, kA1Depth, kA2Depth, 2)}));
    return relu(add({branch("mssec.out.k3", a2, 3, kA2Depth, kMssecDepth, 2),
                     branch("mssec.out.k5", a2, 5, kA2Depth, kMssecDepth, 2),
                     branch("mssec.out.k7", a2, 7, kA2Depth, kMssecDepth, 2),
                     branch("mssec.out.k1", a2, 1, kA2Depth, kMssecDepth, 2),
                     branch("mssec.skip", a1, 1, kA1Depth, kMssecDepth, 4)}));
}

std::array<NodePtr, 3> ruccf_forward(const Model& model,
                                     const std::array<NodePtr, 4>& rarity) {
    std::vector<NodePtr> q;
    q.reserve(4);
    for (int t = 1; t <= 4; ++t)
        q.push_back(conv_relu(model, "ruccf.q" + std::to_string(t), rarity[t - 1], 3, 1,
                              kRuccfDepth, 2));
    return {global_avg_pool(mean4(q)), global_avg_pool(max4(q)), global_avg_pool(add(q))};
}

NodePtr forward_graph(const Model& model, const NodePtr& image,
                      const std::array<NodePtr, 4>& rarity) {
    NodePtr h = hbef_forward(model, image, rarity);
    NodePtr m = mssec_forward(model, h);
    auto rq = ruccf_forward(model, rarity);
    NodePtr p = concat_vec({flatten(m), rq[0], rq[1], rq[2]});
    NodePtr hidden1 = relu(fully_connected(p, model.param("head.fc1.w"), model.param("head.fc1.b")));
    NodePtr hidden2 =
        relu(fully_connected(hidden1, model.param("head.fc2.w"), model.param("head.fc2.b")));
    return fully_connected(hidden2, model.param("head.fc3.w"), model.param("head.fc3.b"));
}

PreparedInput prepare_input(const Model& model, const GrayImage& image) {
    const int m = model.config.input_size;
    if (image.width != m || image.height != m)
        throw std::invalid_argument("forward: image size does not match config");

    PreparedInput in;
    Tensor img({m, m, 1});
    for (size_t i = 0; i < image.data.size(); ++i) img.data[i] = image.data[i] / 255.0;
    in.image = make_constant(std::move(img));

    RarityResponse resp = encode_rarity(image, model.config.ring);
    for (int e = 0; e < 4; ++e) {
        Tensor t({m, m, 1});
        for (size_t i = 0; i < resp.maps[e].size(); ++i)
            t.data[i] = static_cast<double>(resp.maps[e][i]) / 255.0;
        in.rarity[e] = make_constant(std::move(t));
    }
    return in;
}

Tensor forward(const Model& model, const GrayImage& image) {
    PreparedInput in = prepare_input(model, image);
    return forward_graph(model, in.image, in.rarity)->value;
}

double train_step(Model& model, const std::vector<std::pair<GrayImage, int>>& batch) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    for (const auto& [img, label] : batch)
        if (label < 0 || label >= model.config.num_classes)
            throw std::out_of_range("train_step: label out of range");

    zero_grad(model.param_nodes());
    const double inv = 1.0 / batch.size();
    double total = 0.0;
    for (const auto& [img, label] : batch) {
        PreparedInput in = prepare_input(model, img);
        NodePtr loss = softmax_cross_entropy(forward_graph(model, in.image, in.rarity), label);
        total += loss->value.data[0];
        backward(loss, inv);
    }

    SgdConfig cfg{model.config.lr, model.config.momentum, model.config.weight_decay};
    for (auto& p : model.params) sgd_step(p.node->value, p.node->ensure_grad(), p.velocity, cfg);
    return total * inv;
}

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

struct ByteReader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;
    void need(size_t n) const {
        if (bytes.size() - pos < n) throw CheckpointError("truncated checkpoint");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | bytes[pos + 1] << 8);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
};

}  // namespace

std::vector<uint8_t> save_checkpoint(const Model& model) {
    std::vector<uint8_t> out{'R', 'R', 'T', 'Y'};
    put_u32(out, 1);  // version
    put_u32(out, static_cast<uint32_t>(model.params.size()));
    for (const auto& p : model.params) {
        put_u16(out, static_cast<uint16_t>(p.name.size()));
        out.insert(out.end(), p.name.begin(), p.name.end());
        out.push_back(static_cast<uint8_t>(p.node->value.rank()));
        for (int d : p.node->value.shape) put_u32(out, static_cast<uint32_t>(d));
        for (double v : p.node->value.data) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(out, bits);
        }
    }
    return out;
}

Model load_checkpoint(const std::vector<uint8_t>& bytes, const NetConfig& config) {
    ByteReader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), "RRTY", 4) != 0) throw CheckpointError("bad magic");
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != 1)
        throw CheckpointError("unsupported version " + std::to_string(version));
    uint32_t count = r.u32();

    Model model = build(config);
    if (count != model.params.size())
        throw CheckpointError("tensor count disagrees with current topology");
    for (auto& p : model.params) {
        uint16_t len = r.u16();
        r.need(len);
        std::string name(bytes.begin() + r.pos, bytes.begin() + r.pos + len);
        r.pos += len;
        if (name != p.name)
            throw CheckpointError("tensor \"" + name + "\" disagrees with current topology");
        uint8_t rank = r.u8();
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(r.u32());
        if (shape != p.node->value.shape)
            throw CheckpointError("shape of \"" + name + "\" disagrees with current topology");
        for (double& v : p.node->value.data) {
            uint32_t bits = r.u32();
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        }
    }
    return model;
}

}  // namespace raritynet
