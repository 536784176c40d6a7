#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "raritynet/image.hpp"
#include "raritynet/ops.hpp"
#include "raritynet/rarity.hpp"
#include "raritynet/tensor.hpp"

namespace raritynet {

struct NetConfig {
    int input_size = 120;  // M = N, divisible by 8, >= 24
    int num_classes = 7;
    uint64_t seed = 0;
    double lr = 1e-3;
    double momentum = 0.8;
    double weight_decay = 2e-6;
    RingParams ring;

    void validate() const;
};

struct Param {
    std::string name;
    NodePtr node;      // value + accumulated gradient
    Tensor velocity;   // SGD momentum state, not checkpointed
};

// Three-stream network: edge-boosting stream on the image plus code
// maps, a multi-scale strided stream with a dense skip, a pooled
// code-map context stream, and a three-layer classification head.
struct Model {
    NetConfig config;
    std::vector<Param> params;  // construction order is the checkpoint order

    NodePtr param(const std::string& name) const;
    std::vector<NodePtr> param_nodes() const;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Model build(const NetConfig& config);

int64_t param_count(const Model& model);

// Stream graphs. `image` is the [0,1]-scaled input, `rarity` the four
// [0,1]-scaled code maps, all rank-3 (M, M, 1).
NodePtr hbef_forward(const Model& model, const NodePtr& image,
                     const std::array<NodePtr, 4>& rarity);
NodePtr mssec_forward(const Model& model, const NodePtr& h);
std::array<NodePtr, 3> ruccf_forward(const Model& model,
                                     const std::array<NodePtr, 4>& rarity);

// Full graph from prepared inputs to logits.
NodePtr forward_graph(const Model& model, const NodePtr& image,
                      const std::array<NodePtr, 4>& rarity);

// Encode + normalize + run; returns logits of length num_classes.
Tensor forward(const Model& model, const GrayImage& image);

// Prepared (scaled) input nodes for a raw image, exposed so callers can
// hold onto the graph (training, gradient checking).
struct PreparedInput {
    NodePtr image;
    std::array<NodePtr, 4> rarity;
};
PreparedInput prepare_input(const Model& model, const GrayImage& image);

// One SGD step on the mean cross-entropy of the batch; returns the
// pre-step mean loss.
double train_step(Model& model, const std::vector<std::pair<GrayImage, int>>& batch);

std::vector<uint8_t> save_checkpoint(const Model& model);
Model load_checkpoint(const std::vector<uint8_t>& bytes, const NetConfig& config);

}  // namespace raritynet
