#pragma once

#include <utility>

#include "raritynet/tensor.hpp"

namespace raritynet {

// Convolution geometry: square z x z kernel, stride s, "same-ceil"
// padding (output spatial dim = ceil(in/s), pad split floor(total/2)
// before). Weight layout is [z][z][cin][cout].
struct ConvSpec {
    int kernel = 3;
    int in_channels = 1;
    int out_channels = 1;
    int stride = 1;

    void validate() const;
    static int out_dim(int in, int stride) { return (in + stride - 1) / stride; }
};

NodePtr conv2d(const NodePtr& input, const NodePtr& weights, const NodePtr& bias,
               const ConvSpec& spec);

NodePtr relu(const NodePtr& x);

NodePtr add(const std::vector<NodePtr>& xs);   // 2 or more inputs
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mean4(const std::vector<NodePtr>& xs); // exactly 4
NodePtr max4(const std::vector<NodePtr>& xs);  // exactly 4; grad to lowest-index argmax

enum class ElemOp { Add, Sub, Mean4, Max4 };
NodePtr elementwise(ElemOp op, const std::vector<NodePtr>& xs);

NodePtr concat_channels(const std::vector<NodePtr>& xs);  // rank-3, equal spatial dims
NodePtr concat_vec(const std::vector<NodePtr>& xs);       // rank-1
NodePtr flatten(const NodePtr& x);                        // rank-3 -> rank-1

NodePtr global_avg_pool(const NodePtr& x);  // rank-3 -> rank-1 per-channel mean
NodePtr avg_pool_2x2(const NodePtr& x);     // stride-2 2x2 mean, ceil size

NodePtr fully_connected(const NodePtr& x, const NodePtr& w, const NodePtr& b);

// Stabilized loss on raw logits. Non-graph version returns (loss, dlogits).
std::pair<double, Tensor> softmax_cross_entropy(const Tensor& logits, int label);
NodePtr softmax_cross_entropy(const NodePtr& logits, int label);

struct SgdConfig {
    double lr = 1e-3;
    double momentum = 0.8;
    double weight_decay = 2e-6;
};

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
// Parameters are kept on the float32 grid (math in double, result
// rounded through float) so checkpoints are lossless.
void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity, const SgdConfig& cfg);

// Central-difference check of analytic gradients. build_loss must
// construct a fresh scalar graph from the current parameter values.
// samples_per_param limits checked entries per tensor (0 = all),
// drawn deterministically from `seed`.
double grad_check(const std::function<NodePtr()>& build_loss,
                  const std::vector<NodePtr>& params, double eps,
                  int samples_per_param = 0, uint64_t seed = 1);

}  // namespace raritynet
