#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace raritynet {

// Dense real tensor, rank 1 (length) or rank 3 (height, width, channels),
// row-major with channels fastest.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(count(shape)), 0.0);
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }

    // rank-3 accessors
    double at3(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }
    double& at3(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }
};

// Graph node for reverse-mode differentiation. Graphs are rebuilt per
// forward pass; parameter nodes persist across passes and accumulate
// into .grad until zeroed.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand, same shape as value
    bool needs_grad = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backprop;  // pushes this->grad into inputs

    Tensor& ensure_grad() {
        if (grad.shape != value.shape) grad = Tensor(value.shape);
        return grad;
    }
};

NodePtr make_constant(Tensor v);
NodePtr make_parameter(Tensor v);

// Reverse pass from a scalar root; seeds the root gradient with `seed`.
void backward(const NodePtr& root, double seed = 1.0);

void zero_grad(const std::vector<NodePtr>& params);

// Deterministic uniform generator; identical streams on every platform.
struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {  // splitmix64
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }
};

}  // namespace raritynet
