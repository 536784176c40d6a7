#include "raritynet/tensor.hpp"

#include <unordered_set>

namespace raritynet {

NodePtr make_constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->needs_grad = false;
    return n;
}

NodePtr make_parameter(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->needs_grad = true;
    return n;
}

void backward(const NodePtr& root, double seed) {
    if (root->value.size() != 1)
        throw std::invalid_argument("backward: root must be a scalar");

    // post-order topological sort
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (seen.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad().data[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->grad.shape == n->value.shape) n->backprop(*n);
    }
}

void zero_grad(const std::vector<NodePtr>& params) {
    for (const auto& p : params) p->grad = Tensor{};
}

}  // namespace raritynet
