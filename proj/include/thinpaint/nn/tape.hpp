#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "thinpaint/nn/tensor.hpp"

namespace thinpaint::nn {

/// Reverse-mode tape. Operations append nodes that hold the forward value plus a
/// closure accumulating cotangents into their parents; backward() replays the tape
/// in reverse creation order, which is a valid topological order by construction.
/// Nodes live in a deque so references handed out by val()/grad() stay valid while
/// later operations are recorded.
template <typename T>
class Tape {
public:
    using BackFn = std::function<void(Tape&, int self)>;

    int leaf(Tensor4<T> value) {
        nodes_.push_back({std::move(value), {}, {}, nullptr});
        return static_cast<int>(nodes_.size()) - 1;
    }

    int node(Tensor4<T> value, std::vector<int> parents, BackFn back) {
        nodes_.push_back({std::move(value), {}, std::move(parents), std::move(back)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Tensor4<T>& val(int id) const { return check(id).value; }

    Tensor4<T>& grad(int id) {
        Node& n = check(id);
        if (n.grad.size() == 0) n.grad = Tensor4<T>(n.value.n, n.value.c, n.value.h, n.value.w);
        return n.grad;
    }

    bool has_grad(int id) const { return check(id).grad.size() != 0; }

    /// Seed the (scalar) root with cotangent 1 and run the whole tape backwards.
    void backward(int root) {
        Node& r = check(root);
        if (r.value.size() != 1) throw DataError("Tape::backward: root must be a scalar");
        grad(root).v[0] = T(1);
        for (int id = root; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.back || n.grad.size() == 0) continue;
            n.back(*this, id);
        }
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        Tensor4<T> value;
        Tensor4<T> grad;
        std::vector<int> parents;
        BackFn back;
    };

    Node& check(int id) {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw DataError("Tape: no recorded node with id " + std::to_string(id));
        return nodes_[id];
    }
    const Node& check(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw DataError("Tape: no recorded node with id " + std::to_string(id));
        return nodes_[id];
    }

    std::deque<Node> nodes_;
};

} // namespace thinpaint::nn
