#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "thinpaint/nn/param_store.hpp"
#include "thinpaint/nn/tape.hpp"

namespace thinpaint::nn {

/// Records which tape leaf carries which named parameter during one forward pass,
/// so gradients can be read back per name after backward().
template <typename T>
struct Bindings {
    std::vector<std::pair<std::string, int>> items;

    int bind(Tape<T>& tape, const ParamStore<T>& params, const std::string& name) {
        const int id = tape.leaf(params.at(name));
        items.emplace_back(name, id);
        return id;
    }

    /// Gradients per parameter name. A parameter bound several times in one graph
    /// (e.g. once per scored window) accumulates across its bindings.
    std::map<std::string, Tensor4<T>> collect_grads(Tape<T>& tape) const {
        std::map<std::string, Tensor4<T>> grads;
        for (const auto& [name, id] : items) {
            if (!tape.has_grad(id)) continue;
            const Tensor4<T>& g = tape.grad(id);
            auto it = grads.find(name);
            if (it == grads.end()) {
                grads.emplace(name, g);
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) it->second.v[i] += g.v[i];
            }
        }
        return grads;
    }
};

} // namespace thinpaint::nn
