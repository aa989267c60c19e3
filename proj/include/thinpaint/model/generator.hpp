#pragma once

#include <string>

#include "thinpaint/nn/bindings.hpp"
#include "thinpaint/nn/layers.hpp"

namespace thinpaint {

struct GeneratorConfig {
    int base_width = 16; // encoder widths: w, 2w, 4w, 8w
};

/// Inpainting U-Net. Four stride-2 encoder convolutions, four nearest-neighbour
/// upsampling decoder stages with skip connections at the matching encoder
/// resolutions (the full-resolution stage has no encoder feature to skip from),
/// 3x3 zero-padded kernels, BN + ReLU after every convolution except the last,
/// and a final 2-channel convolution with a channel softmax. Channel 1 of the
/// output is the foreground probability.
template <typename T>
class Generator {
public:
    explicit Generator(GeneratorConfig cfg = {}) : cfg_(cfg) {}

    void init(Rng& rng) {
        const int w = cfg_.base_width;
        add_block("gen.enc1", 1, w, rng);
        add_block("gen.enc2", w, 2 * w, rng);
        add_block("gen.enc3", 2 * w, 4 * w, rng);
        add_block("gen.enc4", 4 * w, 8 * w, rng);
        add_block("gen.dec1", 8 * w + 4 * w, 4 * w, rng);
        add_block("gen.dec2", 4 * w + 2 * w, 2 * w, rng);
        add_block("gen.dec3", 2 * w + w, w, rng);
        add_block("gen.dec4", w, w, rng);
        params.add("gen.out.w", nn::he_normal<T>(2, w, 3, 3, rng));
        params.add("gen.out.b", nn::Tensor4<T>(2, 1, 1, 1));
    }

    /// Builds the forward graph; input is (n, 1, H, W) with H, W divisible by 16.
    int forward(nn::Tape<T>& tape, int input, nn::BnMode mode, bool update_running,
                nn::Bindings<T>* bindings) {
        const auto& vx = tape.val(input);
        if (vx.c != 1) throw DataError("generator: input must have a single channel");
        if (vx.h % 16 != 0 || vx.w % 16 != 0)
            throw DataError("generator: input " + vx.shape_str() +
                            " must have spatial dims divisible by 16; pad the input first");

        nn::Bindings<T> local;
        nn::Bindings<T>& b = bindings ? *bindings : local;

        const int e1 = block(tape, input, "gen.enc1", 2, mode, update_running, b);
        const int e2 = block(tape, e1, "gen.enc2", 2, mode, update_running, b);
        const int e3 = block(tape, e2, "gen.enc3", 2, mode, update_running, b);
        const int e4 = block(tape, e3, "gen.enc4", 2, mode, update_running, b);
        int d = block(tape, nn::concat_channels(tape, nn::upsample_nearest(tape, e4, 2), e3),
                      "gen.dec1", 1, mode, update_running, b);
        d = block(tape, nn::concat_channels(tape, nn::upsample_nearest(tape, d, 2), e2),
                  "gen.dec2", 1, mode, update_running, b);
        d = block(tape, nn::concat_channels(tape, nn::upsample_nearest(tape, d, 2), e1),
                  "gen.dec3", 1, mode, update_running, b);
        d = block(tape, nn::upsample_nearest(tape, d, 2), "gen.dec4", 1, mode,
                  update_running, b);
        const int logits = nn::conv2d(tape, d, b.bind(tape, params, "gen.out.w"),
                                      b.bind(tape, params, "gen.out.b"), 1, 1);
        return nn::softmax_channels(tape, logits);
    }

    const GeneratorConfig& config() const { return cfg_; }

    nn::ParamStore<T> params;

private:
    void add_block(const std::string& name, int cin, int cout, Rng& rng) {
        params.add(name + ".w", nn::he_normal<T>(cout, cin, 3, 3, rng));
        params.add(name + ".b", nn::Tensor4<T>(cout, 1, 1, 1));
        params.add(name + ".bn.gamma", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
        params.add(name + ".bn.beta", nn::Tensor4<T>(1, cout, 1, 1));
        params.add(name + ".bn.running_mean", nn::Tensor4<T>(1, cout, 1, 1));
        params.add(name + ".bn.running_var", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
    }

    int block(nn::Tape<T>& tape, int x, const std::string& name, int stride, nn::BnMode mode,
              bool update_running, nn::Bindings<T>& b) {
        const int conv = nn::conv2d(tape, x, b.bind(tape, params, name + ".w"),
                                    b.bind(tape, params, name + ".b"), stride, 1);
        const int bn = nn::batchnorm(tape, conv, b.bind(tape, params, name + ".bn.gamma"),
                                     b.bind(tape, params, name + ".bn.beta"),
                                     params.at(name + ".bn.running_mean"),
                                     params.at(name + ".bn.running_var"), mode, T(0.1),
                                     update_running);
        return nn::relu(tape, bn);
    }

    GeneratorConfig cfg_;
};

} // namespace thinpaint
