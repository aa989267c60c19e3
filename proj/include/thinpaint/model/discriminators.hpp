#pragma once

#include <string>
#include <vector>

#include "thinpaint/nn/bindings.hpp"
#include "thinpaint/nn/layers.hpp"
#include "thinpaint/nn/spectral_norm.hpp"

namespace thinpaint {

namespace detail {

inline int log2_exact(int x) {
    int p = 0;
    while ((1 << p) < x) ++p;
    return (1 << p) == x ? p : -1;
}

} // namespace detail

struct LocalDiscConfig {
    int base_width = 16;
    int sub_patch = 128; // side of the local windows scored independently
};

/// Markovian patch critic. Spectrally-normalized stride-2 3x3 blocks halve a
/// sub_patch-sized window down to 4x4, then a 4x4 valid convolution and a sigmoid
/// yield one score per window. Scores over the windows of a larger input are
/// averaged.
template <typename T>
class LocalDiscriminator {
public:
    explicit LocalDiscriminator(LocalDiscConfig cfg = {}) : cfg_(cfg) {
        const int halvings = detail::log2_exact(cfg_.sub_patch / 4);
        if (cfg_.sub_patch < 8 || halvings < 1 || (4 << halvings) != cfg_.sub_patch)
            throw ConfigError("LocalDiscriminator: sub_patch must be a power of two >= 8");
        blocks_ = halvings;
    }

    void init(Rng& rng) {
        int cin = 1;
        for (int i = 0; i < blocks_; ++i) {
            const int cout = cfg_.base_width << i;
            const std::string name = block_name(i);
            params.add(name + ".w", nn::he_normal<T>(cout, cin, 3, 3, rng));
            params.add(name + ".b", nn::Tensor4<T>(cout, 1, 1, 1));
            params.add(name + ".bn.gamma", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
            params.add(name + ".bn.beta", nn::Tensor4<T>(1, cout, 1, 1));
            params.add(name + ".bn.running_mean", nn::Tensor4<T>(1, cout, 1, 1));
            params.add(name + ".bn.running_var", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
            add_sn_vector(name, cout, rng);
            cin = cout;
        }
        params.add("dloc.out.w", nn::he_normal<T>(1, cin, 4, 4, rng));
        params.add("dloc.out.b", nn::Tensor4<T>(1, 1, 1, 1));
    }

    /// Score one batch of sub_patch-sized windows: (n, 1, s, s) -> (n, 1, 1, 1).
    int score_window(nn::Tape<T>& tape, int x, nn::BnMode mode, bool update_running,
                     bool update_power, nn::Bindings<T>* bindings) {
        const auto& vx = tape.val(x);
        if (vx.h != cfg_.sub_patch || vx.w != cfg_.sub_patch || vx.c != 1)
            throw DataError("local discriminator: window must be (n,1," +
                            std::to_string(cfg_.sub_patch) + "," +
                            std::to_string(cfg_.sub_patch) + "), got " + vx.shape_str());
        nn::Bindings<T> local;
        nn::Bindings<T>& b = bindings ? *bindings : local;
        int h = x;
        for (int i = 0; i < blocks_; ++i) {
            const std::string name = block_name(i);
            const int w = sn_conv_weight(tape, name, update_power, b);
            const int conv =
                nn::conv2d(tape, h, w, b.bind(tape, params, name + ".b"), 2, 1);
            const int bn = nn::batchnorm(tape, conv, b.bind(tape, params, name + ".bn.gamma"),
                                         b.bind(tape, params, name + ".bn.beta"),
                                         params.at(name + ".bn.running_mean"),
                                         params.at(name + ".bn.running_var"), mode, T(0.1),
                                         update_running);
            h = nn::leaky_relu(tape, bn, T(0.2));
        }
        const int out = nn::conv2d(tape, h, b.bind(tape, params, "dloc.out.w"),
                                   b.bind(tape, params, "dloc.out.b"), 1, 0);
        return nn::sigmoid(tape, out);
    }

    /// Mean of the window scores over a (n, 1, H, W) input whose sides are
    /// multiples of sub_patch: -> (n, 1, 1, 1).
    int score(nn::Tape<T>& tape, int x, nn::BnMode mode, bool update_running,
              bool update_power, nn::Bindings<T>* bindings) {
        const int in_h = tape.val(x).h, in_w = tape.val(x).w;
        const int s = cfg_.sub_patch;
        if (in_h % s != 0 || in_w % s != 0)
            throw DataError("local discriminator: input " + tape.val(x).shape_str() +
                            " is not a multiple of the " + std::to_string(s) + " window");
        std::vector<int> scores;
        for (int r = 0; r < in_h; r += s)
            for (int c = 0; c < in_w; c += s) {
                const int window = (in_h == s && in_w == s)
                                       ? x
                                       : nn::slice_spatial(tape, x, r, c, s, s);
                // Power iteration and running stats advance once per call at most.
                const bool first = scores.empty();
                scores.push_back(score_window(tape, window, mode, update_running && first,
                                              update_power && first, bindings));
            }
        return nn::mean_of(tape, scores);
    }

    const LocalDiscConfig& config() const { return cfg_; }
    int block_count() const { return blocks_ + 1; }

    nn::ParamStore<T> params;

private:
    static std::string block_name(int i) { return "dloc.b" + std::to_string(i + 1); }

    void add_sn_vector(const std::string& name, int cout, Rng& rng) {
        nn::Tensor4<T> u(cout, 1, 1, 1);
        T norm = T(0);
        for (auto& v : u.v) {
            v = static_cast<T>(rng.normal());
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : u.v) v /= norm;
        params.add(name + ".u", std::move(u));
    }

    int sn_conv_weight(nn::Tape<T>& tape, const std::string& name, bool update_power,
                       nn::Bindings<T>& b) {
        nn::Tensor4<T>& w = params.at(name + ".w");
        nn::Tensor4<T>& u_t = params.at(name + ".u");
        std::vector<T> u(u_t.v.begin(), u_t.v.end());
        const auto pi = nn::power_iterate(w, u, update_power ? 1 : 0);
        if (update_power) u_t.v.assign(u.begin(), u.end());
        const int w_leaf = b.bind(tape, params, name + ".w");
        if (pi.sigma == T(0)) return w_leaf; // zero weight: leave unnormalized
        return nn::sn_weight(tape, w_leaf, u, pi.v);
    }

    LocalDiscConfig cfg_;
    int blocks_;
};

struct GlobalDiscConfig {
    int base_width = 16;
    int feature_dim = 512;
};

/// Similarity critic. A six-block spectrally-normalized stride-2 conv stack with
/// 5x5 kernels feeds adaptive average pooling, giving one feature vector per
/// image regardless of input size; two images are compared by a dot product and a
/// sigmoid.
template <typename T>
class GlobalDiscriminator {
public:
    explicit GlobalDiscriminator(GlobalDiscConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.feature_dim < 1) throw ConfigError("GlobalDiscriminator: bad feature_dim");
    }

    void init(Rng& rng) {
        int cin = 1;
        for (int i = 0; i < kBlocks; ++i) {
            const int cout = i + 1 == kBlocks ? cfg_.feature_dim : cfg_.base_width << i;
            const std::string name = block_name(i);
            params.add(name + ".w", nn::he_normal<T>(cout, cin, 5, 5, rng));
            params.add(name + ".b", nn::Tensor4<T>(cout, 1, 1, 1));
            if (i + 1 < kBlocks) {
                params.add(name + ".bn.gamma", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
                params.add(name + ".bn.beta", nn::Tensor4<T>(1, cout, 1, 1));
                params.add(name + ".bn.running_mean", nn::Tensor4<T>(1, cout, 1, 1));
                params.add(name + ".bn.running_var", nn::Tensor4<T>(1, cout, 1, 1, T(1)));
            }
            add_sn_vector(name, cout, rng);
            cin = cout;
        }
    }

    /// Feature extractor f: (n, 1, H, W) -> (n, feature_dim, 1, 1).
    int feature(nn::Tape<T>& tape, int x, nn::BnMode mode, bool update_running,
                bool update_power, nn::Bindings<T>* bindings) {
        nn::Bindings<T> local;
        nn::Bindings<T>& b = bindings ? *bindings : local;
        int h = x;
        for (int i = 0; i < kBlocks; ++i) {
            const std::string name = block_name(i);
            const int w = sn_conv_weight(tape, name, update_power, b);
            const int conv = nn::conv2d(tape, h, w, b.bind(tape, params, name + ".b"), 2, 2);
            if (i + 1 < kBlocks) {
                const int bn = nn::batchnorm(
                    tape, conv, b.bind(tape, params, name + ".bn.gamma"),
                    b.bind(tape, params, name + ".bn.beta"),
                    params.at(name + ".bn.running_mean"), params.at(name + ".bn.running_var"),
                    mode, T(0.1), update_running);
                h = nn::leaky_relu(tape, bn, T(0.2));
            } else {
                h = conv;
            }
        }
        return nn::adaptive_avg_pool(tape, h);
    }

    /// sigmoid(f(a) . f(b)), clamped into (0, 1): (n, 1, 1, 1).
    int similarity_from_features(nn::Tape<T>& tape, int fa, int fb) const {
        const int dot = nn::dot_channels(tape, fa, fb);
        const int sim = nn::sigmoid(tape, dot);
        return nn::clamp(tape, sim, static_cast<T>(kProbClip),
                         static_cast<T>(1.0 - kProbClip));
    }

    static constexpr double kProbClip = 1e-7;

    const GlobalDiscConfig& config() const { return cfg_; }

    nn::ParamStore<T> params;

private:
    static constexpr int kBlocks = 6;
    static std::string block_name(int i) { return "dglo.b" + std::to_string(i + 1); }

    void add_sn_vector(const std::string& name, int cout, Rng& rng) {
        nn::Tensor4<T> u(cout, 1, 1, 1);
        T norm = T(0);
        for (auto& v : u.v) {
            v = static_cast<T>(rng.normal());
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : u.v) v /= norm;
        params.add(name + ".u", std::move(u));
    }

    int sn_conv_weight(nn::Tape<T>& tape, const std::string& name, bool update_power,
                       nn::Bindings<T>& b) {
        nn::Tensor4<T>& w = params.at(name + ".w");
        nn::Tensor4<T>& u_t = params.at(name + ".u");
        std::vector<T> u(u_t.v.begin(), u_t.v.end());
        const auto pi = nn::power_iterate(w, u, update_power ? 1 : 0);
        if (update_power) u_t.v.assign(u.begin(), u.end());
        const int w_leaf = b.bind(tape, params, name + ".w");
        if (pi.sigma == T(0)) return w_leaf;
        return nn::sn_weight(tape, w_leaf, u, pi.v);
    }

    GlobalDiscConfig cfg_;
};

} // namespace thinpaint
