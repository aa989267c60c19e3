#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "thinpaint/gaps/gaps.hpp"

namespace thinpaint {

enum class Variant { unet, gan_l, gan_g, gan_gl, gan_gl_m };

inline const char* variant_name(Variant v) {
    switch (v) {
    case Variant::unet: return "unet";
    case Variant::gan_l: return "gan_l";
    case Variant::gan_g: return "gan_g";
    case Variant::gan_gl: return "gan_gl";
    case Variant::gan_gl_m: return "gan_gl_m";
    }
    return "?";
}

inline Variant variant_from_name(const std::string& s) {
    if (s == "unet") return Variant::unet;
    if (s == "gan_l") return Variant::gan_l;
    if (s == "gan_g") return Variant::gan_g;
    if (s == "gan_gl") return Variant::gan_gl;
    if (s == "gan_gl_m") return Variant::gan_gl_m;
    throw ConfigError("unknown variant '" + s + "'");
}

inline bool variant_has_local(Variant v) {
    return v == Variant::gan_l || v == Variant::gan_gl || v == Variant::gan_gl_m;
}
inline bool variant_has_global(Variant v) {
    return v == Variant::gan_g || v == Variant::gan_gl || v == Variant::gan_gl_m;
}

struct TrainConfig {
    Variant variant = Variant::gan_gl;
    double lambda1 = 1000.0;
    double lambda2 = 1.0;
    double lambda3 = 1.0;
    float lr_g = 2e-4f;
    float lr_d = 4e-4f; // discriminators run at twice the generator rate
    int batch_size = 8;
    int patch_size = 256;
    GapConfig gap;
    int blob_library_size = 32;
    std::int64_t steps = 1000;
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 1000;
    std::int64_t log_every = 50;

    int gen_base_width = 16;
    int dloc_base_width = 16;
    int dglo_base_width = 16;
    int feature_dim = 512;
    int dloc_sub_patch = 128;

    double grad_clip = 10.0;
    bool pg_baseline = false; // moving-average reward baseline, off by default

    std::string data_dir;
    std::string real_data_dir; // gan_gl_m only

    void validate() const {
        if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
            throw ConfigError("TrainConfig: lambdas must be >= 0");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
        if (patch_size < 16 || patch_size % 16 != 0)
            throw ConfigError("TrainConfig: patch_size must be a positive multiple of 16");
        if (dloc_sub_patch < 8 || patch_size % dloc_sub_patch != 0)
            throw ConfigError("TrainConfig: patch_size must be a multiple of dloc_sub_patch");
        if (steps < 0) throw ConfigError("TrainConfig: steps must be >= 0");
        if (lr_g <= 0 || lr_d <= 0) throw ConfigError("TrainConfig: learning rates must be > 0");
        if (log_every < 1) throw ConfigError("TrainConfig: log_every must be >= 1");
        if (grad_clip <= 0) throw ConfigError("TrainConfig: grad_clip must be > 0");
        if (variant == Variant::gan_gl_m && real_data_dir.empty())
            throw ConfigError("TrainConfig: variant gan_gl_m requires a real data path");
        gap.validate();
    }

    /// Canonical text of every training-relevant field; hashed into checkpoints so
    /// a resume under a different configuration is rejected.
    std::string canonical_string() const {
        std::ostringstream os;
        os << "variant=" << variant_name(variant) << ";l1=" << lambda1 << ";l2=" << lambda2
           << ";l3=" << lambda3 << ";lr_g=" << lr_g << ";lr_d=" << lr_d
           << ";batch=" << batch_size << ";patch=" << patch_size << ";steps=" << steps
           << ";seed=" << seed << ";gw=" << gen_base_width << ";dlw=" << dloc_base_width
           << ";dgw=" << dglo_base_width << ";fd=" << feature_dim << ";sub=" << dloc_sub_patch
           << ";clip=" << grad_clip << ";base=" << pg_baseline
           << ";gap.kind=" << static_cast<int>(gap.kind) << ";gap.count=" << gap.count.lo << ","
           << gap.count.hi << ";gap.sq=" << gap.square_size.lo << "," << gap.square_size.hi
           << ";gap.bv=" << gap.brush.vertex_count.lo << "," << gap.brush.vertex_count.hi
           << ";gap.bw=" << gap.brush.stroke_width.lo << "," << gap.brush.stroke_width.hi
           << ";gap.bt=" << gap.brush.max_turn_deg << ";gap.bs=" << gap.brush.segment_length.lo
           << "," << gap.brush.segment_length.hi << ";gap.scale=" << gap.blob_scale.lo << ","
           << gap.blob_scale.hi << ";blobs=" << blob_library_size;
        return os.str();
    }

    std::uint64_t config_hash() const {
        // FNV-1a 64.
        std::uint64_t h = 1469598103934665603ull;
        for (char c : canonical_string()) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return h;
    }
};

} // namespace thinpaint
