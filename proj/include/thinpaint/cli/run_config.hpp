#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "thinpaint/mask/synthetic.hpp"
#include "thinpaint/train/train_config.hpp"

namespace thinpaint::cli {

enum class KeyType { integer, real, text, boolean };

struct KeySpec {
    KeyType type;
    const char* default_value;
};

/// Flat typed key/value configuration with dotted section keys. Every key has a
/// declared type and default; unknown keys and badly-typed values are rejected at
/// parse time, so a config that loads is fully usable.
class RunConfig {
public:
    RunConfig() {
        for (const auto& [key, spec] : schema()) values_[key] = spec.default_value;
    }

    static const std::map<std::string, KeySpec>& schema() {
        static const std::map<std::string, KeySpec> s = {
            {"seed", {KeyType::integer, "0"}},
            {"threads", {KeyType::integer, "0"}}, // 0: resolve from environment, else 1

            {"synth.count", {KeyType::integer, "10"}},
            {"synth.split_train", {KeyType::real, "0.8"}},
            {"synth.split_val", {KeyType::real, "0.1"}},
            {"synth.split_test", {KeyType::real, "0.1"}},
            {"synth.canvas_h", {KeyType::integer, "512"}},
            {"synth.canvas_w", {KeyType::integer, "512"}},
            {"synth.stem_count", {KeyType::integer, "3"}},
            {"synth.branch_prob", {KeyType::real, "0.03"}},
            {"synth.step_jitter", {KeyType::real, "12.0"}},
            {"synth.thickness", {KeyType::integer, "3"}},
            {"synth.min_length", {KeyType::real, "500"}},
            {"synth.dilate", {KeyType::integer, "0"}},
            {"synth.rotate", {KeyType::real, "0"}},
            {"synth.noise", {KeyType::real, "0"}},

            {"gap.kind", {KeyType::text, "mix"}},
            {"gap.count_min", {KeyType::integer, "1"}},
            {"gap.count_max", {KeyType::integer, "4"}},
            {"gap.square_min", {KeyType::integer, "16"}},
            {"gap.square_max", {KeyType::integer, "48"}},
            {"gap.brush_vertices_min", {KeyType::integer, "4"}},
            {"gap.brush_vertices_max", {KeyType::integer, "8"}},
            {"gap.brush_width_min", {KeyType::integer, "6"}},
            {"gap.brush_width_max", {KeyType::integer, "24"}},
            {"gap.brush_max_turn", {KeyType::real, "60"}},
            {"gap.brush_seg_min", {KeyType::integer, "16"}},
            {"gap.brush_seg_max", {KeyType::integer, "64"}},
            {"gap.blob_scale_min", {KeyType::real, "0.5"}},
            {"gap.blob_scale_max", {KeyType::real, "2.0"}},
            {"gap.blob_library", {KeyType::integer, "32"}},

            {"train.variant", {KeyType::text, "gan_gl"}},
            {"train.lambda1", {KeyType::real, "1000"}},
            {"train.lambda2", {KeyType::real, "1"}},
            {"train.lambda3", {KeyType::real, "1"}},
            {"train.lr_g", {KeyType::real, "2e-4"}},
            {"train.lr_d", {KeyType::real, "4e-4"}},
            {"train.batch_size", {KeyType::integer, "8"}},
            {"train.patch_size", {KeyType::integer, "256"}},
            {"train.steps", {KeyType::integer, "1000"}},
            {"train.checkpoint_every", {KeyType::integer, "1000"}},
            {"train.log_every", {KeyType::integer, "50"}},
            {"train.gen_width", {KeyType::integer, "16"}},
            {"train.dloc_width", {KeyType::integer, "16"}},
            {"train.dglo_width", {KeyType::integer, "16"}},
            {"train.feature_dim", {KeyType::integer, "512"}},
            {"train.sub_patch", {KeyType::integer, "128"}},
            {"train.grad_clip", {KeyType::real, "10"}},
            {"train.pg_baseline", {KeyType::boolean, "false"}},
            {"train.data", {KeyType::text, ""}},
            {"train.real_data", {KeyType::text, ""}},

            {"infer.threshold", {KeyType::real, "0.5"}},

            {"eval.pixel_diff_whole_image", {KeyType::boolean, "false"}},
            {"eval.traits", {KeyType::boolean, "false"}},
        };
        return s;
    }

    void set(const std::string& key, const std::string& value) {
        const auto it = schema().find(key);
        if (it == schema().end()) throw ConfigError("unknown config key '" + key + "'");
        check_type(key, it->second.type, value);
        values_[key] = value;
    }

    void load_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const std::string stripped = strip(line.substr(0, line.find('#')));
            if (stripped.empty()) continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + stripped + "'");
            set(strip(stripped.substr(0, eq)), strip(stripped.substr(eq + 1)));
        }
    }

    /// "key=value" (one '=') as passed to --set.
    void set_pair(const std::string& pair) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + pair + "'");
        set(strip(pair.substr(0, eq)), strip(pair.substr(eq + 1)));
    }

    std::int64_t get_int(const std::string& key) const {
        return std::stoll(raw(key, KeyType::integer));
    }
    double get_real(const std::string& key) const { return std::stod(raw(key, KeyType::real)); }
    const std::string& get_text(const std::string& key) const {
        return raw(key, KeyType::text);
    }
    bool get_bool(const std::string& key) const { return raw(key, KeyType::boolean) == "true"; }

    /// Sorted `key = value` lines; parses back to an equivalent configuration.
    std::string echo() const {
        std::ostringstream os;
        for (const auto& [key, value] : values_) os << key << " = " << value << "\n";
        return os.str();
    }

private:
    static std::string strip(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static void check_type(const std::string& key, KeyType type, const std::string& value) {
        try {
            std::size_t pos = 0;
            switch (type) {
            case KeyType::integer:
                (void)std::stoll(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                break;
            case KeyType::real:
                (void)std::stod(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
                break;
            case KeyType::boolean:
                if (value != "true" && value != "false") throw std::invalid_argument(value);
                break;
            case KeyType::text:
                break;
            }
        } catch (const std::exception&) {
            throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
        }
    }

    const std::string& raw(const std::string& key, KeyType expect) const {
        const auto sit = schema().find(key);
        if (sit == schema().end() || sit->second.type != expect)
            throw ConfigError("config key '" + key + "' missing or of unexpected type");
        return values_.at(key);
    }

    std::map<std::string, std::string> values_;
};

inline SynthConfig synth_config_from(const RunConfig& rc, std::uint64_t seed) {
    SynthConfig sc;
    sc.seed = seed;
    sc.canvas_height = static_cast<int>(rc.get_int("synth.canvas_h"));
    sc.canvas_width = static_cast<int>(rc.get_int("synth.canvas_w"));
    sc.stem_count = static_cast<int>(rc.get_int("synth.stem_count"));
    sc.branch_prob = rc.get_real("synth.branch_prob");
    sc.step_jitter_deg = rc.get_real("synth.step_jitter");
    sc.thickness = static_cast<int>(rc.get_int("synth.thickness"));
    sc.min_length = rc.get_real("synth.min_length");
    sc.validate();
    return sc;
}

inline GapConfig gap_config_from(const RunConfig& rc) {
    GapConfig gc;
    const std::string kind = rc.get_text("gap.kind");
    if (kind == "square")
        gc.kind = GapKind::square;
    else if (kind == "brush")
        gc.kind = GapKind::brush;
    else if (kind == "blob")
        gc.kind = GapKind::blob;
    else if (kind == "mix")
        gc.kind = GapKind::mix;
    else
        throw ConfigError("gap.kind must be square|brush|blob|mix, got '" + kind + "'");
    gc.count = {static_cast<int>(rc.get_int("gap.count_min")),
                static_cast<int>(rc.get_int("gap.count_max"))};
    gc.square_size = {static_cast<int>(rc.get_int("gap.square_min")),
                      static_cast<int>(rc.get_int("gap.square_max"))};
    gc.brush.vertex_count = {static_cast<int>(rc.get_int("gap.brush_vertices_min")),
                             static_cast<int>(rc.get_int("gap.brush_vertices_max"))};
    gc.brush.stroke_width = {static_cast<int>(rc.get_int("gap.brush_width_min")),
                             static_cast<int>(rc.get_int("gap.brush_width_max"))};
    gc.brush.max_turn_deg = rc.get_real("gap.brush_max_turn");
    gc.brush.segment_length = {static_cast<int>(rc.get_int("gap.brush_seg_min")),
                               static_cast<int>(rc.get_int("gap.brush_seg_max"))};
    gc.blob_scale = {rc.get_real("gap.blob_scale_min"), rc.get_real("gap.blob_scale_max")};
    gc.seed = static_cast<std::uint64_t>(rc.get_int("seed"));
    gc.validate();
    return gc;
}

inline TrainConfig train_config_from(const RunConfig& rc) {
    TrainConfig tc;
    tc.variant = variant_from_name(rc.get_text("train.variant"));
    tc.lambda1 = rc.get_real("train.lambda1");
    tc.lambda2 = rc.get_real("train.lambda2");
    tc.lambda3 = rc.get_real("train.lambda3");
    tc.lr_g = static_cast<float>(rc.get_real("train.lr_g"));
    tc.lr_d = static_cast<float>(rc.get_real("train.lr_d"));
    tc.batch_size = static_cast<int>(rc.get_int("train.batch_size"));
    tc.patch_size = static_cast<int>(rc.get_int("train.patch_size"));
    tc.gap = gap_config_from(rc);
    tc.blob_library_size = static_cast<int>(rc.get_int("gap.blob_library"));
    tc.steps = rc.get_int("train.steps");
    tc.seed = static_cast<std::uint64_t>(rc.get_int("seed"));
    tc.checkpoint_every = rc.get_int("train.checkpoint_every");
    tc.log_every = rc.get_int("train.log_every");
    tc.gen_base_width = static_cast<int>(rc.get_int("train.gen_width"));
    tc.dloc_base_width = static_cast<int>(rc.get_int("train.dloc_width"));
    tc.dglo_base_width = static_cast<int>(rc.get_int("train.dglo_width"));
    tc.feature_dim = static_cast<int>(rc.get_int("train.feature_dim"));
    tc.dloc_sub_patch = static_cast<int>(rc.get_int("train.sub_patch"));
    tc.grad_clip = rc.get_real("train.grad_clip");
    tc.pg_baseline = rc.get_bool("train.pg_baseline");
    tc.data_dir = rc.get_text("train.data");
    tc.real_data_dir = rc.get_text("train.real_data");
    tc.validate();
    return tc;
}

} // namespace thinpaint::cli
