#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thinpaint/gaps/gaps.hpp"
#include "thinpaint/model/discriminators.hpp"
#include "thinpaint/model/generator.hpp"
#include "thinpaint/model/losses.hpp"
#include "thinpaint/nn/adam.hpp"
#include "thinpaint/nn/checkpoint.hpp"
#include "thinpaint/patch/patching.hpp"
#include "thinpaint/train/dataset.hpp"
#include "thinpaint/train/train_config.hpp"

namespace thinpaint {

// Training runs in float32 end to end so checkpoints (raw f32 containers) restore
// the exact state and a resumed run reproduces the uninterrupted trajectory.

struct RunningLosses {
    float ce = 0.f, loc_d = 0.f, loc_g = 0.f, glo_d = 0.f, reward = 0.f;

    void fold(float& slot, double value) { slot = 0.98f * slot + 0.02f * static_cast<float>(value); }
};

struct TrainState {
    Generator<float> gen;
    LocalDiscriminator<float> dloc;
    GlobalDiscriminator<float> dglo;
    nn::AdamState<float> adam_g, adam_dl, adam_dg;
    Rng rng_batch, rng_gap, rng_bernoulli;
    std::int64_t step = 0;
    float reward_baseline = 0.5f; // used only when cfg.pg_baseline is set
    RunningLosses avg;

    TrainState(const TrainConfig& cfg)
        : gen(GeneratorConfig{cfg.gen_base_width}),
          dloc(LocalDiscConfig{cfg.dloc_base_width, cfg.dloc_sub_patch}),
          dglo(GlobalDiscConfig{cfg.dglo_base_width, cfg.feature_dim}) {}
};

inline TrainState init_train_state(const TrainConfig& cfg) {
    cfg.validate();
    TrainState state(cfg);
    Rng rg = Rng::stream(cfg.seed, 0);
    state.gen.init(rg);
    Rng rl = Rng::stream(cfg.seed, 1);
    state.dloc.init(rl);
    Rng rgl = Rng::stream(cfg.seed, 2);
    state.dglo.init(rgl);
    state.rng_batch = Rng::stream(cfg.seed, 3);
    state.rng_gap = Rng::stream(cfg.seed, 4);
    state.rng_bernoulli = Rng::stream(cfg.seed, 5);
    state.adam_g.hyper.lr = cfg.lr_g;
    state.adam_dl.hyper.lr = cfg.lr_d;
    state.adam_dg.hyper.lr = cfg.lr_d;
    return state;
}

inline GapSampler make_gap_sampler(const TrainConfig& cfg) {
    return GapSampler(cfg.gap, make_blob_library(cfg.seed ^ 0xb10bb10bull,
                                                 cfg.blob_library_size));
}

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

struct Batch {
    std::vector<BinaryMask> y1, y2, x1, gaps; // per-patch
    BinaryMask parent;                        // complete parent of y1
    BinaryMask corrupted_parent;              // parent with the sampled gaps applied
    std::vector<int> patch_indices;           // where y1 patches live in the parent
    PatchLayout layout;
};

namespace detail {

inline std::vector<int> sample_indices(int available, int wanted, Rng& rng) {
    std::vector<int> picks;
    picks.reserve(wanted);
    if (available >= wanted) {
        // Without replacement: partial Fisher-Yates over the index pool.
        std::vector<int> pool(available);
        for (int i = 0; i < available; ++i) pool[i] = i;
        for (int k = 0; k < wanted; ++k) {
            const int j = k + static_cast<int>(rng.uniform_int(available - k));
            std::swap(pool[k], pool[j]);
            picks.push_back(pool[k]);
        }
    } else {
        for (int k = 0; k < wanted; ++k)
            picks.push_back(static_cast<int>(rng.uniform_int(available)));
    }
    return picks;
}

} // namespace detail

/// One training batch per Algorithm 1: batch_size complete patches from one
/// parent, the same count from a different parent, corrupted copies of the first
/// set, and the parent with those same gaps applied at the sampled locations.
inline Batch assemble_batch(const Dataset& ds, const TrainConfig& cfg,
                            const GapSampler& sampler, Rng& rng_batch, Rng& rng_gap) {
    if (ds.size() < 2)
        throw DataError("assemble_batch: need at least 2 parent masks (got " +
                        std::to_string(ds.size()) + ")");
    const int i1 = static_cast<int>(rng_batch.uniform_int(ds.size()));
    int i2 = static_cast<int>(rng_batch.uniform_int(ds.size() - 1));
    if (i2 >= i1) ++i2;

    Batch batch;
    batch.parent = ds.masks[i1];
    auto [p1, layout1] = extract_patches(batch.parent, cfg.patch_size);
    batch.layout = layout1;
    batch.patch_indices =
        detail::sample_indices(layout1.count(), cfg.batch_size, rng_batch);
    for (int idx : batch.patch_indices) batch.y1.push_back(p1[idx]);

    auto [p2, layout2] = extract_patches(ds.masks[i2], cfg.patch_size);
    for (int idx : detail::sample_indices(layout2.count(), cfg.batch_size, rng_batch))
        batch.y2.push_back(p2[idx]);

    for (const auto& y : batch.y1) {
        BinaryMask gaps = sampler.sample(cfg.patch_size, cfg.patch_size, rng_gap);
        batch.gaps.push_back(gaps);
        batch.x1.push_back(corrupt(y, gaps));
    }
    batch.corrupted_parent =
        partial_recompose(batch.parent, batch.x1, batch.patch_indices, batch.layout);
    return batch;
}

// ---------------------------------------------------------------------------
// Step pieces
// ---------------------------------------------------------------------------

struct StepLosses {
    double ce = 0.0, loc_d = 0.0, loc_g = 0.0, glo_d = 0.0, reward = 0.0;
    bool used_real = false;
};

namespace detail {

inline void check_finite(double v, const char* term) {
    if (!std::isfinite(v))
        throw NumericError(std::string("train_step: non-finite ") + term + " (" +
                           std::to_string(v) + ")");
}

inline std::vector<BinaryMask> threshold_all(const std::vector<ProbMap>& maps,
                                             double t = 0.5) {
    std::vector<BinaryMask> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(threshold_binarize(m, t));
    return out;
}

} // namespace detail

/// Similarity score between a recomposed inpainted image and its complete parent,
/// evaluated with running statistics and no state updates: a pure function of the
/// current global-discriminator parameters.
inline double compute_reward(TrainState& state, const BinaryMask& composed,
                             const BinaryMask& parent) {
    nn::Tape<float> tape;
    const int fa = state.dglo.feature(tape, tape.leaf(masks_to_tensor<float>({composed})),
                                      nn::BnMode::eval, false, false, nullptr);
    const int fb = state.dglo.feature(tape, tape.leaf(masks_to_tensor<float>({parent})),
                                      nn::BnMode::eval, false, false, nullptr);
    return static_cast<double>(
        tape.val(state.dglo.similarity_from_features(tape, fa, fb)).v[0]);
}

namespace detail {

/// The generator objective on an existing tape holding the generator forward:
/// lambda1 * CE plus the variant-gated adversarial and policy terms. Terms with a
/// zero weight are not built at all, so their code paths (and rng usage) vanish.
inline int build_generator_objective(nn::Tape<float>& tape, TrainState& state,
                                     const TrainConfig& cfg, const Batch& batch, int prob,
                                     const std::vector<BinaryMask>* sampled, double reward,
                                     StepLosses* losses) {
    const double l2 = variant_has_local(cfg.variant) ? cfg.lambda2 : 0.0;
    const double l3 = variant_has_global(cfg.variant) ? cfg.lambda3 : 0.0;

    const int ce = ce_loss(tape, prob, masks_to_tensor<float>(batch.y1));
    if (losses) losses->ce = tape.val(ce).v[0];
    check_finite(tape.val(ce).v[0], "cross-entropy loss");
    int total = nn::scale(tape, ce, static_cast<float>(cfg.lambda1));

    if (l2 > 0.0) {
        const int fg = nn::channel(tape, prob, 1);
        const int score =
            state.dloc.score(tape, fg, nn::BnMode::train, false, false, nullptr);
        const int adv = lsgan_g_loss(tape, score);
        if (losses) losses->loc_g = tape.val(adv).v[0];
        check_finite(tape.val(adv).v[0], "local adversarial generator loss");
        total = nn::add(tape, total, nn::scale(tape, adv, static_cast<float>(l2)));
    }

    if (l3 > 0.0) {
        if (!sampled)
            throw DataError("build_generator_objective: policy term needs sampled masks");
        const nn::Tensor4<float> sampled_t = masks_to_tensor<float>(*sampled);
        int pg;
        if (cfg.pg_baseline) {
            // Centered reward can be negative, so the scaling is applied directly.
            const double advantage = reward - state.reward_baseline;
            const int ll = nn::mean(tape, log_likelihood(tape, prob, sampled_t));
            pg = nn::scale(tape, ll, static_cast<float>(-advantage));
        } else {
            pg = pg_generator_loss(tape, prob, sampled_t, reward);
        }
        check_finite(tape.val(pg).v[0], "policy-gradient loss");
        total = nn::add(tape, total, nn::scale(tape, pg, static_cast<float>(l3)));
    }
    check_finite(tape.val(total).v[0], "total generator loss");
    return total;
}

} // namespace detail

/// Pre-clip generator gradients for a fixed batch, reward and sampled masks.
/// Pure with respect to running statistics and power-iteration state. train_step
/// builds the same objective; this entry point exists so invariants (reward
/// detachment, lambda scaling) can be exercised directly.
inline std::map<std::string, nn::Tensor4<float>> generator_gradients(
    TrainState& state, const TrainConfig& cfg, const Batch& batch,
    const std::vector<BinaryMask>* sampled, double reward) {
    nn::Tape<float> tape;
    nn::Bindings<float> gb;
    const int x1 = tape.leaf(masks_to_tensor<float>(batch.x1));
    const int prob = state.gen.forward(tape, x1, nn::BnMode::train, false, &gb);
    const int total =
        detail::build_generator_objective(tape, state, cfg, batch, prob, sampled, reward,
                                          nullptr);
    tape.backward(total);
    return gb.collect_grads(tape);
}

namespace detail {

inline void local_discriminator_update(TrainState& state, const TrainConfig& cfg,
                                       const Batch& batch,
                                       const std::vector<BinaryMask>& fake, StepLosses& out) {
    nn::Tape<float> tape;
    nn::Bindings<float> bind;
    const int d_real = state.dloc.score(tape, tape.leaf(masks_to_tensor<float>(batch.y1)),
                                        nn::BnMode::train, true, true, &bind);
    const int d_fake = state.dloc.score(tape, tape.leaf(masks_to_tensor<float>(fake)),
                                        nn::BnMode::train, true, false, &bind);
    const int loss = lsgan_d_loss(tape, d_real, d_fake);
    out.loc_d = tape.val(loss).v[0];
    check_finite(out.loc_d, "local adversarial discriminator loss");
    tape.backward(loss);
    auto grads = bind.collect_grads(tape);
    nn::clip_global_norm(grads, static_cast<float>(cfg.grad_clip));
    nn::adam_step(state.dloc.params, grads, state.adam_dl);
}

inline void global_discriminator_update(TrainState& state, const TrainConfig& cfg,
                                        const Batch& batch,
                                        const std::vector<BinaryMask>& fake,
                                        StepLosses& out) {
    nn::Tape<float> tape;
    nn::Bindings<float> bind;
    const int f1 = state.dglo.feature(tape, tape.leaf(masks_to_tensor<float>(batch.y1)),
                                      nn::BnMode::train, true, true, &bind);
    const int f2 = state.dglo.feature(tape, tape.leaf(masks_to_tensor<float>(batch.y2)),
                                      nn::BnMode::train, true, false, &bind);
    const int ff = state.dglo.feature(tape, tape.leaf(masks_to_tensor<float>(fake)),
                                      nn::BnMode::train, true, false, &bind);
    const int sim_real = state.dglo.similarity_from_features(tape, f1, f2);
    const int sim_fake = state.dglo.similarity_from_features(tape, ff, f1);
    const int loss = global_d_loss(tape, sim_real, sim_fake);
    out.glo_d = tape.val(loss).v[0];
    check_finite(out.glo_d, "global adversarial discriminator loss");
    tape.backward(loss);
    auto grads = bind.collect_grads(tape);
    nn::clip_global_norm(grads, static_cast<float>(cfg.grad_clip));
    nn::adam_step(state.dglo.params, grads, state.adam_dg);
}

} // namespace detail

/// One full Algorithm-1 step: local discriminator, global discriminator, then the
/// generator, each on the current parameters of the others.
inline StepLosses train_step(TrainState& state, const Batch& batch, const TrainConfig& cfg) {
    StepLosses losses;
    const bool local = variant_has_local(cfg.variant);
    const bool global = variant_has_global(cfg.variant);

    // Single generator forward per step: its probability maps feed the
    // discriminator updates (binarized, so no gradient path back) and stay on the
    // tape for the generator update afterwards.
    nn::Tape<float> tape;
    nn::Bindings<float> gb;
    const int x1 = tape.leaf(masks_to_tensor<float>(batch.x1));
    const int prob = state.gen.forward(tape, x1, nn::BnMode::train, true, &gb);
    const std::vector<ProbMap> prob_maps = prob_maps_from_output(tape.val(prob));
    const std::vector<BinaryMask> thresholded = detail::threshold_all(prob_maps);

    if (local) detail::local_discriminator_update(state, cfg, batch, thresholded, losses);
    if (global) detail::global_discriminator_update(state, cfg, batch, thresholded, losses);

    std::vector<BinaryMask> sampled;
    double reward = 0.0;
    const bool policy_term = global && cfg.lambda3 > 0.0;
    if (policy_term) {
        sampled.reserve(prob_maps.size());
        for (const auto& pm : prob_maps)
            sampled.push_back(bernoulli_binarize(pm, state.rng_bernoulli));
        const BinaryMask composed = partial_recompose(batch.corrupted_parent, sampled,
                                                      batch.patch_indices, batch.layout);
        reward = compute_reward(state, composed, batch.parent);
        losses.reward = reward;
    }

    const int total = detail::build_generator_objective(
        tape, state, cfg, batch, prob, policy_term ? &sampled : nullptr, reward, &losses);
    tape.backward(total);
    auto grads = gb.collect_grads(tape);
    nn::clip_global_norm(grads, static_cast<float>(cfg.grad_clip));
    nn::adam_step(state.gen.params, grads, state.adam_g);

    if (cfg.pg_baseline && policy_term)
        state.reward_baseline =
            0.95f * state.reward_baseline + 0.05f * static_cast<float>(reward);

    state.avg.fold(state.avg.ce, losses.ce);
    state.avg.fold(state.avg.loc_d, losses.loc_d);
    state.avg.fold(state.avg.loc_g, losses.loc_g);
    state.avg.fold(state.avg.glo_d, losses.glo_d);
    state.avg.fold(state.avg.reward, losses.reward);
    state.step += 1;
    return losses;
}

/// Generator-only update on real data: fresh artificial gaps, cross entropy
/// restricted to them (weighted by lambda1), discriminators untouched.
inline StepLosses masked_real_step(TrainState& state, const Dataset& real,
                                   const TrainConfig& cfg, const GapSampler& sampler) {
    if (real.size() < 2)
        throw DataError("masked_real_step: real dataset needs at least 2 masks");
    const Batch batch = assemble_batch(real, cfg, sampler, state.rng_batch, state.rng_gap);

    StepLosses losses;
    losses.used_real = true;
    nn::Tape<float> tape;
    nn::Bindings<float> gb;
    const int x1 = tape.leaf(masks_to_tensor<float>(batch.x1));
    const int prob = state.gen.forward(tape, x1, nn::BnMode::train, true, &gb);
    const auto masked = masked_ce_loss(tape, prob, masks_to_tensor<float>(batch.y1),
                                       masks_to_tensor<float>(batch.gaps));
    losses.ce = tape.val(masked.loss).v[0];
    detail::check_finite(losses.ce, "masked cross-entropy loss");
    if (!masked.mask_empty) {
        const int total =
            nn::scale(tape, masked.loss, static_cast<float>(cfg.lambda1));
        tape.backward(total);
        auto grads = gb.collect_grads(tape);
        nn::clip_global_norm(grads, static_cast<float>(cfg.grad_clip));
        nn::adam_step(state.gen.params, grads, state.adam_g);
    }
    state.avg.fold(state.avg.ce, losses.ce);
    state.step += 1;
    return losses;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void append_store(std::vector<nn::ContainerEntry>& entries, const nn::ParamStore<T>& store) {
    for (const auto& [name, t] : store.tensors) {
        nn::ContainerEntry e;
        e.name = name;
        e.dims = {static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.c),
                  static_cast<std::uint32_t>(t.h), static_cast<std::uint32_t>(t.w)};
        e.data.assign(t.v.begin(), t.v.end());
        entries.push_back(std::move(e));
    }
}

inline void append_adam(std::vector<nn::ContainerEntry>& entries,
                        const nn::AdamState<float>& adam, const std::string& prefix) {
    for (const auto& [name, slot] : adam.slots) {
        nn::ContainerEntry m, v;
        m.name = prefix + name + ".m";
        v.name = prefix + name + ".v";
        m.dims = v.dims = {static_cast<std::uint32_t>(slot.m.n),
                           static_cast<std::uint32_t>(slot.m.c),
                           static_cast<std::uint32_t>(slot.m.h),
                           static_cast<std::uint32_t>(slot.m.w)};
        m.data.assign(slot.m.v.begin(), slot.m.v.end());
        v.data.assign(slot.v.v.begin(), slot.v.v.end());
        entries.push_back(std::move(m));
        entries.push_back(std::move(v));
    }
    entries.push_back({prefix + "step", {2},
                       nn::pack_u64s({static_cast<std::uint64_t>(adam.step)})});
}

inline void append_rng(std::vector<nn::ContainerEntry>& entries, const Rng& rng,
                       const std::string& name) {
    const auto s = rng.state();
    entries.push_back({name, {8}, nn::pack_u64s({s[0], s[1], s[2], s[3]})});
}

inline std::map<std::string, nn::ContainerEntry> index_entries(
    std::vector<nn::ContainerEntry> entries) {
    std::map<std::string, nn::ContainerEntry> by_name;
    for (auto& e : entries) by_name.emplace(e.name, std::move(e));
    return by_name;
}

template <typename T>
void restore_store(nn::ParamStore<T>& store,
                   const std::map<std::string, nn::ContainerEntry>& by_name) {
    for (auto& [name, t] : store.tensors) {
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw DataError("load_checkpoint: missing tensor '" + name + "'");
        if (it->second.data.size() != t.size())
            throw DataError("load_checkpoint: size mismatch for '" + name + "'");
        std::copy(it->second.data.begin(), it->second.data.end(), t.v.begin());
    }
}

inline void restore_adam(nn::AdamState<float>& adam, const nn::ParamStore<float>& params,
                         const std::map<std::string, nn::ContainerEntry>& by_name,
                         const std::string& prefix) {
    adam.slots.clear();
    for (const auto& [name, t] : params.tensors) {
        const auto mit = by_name.find(prefix + name + ".m");
        const auto vit = by_name.find(prefix + name + ".v");
        if (mit == by_name.end() || vit == by_name.end()) continue; // not yet visited
        nn::AdamSlot<float> slot{nn::Tensor4<float>(t.n, t.c, t.h, t.w),
                                 nn::Tensor4<float>(t.n, t.c, t.h, t.w)};
        std::copy(mit->second.data.begin(), mit->second.data.end(), slot.m.v.begin());
        std::copy(vit->second.data.begin(), vit->second.data.end(), slot.v.v.begin());
        adam.slots.emplace(name, std::move(slot));
    }
    const auto sit = by_name.find(prefix + "step");
    if (sit == by_name.end())
        throw DataError("load_checkpoint: missing '" + prefix + "step'");
    adam.step = static_cast<std::int64_t>(nn::unpack_u64s(sit->second.data)[0]);
}

inline Rng restore_rng(const std::map<std::string, nn::ContainerEntry>& by_name,
                       const std::string& name) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("load_checkpoint: missing '" + name + "'");
    const auto words = nn::unpack_u64s(it->second.data);
    Rng rng;
    rng.set_state({words[0], words[1], words[2], words[3]});
    return rng;
}

} // namespace detail

inline void save_checkpoint(const TrainState& state, const TrainConfig& cfg,
                            const std::string& path) {
    std::vector<nn::ContainerEntry> entries;
    detail::append_store(entries, state.gen.params);
    detail::append_store(entries, state.dloc.params);
    detail::append_store(entries, state.dglo.params);
    detail::append_adam(entries, state.adam_g, "adam.g.");
    detail::append_adam(entries, state.adam_dl, "adam.dl.");
    detail::append_adam(entries, state.adam_dg, "adam.dg.");
    detail::append_rng(entries, state.rng_batch, "meta.rng.batch");
    detail::append_rng(entries, state.rng_gap, "meta.rng.gap");
    detail::append_rng(entries, state.rng_bernoulli, "meta.rng.bernoulli");
    entries.push_back({"meta.step", {2},
                       nn::pack_u64s({static_cast<std::uint64_t>(state.step)})});
    entries.push_back({"meta.config_hash", {2}, nn::pack_u64s({cfg.config_hash()})});
    entries.push_back({"meta.avg", {5},
                       {state.avg.ce, state.avg.loc_d, state.avg.loc_g, state.avg.glo_d,
                        state.avg.reward}});
    entries.push_back({"meta.reward_baseline", {1}, {state.reward_baseline}});
    nn::write_container(path, entries);
}

inline TrainState load_checkpoint(const std::string& path, const TrainConfig& cfg) {
    const auto by_name = detail::index_entries(nn::read_container(path));

    const auto hit = by_name.find("meta.config_hash");
    if (hit == by_name.end())
        throw nn::CheckpointError(nn::CheckpointFault::truncated,
                                  "load_checkpoint: missing config hash in '" + path + "'");
    if (nn::unpack_u64s(hit->second.data)[0] != cfg.config_hash())
        throw nn::CheckpointError(nn::CheckpointFault::config_mismatch,
                                  "load_checkpoint: config hash mismatch for '" + path + "'");

    TrainState state = init_train_state(cfg);
    detail::restore_store(state.gen.params, by_name);
    detail::restore_store(state.dloc.params, by_name);
    detail::restore_store(state.dglo.params, by_name);
    detail::restore_adam(state.adam_g, state.gen.params, by_name, "adam.g.");
    detail::restore_adam(state.adam_dl, state.dloc.params, by_name, "adam.dl.");
    detail::restore_adam(state.adam_dg, state.dglo.params, by_name, "adam.dg.");
    state.rng_batch = detail::restore_rng(by_name, "meta.rng.batch");
    state.rng_gap = detail::restore_rng(by_name, "meta.rng.gap");
    state.rng_bernoulli = detail::restore_rng(by_name, "meta.rng.bernoulli");
    state.step =
        static_cast<std::int64_t>(nn::unpack_u64s(by_name.at("meta.step").data)[0]);
    const auto& avg = by_name.at("meta.avg").data;
    state.avg = {avg[0], avg[1], avg[2], avg[3], avg[4]};
    state.reward_baseline = by_name.at("meta.reward_baseline").data[0];
    return state;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

struct InferResult {
    BinaryMask inpainted;
    BinaryMask filled; // output AND NOT input
    BinaryMask erased; // input AND NOT output
};

/// Patch-wise inference: extract, forward in eval mode, threshold at 0.5,
/// recompose, crop. Deterministic for fixed parameters.
inline InferResult infer(Generator<float>& gen, const BinaryMask& input, int patch_size,
                         double threshold = 0.5, int max_batch = 16) {
    auto [patches, layout] = extract_patches(input, patch_size);
    std::vector<BinaryMask> out_patches;
    out_patches.reserve(patches.size());
    for (std::size_t start = 0; start < patches.size();
         start += static_cast<std::size_t>(max_batch)) {
        const std::size_t count =
            std::min(static_cast<std::size_t>(max_batch), patches.size() - start);
        const std::vector<BinaryMask> chunk(patches.begin() + start,
                                            patches.begin() + start + count);
        nn::Tape<float> tape;
        const int prob = gen.forward(tape, tape.leaf(masks_to_tensor<float>(chunk)),
                                     nn::BnMode::eval, false, nullptr);
        for (const auto& pm : prob_maps_from_output(tape.val(prob)))
            out_patches.push_back(threshold_binarize(pm, threshold));
    }
    InferResult res;
    res.inpainted = recompose(out_patches, layout);
    res.filled = mask_and_not(res.inpainted, input);
    res.erased = mask_and_not(input, res.inpainted);
    return res;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Run cfg.steps training steps, writing checkpoints and a comma-separated
/// metrics log (step, losses, reward, wall time) under out_dir. gan_gl_m
/// alternates full synthetic steps (even global step) with generator-only masked
/// steps on real data (odd).
inline void run_training(TrainState& state, const TrainConfig& cfg, const Dataset& synth,
                         const Dataset* real, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const GapSampler sampler = make_gap_sampler(cfg);

    std::ofstream log(fs::path(out_dir) / "metrics.csv", std::ios::trunc);
    log << "step,ce,loc_d_adv,loc_g_adv,glo_d_adv,reward,wall_ms\n";
    log << std::setprecision(9);

    const auto t0 = std::chrono::steady_clock::now();
    auto checkpoint_path = [&](std::int64_t step) {
        return (fs::path(out_dir) / ("checkpoint_" + std::to_string(step) + ".tsin")).string();
    };
    save_checkpoint(state, cfg, checkpoint_path(state.step));

    while (state.step < cfg.steps) {
        StepLosses losses;
        if (cfg.variant == Variant::gan_gl_m && state.step % 2 == 1) {
            if (!real) throw DataError("run_training: gan_gl_m needs the real dataset");
            losses = masked_real_step(state, *real, cfg, sampler);
        } else {
            const Batch batch =
                assemble_batch(synth, cfg, sampler, state.rng_batch, state.rng_gap);
            losses = train_step(state, batch, cfg);
        }
        if (state.step % cfg.log_every == 0 || state.step == cfg.steps) {
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            log << state.step << ',' << losses.ce << ',' << losses.loc_d << ','
                << losses.loc_g << ',' << losses.glo_d << ',' << losses.reward << ',' << ms
                << '\n';
        }
        if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)
            save_checkpoint(state, cfg, checkpoint_path(state.step));
    }
    if (cfg.steps > 0)
        save_checkpoint(state, cfg, (fs::path(out_dir) / "checkpoint_final.tsin").string());
}

} // namespace thinpaint
