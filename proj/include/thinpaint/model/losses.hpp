#pragma once

#include <vector>

#include "thinpaint/core/image.hpp"
#include "thinpaint/nn/layers.hpp"

namespace thinpaint {

constexpr double kProbClip = 1e-7; // probabilities clipped into [clip, 1-clip] for logs

/// Stack masks into an (n, 1, H, W) tensor of {0,1} values.
template <typename T>
nn::Tensor4<T> masks_to_tensor(const std::vector<BinaryMask>& masks) {
    if (masks.empty()) throw DataError("masks_to_tensor: empty batch");
    const int h = masks[0].height(), w = masks[0].width();
    nn::Tensor4<T> t(static_cast<int>(masks.size()), 1, h, w);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].height() != h || masks[i].width() != w)
            throw DataError("masks_to_tensor: ragged batch");
        T* p = t.plane(static_cast<int>(i), 0);
        for (std::size_t j = 0; j < masks[i].size(); ++j)
            p[j] = static_cast<T>(masks[i].pixels()[j]);
    }
    return t;
}

/// Split a (n, 2, H, W) probability tensor into per-sample foreground maps,
/// checking that the two channels sum to one.
template <typename T>
std::vector<ProbMap> prob_maps_from_output(const nn::Tensor4<T>& out) {
    if (out.c != 2) throw DataError("prob_maps_from_output: expected 2 channels");
    std::vector<ProbMap> maps;
    maps.reserve(out.n);
    for (int n = 0; n < out.n; ++n) {
        ProbMap m(out.h, out.w);
        const T* bg = out.plane(n, 0);
        const T* fg = out.plane(n, 1);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double sum = static_cast<double>(bg[i]) + static_cast<double>(fg[i]);
            if (std::abs(sum - 1.0) > 1e-4)
                throw NumericError("prob_maps_from_output: channels sum to " +
                                   std::to_string(sum));
            m.fg()[i] = static_cast<double>(fg[i]);
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

namespace detail {

template <typename T>
nn::Tensor4<T> complement(const nn::Tensor4<T>& t) {
    nn::Tensor4<T> out = t;
    for (auto& v : out.v) v = T(1) - v;
    return out;
}

/// target*log(p_fg) + (1-target)*log(p_bg), per pixel: (n, 1, H, W).
template <typename T>
int log_likelihood(nn::Tape<T>& tape, int prob2ch, const nn::Tensor4<T>& target_fg) {
    const T lo = static_cast<T>(kProbClip), hi = static_cast<T>(1.0 - kProbClip);
    const int lp_fg = nn::log_clamped(tape, nn::channel(tape, prob2ch, 1), lo, hi);
    const int lp_bg = nn::log_clamped(tape, nn::channel(tape, prob2ch, 0), lo, hi);
    return nn::add(tape, nn::mul_const(tape, lp_fg, target_fg),
                   nn::mul_const(tape, lp_bg, complement(target_fg)));
}

} // namespace detail

/// Supervised cross entropy between a (n, 2, H, W) softmax output and binary
/// targets, averaged over batch and pixels.
template <typename T>
int ce_loss(nn::Tape<T>& tape, int prob2ch, const nn::Tensor4<T>& target_fg) {
    const auto& vp = tape.val(prob2ch);
    if (vp.n != target_fg.n || vp.h != target_fg.h || vp.w != target_fg.w)
        throw DataError("ce_loss: prob/target shape mismatch");
    return nn::scale(tape, nn::mean(tape, detail::log_likelihood(tape, prob2ch, target_fg)),
                     T(-1));
}

template <typename T>
struct MaskedLoss {
    int loss = -1;
    bool mask_empty = false; // no gap pixels: loss is the constant 0
};

/// Cross entropy restricted to gap pixels, normalized by the gap pixel count.
template <typename T>
MaskedLoss<T> masked_ce_loss(nn::Tape<T>& tape, int prob2ch, const nn::Tensor4<T>& target_fg,
                             const nn::Tensor4<T>& gap_mask) {
    nn::check_same_shape(target_fg, gap_mask, "masked_ce_loss");
    T count = T(0);
    for (T v : gap_mask.v) count += v;
    MaskedLoss<T> result;
    if (count == T(0)) {
        result.loss = tape.leaf(nn::Tensor4<T>::scalar(T(0)));
        result.mask_empty = true;
        return result;
    }
    const int ll = detail::log_likelihood(tape, prob2ch, target_fg);
    const int masked = nn::mul_const(tape, ll, gap_mask);
    result.loss = nn::scale(tape, nn::sum(tape, masked), T(-1) / count);
    return result;
}

/// mean[(1 - D(real))^2] + mean[D(fake)^2]; scores are (n, 1, 1, 1).
template <typename T>
int lsgan_d_loss(nn::Tape<T>& tape, int d_real, int d_fake) {
    const int real_term = nn::mean(tape, nn::square(tape, nn::affine(tape, d_real, T(-1), T(1))));
    const int fake_term = nn::mean(tape, nn::square(tape, d_fake));
    return nn::add(tape, real_term, fake_term);
}

/// mean[(1 - D(fake))^2] with gradients flowing into the generator's output.
template <typename T>
int lsgan_g_loss(nn::Tape<T>& tape, int d_fake) {
    return nn::mean(tape, nn::square(tape, nn::affine(tape, d_fake, T(-1), T(1))));
}

/// -mean[log sim(real pair)] - mean[log(1 - sim(fake pair))].
template <typename T>
int global_d_loss(nn::Tape<T>& tape, int sim_real, int sim_fake) {
    const T lo = static_cast<T>(kProbClip), hi = static_cast<T>(1.0 - kProbClip);
    const int real_term = nn::mean(tape, nn::log_clamped(tape, sim_real, lo, hi));
    const int fake_term = nn::mean(
        tape, nn::log_clamped(tape, nn::affine(tape, sim_fake, T(-1), T(1)), lo, hi));
    return nn::scale(tape, nn::add(tape, real_term, fake_term), T(-1));
}

/// REINFORCE generator loss: -reward * mean[ log Bernoulli(sampled | prob) ].
/// The reward is a constant for the whole batch (one recomposed image), so the
/// gradient is exactly reward times the gradient of the negative log-likelihood.
template <typename T>
int pg_generator_loss(nn::Tape<T>& tape, int prob2ch, const nn::Tensor4<T>& sampled_fg,
                      double reward) {
    if (!(reward > 0.0 && reward < 1.0))
        throw NumericError("pg_generator_loss: reward " + std::to_string(reward) +
                           " outside (0,1)");
    const int ll = detail::log_likelihood(tape, prob2ch, sampled_fg);
    return nn::scale(tape, nn::mean(tape, ll), static_cast<T>(-reward));
}

} // namespace thinpaint
