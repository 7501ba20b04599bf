#include "fgadv/losses.hpp"

namespace fgadv {

namespace {

// Shared core of the attention-scaled masked means. `selected` lists the
// rows taken from out_adv; `fixed_scale(i_sel)` and `fixed_row(i_sel)` give
// the reference side for the k-th selected row. Returns the negated
// (weighted) mean cosine and accumulates gradients when grad != nullptr.
template <typename ScaleFn, typename RowFn>
double scaled_masked_mean(const EncoderOutput& out_adv, const std::vector<int>& selected,
                          ScaleFn fixed_scale, RowFn fixed_row, const Vec* row_weights,
                          double weight, OutputGrad* grad) {
    double wsum = 0.0;
    if (row_weights) {
        wsum = row_weights->sum();
        if (wsum == 0.0) throw ZeroVectorError("attention row weights sum to zero");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < selected.size(); ++k) {
        const int i = selected[k];
        const double a = out_adv.attention(i);
        const Vec u = a * out_adv.patches.row(i).transpose();
        const Vec w = fixed_scale(k) * fixed_row(k);
        const double nu = u.norm(), nw = w.norm();
        const double coeff =
            row_weights ? (*row_weights)(k) / wsum : 1.0 / double(selected.size());
        if (nu == 0.0 || nw == 0.0) continue;  // zero attention contributes nothing
        const double c = u.dot(w) / (nu * nw);
        acc += coeff * c;
        if (grad) {
            // d cos(a*p, w)/dp = a * d cos(u, w)/du; d/da is identically zero
            const Vec gu = w / (nu * nw) - (c / (nu * nu)) * u;
            grad->d_patches.row(i) += (-weight * coeff * a) * gu.transpose();
        }
    }
    return -acc;
}

}  // namespace

double scaled_cosine(double a, const Vec& u, double b, const Vec& w) {
    const Vec su = a * u;
    const Vec sw = b * w;
    const double nu = su.norm(), nw = sw.norm();
    if (nu == 0.0 || nw == 0.0) return 0.0;
    return su.dot(sw) / (nu * nw);
}

Vec cosine_grad(const Vec& u, const Vec& w) {
    const double nu = u.norm(), nw = w.norm();
    if (nu == 0.0 || nw == 0.0) throw ZeroVectorError("cosine gradient of a zero vector");
    const double c = u.dot(w) / (nu * nw);
    return w / (nu * nw) - (c / (nu * nu)) * u;
}

double loss_cls_removal(const Vec& cls_adv, const Vec& target_text) {
    return cosine(cls_adv, target_text);
}

double loss_patch_removal(const Mat& patches_adv, const Mat& patches_masked,
                          const PatchMask& mask) {
    if (patches_adv.rows() != patches_masked.rows() ||
        patches_adv.cols() != patches_masked.cols())
        throw DimensionError("patch matrices differ in shape");
    if (mask.size() != patches_adv.rows())
        throw DimensionError("mask length does not match patch count");
    const std::vector<int> sel = mask.zero_indices();
    if (sel.empty()) throw EmptySelectionError("mask marks no attacked patches");
    double acc = 0.0;
    for (int i : sel)
        acc += scaled_cosine(1.0, patches_adv.row(i).transpose(), 1.0,
                             patches_masked.row(i).transpose());
    return -acc / double(sel.size());
}

double loss_fixation_removal(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                             const PatchMask& mask, bool attention_weighted) {
    OutputGrad* no_grad = nullptr;
    const std::vector<int> kept = mask.one_indices();
    if (kept.empty()) throw EmptySelectionError("mask preserves no patches");
    Vec weights;
    if (attention_weighted) {
        weights.resize(kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) weights(k) = out_clean.attention(kept[k]);
    }
    return scaled_masked_mean(
        out_adv, kept, [&](std::size_t k) { return out_clean.attention(kept[k]); },
        [&](std::size_t k) { return out_clean.patches.row(kept[k]).transpose(); },
        attention_weighted ? &weights : nullptr, 0.0, no_grad);
}

Vec fuse_cls_target(const Vec& cls_clean, const Vec& cls_ref, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (cls_clean.size() != cls_ref.size()) throw DimensionError("cls dims differ");
    if (alpha == 0.0) return cls_clean;
    if (alpha == 1.0) return cls_ref;
    return cls_clean + alpha * (cls_ref - cls_clean);
}

ReallocatedAttention reallocate_attention(const Vec& a_clean, const Vec& a_ref,
                                          const PatchMask& mask, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
    if (mask.size() != a_clean.size())
        throw DimensionError("mask length does not match attention length");
    if (mask.zero_count() != a_ref.size())
        throw CountMismatchError("mask zero count does not match reference patch count");
    ReallocatedAttention out;
    out.values.resize(a_clean.size());
    Eigen::Index k = 0;
    for (int i = 0; i < mask.size(); ++i)
        out.values(i) = mask.bits[i] == 0 ? beta * a_ref(k++) : (1.0 - beta) * a_clean(i);
    return out;
}

double loss_cls_addition(const Vec& cls_adv, const Vec& cls_clean, const Vec& cls_ref,
                         double alpha) {
    return -cosine(cls_adv, fuse_cls_target(cls_clean, cls_ref, alpha));
}

double loss_patch_addition(const EncoderOutput& out_adv, const Mat& patches_ref,
                           const ReallocatedAttention& attn, const PatchMask& mask,
                           bool attention_weighted) {
    OutputGrad* no_grad = nullptr;
    const std::vector<int> sel = mask.zero_indices();
    if (sel.empty()) throw EmptySelectionError("mask marks no injected patches");
    if (patches_ref.rows() != static_cast<Eigen::Index>(sel.size()))
        throw CountMismatchError("reference patch count does not match mask zeros");
    Vec weights;
    if (attention_weighted) {
        weights.resize(sel.size());
        for (std::size_t k = 0; k < sel.size(); ++k) weights(k) = attn.values(sel[k]);
    }
    return scaled_masked_mean(
        out_adv, sel, [&](std::size_t k) { return attn.values(sel[k]); },
        [&](std::size_t k) { return patches_ref.row(k).transpose(); },
        attention_weighted ? &weights : nullptr, 0.0, no_grad);
}

double loss_fixation_addition(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                              const ReallocatedAttention& attn, const PatchMask& mask,
                              bool attention_weighted) {
    OutputGrad* no_grad = nullptr;
    const std::vector<int> kept = mask.one_indices();
    if (kept.empty()) throw EmptySelectionError("mask preserves no patches");
    Vec weights;
    if (attention_weighted) {
        weights.resize(kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) weights(k) = attn.values(kept[k]);
    }
    return scaled_masked_mean(
        out_adv, kept, [&](std::size_t k) { return attn.values(kept[k]); },
        [&](std::size_t k) { return out_clean.patches.row(kept[k]).transpose(); },
        attention_weighted ? &weights : nullptr, 0.0, no_grad);
}

double add_cls_removal(const Vec& cls_adv, const Vec& target_text, double weight,
                       OutputGrad& grad) {
    const double value = cosine(cls_adv, target_text);
    grad.d_cls += weight * cosine_grad(cls_adv, target_text);
    return value;
}

double add_patch_removal(const Mat& patches_adv, const Mat& patches_masked,
                         const PatchMask& mask, double weight, OutputGrad& grad) {
    const std::vector<int> sel = mask.zero_indices();
    if (sel.empty()) throw EmptySelectionError("mask marks no attacked patches");
    double acc = 0.0;
    const double coeff = 1.0 / double(sel.size());
    for (int i : sel) {
        const Vec u = patches_adv.row(i).transpose();
        const Vec w = patches_masked.row(i).transpose();
        if (u.norm() == 0.0 || w.norm() == 0.0) continue;
        acc += coeff * cosine(u, w);
        grad.d_patches.row(i) += (-weight * coeff) * cosine_grad(u, w).transpose();
    }
    return -acc;
}

double add_fixation_removal(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                            const PatchMask& mask, bool attention_weighted, double weight,
                            OutputGrad& grad) {
    const std::vector<int> kept = mask.one_indices();
    if (kept.empty()) throw EmptySelectionError("mask preserves no patches");
    Vec weights;
    if (attention_weighted) {
        weights.resize(kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) weights(k) = out_clean.attention(kept[k]);
    }
    return scaled_masked_mean(
        out_adv, kept, [&](std::size_t k) { return out_clean.attention(kept[k]); },
        [&](std::size_t k) { return out_clean.patches.row(kept[k]).transpose(); },
        attention_weighted ? &weights : nullptr, weight, &grad);
}

double add_cls_addition(const Vec& cls_adv, const Vec& fused_target, double weight,
                        OutputGrad& grad) {
    const double value = -cosine(cls_adv, fused_target);
    grad.d_cls += (-weight) * cosine_grad(cls_adv, fused_target);
    return value;
}

double add_patch_addition(const EncoderOutput& out_adv, const Mat& patches_ref,
                          const ReallocatedAttention& attn, const PatchMask& mask,
                          bool attention_weighted, double weight, OutputGrad& grad) {
    const std::vector<int> sel = mask.zero_indices();
    if (sel.empty()) throw EmptySelectionError("mask marks no injected patches");
    if (patches_ref.rows() != static_cast<Eigen::Index>(sel.size()))
        throw CountMismatchError("reference patch count does not match mask zeros");
    Vec weights;
    if (attention_weighted) {
        weights.resize(sel.size());
        for (std::size_t k = 0; k < sel.size(); ++k) weights(k) = attn.values(sel[k]);
    }
    return scaled_masked_mean(
        out_adv, sel, [&](std::size_t k) { return attn.values(sel[k]); },
        [&](std::size_t k) { return patches_ref.row(k).transpose(); },
        attention_weighted ? &weights : nullptr, weight, &grad);
}

double add_fixation_addition(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                             const ReallocatedAttention& attn, const PatchMask& mask,
                             bool attention_weighted, double weight, OutputGrad& grad) {
    const std::vector<int> kept = mask.one_indices();
    if (kept.empty()) throw EmptySelectionError("mask preserves no patches");
    Vec weights;
    if (attention_weighted) {
        weights.resize(kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) weights(k) = attn.values(kept[k]);
    }
    return scaled_masked_mean(
        out_adv, kept, [&](std::size_t k) { return attn.values(kept[k]); },
        [&](std::size_t k) { return out_clean.patches.row(kept[k]).transpose(); },
        attention_weighted ? &weights : nullptr, weight, &grad);
}

}  // namespace fgadv
