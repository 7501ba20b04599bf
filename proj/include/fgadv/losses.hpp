#pragma once

#include "fgadv/region.hpp"

namespace fgadv {

// Weighted sum of the three attack terms at one iterate.
// total = w1*l_cls + w2*l_p + w3*l_fix for the active weights.
struct LossBreakdown {
    double l_cls = 0.0;
    double l_p = 0.0;
    double l_fix = 0.0;
    double total = 0.0;
};

// cosine(a*u, b*w) computed literally on the scaled vectors; a zero-norm side
// contributes 0 similarity by convention.
double scaled_cosine(double a, const Vec& u, double b, const Vec& w);

// d cosine(u, w) / du with w held fixed
Vec cosine_grad(const Vec& u, const Vec& w);

// ---- semantic-removal losses ----

// cosine between the adversarial global embedding and the target text;
// minimizing repels the image's overall semantics from the target.
double loss_cls_removal(const Vec& cls_adv, const Vec& target_text);

// negated mean cosine over attacked rows between adversarial patches and the
// patches of the zero-pixel masked image.
double loss_patch_removal(const Mat& patches_adv, const Mat& patches_masked,
                          const PatchMask& mask);

// negated mean cosine over preserved rows of attention-scaled patch
// embeddings, adversarial vs clean. attention_weighted switches the mean to
// clean-attention row weights instead of the plain average.
double loss_fixation_removal(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                             const PatchMask& mask, bool attention_weighted = false);

// ---- semantic-addition building blocks ----

// clean/reference global-embedding mix, affine in alpha with exact endpoints
Vec fuse_cls_target(const Vec& cls_clean, const Vec& cls_ref, double alpha);

struct ReallocatedAttention {
    Vec values;
};

// Piecewise reassignment: injected slots take beta-scaled reference weights
// (k-th zero bit maps to the k-th reference patch, row-major), preserved
// slots keep (1-beta)-scaled clean weights.
ReallocatedAttention reallocate_attention(const Vec& a_clean, const Vec& a_ref,
                                          const PatchMask& mask, double beta);

double loss_cls_addition(const Vec& cls_adv, const Vec& cls_clean, const Vec& cls_ref,
                         double alpha);

// negated mean cosine over injected rows between live attention-scaled
// adversarial patches and reallocated-attention-scaled reference patches.
double loss_patch_addition(const EncoderOutput& out_adv, const Mat& patches_ref,
                           const ReallocatedAttention& attn, const PatchMask& mask,
                           bool attention_weighted = false);

// negated mean cosine over preserved rows against reallocated-attention-scaled
// clean patches.
double loss_fixation_addition(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                              const ReallocatedAttention& attn, const PatchMask& mask,
                              bool attention_weighted = false);

// ---- gradient-accumulating forms used by the attack drivers ----
// Each returns the raw loss value and adds weight * dloss/doutputs into grad.
// Scalar attention factors cancel in per-row cosines, so nothing flows into
// d_attention; rows whose live attention is exactly zero contribute nothing.

double add_cls_removal(const Vec& cls_adv, const Vec& target_text, double weight,
                       OutputGrad& grad);
double add_patch_removal(const Mat& patches_adv, const Mat& patches_masked,
                         const PatchMask& mask, double weight, OutputGrad& grad);
double add_fixation_removal(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                            const PatchMask& mask, bool attention_weighted, double weight,
                            OutputGrad& grad);
double add_cls_addition(const Vec& cls_adv, const Vec& fused_target, double weight,
                        OutputGrad& grad);
double add_patch_addition(const EncoderOutput& out_adv, const Mat& patches_ref,
                          const ReallocatedAttention& attn, const PatchMask& mask,
                          bool attention_weighted, double weight, OutputGrad& grad);
double add_fixation_addition(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                             const ReallocatedAttention& attn, const PatchMask& mask,
                             bool attention_weighted, double weight, OutputGrad& grad);

}  // namespace fgadv
