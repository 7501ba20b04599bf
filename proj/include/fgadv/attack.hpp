#pragma once

#include <memory>

#include "fgadv/optimizer.hpp"

namespace fgadv {

// A reference image prepared for semantic injection: resized to an m x m
// patch grid and encoded once. The image must depict only the object being
// injected; that is the caller's responsibility.
struct ReferenceImage {
    ImageBuffer image;
    int m = 0;
    EncoderOutput outputs;
};

ReferenceImage prepare_reference(const ImageBuffer& source, int m, const Encoder& encoder);

ImageBuffer resize_bilinear(const ImageBuffer& image, int out_h, int out_w);

// One attack objective bound to one encoder: owns the mask, the frozen clean
// outputs and targets, and evaluates the weighted loss with its pixel
// gradient at any iterate. Transfer ensembles hold one problem per member.
class AttackProblem {
public:
    static AttackProblem removal(const ImageBuffer& image, const TextQuery& target,
                                 const AttackConfig& config, const Encoder& encoder);
    static AttackProblem addition(const ImageBuffer& image, const ReferenceImage& reference,
                                  const TextQuery& target, const AttackConfig& config,
                                  const Encoder& encoder);

    LossSample evaluate(const ImageBuffer& x) const;

    const PatchMask& mask() const { return mask_; }
    const EncoderOutput& clean() const { return clean_; }
    const Vec& target_text() const { return target_text_; }
    const Encoder& encoder() const { return *encoder_; }

private:
    AttackProblem() = default;

    bool addition_ = false;
    const Encoder* encoder_ = nullptr;
    AttackConfig config_;
    PatchMask mask_;
    EncoderOutput clean_;
    Vec target_text_;
    // removal: patch embeddings of the zero-pixel masked image
    Mat masked_patches_;
    // addition: frozen reference patches, fused global target, reallocated weights
    Mat reference_patches_;
    Vec fused_cls_;
    ReallocatedAttention realloc_;
};

// mean cosine between adversarial and clean patch rows over preserved indices
double kept_patch_cosine(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                         const PatchMask& mask);

AttackResult run_removal_attack(const ImageBuffer& image, const TextQuery& target,
                                const AttackConfig& config, const Encoder& encoder);

AttackResult run_addition_attack(const ImageBuffer& image, const ReferenceImage& reference,
                                 const TextQuery& target, const AttackConfig& config,
                                 const Encoder& encoder);

}  // namespace fgadv
