#include "fgadv/attack.hpp"

#include <cmath>

namespace fgadv {

ImageBuffer resize_bilinear(const ImageBuffer& image, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw GeometryError("resize target must be positive");
    ImageBuffer out(out_h, out_w);
    const double sy = double(image.height) / out_h;
    const double sx = double(image.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(int(std::floor(fy)), 0, image.height - 1);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(int(std::floor(fx)), 0, image.width - 1);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                const double top = image.at(y0, x0, c) * (1.0 - wx) + image.at(y0, x1, c) * wx;
                const double bot = image.at(y1, x0, c) * (1.0 - wx) + image.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

ReferenceImage prepare_reference(const ImageBuffer& source, int m, const Encoder& encoder) {
    if (m <= 0) throw GeometryError("reference grid side must be positive");
    const int side = m * encoder.descriptor().patch_size;
    ReferenceImage ref;
    ref.m = m;
    ref.image = resize_bilinear(source, side, side);
    ref.outputs = encoder.encode_image(ref.image);
    return ref;
}

namespace {

void check_resolution(const ImageBuffer& image, const Encoder& encoder) {
    const EncoderDescriptor& d = encoder.descriptor();
    if (image.height != d.input_resolution || image.width != d.input_resolution)
        throw DimensionError("image does not match the encoder input resolution");
}

PatchMask resolve_injection_mask(const EncoderOutput& clean, const AttackConfig& config,
                                 const Encoder& encoder, int m) {
    const int grid = encoder.descriptor().grid_side();
    if (config.region) {
        RegionSpec region = *config.region;
        if (region.m == 0) region.m = m;
        if (region.m != m)
            throw GeometryError("manual window side disagrees with the reference grid");
        return mask_from_region(region, grid);
    }
    std::vector<Vec> foreground;
    foreground.reserve(config.foreground_objects.size());
    for (const std::string& phrase : config.foreground_objects)
        foreground.push_back(encoder.encode_text({phrase}));
    return select_injection_region(clean.patches, grid, foreground, m).mask;
}

}  // namespace

AttackProblem AttackProblem::removal(const ImageBuffer& image, const TextQuery& target,
                                     const AttackConfig& config, const Encoder& encoder) {
    config.validate();
    check_resolution(image, encoder);
    AttackProblem p;
    p.addition_ = false;
    p.encoder_ = &encoder;
    p.config_ = config;
    p.clean_ = encoder.encode_image(image);
    p.target_text_ = encoder.encode_text(target);
    const SimilarityVector s = patch_similarity(p.clean_.patches, p.target_text_);
    p.mask_ = build_removal_mask(s, config.selection.mode, config.selection.parameter);
    const ImageBuffer masked =
        make_masked_image(image, p.mask_, encoder.descriptor().patch_size);
    p.masked_patches_ = encoder.encode_image(masked).patches;
    return p;
}

AttackProblem AttackProblem::addition(const ImageBuffer& image, const ReferenceImage& reference,
                                      const TextQuery& target, const AttackConfig& config,
                                      const Encoder& encoder) {
    config.validate();
    check_resolution(image, encoder);
    if (reference.outputs.patches.rows() !=
        static_cast<Eigen::Index>(reference.m) * reference.m)
        throw GeometryError("reference outputs do not form an m x m grid");
    AttackProblem p;
    p.addition_ = true;
    p.encoder_ = &encoder;
    p.config_ = config;
    p.clean_ = encoder.encode_image(image);
    p.target_text_ = encoder.encode_text(target);
    p.mask_ = resolve_injection_mask(p.clean_, config, encoder, reference.m);
    p.reference_patches_ = reference.outputs.patches;
    p.fused_cls_ = fuse_cls_target(p.clean_.cls, reference.outputs.cls, config.alpha);
    p.realloc_ = reallocate_attention(p.clean_.attention, reference.outputs.attention,
                                      p.mask_, config.beta);
    return p;
}

LossSample AttackProblem::evaluate(const ImageBuffer& x) const {
    const auto [w1, w2, w3] = config_.weights;
    const bool weighted = config_.attention_weighted_mean;
    LossBreakdown bd;
    GradientEval eval = encoder_->evaluate_with_gradient(
        x, [&](const EncoderOutput& out, OutputGrad& g) {
            if (addition_) {
                bd.l_cls = add_cls_addition(out.cls, fused_cls_, w1, g);
                bd.l_p = add_patch_addition(out, reference_patches_, realloc_, mask_,
                                            weighted, w2, g);
                bd.l_fix = add_fixation_addition(out, clean_, realloc_, mask_, weighted, w3, g);
            } else {
                bd.l_cls = add_cls_removal(out.cls, target_text_, w1, g);
                bd.l_p = add_patch_removal(out.patches, masked_patches_, mask_, w2, g);
                bd.l_fix = add_fixation_removal(out, clean_, mask_, weighted, w3, g);
            }
            bd.total = w1 * bd.l_cls + w2 * bd.l_p + w3 * bd.l_fix;
            return bd.total;
        });
    return {eval.loss, bd, std::move(eval.gradient)};
}

double kept_patch_cosine(const EncoderOutput& out_adv, const EncoderOutput& out_clean,
                         const PatchMask& mask) {
    const std::vector<int> kept = mask.one_indices();
    if (kept.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (int i : kept)
        acc += scaled_cosine(1.0, out_adv.patches.row(i).transpose(), 1.0,
                             out_clean.patches.row(i).transpose());
    return acc / double(kept.size());
}

namespace {

AttackResult finish_attack(AttackResult result, const AttackProblem& problem) {
    result.mask = problem.mask();
    result.target_cosine_initial = cosine(problem.clean().cls, problem.target_text());
    const EncoderOutput out_adv = problem.encoder().encode_image(result.adversarial);
    result.target_cosine_final = cosine(out_adv.cls, problem.target_text());
    result.kept_cosine_final = kept_patch_cosine(out_adv, problem.clean(), problem.mask());
    return result;
}

}  // namespace

AttackResult run_removal_attack(const ImageBuffer& image, const TextQuery& target,
                                const AttackConfig& config, const Encoder& encoder) {
    const AttackProblem problem = AttackProblem::removal(image, target, config, encoder);
    AttackResult result = optimize(
        [&](const ImageBuffer& x) { return problem.evaluate(x); }, image, config);
    return finish_attack(std::move(result), problem);
}

AttackResult run_addition_attack(const ImageBuffer& image, const ReferenceImage& reference,
                                 const TextQuery& target, const AttackConfig& config,
                                 const Encoder& encoder) {
    const AttackProblem problem =
        AttackProblem::addition(image, reference, target, config, encoder);
    AttackResult result = optimize(
        [&](const ImageBuffer& x) { return problem.evaluate(x); }, image, config);
    return finish_attack(std::move(result), problem);
}

}  // namespace fgadv
