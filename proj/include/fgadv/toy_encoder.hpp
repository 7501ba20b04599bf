#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgadv/encoder.hpp"

namespace fgadv {

// Deterministic differentiable vision-text encoder for desk-scale runs.
//
// Vision side: 8x8 patch embedding, 2 pre-LN attention layers (4 heads,
// tanh MLP), final LN and a joint-space projection shared with the text
// side. Accepts any square image whose side is a multiple of the patch
// size; the canonical attack resolution is 32x32 (16 patches, dim 32).
//
// Text side: bag-of-words over a fixed 64-word vocabulary. Each word's
// embedding is the normalized global embedding of a deterministic texture
// image rendered from the word's seed, so image and text embeddings live
// in a genuinely aligned joint space. Out-of-vocabulary words hash into a
// small set of bucket embeddings built the same way.
//
// All weights derive from the construction seed; outputs are bit-stable
// across calls and processes.
class ToyEncoder : public Encoder {
public:
    explicit ToyEncoder(std::uint64_t seed);

    const EncoderDescriptor& descriptor() const override { return descriptor_; }
    EncoderOutput encode_image(const ImageBuffer& image) const override;
    Vec encode_text(const TextQuery& query) const override;
    GradientEval evaluate_with_gradient(const ImageBuffer& image,
                                        const LossEvaluator& loss) const override;

    // Smooth per-word texture, identical field sampled at any resolution.
    // Useful for planting a word's visual signature in test images and for
    // building reference images.
    ImageBuffer pattern_image(const std::string& word, int side) const;

    static const std::vector<std::string>& vocabulary();

    static constexpr int kPatchSize = 8;
    static constexpr int kResolution = 32;
    static constexpr int kDim = 32;
    static constexpr int kLayers = 2;
    static constexpr int kHeads = 4;
    static constexpr int kMlpHidden = 64;
    static constexpr int kOovBuckets = 8;

private:
    struct LayerWeights {
        Mat wq, wk, wv, wo;  // d x d, heads packed along columns
        Vec bo;
        Vec ln1_g, ln1_b, ln2_g, ln2_b;
        Mat w1, w2;  // d x F, F x d
        Vec b1, b2;
    };

    struct LnCache {
        Mat xhat;     // T x d
        Vec inv_std;  // T
    };

    struct LayerCache {
        Mat x_in, u1, q, k, v, heads, x_mid, u2, a1, th;
        LnCache ln1, ln2;
        std::vector<Mat> attn;  // per head, T x T softmax rows
    };

    struct ForwardCache {
        int side = 0, grid = 0, n = 0, tokens = 0;
        Mat patch_rows;  // n x (P*P*3)
        std::vector<LayerCache> layers;
        LnCache lnf;
        Mat y;  // T x d after final LN
        EncoderOutput out;
    };

    ForwardCache forward(const ImageBuffer& image) const;
    ImageBuffer backward(const ImageBuffer& image, const ForwardCache& cache,
                         const OutputGrad& grad) const;
    Mat position_encoding(int grid) const;
    Vec word_embedding(const std::string& word) const;
    void check_input(const ImageBuffer& image) const;

    static Mat layer_norm(const Mat& x, const Vec& g, const Vec& b, LnCache& cache);
    static Mat layer_norm_backward(const Mat& dy, const Vec& g, const LnCache& cache);

    std::uint64_t seed_;
    EncoderDescriptor descriptor_;
    Mat w_embed_;  // (P*P*3) x d
    Vec b_embed_;
    Vec cls_token_;
    Vec cls_pos_;
    std::vector<LayerWeights> layers_;
    Vec lnf_g_, lnf_b_;
    Mat w_proj_;  // d x d joint-space projection
    std::vector<Vec> word_table_;    // one per vocabulary word, normalized
    std::vector<Vec> bucket_table_;  // OOV buckets, normalized
};

EncoderPtr make_toy_encoder(std::uint64_t seed);

// Lowercased whitespace/punctuation tokenization shared by the text encoder
// and the offline object judge.
std::vector<std::string> tokenize_words(const std::string& text);

}  // namespace fgadv
