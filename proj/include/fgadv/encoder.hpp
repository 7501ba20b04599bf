#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "fgadv/image.hpp"

namespace fgadv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One object name, e.g. "traffic light". Must be non-empty after trimming.
struct TextQuery {
    std::string phrase;
};

// Per-image encoder outputs: global embedding, per-patch embeddings (rows),
// and the per-patch attention summary (mean over layers and heads of the
// weight the global query assigns to each patch key; nonnegative).
struct EncoderOutput {
    Vec cls;        // d
    Mat patches;    // n x d
    Vec attention;  // n
};

bool bit_equal(const EncoderOutput& a, const EncoderOutput& b);

// Gradients of a scalar loss with respect to each output field.
struct OutputGrad {
    Vec d_cls;
    Mat d_patches;
    Vec d_attention;

    static OutputGrad zeros(Eigen::Index n, Eigen::Index d) {
        return {Vec::Zero(d), Mat::Zero(n, d), Vec::Zero(n)};
    }
};

// Accumulates dloss/doutputs into `grad` and returns the loss value.
using LossEvaluator = std::function<double(const EncoderOutput&, OutputGrad&)>;

struct EncoderDescriptor {
    std::string identifier;
    int patch_size = 0;
    int input_resolution = 0;
    int embedding_dim = 0;
    // true when patch embeddings are projected into the image-text joint space
    bool joint_space = false;

    int grid_side() const { return input_resolution / patch_size; }
    int patch_count() const { return grid_side() * grid_side(); }
};

struct GradientEval {
    double loss = 0.0;
    EncoderOutput outputs;
    ImageBuffer gradient;  // dloss/dpixel, same shape as the input image
};

class Encoder {
public:
    virtual ~Encoder() = default;

    virtual const EncoderDescriptor& descriptor() const = 0;

    virtual EncoderOutput encode_image(const ImageBuffer& image) const = 0;

    virtual Vec encode_text(const TextQuery& query) const = 0;

    // Forward pass plus reverse-mode dloss/dpixel in one call. Adapters that
    // cannot differentiate must throw NonDifferentiableEncoderError.
    virtual GradientEval evaluate_with_gradient(const ImageBuffer& image,
                                                const LossEvaluator& loss) const = 0;

    ImageBuffer input_gradient(const ImageBuffer& image, const LossEvaluator& loss) const {
        return evaluate_with_gradient(image, loss).gradient;
    }
};

using EncoderPtr = std::shared_ptr<const Encoder>;

// Registry keyed by identifier. An identifier string may carry options after
// a colon ("toy:7" builds the bundled toy encoder with seed 7); plugin
// adapters typically take a weight-file path there.
class EncoderRegistry {
public:
    using Factory = std::function<EncoderPtr(const std::string& options)>;

    // Process-wide registry with the bundled "toy" encoder preinstalled.
    static EncoderRegistry& global();

    void register_factory(const std::string& id, Factory factory);
    EncoderPtr make(const std::string& spec) const;
    bool has(const std::string& id) const;

private:
    std::map<std::string, Factory> factories_;
};

}  // namespace fgadv
