#include "fgadv/toy_encoder.hpp"

#include <array>
#include <cctype>
#include <cmath>

#include "fgadv/rng.hpp"

namespace fgadv {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kPi = 3.14159265358979323846264338327950288;

Mat seeded_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    return m;
}

Vec seeded_vector(Rng& rng, Eigen::Index n, double scale) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

const std::array<const char*, 64> kVocab = {
    "car",      "bus",    "truck",  "bicycle", "motorcycle", "person", "dog",
    "cat",      "tree",   "light",  "sign",    "road",       "bridge", "train",
    "boat",     "plane",  "wheel",  "table",   "chair",      "cup",    "bottle",
    "plate",    "fork",   "knife",  "spoon",   "bowl",       "apple",  "banana",
    "orange",   "book",   "phone",  "laptop",  "keyboard",   "ball",   "box",
    "door",     "window", "wall",   "floor",   "sky",        "cloud",  "sun",
    "moon",     "star",   "flower", "grass",   "bird",       "fish",   "horse",
    "cow",      "sheep",  "house",  "building","hat",        "shoe",   "shirt",
    "clock",    "lamp",   "bed",    "sofa",    "mirror",     "camera", "robot",
    "toy"};

int vocab_index(const std::string& word) {
    for (std::size_t i = 0; i < kVocab.size(); ++i)
        if (word == kVocab[i]) return static_cast<int>(i);
    return -1;
}

}  // namespace

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

const std::vector<std::string>& ToyEncoder::vocabulary() {
    static const std::vector<std::string> v(kVocab.begin(), kVocab.end());
    return v;
}

ToyEncoder::ToyEncoder(std::uint64_t seed) : seed_(seed) {
    const int pd = kPatchSize * kPatchSize * 3;
    Rng rng(mix_seed(seed, 1));

    w_embed_ = seeded_matrix(rng, pd, kDim, 1.0 / std::sqrt(double(pd)));
    b_embed_ = seeded_vector(rng, kDim, 0.01);
    cls_token_ = seeded_vector(rng, kDim, 0.5);
    cls_pos_ = seeded_vector(rng, kDim, 0.3);

    const double sd = 1.0 / std::sqrt(double(kDim));
    for (int l = 0; l < kLayers; ++l) {
        LayerWeights w;
        w.wq = seeded_matrix(rng, kDim, kDim, sd);
        w.wk = seeded_matrix(rng, kDim, kDim, sd);
        w.wv = seeded_matrix(rng, kDim, kDim, sd);
        w.wo = seeded_matrix(rng, kDim, kDim, 0.5 * sd);
        w.bo = seeded_vector(rng, kDim, 0.01);
        w.ln1_g = Vec::Ones(kDim);
        w.ln1_b = Vec::Zero(kDim);
        w.ln2_g = Vec::Ones(kDim);
        w.ln2_b = Vec::Zero(kDim);
        w.w1 = seeded_matrix(rng, kDim, kMlpHidden, sd);
        w.b1 = seeded_vector(rng, kMlpHidden, 0.01);
        w.w2 = seeded_matrix(rng, kMlpHidden, kDim, 0.5 / std::sqrt(double(kMlpHidden)));
        w.b2 = seeded_vector(rng, kDim, 0.01);
        layers_.push_back(std::move(w));
    }
    lnf_g_ = Vec::Ones(kDim);
    lnf_b_ = Vec::Zero(kDim);
    w_proj_ = seeded_matrix(rng, kDim, kDim, sd);

    descriptor_.identifier = "toy:" + std::to_string(seed);
    descriptor_.patch_size = kPatchSize;
    descriptor_.input_resolution = kResolution;
    descriptor_.embedding_dim = kDim;
    descriptor_.joint_space = true;

    // Text table: each word embeds as the global embedding of its texture
    // image, which ties the text space to the vision space. Raw globals share
    // a strong common direction (all textures have similar statistics), so
    // the table is centered on the vocabulary mean before normalizing; the
    // centered directions carry the word-discriminative signal.
    std::vector<Vec> raw;
    raw.reserve(kVocab.size());
    Vec mean = Vec::Zero(kDim);
    for (const char* word : kVocab) {
        raw.push_back(word_embedding(word));
        mean += raw.back();
    }
    mean /= double(kVocab.size());
    word_table_.reserve(kVocab.size());
    for (const Vec& cls : raw) {
        Vec centered = cls - mean;
        word_table_.push_back(centered / centered.norm());
    }
    bucket_table_.reserve(kOovBuckets);
    for (int b = 0; b < kOovBuckets; ++b) {
        Vec centered =
            word_embedding("#bucket" + std::to_string(b)) - mean;
        bucket_table_.push_back(centered / centered.norm());
    }
}

Vec ToyEncoder::word_embedding(const std::string& word) const {
    ImageBuffer img = pattern_image(word, kResolution);
    return forward(img).out.cls;
}

ImageBuffer ToyEncoder::pattern_image(const std::string& word, int side) const {
    std::uint64_t word_seed;
    const int idx = vocab_index(word);
    if (idx >= 0)
        word_seed = mix_seed(seed_, 100 + idx);
    else
        word_seed = mix_seed(seed_, 5000 + fnv1a(word) % kOovBuckets);

    // Low-frequency cosine field over normalized coordinates; the same field
    // sampled at 16x16 and 32x32 stays visually and spectrally close.
    Rng rng(word_seed);
    std::array<std::array<std::array<double, 3>, 3>, 3> coef{};
    for (int c = 0; c < 3; ++c)
        for (int u = 0; u < 3; ++u)
            for (int v = 0; v < 3; ++v) {
                const double decay = (u + v >= 3) ? 0.0 : 1.0 / (1.0 + 2.0 * (u + v));
                coef[c][u][v] = rng.normal() * decay;
            }

    ImageBuffer img(side, side);
    for (int y = 0; y < side; ++y) {
        const double yn = (y + 0.5) / side;
        for (int x = 0; x < side; ++x) {
            const double xn = (x + 0.5) / side;
            for (int c = 0; c < 3; ++c) {
                double f = 0.0;
                for (int u = 0; u < 3; ++u)
                    for (int v = 0; v < 3; ++v)
                        f += coef[c][u][v] * std::cos(kPi * u * yn) * std::cos(kPi * v * xn);
                img.at(y, x, c) = 0.5 + 0.45 * std::tanh(0.8 * f);
            }
        }
    }
    return img;
}

void ToyEncoder::check_input(const ImageBuffer& image) const {
    if (image.height != image.width)
        throw DimensionError("toy encoder expects a square image");
    if (image.height <= 0 || image.height % kPatchSize != 0)
        throw DimensionError("image side must be a positive multiple of the patch size");
    if (!image.in_unit_range())
        throw Error("image values outside [0,1]");
}

Mat ToyEncoder::position_encoding(int grid) const {
    const int n = grid * grid;
    Mat pos(n, kDim);
    // Half the dims carry the row coordinate, half the column, alternating
    // sin/cos over increasing frequencies of the normalized position.
    for (int r = 0; r < grid; ++r) {
        const double yn = (r + 0.5) / grid;
        for (int c = 0; c < grid; ++c) {
            const double xn = (c + 0.5) / grid;
            const int i = r * grid + c;
            for (int j = 0; j < kDim / 2; j += 2) {
                const double freq = 2.0 * kPi * (j / 2 + 1);
                pos(i, j) = 0.1 * std::sin(freq * yn);
                pos(i, j + 1) = 0.1 * std::cos(freq * yn);
                pos(i, kDim / 2 + j) = 0.1 * std::sin(freq * xn);
                pos(i, kDim / 2 + j + 1) = 0.1 * std::cos(freq * xn);
            }
        }
    }
    return pos;
}

Mat ToyEncoder::layer_norm(const Mat& x, const Vec& g, const Vec& b, LnCache& cache) {
    const Eigen::Index t = x.rows(), d = x.cols();
    cache.xhat.resize(t, d);
    cache.inv_std.resize(t);
    Mat y(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
        const double mu = x.row(i).mean();
        const double var = (x.row(i).array() - mu).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std(i) = inv;
        cache.xhat.row(i) = (x.row(i).array() - mu) * inv;
        y.row(i) = cache.xhat.row(i).array() * g.transpose().array() + b.transpose().array();
    }
    return y;
}

Mat ToyEncoder::layer_norm_backward(const Mat& dy, const Vec& g, const LnCache& cache) {
    const Eigen::Index t = dy.rows(), d = dy.cols();
    Mat dx(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
        Eigen::RowVectorXd dxhat = dy.row(i).array() * g.transpose().array();
        const double m1 = dxhat.mean();
        const double m2 = (dxhat.array() * cache.xhat.row(i).array()).mean();
        dx.row(i) = cache.inv_std(i) *
                    (dxhat.array() - m1 - cache.xhat.row(i).array() * m2);
    }
    return dx;
}

ToyEncoder::ForwardCache ToyEncoder::forward(const ImageBuffer& image) const {
    ForwardCache cache;
    cache.side = image.height;
    cache.grid = cache.side / kPatchSize;
    cache.n = cache.grid * cache.grid;
    cache.tokens = cache.n + 1;
    const int pd = kPatchSize * kPatchSize * 3;

    // patch rows: n x (P*P*3), row-major patches, HWC within a patch
    cache.patch_rows.resize(cache.n, pd);
    for (int pr = 0; pr < cache.grid; ++pr)
        for (int pc = 0; pc < cache.grid; ++pc) {
            const int i = pr * cache.grid + pc;
            int j = 0;
            for (int py = 0; py < kPatchSize; ++py)
                for (int px = 0; px < kPatchSize; ++px)
                    for (int ch = 0; ch < 3; ++ch)
                        cache.patch_rows(i, j++) =
                            image.at(pr * kPatchSize + py, pc * kPatchSize + px, ch);
        }

    Mat x(cache.tokens, kDim);
    x.row(0) = (cls_token_ + cls_pos_).transpose();
    x.bottomRows(cache.n) = cache.patch_rows * w_embed_;
    x.bottomRows(cache.n).rowwise() += b_embed_.transpose();
    x.bottomRows(cache.n) += position_encoding(cache.grid);

    const int hd = kDim / kHeads;
    const double scale = 1.0 / std::sqrt(double(hd));

    cache.layers.resize(kLayers);
    for (int l = 0; l < kLayers; ++l) {
        const LayerWeights& w = layers_[l];
        LayerCache& lc = cache.layers[l];
        lc.x_in = x;
        lc.u1 = layer_norm(x, w.ln1_g, w.ln1_b, lc.ln1);
        lc.q = lc.u1 * w.wq;
        lc.k = lc.u1 * w.wk;
        lc.v = lc.u1 * w.wv;
        lc.heads.resize(cache.tokens, kDim);
        lc.attn.resize(kHeads);
        for (int h = 0; h < kHeads; ++h) {
            const auto qh = lc.q.middleCols(h * hd, hd);
            const auto kh = lc.k.middleCols(h * hd, hd);
            const auto vh = lc.v.middleCols(h * hd, hd);
            Mat s = scale * (qh * kh.transpose());
            Mat& a = lc.attn[h];
            a.resize(cache.tokens, cache.tokens);
            for (Eigen::Index r = 0; r < s.rows(); ++r) {
                const double mx = s.row(r).maxCoeff();
                a.row(r) = (s.row(r).array() - mx).exp();
                a.row(r) /= a.row(r).sum();
            }
            lc.heads.middleCols(h * hd, hd) = a * vh;
        }
        lc.x_mid = lc.x_in + lc.heads * w.wo;
        lc.x_mid.rowwise() += w.bo.transpose();
        lc.u2 = layer_norm(lc.x_mid, w.ln2_g, w.ln2_b, lc.ln2);
        lc.a1 = lc.u2 * w.w1;
        lc.a1.rowwise() += w.b1.transpose();
        lc.th = lc.a1.array().tanh();
        x = lc.x_mid + lc.th * w.w2;
        x.rowwise() += w.b2.transpose();
    }

    cache.y = layer_norm(x, lnf_g_, lnf_b_, cache.lnf);
    Mat proj = cache.y * w_proj_;
    // global embedding mixes the attention-aggregated stream with the mean
    // patch token, so image content reaches the joint space directly
    Eigen::RowVectorXd patch_mean = proj.bottomRows(cache.n).colwise().mean();
    cache.out.cls = (0.5 * proj.row(0) + 0.5 * patch_mean).transpose();
    cache.out.patches = proj.bottomRows(cache.n);

    // attention summary: mean over layers and heads of the weight the global
    // query assigns to each patch key (the query's self-weight is excluded)
    cache.out.attention = Vec::Zero(cache.n);
    for (int l = 0; l < kLayers; ++l)
        for (int h = 0; h < kHeads; ++h)
            cache.out.attention +=
                cache.layers[l].attn[h].row(0).segment(1, cache.n).transpose();
    cache.out.attention /= double(kLayers * kHeads);
    return cache;
}

ImageBuffer ToyEncoder::backward(const ImageBuffer& image, const ForwardCache& cache,
                                 const OutputGrad& grad) const {
    const int hd = kDim / kHeads;
    const double scale = 1.0 / std::sqrt(double(hd));
    const double attn_share = 1.0 / double(kLayers * kHeads);

    Mat dproj = Mat::Zero(cache.tokens, kDim);
    dproj.row(0) = 0.5 * grad.d_cls.transpose();
    dproj.bottomRows(cache.n) = grad.d_patches;
    dproj.bottomRows(cache.n).rowwise() +=
        (0.5 / double(cache.n)) * grad.d_cls.transpose();

    Mat dy = dproj * w_proj_.transpose();
    Mat dx = layer_norm_backward(dy, lnf_g_, cache.lnf);

    const bool has_dattn = grad.d_attention.size() > 0 && !grad.d_attention.isZero(0.0);

    for (int l = kLayers - 1; l >= 0; --l) {
        const LayerWeights& w = layers_[l];
        const LayerCache& lc = cache.layers[l];

        // mlp block: x_out = x_mid + tanh(u2 w1 + b1) w2 + b2
        Mat dth = dx * w.w2.transpose();
        Mat da1 = dth.array() * (1.0 - lc.th.array().square());
        Mat du2 = da1 * w.w1.transpose();
        Mat dx_mid = dx + layer_norm_backward(du2, w.ln2_g, lc.ln2);

        // attention block: x_mid = x_in + heads wo + bo
        Mat dheads = dx_mid * w.wo.transpose();
        Mat dq = Mat::Zero(cache.tokens, kDim);
        Mat dk = Mat::Zero(cache.tokens, kDim);
        Mat dv = Mat::Zero(cache.tokens, kDim);
        for (int h = 0; h < kHeads; ++h) {
            const Mat& a = lc.attn[h];
            const auto qh = lc.q.middleCols(h * hd, hd);
            const auto kh = lc.k.middleCols(h * hd, hd);
            const auto vh = lc.v.middleCols(h * hd, hd);
            const auto dh = dheads.middleCols(h * hd, hd);

            Mat da = dh * vh.transpose();
            // the attention summary taps the softmax weights directly
            if (has_dattn)
                da.row(0).segment(1, cache.n) +=
                    attn_share * grad.d_attention.transpose();
            dv.middleCols(h * hd, hd) = a.transpose() * dh;

            Mat ds(cache.tokens, cache.tokens);
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                const double dot = da.row(r).dot(a.row(r));
                ds.row(r) = a.row(r).array() * (da.row(r).array() - dot);
            }
            ds *= scale;
            dq.middleCols(h * hd, hd) = ds * kh;
            dk.middleCols(h * hd, hd) = ds.transpose() * qh;
        }
        Mat du1 = dq * w.wq.transpose() + dk * w.wk.transpose() + dv * w.wv.transpose();
        dx = dx_mid + layer_norm_backward(du1, w.ln1_g, lc.ln1);
    }

    // token embedding: rows 1..n came from patch_rows * w_embed (+ constants)
    Mat dpatch_rows = dx.bottomRows(cache.n) * w_embed_.transpose();

    ImageBuffer g(image.height, image.width);
    for (int pr = 0; pr < cache.grid; ++pr)
        for (int pc = 0; pc < cache.grid; ++pc) {
            const int i = pr * cache.grid + pc;
            int j = 0;
            for (int py = 0; py < kPatchSize; ++py)
                for (int px = 0; px < kPatchSize; ++px)
                    for (int ch = 0; ch < 3; ++ch)
                        g.at(pr * kPatchSize + py, pc * kPatchSize + px, ch) =
                            dpatch_rows(i, j++);
        }
    return g;
}

EncoderOutput ToyEncoder::encode_image(const ImageBuffer& image) const {
    check_input(image);
    return forward(image).out;
}

Vec ToyEncoder::encode_text(const TextQuery& query) const {
    const std::vector<std::string> words = tokenize_words(query.phrase);
    if (words.empty()) throw EmptyTextError("empty text query");
    Vec sum = Vec::Zero(kDim);
    for (const std::string& w : words) {
        const int idx = vocab_index(w);
        if (idx >= 0)
            sum += word_table_[idx];
        else
            sum += bucket_table_[fnv1a(w) % kOovBuckets];
    }
    return sum / double(words.size());
}

GradientEval ToyEncoder::evaluate_with_gradient(const ImageBuffer& image,
                                                const LossEvaluator& loss) const {
    check_input(image);
    ForwardCache cache = forward(image);
    OutputGrad grad = OutputGrad::zeros(cache.n, kDim);
    GradientEval result;
    result.loss = loss(cache.out, grad);
    result.outputs = cache.out;
    result.gradient = backward(image, cache, grad);
    return result;
}

EncoderPtr make_toy_encoder(std::uint64_t seed) {
    return std::make_shared<ToyEncoder>(seed);
}

}  // namespace fgadv
