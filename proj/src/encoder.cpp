#include "fgadv/encoder.hpp"

#include <charconv>

#include "fgadv/toy_encoder.hpp"

namespace fgadv {

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

double l2_diff(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

bool bit_equal(const EncoderOutput& a, const EncoderOutput& b) {
    if (a.cls.size() != b.cls.size() || a.attention.size() != b.attention.size() ||
        a.patches.rows() != b.patches.rows() || a.patches.cols() != b.patches.cols())
        return false;
    return (a.cls.array() == b.cls.array()).all() &&
           (a.patches.array() == b.patches.array()).all() &&
           (a.attention.array() == b.attention.array()).all();
}

EncoderRegistry& EncoderRegistry::global() {
    static EncoderRegistry registry = [] {
        EncoderRegistry r;
        r.register_factory("toy", [](const std::string& options) -> EncoderPtr {
            std::uint64_t seed = 0;
            if (!options.empty()) {
                auto [p, ec] = std::from_chars(options.data(), options.data() + options.size(), seed);
                if (ec != std::errc() || p != options.data() + options.size())
                    throw ConfigError("invalid toy encoder seed: " + options);
            }
            return make_toy_encoder(seed);
        });
        return r;
    }();
    return registry;
}

void EncoderRegistry::register_factory(const std::string& id, Factory factory) {
    factories_[id] = std::move(factory);
}

bool EncoderRegistry::has(const std::string& id) const {
    return factories_.count(id) > 0;
}

EncoderPtr EncoderRegistry::make(const std::string& spec) const {
    std::string id = spec, options;
    if (auto pos = spec.find(':'); pos != std::string::npos) {
        id = spec.substr(0, pos);
        options = spec.substr(pos + 1);
    }
    auto it = factories_.find(id);
    if (it == factories_.end())
        throw ConfigError("unknown encoder: " + id);
    return it->second(options);
}

}  // namespace fgadv
