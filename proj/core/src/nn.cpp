#include "codistill/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "codistill/error.hpp"
#include "codistill/ops.hpp"
#include "codistill/rng.hpp"

namespace codistill {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    return LayerSpec{LayerKind::Dense, in, out, 0};
}
LayerSpec LayerSpec::relu() {
    return LayerSpec{LayerKind::Relu, 0, 0, 0};
}
LayerSpec LayerSpec::flatten() {
    return LayerSpec{LayerKind::Flatten, 0, 0, 0};
}
LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel) {
    return LayerSpec{LayerKind::Conv2d, in_ch, out_ch, kernel};
}

std::string LayerSpec::to_text() const {
    std::ostringstream os;
    switch (kind) {
        case LayerKind::Dense: os << "dense " << in << ' ' << out; break;
        case LayerKind::Relu: os << "relu"; break;
        case LayerKind::Flatten: os << "flatten"; break;
        case LayerKind::Conv2d: os << "conv2d " << in << ' ' << out << ' ' << kernel; break;
    }
    return os.str();
}

LayerSpec LayerSpec::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string kind;
    is >> kind;
    auto read_dim = [&](const char* what) {
        long long v = -1;
        if (!(is >> v) || v <= 0) {
            throw ParseError("layer '" + text + "': bad or missing " + what);
        }
        return static_cast<std::size_t>(v);
    };
    if (kind == "dense") {
        std::size_t in = read_dim("input size");
        std::size_t out = read_dim("output size");
        return dense(in, out);
    }
    if (kind == "relu") return relu();
    if (kind == "flatten") return flatten();
    if (kind == "conv2d") {
        std::size_t ci = read_dim("input channels");
        std::size_t co = read_dim("output channels");
        std::size_t k = read_dim("kernel size");
        return conv2d(ci, co, k);
    }
    throw ParseError("unknown layer kind '" + kind + "'");
}

void Network::zero_grad() {
    for (Tensor& p : params) p.zero_grad();
}

namespace {

// Adjacency check that does not need an input shape: dense feature chains and
// conv channel chains must line up. Flatten breaks the feature chain (the
// flattened size depends on spatial dims), so the walk goes agnostic there
// until the next dense; check_layers() does the full shape-aware validation.
void validate_adjacency(const std::vector<LayerSpec>& spec) {
    long long features = -1;  // -1 = unknown
    long long channels = -1;
    for (const LayerSpec& l : spec) {
        switch (l.kind) {
            case LayerKind::Dense:
                if (features >= 0 && static_cast<std::size_t>(features) != l.in) {
                    throw ConfigError("layer '" + l.to_text() + "' expects " +
                                      std::to_string(l.in) + " inputs but previous layer yields " +
                                      std::to_string(features));
                }
                features = static_cast<long long>(l.out);
                channels = -1;
                break;
            case LayerKind::Conv2d:
                if (channels >= 0 && static_cast<std::size_t>(channels) != l.in) {
                    throw ConfigError("layer '" + l.to_text() + "' expects " +
                                      std::to_string(l.in) + " channels but previous layer yields " +
                                      std::to_string(channels));
                }
                channels = static_cast<long long>(l.out);
                features = -1;
                break;
            case LayerKind::Flatten:
                features = -1;
                channels = -1;
                break;
            case LayerKind::Relu:
                break;
        }
    }
}

}  // namespace

Network init_network(const std::vector<LayerSpec>& spec, std::uint64_t seed) {
    validate_adjacency(spec);
    Network net;
    net.layers = spec;
    Rng rng(seed);
    for (const LayerSpec& l : spec) {
        if (!l.has_params()) continue;
        Shape w_shape;
        std::size_t fan_in = 0;
        std::size_t bias_n = 0;
        if (l.kind == LayerKind::Dense) {
            w_shape = {l.in, l.out};
            fan_in = l.in;
            bias_n = l.out;
        } else {
            w_shape = {l.out, l.in, l.kernel, l.kernel};
            fan_in = l.in * l.kernel * l.kernel;
            bias_n = l.out;
        }
        double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        std::vector<double> w(shape_numel(w_shape));
        for (double& v : w) v = rng.normal(0.0, stddev);
        Tensor weight = Tensor::from_data(std::move(w_shape), std::move(w));
        weight.set_requires_grad(true);
        Tensor bias = Tensor::zeros(Shape{bias_n});
        bias.set_requires_grad(true);
        net.params.push_back(std::move(weight));
        net.params.push_back(std::move(bias));
    }
    return net;
}

Tensor forward(const Network& net, const Tensor& x) {
    Tensor h = x;
    std::size_t p = 0;
    for (const LayerSpec& l : net.layers) {
        switch (l.kind) {
            case LayerKind::Dense: {
                if (h.ndim() != 2) {
                    throw ShapeError("dense layer needs [batch, features], got " +
                                     shape_to_string(h.shape()));
                }
                if (h.dim(1) != l.in) {
                    throw ShapeError("dense layer expects " + std::to_string(l.in) +
                                     " features, got " + std::to_string(h.dim(1)));
                }
                const Tensor& w = net.params[p++];
                const Tensor& b = net.params[p++];
                // Bias broadcast over rows as ones[N,1] x b[1,out].
                Tensor ones = Tensor::full(Shape{h.dim(0), 1}, 1.0);
                h = matmul(h, w) + matmul(ones, reshape(b, Shape{1, l.out}));
                break;
            }
            case LayerKind::Relu:
                h = maximum(h, 0.0);
                break;
            case LayerKind::Flatten: {
                if (h.ndim() < 2) throw ShapeError("flatten needs a batched tensor");
                h = reshape(h, Shape{h.dim(0), h.numel() / h.dim(0)});
                break;
            }
            case LayerKind::Conv2d: {
                const Tensor& w = net.params[p++];
                const Tensor& b = net.params[p++];
                h = conv2d(h, w, b);
                break;
            }
        }
    }
    return h;
}

std::size_t param_count(const Network& net) {
    std::size_t n = 0;
    for (const Tensor& p : net.params) n += p.numel();
    return n;
}

std::size_t check_layers(const std::vector<LayerSpec>& spec, const Shape& sample_shape) {
    Shape s = sample_shape;
    for (const LayerSpec& l : spec) {
        switch (l.kind) {
            case LayerKind::Dense:
                if (s.size() != 1) {
                    throw ConfigError("dense layer '" + l.to_text() +
                                      "' needs flat features, have shape " + shape_to_string(s));
                }
                if (s[0] != l.in) {
                    throw ConfigError("dense layer '" + l.to_text() + "' expects " +
                                      std::to_string(l.in) + " features, have " +
                                      std::to_string(s[0]));
                }
                s = {l.out};
                break;
            case LayerKind::Relu:
                break;
            case LayerKind::Flatten:
                s = {shape_numel(s)};
                break;
            case LayerKind::Conv2d: {
                if (s.size() != 3) {
                    throw ConfigError("conv2d layer '" + l.to_text() +
                                      "' needs [C,H,W] input, have shape " + shape_to_string(s));
                }
                if (s[0] != l.in) {
                    throw ConfigError("conv2d layer '" + l.to_text() + "' expects " +
                                      std::to_string(l.in) + " channels, have " +
                                      std::to_string(s[0]));
                }
                if (l.kernel > s[1] || l.kernel > s[2]) {
                    throw ConfigError("conv2d layer '" + l.to_text() + "' kernel exceeds input " +
                                      shape_to_string(s));
                }
                s = {l.out, s[1] - l.kernel + 1, s[2] - l.kernel + 1};
                break;
            }
        }
    }
    if (s.size() != 1) {
        throw ConfigError("network must end with flat logits, got shape " + shape_to_string(s));
    }
    return s[0];
}

std::vector<LayerSpec> resolve_layer_texts(const std::vector<std::string>& texts,
                                           const Shape& sample_shape,
                                           std::size_t num_classes) {
    std::vector<LayerSpec> out;
    Shape s = sample_shape;
    for (const std::string& text : texts) {
        std::istringstream is(text);
        std::string kind;
        is >> kind;
        auto next_dim = [&](bool allow_auto) -> std::size_t {
            std::string tok;
            if (!(is >> tok)) throw ParseError("layer '" + text + "': missing dimension");
            if (tok == "out") return num_classes;
            if (tok == "in" || (allow_auto && tok == "auto")) {
                if (kind == "dense") {
                    if (s.size() != 1) {
                        throw ConfigError("layer '" + text + "': input is not flat, shape " +
                                          shape_to_string(s));
                    }
                    return s[0];
                }
                if (s.size() != 3) {
                    throw ConfigError("layer '" + text + "': input is not [C,H,W], shape " +
                                      shape_to_string(s));
                }
                return s[0];
            }
            try {
                std::size_t pos = 0;
                long long v = std::stoll(tok, &pos);
                if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
                return static_cast<std::size_t>(v);
            } catch (const std::exception&) {
                throw ParseError("layer '" + text + "': bad dimension '" + tok + "'");
            }
        };
        LayerSpec l;
        if (kind == "dense") {
            std::size_t in = next_dim(true);
            std::size_t o = next_dim(false);
            l = LayerSpec::dense(in, o);
            if (s.size() != 1 || s[0] != in) {
                throw ConfigError("layer '" + text + "' incompatible with input shape " +
                                  shape_to_string(s));
            }
            s = {o};
        } else if (kind == "relu") {
            l = LayerSpec::relu();
        } else if (kind == "flatten") {
            l = LayerSpec::flatten();
            s = {shape_numel(s)};
        } else if (kind == "conv2d") {
            std::size_t ci = next_dim(false);
            std::size_t co = next_dim(false);
            std::size_t k = next_dim(false);
            l = LayerSpec::conv2d(ci, co, k);
            if (s.size() != 3 || s[0] != ci || k > s[1] || k > s[2]) {
                throw ConfigError("layer '" + text + "' incompatible with input shape " +
                                  shape_to_string(s));
            }
            s = {co, s[1] - k + 1, s[2] - k + 1};
        } else {
            throw ParseError("unknown layer kind '" + kind + "' in '" + text + "'");
        }
        out.push_back(l);
    }
    check_layers(out, sample_shape);
    return out;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw IoError("checkpoint truncated while reading header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw IoError("checkpoint truncated while reading parameters");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_network(const Network& net, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
    write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
    for (const LayerSpec& l : net.layers) {
        std::string text = l.to_text();
        write_u32(os, static_cast<std::uint32_t>(text.size()));
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
    for (const Tensor& p : net.params) {
        for (double v : p.values()) write_f64(os, v);
    }
    if (!os) throw IoError("write failure on checkpoint: " + path.string());
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path.string());
    std::uint32_t count = read_u32(is);
    std::vector<LayerSpec> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t len = read_u32(is);
        std::string text(len, '\0');
        is.read(text.data(), len);
        if (!is) throw IoError("checkpoint truncated while reading layer specs");
        layers.push_back(LayerSpec::from_text(text));
    }
    Network net = init_network(layers, 0);
    for (Tensor& p : net.params) {
        for (double& v : p.values_mut()) v = read_f64(is);
    }
    return net;
}

std::uint64_t param_checksum(const Network& net) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Tensor& p : net.params) {
        for (double v : p.values()) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

}  // namespace codistill
