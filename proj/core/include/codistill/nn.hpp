#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codistill/tensor.hpp"

namespace codistill {

enum class LayerKind { Dense, Relu, Flatten, Conv2d };

// One layer of a network. Dense carries in/out feature counts; Conv2d carries
// in/out channel counts and a square kernel size (stride 1, no padding).
struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t kernel = 0;

    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec relu();
    static LayerSpec flatten();
    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel);

    bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }

    // Text form used in checkpoints and config files:
    //   "dense 4 3" | "relu" | "flatten" | "conv2d 1 8 3"
    std::string to_text() const;
    static LayerSpec from_text(const std::string& text);
};

// Ordered layer stack plus its parameters. Parameterized layers own exactly
// one weight and one bias tensor (requires_grad = true), stored in layer
// order in `params` as W0, b0, W1, b1, ...
struct Network {
    std::vector<LayerSpec> layers;
    std::vector<Tensor> params;
    std::string role;          // "teacher" | "student"
    std::string capacity_tag;  // version preset identifier

    void zero_grad();
};

// He-style init: weights drawn from N(0, 2/fan_in), biases zero. The same
// spec and seed always produce bit-identical parameters.
Network init_network(const std::vector<LayerSpec>& spec, std::uint64_t seed);

// Runs the stack on a batch, recording on the active tape. Dense expects
// [batch, features]; Conv2d expects [batch, C, H, W].
Tensor forward(const Network& net, const Tensor& x);

std::size_t param_count(const Network& net);

// Propagates a per-sample input shape through the stack, validating layer
// compatibility; returns the output feature count. The same walk resolves
// symbolic dims in config-file layer lists ("in", "out", "auto").
std::size_t check_layers(const std::vector<LayerSpec>& spec, const Shape& sample_shape);
std::vector<LayerSpec> resolve_layer_texts(const std::vector<std::string>& texts,
                                           const Shape& sample_shape,
                                           std::size_t num_classes);

// Checkpoint format: u32 layer count, then per layer a u32 byte length and
// the layer's text form, then all parameter values as little-endian f64 in
// layer order (W before b).
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

// FNV-1a over the raw parameter bytes; order-sensitive. Used to assert that
// a frozen model was not touched.
std::uint64_t param_checksum(const Network& net);

}  // namespace codistill
