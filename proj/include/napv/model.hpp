#pragma once

// Feed-forward ReLU networks: loading, validation, inference, and activation
// signatures. Hidden neurons are addressed by a single layer-major index
// (layer 0 neurons first); output neurons are never addressed.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "napv/error.hpp"

namespace napv {

using Vector = std::vector<double>;
using NeuronId = std::size_t;

enum class Activation { relu, linear };

enum class ActivationState : std::uint8_t { deactivated, activated };

[[nodiscard]] inline const char* to_string(Activation a) noexcept {
    return a == Activation::relu ? "relu" : "linear";
}

struct Layer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights; // row-major, outputs x inputs
    Vector bias;
    Activation activation = Activation::relu;

    [[nodiscard]] double weight(std::size_t row, std::size_t col) const noexcept {
        return weights[row * inputs + col];
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {weights.data() + r * inputs, inputs};
    }
};

/// (layer, position within layer) of a hidden neuron.
struct NeuronLocation {
    std::size_t layer = 0;
    std::size_t index = 0;
    friend bool operator==(const NeuronLocation&, const NeuronLocation&) = default;
};

using ActivationSignature = std::vector<ActivationState>;

class Network {
public:
    Network() = default;

    /// Throws ValidationError naming the offending layer on any invariant breach.
    Network(std::string name, std::size_t input_dim, std::vector<Layer> layers)
        : name_(std::move(name)), input_dim_(input_dim), layers_(std::move(layers)) {
        validate();
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            layer_offsets_.push_back(offset);
            offset += layers_[l].outputs;
        }
        hidden_count_ = offset;
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] std::size_t output_dim() const noexcept { return layers_.back().outputs; }
    [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t hidden_layer_count() const noexcept { return layers_.size() - 1; }
    [[nodiscard]] std::size_t hidden_count() const noexcept { return hidden_count_; }

    /// First NeuronId of hidden layer `layer`.
    [[nodiscard]] std::size_t layer_offset(std::size_t layer) const { return layer_offsets_.at(layer); }

    [[nodiscard]] NeuronLocation locate(NeuronId id) const {
        if (id >= hidden_count_) {
            throw std::out_of_range("neuron id " + std::to_string(id) + " out of range (hidden count " +
                                    std::to_string(hidden_count_) + ")");
        }
        std::size_t layer = 0;
        while (layer + 1 < layer_offsets_.size() && layer_offsets_[layer + 1] <= id) {
            ++layer;
        }
        return {layer, id - layer_offsets_[layer]};
    }

    [[nodiscard]] NeuronId neuron_id(NeuronLocation loc) const {
        if (loc.layer >= layer_offsets_.size() || loc.index >= layers_[loc.layer].outputs) {
            throw std::out_of_range("no hidden neuron at layer " + std::to_string(loc.layer) + " index " +
                                    std::to_string(loc.index));
        }
        return layer_offsets_[loc.layer] + loc.index;
    }

private:
    void validate() const {
        if (input_dim_ == 0) {
            throw ValidationError("input_dim must be positive");
        }
        if (layers_.empty()) {
            throw ValidationError("network has no layers");
        }
        std::size_t width = input_dim_;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const Layer& layer = layers_[l];
            const std::string where = "layer " + std::to_string(l);
            if (layer.inputs != width) {
                throw ValidationError(where + ": expects " + std::to_string(layer.inputs) + " inputs but previous width is " +
                                      std::to_string(width));
            }
            if (layer.outputs == 0) {
                throw ValidationError(where + ": weights has no rows");
            }
            if (layer.weights.size() != layer.inputs * layer.outputs) {
                throw ValidationError(where + ": weights size does not match " + std::to_string(layer.outputs) + "x" +
                                      std::to_string(layer.inputs));
            }
            if (layer.bias.size() != layer.outputs) {
                throw ValidationError(where + ": bias has length " + std::to_string(layer.bias.size()) + " but weights has " +
                                      std::to_string(layer.outputs) + " rows");
            }
            for (double w : layer.weights) {
                if (!std::isfinite(w)) throw ValidationError(where + ": non-finite value in weights");
            }
            for (double b : layer.bias) {
                if (!std::isfinite(b)) throw ValidationError(where + ": non-finite value in bias");
            }
            const bool last = l + 1 == layers_.size();
            if (!last && layer.activation != Activation::relu) {
                throw ValidationError(where + ": hidden layers must use relu activation");
            }
            if (last && layer.activation != Activation::linear) {
                throw ValidationError(where + ": output layer must use linear activation");
            }
            width = layer.outputs;
        }
    }

    std::string name_;
    std::size_t input_dim_ = 0;
    std::vector<Layer> layers_;
    std::vector<std::size_t> layer_offsets_;
    std::size_t hidden_count_ = 0;
};

namespace detail {

inline void check_input(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw DimensionError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                             std::to_string(net.input_dim()));
    }
}

inline void affine(const Layer& layer, std::span<const double> in, Vector& out) {
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t r = 0; r < layer.outputs; ++r) {
        const double* w = layer.weights.data() + r * layer.inputs;
        double acc = out[r];
        for (std::size_t c = 0; c < layer.inputs; ++c) {
            acc += w[c] * in[c];
        }
        out[r] = acc;
    }
}

/// Shared evaluation path so forward and forward_with_signature are bit-identical.
template <typename OnPreActivation>
Vector evaluate(const Network& net, std::span<const double> x, OnPreActivation&& on_pre) {
    check_input(net, x);
    Vector current(x.begin(), x.end());
    Vector next;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        affine(layers[l], current, next);
        if (layers[l].activation == Activation::relu) {
            for (double& v : next) {
                on_pre(v);
                v = v > 0.0 ? v : 0.0;
            }
        }
        current.swap(next);
    }
    return current;
}

} // namespace detail

/// Output z^L(x) with ReLU after every hidden layer.
[[nodiscard]] inline Vector forward(const Network& net, std::span<const double> x) {
    return detail::evaluate(net, x, [](double) {});
}

/// Hidden pre-activation values in NeuronId order.
[[nodiscard]] inline Vector pre_activations(const Network& net, std::span<const double> x) {
    Vector pre;
    pre.reserve(net.hidden_count());
    detail::evaluate(net, x, [&](double v) { pre.push_back(v); });
    return pre;
}

[[nodiscard]] inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

/// Predicted label; ties go to the lowest index.
[[nodiscard]] inline std::size_t predict(const Network& net, std::span<const double> x) {
    return argmax(forward(net, x));
}

[[nodiscard]] inline std::pair<Vector, ActivationSignature> forward_with_signature(const Network& net,
                                                                                   std::span<const double> x) {
    ActivationSignature signature;
    signature.reserve(net.hidden_count());
    Vector out = detail::evaluate(net, x, [&](double v) {
        signature.push_back(v > 0.0 ? ActivationState::activated : ActivationState::deactivated);
    });
    return {std::move(out), std::move(signature)};
}

// ---------------------------------------------------------------------------
// Model file format

[[nodiscard]] inline nlohmann::json to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& layer : net.layers()) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < layer.outputs; ++r) {
            auto row = layer.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        layers.push_back({{"weights", std::move(rows)}, {"bias", layer.bias}, {"activation", to_string(layer.activation)}});
    }
    return {{"name", net.name()}, {"input_dim", net.input_dim()}, {"layers", std::move(layers)}};
}

[[nodiscard]] inline Network network_from_json(const nlohmann::json& doc) {
    auto fail = [](const std::string& what) -> ParseError { return ParseError("model: " + what); };
    if (!doc.is_object()) throw fail("top level must be an object");
    if (!doc.contains("input_dim") || !doc["input_dim"].is_number_integer() || doc["input_dim"].get<long long>() <= 0) {
        throw fail("input_dim must be a positive integer");
    }
    if (!doc.contains("layers") || !doc["layers"].is_array()) throw fail("layers must be an array");
    std::string name = doc.value("name", std::string{});

    std::vector<Layer> layers;
    std::size_t width = doc["input_dim"].get<std::size_t>();
    for (std::size_t l = 0; l < doc["layers"].size(); ++l) {
        const auto& jl = doc["layers"][l];
        const std::string where = "layer " + std::to_string(l);
        if (!jl.is_object()) throw fail(where + " must be an object");
        if (!jl.contains("weights") || !jl["weights"].is_array()) throw fail(where + ": weights must be an array of rows");
        if (!jl.contains("bias") || !jl["bias"].is_array()) throw fail(where + ": bias must be an array");
        Layer layer;
        layer.outputs = jl["weights"].size();
        layer.inputs = layer.outputs > 0 && jl["weights"][0].is_array() ? jl["weights"][0].size() : width;
        for (const auto& row : jl["weights"]) {
            if (!row.is_array()) throw fail(where + ": weights rows must be arrays");
            if (row.size() != layer.inputs) throw ValidationError(where + ": ragged weights matrix");
            for (const auto& w : row) {
                if (!w.is_number()) throw fail(where + ": weights entries must be numbers");
                layer.weights.push_back(w.get<double>());
            }
        }
        for (const auto& b : jl["bias"]) {
            if (!b.is_number()) throw fail(where + ": bias entries must be numbers");
            layer.bias.push_back(b.get<double>());
        }
        const std::string act = jl.value("activation", std::string{});
        if (act == "relu") {
            layer.activation = Activation::relu;
        } else if (act == "linear") {
            layer.activation = Activation::linear;
        } else {
            throw ValidationError(where + ": unsupported activation '" + act + "'");
        }
        width = layer.outputs;
        layers.push_back(std::move(layer));
    }
    return Network(std::move(name), doc["input_dim"].get<std::size_t>(), std::move(layers));
}

[[nodiscard]] inline Network load_network(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    return network_from_json(doc);
}

[[nodiscard]] inline Network load_network(const std::string& text) {
    std::istringstream in(text);
    return load_network(in);
}

inline void save_network(const Network& net, std::ostream& out) {
    out << to_json(net).dump(2) << '\n';
}

} // namespace napv
