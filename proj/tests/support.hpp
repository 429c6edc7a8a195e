#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "napv/dataset.hpp"
#include "napv/model.hpp"
#include "napv/nap.hpp"
#include "napv/verify.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(NAPV_FIXTURE_DIR) + "/" + name; }

inline napv::Network load_model(const std::string& name) {
    std::ifstream in(fixture(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    return napv::load_network(in);
}

inline napv::Network xnet() { return load_model("xnet.json"); }

inline std::vector<napv::LabeledSample> load_data(const std::string& name) {
    std::ifstream in(fixture(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    return napv::load_dataset(in);
}

/// Dense ReLU net with weights in [-1, 1] and biases in [-bias, bias].
inline napv::Network random_network(std::mt19937_64& rng, std::size_t inputs, const std::vector<std::size_t>& hidden,
                                    std::size_t outputs, double bias = 0.5) {
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    std::uniform_real_distribution<double> b(-bias, bias);
    std::vector<napv::Layer> layers;
    std::size_t width = inputs;
    std::vector<std::size_t> dims = hidden;
    dims.push_back(outputs);
    for (std::size_t l = 0; l < dims.size(); ++l) {
        napv::Layer layer;
        layer.inputs = width;
        layer.outputs = dims[l];
        for (std::size_t i = 0; i < width * dims[l]; ++i) layer.weights.push_back(w(rng));
        for (std::size_t i = 0; i < dims[l]; ++i) layer.bias.push_back(b(rng));
        layer.activation = l + 1 == dims.size() ? napv::Activation::linear : napv::Activation::relu;
        layers.push_back(std::move(layer));
        width = dims[l];
    }
    return napv::Network("random", inputs, std::move(layers));
}

/// Splits `total` hidden neurons into one or two layers.
inline std::vector<std::size_t> random_hidden_shape(std::mt19937_64& rng, std::size_t total) {
    if (total < 4 || std::uniform_int_distribution<int>(0, 1)(rng) == 0) return {total};
    const std::size_t first = std::uniform_int_distribution<std::size_t>(2, total - 2)(rng);
    return {first, total - first};
}

inline napv::Vector random_point(std::mt19937_64& rng, std::size_t dim, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    napv::Vector x(dim);
    for (double& v : x) v = u(rng);
    return x;
}

/// Keeps each neuron of `full` with probability `keep`.
inline napv::Nap random_sub_nap(std::mt19937_64& rng, const napv::Nap& full, double keep) {
    std::bernoulli_distribution coin(keep);
    napv::Nap out;
    for (auto k : full.activated) {
        if (coin(rng)) out.activated.insert(k);
    }
    for (auto k : full.deactivated) {
        if (coin(rng)) out.deactivated.insert(k);
    }
    return out;
}

/// A random 2-input verification query: box inside [0, 1]^2, an optional NAP
/// taken from the pattern of a box point, and one threshold row on y1 - y0.
struct RandomQuery {
    napv::Network net;
    napv::Box box;
    std::optional<napv::Nap> nap;
    std::vector<napv::LinearConstraint> unsafe;
};

inline RandomQuery random_query(std::mt19937_64& rng, std::size_t hidden) {
    RandomQuery q;
    q.net = random_network(rng, 2, random_hidden_shape(rng, hidden), 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 0.05) {
            a = std::min(a, 0.95);
            b = a + 0.05;
        }
        q.box.push_back({a, b});
    }
    const napv::Vector probe{q.box[0].lower + u(rng) * (q.box[0].upper - q.box[0].lower),
                             q.box[1].lower + u(rng) * (q.box[1].upper - q.box[1].lower)};
    if (u(rng) < 0.7) q.nap = random_sub_nap(rng, napv::extract(q.net, probe), 0.5);
    const napv::Vector other = random_point(rng, 2);
    const auto y = napv::forward(q.net, u(rng) < 0.5 ? probe : other);
    std::normal_distribution<double> jitter(0.0, 0.1);
    q.unsafe.emplace_back(std::vector<napv::LinearTerm>{{1, 1.0}, {0, -1.0}}, napv::Relation::greater_equal,
                          y[1] - y[0] + jitter(rng));
    return q;
}

} // namespace testing_support
