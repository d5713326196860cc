#include "sceneflow/core/nn.hpp"

#include <cmath>

#include "sceneflow/core/error.hpp"

namespace sf::nn {

Tensor ParamStore::insert(const std::string& name, Tensor t) {
    if (by_name_.count(name)) throw InvalidArgument("ParamStore: duplicate parameter " + name);
    by_name_.emplace(name, t);
    order_.push_back(name);
    return t;
}

Tensor ParamStore::create(const std::string& name, int rows, int cols, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (auto& v : data) v = rng.uniform(-s, s);
    return insert(name, Tensor::from(std::move(data), rows, cols, /*requires_grad=*/true));
}

Tensor ParamStore::create_zero(const std::string& name, int rows, int cols) {
    return insert(name, Tensor::zeros(rows, cols, /*requires_grad=*/true));
}

Tensor ParamStore::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw InvalidArgument("ParamStore: unknown parameter " + name);
    return it->second;
}

bool ParamStore::contains(const std::string& name) const { return by_name_.count(name) != 0; }

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += by_name_.at(name).size();
    return n;
}

void ParamStore::zero_grads() {
    for (const auto& name : order_) by_name_.at(name).zero_grad();
}

double ParamStore::grad_global_norm() const {
    double s = 0.0;
    for (const auto& name : order_)
        for (double g : by_name_.at(name).grad()) s += g * g;
    return std::sqrt(s);
}

void ParamStore::scale_grads(double s) {
    for (const auto& name : order_)
        for (double& g : by_name_.at(name).mutable_grad()) g *= s;
}

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng, bool zero_init) {
    if (zero_init) {
        w = ps.create_zero(name + ".w", in, out);
        b = ps.create_zero(name + ".b", 1, out);
    } else {
        w = ps.create(name + ".w", in, out, in, rng);
        b = ps.create(name + ".b", 1, out, in, rng);
    }
}

Mlp::Mlp(ParamStore& ps, const std::string& name, const std::vector<int>& dims, double slope_, Rng& rng,
         bool linear_output_, bool zero_init_last)
    : slope(slope_), linear_output(linear_output_) {
    if (dims.size() < 2) throw InvalidArgument("Mlp: need at least input and output dims");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = i + 2 == dims.size();
        layers.emplace_back(ps, name + "." + std::to_string(i), dims[i], dims[i + 1], rng,
                            zero_init_last && last);
    }
}

Tensor Mlp::operator()(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const bool last = i + 1 == layers.size();
        h = last && linear_output ? layers[i](h) : linear_act(h, layers[i].w, layers[i].b, slope);
    }
    return h;
}

}  // namespace sf::nn
