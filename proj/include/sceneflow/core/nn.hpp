#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sceneflow/core/rng.hpp"
#include "sceneflow/core/tensor.hpp"

namespace sf::nn {

// Ordered registry of learnable tensors. Iteration order is insertion order,
// which keeps optimizer updates and checkpoints deterministic.
class ParamStore {
public:
    // Uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Tensor create(const std::string& name, int rows, int cols, int fan_in, Rng& rng);
    Tensor create_zero(const std::string& name, int rows, int cols);

    Tensor get(const std::string& name) const;
    bool contains(const std::string& name) const;
    const std::vector<std::string>& names() const { return order_; }
    std::size_t scalar_count() const;

    void zero_grads();
    double grad_global_norm() const;
    void scale_grads(double s);

private:
    Tensor insert(const std::string& name, Tensor t);
    std::unordered_map<std::string, Tensor> by_name_;
    std::vector<std::string> order_;
};

struct Linear {
    Tensor w;  // [in x out]
    Tensor b;  // [1 x out]

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng, bool zero_init = false);
    Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
    int out_dim() const { return w.cols(); }
};

// Stack of Linear layers with a leaky nonlinearity between them. The last
// layer is also followed by the nonlinearity unless `linear_output`.
struct Mlp {
    std::vector<Linear> layers;
    double slope = 0.1;
    bool linear_output = false;

    Mlp() = default;
    Mlp(ParamStore& ps, const std::string& name, const std::vector<int>& dims, double slope, Rng& rng,
        bool linear_output = false, bool zero_init_last = false);
    Tensor operator()(const Tensor& x) const;
    int out_dim() const { return layers.back().out_dim(); }
};

}  // namespace sf::nn
