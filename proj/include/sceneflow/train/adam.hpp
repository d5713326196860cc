#pragma once

#include <vector>

#include "sceneflow/core/nn.hpp"

namespace sf::train {

// Adaptive-moment optimizer with optional decoupled weight decay.
class Adam {
public:
    Adam(nn::ParamStore& params, double lr, double beta1, double beta2, double weight_decay = 0.0,
         double eps = 1e-8);

    void step();  // applies the currently accumulated gradients
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    long long t() const { return t_; }
    const std::vector<std::vector<double>>& m() const { return m_; }
    const std::vector<std::vector<double>>& v() const { return v_; }
    void restore(long long t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

private:
    nn::ParamStore* params_;
    double lr_, beta1_, beta2_, weight_decay_, eps_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace sf::train
