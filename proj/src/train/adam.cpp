#include "sceneflow/train/adam.hpp"

#include <cmath>

#include "sceneflow/core/error.hpp"

namespace sf::train {

Adam::Adam(nn::ParamStore& params, double lr, double beta1, double beta2, double weight_decay, double eps)
    : params_(&params), lr_(lr), beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), eps_(eps) {
    for (const auto& name : params.names()) {
        const auto sz = params.get(name).size();
        m_.emplace_back(sz, 0.0);
        v_.emplace_back(sz, 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto& names = params_->names();
    for (std::size_t p = 0; p < names.size(); ++p) {
        Tensor t = params_->get(names[p]);
        auto& vals = t.mutable_data();
        const auto& g = t.grad();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * vals[i]);
        }
    }
}

void Adam::restore(long long t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw InvalidArgument("Adam::restore: state does not match the parameter set");
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
            throw InvalidArgument("Adam::restore: state shape mismatch");
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace sf::train
