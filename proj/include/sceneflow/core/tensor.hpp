#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace sf {

namespace detail {

struct Node {
    std::vector<double> v;  // row-major values
    std::vector<double> g;  // gradient, lazily sized
    int rows = 0;
    int cols = 0;
    bool requires_grad = false;  // leaf flag
    bool needs_grad = false;     // this node participates in some backward pass
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backfn;  // scatters this->g into parents' g

    std::size_t size() const { return v.size(); }
    void ensure_grad() {
        if (g.size() != v.size()) g.assign(v.size(), 0.0);
    }
};

}  // namespace detail

// Value-semantics handle to an autograd graph node. All tensors are 2D
// (column vectors are [n x 1], scalars [1 x 1]); 3D quantities are stored
// flattened as [outer*inner x channels].
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor full(int rows, int cols, double value, bool requires_grad = false);
    static Tensor from(std::vector<double> data, int rows, int cols, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }

    const std::vector<double>& data() const { return node_->v; }
    std::vector<double>& mutable_data() { return node_->v; }  // leaves only (optimizer updates)
    double at(int r, int c) const { return node_->v[static_cast<std::size_t>(r) * node_->cols + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<double>& grad() const;
    std::vector<double>& mutable_grad();
    void zero_grad();

    // Runs reverse-mode accumulation from this scalar node.
    void backward() const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// Disables graph recording in the current thread for its lifetime (inference).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div_elem(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor leaky_relu(const Tensor& x, double slope);
inline Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add_rowvec(const Tensor& x, const Tensor& v);  // v is [1 x C]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
// fused leaky_relu(x W + b); equivalent to the composition, one memory pass
Tensor linear_act(const Tensor& x, const Tensor& w, const Tensor& b, double slope);

// ---- shape / gather ----
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, int first, int count);
Tensor gather_rows(const Tensor& x, std::vector<int> idx);
Tensor reshape(const Tensor& x, int rows, int cols);  // row-major relabeling

// ---- reductions / grouping ----
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor group_sum(const Tensor& x, int groups, int k);            // fixed-size groups of k consecutive rows
Tensor segment_sum(const Tensor& x, std::vector<int> offsets);   // CSR offsets, size groups+1
Tensor group_max(const Tensor& x, int groups, int k);            // per-channel max over each group
Tensor scale_rows(const Tensor& x, const Tensor& s);             // s is [R x 1]
// fused group_sum(scale_rows(x, s), groups, k)
Tensor weighted_group_sum(const Tensor& x, const Tensor& s, int groups, int k);
// fused group_sum(mul(gate, x), groups, k)
Tensor gated_group_sum(const Tensor& x, const Tensor& gate, int groups, int k);
Tensor softmax_rows(const Tensor& x);
Tensor segment_softmax(const Tensor& x, std::vector<int> offsets);  // x is [R x 1]
Tensor rows_l2norm(const Tensor& x);                             // [R x 1]; zero rows get zero grad
Tensor rows_dot(const Tensor& a, const Tensor& b);               // [R x 1]

}  // namespace sf
