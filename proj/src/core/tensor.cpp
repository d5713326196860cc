#include "sceneflow/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sceneflow/core/error.hpp"

namespace sf {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(int rows, int cols) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->v.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return n;
}

bool track(const Tensor& t) { return t.node()->needs_grad; }

// Attaches parents + backfn only when grads are being recorded.
void wire(const NodePtr& out, std::vector<NodePtr> parents, std::function<void()> backfn) {
    if (!g_grad_enabled) return;
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->needs_grad;
    if (!needs) return;
    out->needs_grad = true;
    out->parents = std::move(parents);
    out->backfn = std::move(backfn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string(op) + ": shape mismatch");
}

// ---- accumulating matmul kernels (row-major) ----

// C[MxN] += A[MxK] * B[KxN]; rows accumulate in a stack buffer so the inner
// product stays in registers
void mm_nn_acc(double* __restrict__ c, const double* __restrict__ a, const double* __restrict__ b,
               int m, int k, int n) {
    constexpr int kMaxCols = 1024;
    double acc[kMaxCols];
    if (n <= kMaxCols) {
        for (int i = 0; i < m; ++i) {
            double* __restrict__ ci = c + static_cast<std::size_t>(i) * n;
            const double* __restrict__ ai = a + static_cast<std::size_t>(i) * k;
            for (int j = 0; j < n; ++j) acc[j] = ci[j];
            for (int p = 0; p < k; ++p) {
                const double av = ai[p];
                const double* __restrict__ bp = b + static_cast<std::size_t>(p) * n;
                for (int j = 0; j < n; ++j) acc[j] += av * bp[j];
            }
            for (int j = 0; j < n; ++j) ci[j] = acc[j];
        }
        return;
    }
    for (int i = 0; i < m; ++i) {
        double* __restrict__ ci = c + static_cast<std::size_t>(i) * n;
        const double* __restrict__ ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* __restrict__ bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[MxN] += A[MxK] * B[NxK]^T
void mm_nt_acc(double* __restrict__ c, const double* __restrict__ a, const double* __restrict__ b,
               int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* __restrict__ ai = a + static_cast<std::size_t>(i) * k;
        double* __restrict__ ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* __restrict__ bj = b + static_cast<std::size_t>(j) * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

// C[MxN] += A[KxM]^T * B[KxN]
void mm_tn_acc(double* __restrict__ c, const double* __restrict__ a, const double* __restrict__ b,
               int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const double* __restrict__ ap = a + static_cast<std::size_t>(p) * m;
        const double* __restrict__ bp = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = ap[i];
            double* __restrict__ ci = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = make_node(rows, cols);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(int rows, int cols, double value, bool requires_grad) {
    Tensor t = zeros(rows, cols, requires_grad);
    std::fill(t.node()->v.begin(), t.node()->v.end(), value);
    return t;
}

Tensor Tensor::from(std::vector<double> data, int rows, int cols, bool requires_grad) {
    if (data.size() != static_cast<std::size_t>(rows) * cols)
        throw InvalidArgument("Tensor::from: data size does not match shape");
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->v = std::move(data);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from({v}, 1, 1); }

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->g;
}

std::vector<double>& Tensor::mutable_grad() {
    node_->ensure_grad();
    return node_->g;
}

void Tensor::zero_grad() {
    node_->ensure_grad();
    std::fill(node_->g.begin(), node_->g.end(), 0.0);
}

void Tensor::backward() const {
    if (size() != 1) throw InvalidArgument("backward: root must be a scalar");
    // iterative post-order DFS over parents
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->g[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backfn) (*it)->backfn();
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] + bv[i];
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node()] {
        if (an->needs_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) bn->g[i] += o->g[i];
        }
    });
    return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] - bv[i];
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node()] {
        if (an->needs_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) bn->g[i] -= o->g[i];
        }
    });
    return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] * bv[i];
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node()] {
        if (an->needs_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i] * bn->v[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) bn->g[i] += o->g[i] * an->v[i];
        }
    });
    return Tensor(out);
}

Tensor div_elem(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "div_elem");
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] / bv[i];
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node()] {
        if (an->needs_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i] / bn->v[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i)
                bn->g[i] -= o->g[i] * o->v[i] / bn->v[i];
        }
    });
    return Tensor(out);
}

Tensor add_scalar(const Tensor& a, double s) {
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] + s;
    Node* o = out.get();
    wire(out, {a.node()}, [o, an = a.node()] {
        an->ensure_grad();
        for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i];
    });
    return Tensor(out);
}

Tensor mul_scalar(const Tensor& a, double s) {
    auto out = make_node(a.rows(), a.cols());
    const auto& av = a.data();
    for (std::size_t i = 0; i < av.size(); ++i) out->v[i] = av[i] * s;
    Node* o = out.get();
    wire(out, {a.node()}, [o, an = a.node(), s] {
        an->ensure_grad();
        for (std::size_t i = 0; i < o->g.size(); ++i) an->g[i] += o->g[i] * s;
    });
    return Tensor(out);
}

Tensor leaky_relu(const Tensor& x, double slope) {
    auto out = make_node(x.rows(), x.cols());
    const auto& xv = x.data();
    for (std::size_t i = 0; i < xv.size(); ++i) out->v[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), slope] {
        xn->ensure_grad();
        for (std::size_t i = 0; i < o->g.size(); ++i)
            xn->g[i] += o->g[i] * (xn->v[i] > 0.0 ? 1.0 : slope);
    });
    return Tensor(out);
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    auto out = make_node(m, n);
    mm_nn_acc(out->v.data(), a.data().data(), b.data().data(), m, k, n);
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node(), m, k, n] {
        if (an->needs_grad) {
            an->ensure_grad();
            mm_nt_acc(an->g.data(), o->g.data(), bn->v.data(), m, n, k);
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            mm_tn_acc(bn->g.data(), an->v.data(), o->g.data(), k, m, n);
        }
    });
    return Tensor(out);
}

Tensor transpose(const Tensor& a) {
    const int r = a.rows(), c = a.cols();
    auto out = make_node(c, r);
    const auto& av = a.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out->v[static_cast<std::size_t>(j) * r + i] = av[static_cast<std::size_t>(i) * c + j];
    Node* o = out.get();
    wire(out, {a.node()}, [o, an = a.node(), r, c] {
        an->ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                an->g[static_cast<std::size_t>(i) * c + j] += o->g[static_cast<std::size_t>(j) * r + i];
    });
    return Tensor(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    if (v.rows() != 1 || v.cols() != x.cols()) throw InvalidArgument("add_rowvec: v must be [1 x C]");
    const int r = x.rows(), c = x.cols();
    auto out = make_node(r, c);
    const auto& xv = x.data();
    const auto& vv = v.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out->v[static_cast<std::size_t>(i) * c + j] = xv[static_cast<std::size_t>(i) * c + j] + vv[j];
    Node* o = out.get();
    wire(out, {x.node(), v.node()}, [o, xn = x.node(), vn = v.node(), r, c] {
        if (xn->needs_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < o->g.size(); ++i) xn->g[i] += o->g[i];
        }
        if (vn->needs_grad) {
            vn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) vn->g[j] += o->g[static_cast<std::size_t>(i) * c + j];
        }
    });
    return Tensor(out);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add_rowvec(matmul(x, w), b); }

Tensor linear_act(const Tensor& x, const Tensor& w, const Tensor& b, double slope) {
    if (x.cols() != w.rows()) throw InvalidArgument("linear_act: inner dimensions differ");
    if (b.rows() != 1 || b.cols() != w.cols()) throw InvalidArgument("linear_act: bias must be [1 x out]");
    const int m = x.rows(), k = x.cols(), n = w.cols();
    auto out = make_node(m, n);
    {
        const double* __restrict__ xp = x.data().data();
        const double* __restrict__ wp = w.data().data();
        const double* __restrict__ bp = b.data().data();
        double* __restrict__ op = out->v.data();
        constexpr int kMaxCols = 1024;
        double acc[kMaxCols];
        if (n <= kMaxCols) {
            for (int i = 0; i < m; ++i) {
                const double* __restrict__ xi = xp + static_cast<std::size_t>(i) * k;
                for (int j = 0; j < n; ++j) acc[j] = bp[j];
                for (int p = 0; p < k; ++p) {
                    const double xv = xi[p];
                    const double* __restrict__ wr = wp + static_cast<std::size_t>(p) * n;
                    for (int j = 0; j < n; ++j) acc[j] += xv * wr[j];
                }
                double* __restrict__ oi = op + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) oi[j] = acc[j] > 0.0 ? acc[j] : slope * acc[j];
            }
        } else {
            for (int i = 0; i < m; ++i) {
                double* __restrict__ oi = op + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) oi[j] = bp[j];
            }
            mm_nn_acc(op, xp, wp, m, k, n);
            for (std::size_t i = 0; i < out->v.size(); ++i)
                op[i] = op[i] > 0.0 ? op[i] : slope * op[i];
        }
    }
    Node* o = out.get();
    // leaky output keeps the pre-activation sign, so the activation gradient
    // can be recovered from the output alone
    wire(out, {x.node(), w.node(), b.node()}, [o, xn = x.node(), wn = w.node(), bn = b.node(), m, k, n,
                                               slope] {
        std::vector<double> dpre(o->g.size());
        for (std::size_t i = 0; i < dpre.size(); ++i)
            dpre[i] = o->g[i] * (o->v[i] > 0.0 ? 1.0 : slope);
        if (xn->needs_grad) {
            xn->ensure_grad();
            mm_nt_acc(xn->g.data(), dpre.data(), wn->v.data(), m, n, k);
        }
        if (wn->needs_grad) {
            wn->ensure_grad();
            mm_tn_acc(wn->g.data(), xn->v.data(), dpre.data(), k, m, n);
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) bn->g[j] += dpre[static_cast<std::size_t>(i) * n + j];
        }
    });
    return Tensor(out);
}

// ---- shape / gather ----

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
    const int r = parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw InvalidArgument("concat_cols: row counts differ");
        total += p.cols();
    }
    auto out = make_node(r, total);
    int off = 0;
    for (const auto& p : parts) {
        const int c = p.cols();
        const auto& pv = p.data();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                out->v[static_cast<std::size_t>(i) * total + off + j] = pv[static_cast<std::size_t>(i) * c + j];
        off += c;
    }
    std::vector<NodePtr> parents;
    for (const auto& p : parts) parents.push_back(p.node());
    Node* o = out.get();
    wire(out, parents, [o, parents, r, total] {
        int off2 = 0;
        for (const auto& pn : parents) {
            const int c = pn->cols;
            if (pn->needs_grad) {
                pn->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        pn->g[static_cast<std::size_t>(i) * c + j] += o->g[static_cast<std::size_t>(i) * total + off2 + j];
            }
            off2 += c;
        }
    });
    return Tensor(out);
}

Tensor slice_cols(const Tensor& x, int first, int count) {
    if (first < 0 || count < 1 || first + count > x.cols())
        throw InvalidArgument("slice_cols: range out of bounds");
    const int r = x.rows(), c = x.cols();
    auto out = make_node(r, count);
    const auto& xv = x.data();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < count; ++j)
            out->v[static_cast<std::size_t>(i) * count + j] = xv[static_cast<std::size_t>(i) * c + first + j];
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), r, c, first, count] {
        xn->ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < count; ++j)
                xn->g[static_cast<std::size_t>(i) * c + first + j] += o->g[static_cast<std::size_t>(i) * count + j];
    });
    return Tensor(out);
}

Tensor gather_rows(const Tensor& x, std::vector<int> idx) {
    const int c = x.cols();
    for (int i : idx)
        if (i < 0 || i >= x.rows()) throw InvalidArgument("gather_rows: index out of range");
    auto out = make_node(static_cast<int>(idx.size()), c);
    const auto& xv = x.data();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double* src = xv.data() + static_cast<std::size_t>(idx[r]) * c;
        double* dst = out->v.data() + r * c;
        for (int j = 0; j < c; ++j) dst[j] = src[j];
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), idx = std::move(idx), c] {
        xn->ensure_grad();
        for (std::size_t r = 0; r < idx.size(); ++r) {
            double* dst = xn->g.data() + static_cast<std::size_t>(idx[r]) * c;
            const double* src = o->g.data() + r * c;
            for (int j = 0; j < c; ++j) dst[j] += src[j];
        }
    });
    return Tensor(out);
}

Tensor reshape(const Tensor& x, int rows, int cols) {
    if (static_cast<std::size_t>(rows) * cols != x.size())
        throw InvalidArgument("reshape: element count mismatch");
    auto out = make_node(rows, cols);
    out->v = x.data();
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node()] {
        xn->ensure_grad();
        for (std::size_t i = 0; i < o->g.size(); ++i) xn->g[i] += o->g[i];
    });
    return Tensor(out);
}

// ---- reductions / grouping ----

Tensor sum_all(const Tensor& x) {
    auto out = make_node(1, 1);
    double s = 0.0;
    for (double v : x.data()) s += v;
    out->v[0] = s;
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node()] {
        xn->ensure_grad();
        for (std::size_t i = 0; i < xn->g.size(); ++i) xn->g[i] += o->g[0];
    });
    return Tensor(out);
}

Tensor mean_all(const Tensor& x) { return mul_scalar(sum_all(x), 1.0 / static_cast<double>(x.size())); }

Tensor group_sum(const Tensor& x, int groups, int k) {
    if (x.rows() != groups * k) throw InvalidArgument("group_sum: rows != groups*k");
    const int c = x.cols();
    auto out = make_node(groups, c);
    const auto& xv = x.data();
    for (int g = 0; g < groups; ++g) {
        double* dst = out->v.data() + static_cast<std::size_t>(g) * c;
        for (int m = 0; m < k; ++m) {
            const double* src = xv.data() + (static_cast<std::size_t>(g) * k + m) * c;
            for (int j = 0; j < c; ++j) dst[j] += src[j];
        }
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), groups, k, c] {
        xn->ensure_grad();
        for (int g = 0; g < groups; ++g) {
            const double* src = o->g.data() + static_cast<std::size_t>(g) * c;
            for (int m = 0; m < k; ++m) {
                double* dst = xn->g.data() + (static_cast<std::size_t>(g) * k + m) * c;
                for (int j = 0; j < c; ++j) dst[j] += src[j];
            }
        }
    });
    return Tensor(out);
}

Tensor segment_sum(const Tensor& x, std::vector<int> offsets) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.rows())
        throw InvalidArgument("segment_sum: bad offsets");
    const int groups = static_cast<int>(offsets.size()) - 1;
    const int c = x.cols();
    auto out = make_node(groups, c);
    const auto& xv = x.data();
    for (int g = 0; g < groups; ++g) {
        double* dst = out->v.data() + static_cast<std::size_t>(g) * c;
        for (int r = offsets[g]; r < offsets[g + 1]; ++r) {
            const double* src = xv.data() + static_cast<std::size_t>(r) * c;
            for (int j = 0; j < c; ++j) dst[j] += src[j];
        }
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), offsets = std::move(offsets), c] {
        xn->ensure_grad();
        const int groups2 = static_cast<int>(offsets.size()) - 1;
        for (int g = 0; g < groups2; ++g) {
            const double* src = o->g.data() + static_cast<std::size_t>(g) * c;
            for (int r = offsets[g]; r < offsets[g + 1]; ++r) {
                double* dst = xn->g.data() + static_cast<std::size_t>(r) * c;
                for (int j = 0; j < c; ++j) dst[j] += src[j];
            }
        }
    });
    return Tensor(out);
}

Tensor group_max(const Tensor& x, int groups, int k) {
    if (x.rows() != groups * k) throw InvalidArgument("group_max: rows != groups*k");
    const int c = x.cols();
    auto out = make_node(groups, c);
    std::vector<int> argmax(static_cast<std::size_t>(groups) * c);
    const auto& xv = x.data();
    for (int g = 0; g < groups; ++g) {
        for (int j = 0; j < c; ++j) {
            int best = g * k;
            double bv = xv[static_cast<std::size_t>(g) * k * c + j];
            for (int m = 1; m < k; ++m) {
                const double v = xv[(static_cast<std::size_t>(g) * k + m) * c + j];
                if (v > bv) {
                    bv = v;
                    best = g * k + m;
                }
            }
            out->v[static_cast<std::size_t>(g) * c + j] = bv;
            argmax[static_cast<std::size_t>(g) * c + j] = best;
        }
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), argmax = std::move(argmax), c] {
        xn->ensure_grad();
        for (std::size_t i = 0; i < argmax.size(); ++i) {
            const int j = static_cast<int>(i % c);
            xn->g[static_cast<std::size_t>(argmax[i]) * c + j] += o->g[i];
        }
    });
    return Tensor(out);
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
    if (s.cols() != 1 || s.rows() != x.rows()) throw InvalidArgument("scale_rows: s must be [R x 1]");
    const int r = x.rows(), c = x.cols();
    auto out = make_node(r, c);
    const auto& xv = x.data();
    const auto& sv = s.data();
    for (int i = 0; i < r; ++i) {
        const double si = sv[i];
        for (int j = 0; j < c; ++j)
            out->v[static_cast<std::size_t>(i) * c + j] = xv[static_cast<std::size_t>(i) * c + j] * si;
    }
    Node* o = out.get();
    wire(out, {x.node(), s.node()}, [o, xn = x.node(), sn = s.node(), r, c] {
        if (xn->needs_grad) {
            xn->ensure_grad();
            for (int i = 0; i < r; ++i) {
                const double si = sn->v[i];
                for (int j = 0; j < c; ++j)
                    xn->g[static_cast<std::size_t>(i) * c + j] += o->g[static_cast<std::size_t>(i) * c + j] * si;
            }
        }
        if (sn->needs_grad) {
            sn->ensure_grad();
            for (int i = 0; i < r; ++i) {
                double acc = 0.0;
                for (int j = 0; j < c; ++j)
                    acc += o->g[static_cast<std::size_t>(i) * c + j] * xn->v[static_cast<std::size_t>(i) * c + j];
                sn->g[i] += acc;
            }
        }
    });
    return Tensor(out);
}

Tensor weighted_group_sum(const Tensor& x, const Tensor& s, int groups, int k) {
    if (x.rows() != groups * k) throw InvalidArgument("weighted_group_sum: rows != groups*k");
    if (s.cols() != 1 || s.rows() != x.rows())
        throw InvalidArgument("weighted_group_sum: s must be [rows x 1]");
    const int c = x.cols();
    auto out = make_node(groups, c);
    {
        const double* __restrict__ xp = x.data().data();
        const double* __restrict__ sp = s.data().data();
        double* __restrict__ op = out->v.data();
        for (int g = 0; g < groups; ++g) {
            double* __restrict__ dst = op + static_cast<std::size_t>(g) * c;
            for (int m = 0; m < k; ++m) {
                const std::size_t r = static_cast<std::size_t>(g) * k + m;
                const double sv = sp[r];
                const double* __restrict__ src = xp + r * c;
                for (int j = 0; j < c; ++j) dst[j] += sv * src[j];
            }
        }
    }
    Node* o = out.get();
    wire(out, {x.node(), s.node()}, [o, xn = x.node(), sn = s.node(), groups, k, c] {
        const bool dx = xn->needs_grad, ds = sn->needs_grad;
        if (dx) xn->ensure_grad();
        if (ds) sn->ensure_grad();
        for (int g = 0; g < groups; ++g) {
            const double* __restrict__ go = o->g.data() + static_cast<std::size_t>(g) * c;
            for (int m = 0; m < k; ++m) {
                const std::size_t r = static_cast<std::size_t>(g) * k + m;
                if (dx) {
                    const double sv = sn->v[r];
                    double* __restrict__ gx = xn->g.data() + r * c;
                    for (int j = 0; j < c; ++j) gx[j] += sv * go[j];
                }
                if (ds) {
                    const double* __restrict__ xv = xn->v.data() + r * c;
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j) acc += xv[j] * go[j];
                    sn->g[r] += acc;
                }
            }
        }
    });
    return Tensor(out);
}

Tensor gated_group_sum(const Tensor& x, const Tensor& gate, int groups, int k) {
    if (x.rows() != groups * k) throw InvalidArgument("gated_group_sum: rows != groups*k");
    check_same_shape(x, gate, "gated_group_sum");
    const int c = x.cols();
    auto out = make_node(groups, c);
    {
        const double* __restrict__ xp = x.data().data();
        const double* __restrict__ gp = gate.data().data();
        double* __restrict__ op = out->v.data();
        for (int g = 0; g < groups; ++g) {
            double* __restrict__ dst = op + static_cast<std::size_t>(g) * c;
            for (int m = 0; m < k; ++m) {
                const std::size_t r = (static_cast<std::size_t>(g) * k + m) * c;
                for (int j = 0; j < c; ++j) dst[j] += gp[r + j] * xp[r + j];
            }
        }
    }
    Node* o = out.get();
    wire(out, {x.node(), gate.node()}, [o, xn = x.node(), gn = gate.node(), groups, k, c] {
        const bool dx = xn->needs_grad, dg = gn->needs_grad;
        if (dx) xn->ensure_grad();
        if (dg) gn->ensure_grad();
        for (int g = 0; g < groups; ++g) {
            const double* __restrict__ go = o->g.data() + static_cast<std::size_t>(g) * c;
            for (int m = 0; m < k; ++m) {
                const std::size_t r = (static_cast<std::size_t>(g) * k + m) * c;
                for (int j = 0; j < c; ++j) {
                    if (dx) xn->g[r + j] += gn->v[r + j] * go[j];
                    if (dg) gn->g[r + j] += xn->v[r + j] * go[j];
                }
            }
        }
    });
    return Tensor(out);
}

Tensor softmax_rows(const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    auto out = make_node(r, c);
    const auto& xv = x.data();
    for (int i = 0; i < r; ++i) {
        const double* xi = xv.data() + static_cast<std::size_t>(i) * c;
        double* yi = out->v.data() + static_cast<std::size_t>(i) * c;
        double mx = xi[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            z += yi[j];
        }
        for (int j = 0; j < c; ++j) yi[j] /= z;
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), r, c] {
        xn->ensure_grad();
        for (int i = 0; i < r; ++i) {
            const double* yi = o->v.data() + static_cast<std::size_t>(i) * c;
            const double* gi = o->g.data() + static_cast<std::size_t>(i) * c;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += yi[j] * gi[j];
            double* xi = xn->g.data() + static_cast<std::size_t>(i) * c;
            for (int j = 0; j < c; ++j) xi[j] += yi[j] * (gi[j] - dot);
        }
    });
    return Tensor(out);
}

Tensor segment_softmax(const Tensor& x, std::vector<int> offsets) {
    if (x.cols() != 1) throw InvalidArgument("segment_softmax: x must be [R x 1]");
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.rows())
        throw InvalidArgument("segment_softmax: bad offsets");
    auto out = make_node(x.rows(), 1);
    const auto& xv = x.data();
    const int groups = static_cast<int>(offsets.size()) - 1;
    for (int g = 0; g < groups; ++g) {
        const int lo = offsets[g], hi = offsets[g + 1];
        if (lo == hi) continue;
        double mx = xv[lo];
        for (int r = lo + 1; r < hi; ++r) mx = std::max(mx, xv[r]);
        double z = 0.0;
        for (int r = lo; r < hi; ++r) {
            out->v[r] = std::exp(xv[r] - mx);
            z += out->v[r];
        }
        for (int r = lo; r < hi; ++r) out->v[r] /= z;
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), offsets = std::move(offsets)] {
        xn->ensure_grad();
        const int groups2 = static_cast<int>(offsets.size()) - 1;
        for (int g = 0; g < groups2; ++g) {
            const int lo = offsets[g], hi = offsets[g + 1];
            double dot = 0.0;
            for (int r = lo; r < hi; ++r) dot += o->v[r] * o->g[r];
            for (int r = lo; r < hi; ++r) xn->g[r] += o->v[r] * (o->g[r] - dot);
        }
    });
    return Tensor(out);
}

Tensor rows_l2norm(const Tensor& x) {
    const int r = x.rows(), c = x.cols();
    auto out = make_node(r, 1);
    const auto& xv = x.data();
    for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            const double v = xv[static_cast<std::size_t>(i) * c + j];
            s += v * v;
        }
        out->v[i] = std::sqrt(s);
    }
    Node* o = out.get();
    wire(out, {x.node()}, [o, xn = x.node(), r, c] {
        xn->ensure_grad();
        for (int i = 0; i < r; ++i) {
            const double n = o->v[i];
            if (n < 1e-30) continue;  // subgradient 0 at the origin
            const double gi = o->g[i] / n;
            for (int j = 0; j < c; ++j)
                xn->g[static_cast<std::size_t>(i) * c + j] += gi * xn->v[static_cast<std::size_t>(i) * c + j];
        }
    });
    return Tensor(out);
}

Tensor rows_dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "rows_dot");
    const int r = a.rows(), c = a.cols();
    auto out = make_node(r, 1);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j)
            s += av[static_cast<std::size_t>(i) * c + j] * bv[static_cast<std::size_t>(i) * c + j];
        out->v[i] = s;
    }
    Node* o = out.get();
    wire(out, {a.node(), b.node()}, [o, an = a.node(), bn = b.node(), r, c] {
        if (an->needs_grad) {
            an->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    an->g[static_cast<std::size_t>(i) * c + j] += o->g[i] * bn->v[static_cast<std::size_t>(i) * c + j];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    bn->g[static_cast<std::size_t>(i) * c + j] += o->g[i] * an->v[static_cast<std::size_t>(i) * c + j];
        }
    });
    return Tensor(out);
}

}  // namespace sf
