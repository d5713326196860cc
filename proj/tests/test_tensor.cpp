#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sceneflow/core/rng.hpp"
#include "sceneflow/core/tensor.hpp"
#include "support/grad_check.hpp"

using namespace sf;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, bool grad = true) {
    std::vector<double> d(static_cast<std::size_t>(r) * c);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    return Tensor::from(std::move(d), r, c, grad);
}

}  // namespace

TEST_CASE("matmul values") {
    Tensor a = Tensor::from({1, 2, 3, 4}, 2, 2);
    Tensor b = Tensor::from({5, 6, 7, 8}, 2, 2);
    Tensor c = matmul(a, b);
    CHECK(c.at(0, 0) == 19);
    CHECK(c.at(0, 1) == 22);
    CHECK(c.at(1, 0) == 43);
    CHECK(c.at(1, 1) == 50);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(7);
    Tensor x = random_tensor(rng, 5, 9, false);
    Tensor y = softmax_rows(x);
    for (int i = 0; i < y.rows(); ++i) {
        double s = 0;
        for (int j = 0; j < y.cols(); ++j) s += y.at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gather and segment ops") {
    Tensor x = Tensor::from({1, 2, 3, 4, 5, 6}, 3, 2);
    Tensor g = gather_rows(x, {2, 0, 2});
    CHECK(g.at(0, 0) == 5);
    CHECK(g.at(2, 1) == 6);

    Tensor s = segment_sum(g, {0, 2, 3});
    CHECK(s.at(0, 0) == 6);  // rows 2 and 0
    CHECK(s.at(1, 1) == 6);

    Tensor m = group_max(x, 1, 3);
    CHECK(m.at(0, 0) == 5);
    CHECK(m.at(0, 1) == 6);
}

TEST_CASE("no-grad mode records nothing") {
    Tensor a = Tensor::from({1, 2}, 1, 2, true);
    NoGradGuard guard;
    Tensor b = mul_scalar(a, 3.0);
    CHECK_FALSE(b.node()->needs_grad);
    CHECK(b.node()->parents.empty());
}

TEST_CASE("gradients of elementwise and matmul ops") {
    Rng rng(11);
    Tensor a = random_tensor(rng, 3, 4);
    Tensor b = random_tensor(rng, 3, 4);
    Tensor w = random_tensor(rng, 4, 2);

    auto f = [&] {
        Tensor h = mul(add(a, b), sub(a, mul_scalar(b, 0.5)));
        Tensor y = matmul(leaky_relu(h, 0.1), w);
        return mean_all(y);
    };
    auto res = sf::test::grad_check(f, {a, b, w});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("gradients of softmax, norms, dots, division") {
    Rng rng(13);
    Tensor x = random_tensor(rng, 4, 5);
    Tensor y = random_tensor(rng, 4, 5);

    auto f = [&] {
        Tensor sm = softmax_rows(x);
        Tensor n = rows_l2norm(add_scalar(y, 0.7));
        Tensor d = rows_dot(sm, y);
        Tensor q = div_elem(d, add_scalar(n, 1.0));
        return sum_all(q);
    };
    auto res = sf::test::grad_check(f, {x, y});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("gradients of gather, concat, slice, scale_rows, segment softmax") {
    Rng rng(17);
    Tensor x = random_tensor(rng, 5, 3);
    Tensor s = random_tensor(rng, 6, 1);

    auto f = [&] {
        Tensor g = gather_rows(x, {0, 4, 4, 1, 2, 3});
        Tensor cc = concat_cols({g, scale_rows(g, s)});
        Tensor sl = slice_cols(cc, 2, 3);
        Tensor logits = rows_dot(sl, sl);
        Tensor w = segment_softmax(logits, {0, 3, 6});
        Tensor agg = segment_sum(scale_rows(sl, w), {0, 3, 6});
        return mean_all(agg);
    };
    auto res = sf::test::grad_check(f, {x, s});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("gradients of group ops and transpose") {
    Rng rng(19);
    Tensor x = random_tensor(rng, 6, 4);
    auto f = [&] {
        Tensor gs = group_sum(x, 2, 3);
        Tensor gm = group_max(x, 2, 3);
        Tensor t = transpose(add(gs, gm));
        return mean_all(mul(t, t));
    };
    auto res = sf::test::grad_check(f, {x});
    CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("fused ops equal their compositions and back-propagate correctly") {
    Rng rng(23);
    Tensor x = random_tensor(rng, 6, 5);
    Tensor w = random_tensor(rng, 5, 3);
    Tensor b = random_tensor(rng, 1, 3);
    Tensor s = random_tensor(rng, 6, 1);
    Tensor g = random_tensor(rng, 6, 3);

    {  // value equivalence
        Tensor fused = linear_act(x, w, b, 0.1);
        Tensor composed = leaky_relu(linear(x, w, b), 0.1);
        for (std::size_t i = 0; i < fused.data().size(); ++i)
            CHECK(fused.data()[i] == doctest::Approx(composed.data()[i]).epsilon(1e-15));

        Tensor ws = weighted_group_sum(composed, s, 2, 3);
        Tensor ws2 = group_sum(scale_rows(composed, s), 2, 3);
        for (std::size_t i = 0; i < ws.data().size(); ++i)
            CHECK(ws.data()[i] == doctest::Approx(ws2.data()[i]).epsilon(1e-15));

        Tensor gg = gated_group_sum(composed, g, 2, 3);
        Tensor gg2 = group_sum(mul(g, composed), 2, 3);
        for (std::size_t i = 0; i < gg.data().size(); ++i)
            CHECK(gg.data()[i] == doctest::Approx(gg2.data()[i]).epsilon(1e-15));
    }
    {  // gradients
        auto f = [&] {
            Tensor h = linear_act(x, w, b, 0.1);
            Tensor a = weighted_group_sum(h, s, 2, 3);
            Tensor c = gated_group_sum(h, g, 2, 3);
            return mean_all(mul(a, c));
        };
        auto res = sf::test::grad_check(f, {x, w, b, s, g});
        CHECK(res.max_rel_err < 1e-6);
    }
}

TEST_CASE("gradient accumulates across reuse of a node") {
    Tensor a = Tensor::from({2.0}, 1, 1, true);
    Tensor y = add(mul(a, a), a);  // y = a^2 + a, dy/da = 2a + 1 = 5
    y.backward();
    CHECK(a.grad()[0] == doctest::Approx(5.0));
}

TEST_CASE("backward twice on separate graphs accumulates into leaves") {
    Tensor a = Tensor::from({1.5}, 1, 1, true);
    mul(a, a).backward();
    mul(a, a).backward();
    CHECK(a.grad()[0] == doctest::Approx(6.0));  // 2*a twice
}
