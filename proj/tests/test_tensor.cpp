#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rtg/autodiff.hpp"
#include "rtg/optim.hpp"
#include "rtg/rng.hpp"
#include "test_util.hpp"

using namespace rtg;
using rtgtest::central_diff;
using rtgtest::max_grad_rel_err;
using rtgtest::rel_err;

TEST_CASE("matmul values") {
    Tape t;
    Var eye = t.constant(Array::mat(2, 2, {1, 0, 0, 1}));
    Var x = t.constant(Array::mat(2, 1, {3.5, -2.0}));
    Var y = matmul(eye, x);
    CHECK(y.value()[0] == 3.5);
    CHECK(y.value()[1] == -2.0);

    Var a = t.constant(Array::mat(2, 2, {1, 2, 3, 4}));
    Var b = t.constant(Array::mat(2, 1, {1, 1}));
    Var c = matmul(a, b);
    CHECK(c.value()[0] == doctest::Approx(3.0));
    CHECK(c.value()[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul shape error names both shapes") {
    Tape t;
    Var a = t.constant(Array::mat(2, 3, std::vector<double>(6, 1.0)));
    Var b = t.constant(Array::mat(2, 2, std::vector<double>(4, 1.0)));
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2,3)"), ShapeError);
    try {
        matmul(a, b);
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("(2,2)") != std::string::npos);
    }
}

TEST_CASE("matmul adjoints match finite differences") {
    Rng rng(7);
    Array a({3, 4});
    Array b({4, 2});
    for (long i = 0; i < a.size(); ++i) a[i] = rng.uniform(-2, 2);
    for (long i = 0; i < b.size(); ++i) b[i] = rng.uniform(-2, 2);

    // d/dA of sum(A*B), holding B fixed
    auto build_a = [&](Tape& t, Var leaf) { return vsum(matmul(leaf, t.constant(b))); };
    CHECK(max_grad_rel_err(a, build_a) < 1e-5);

    auto build_b = [&](Tape& t, Var leaf) { return vsum(matmul(t.constant(a), leaf)); };
    CHECK(max_grad_rel_err(b, build_b) < 1e-5);
}

TEST_CASE("elementwise values") {
    Tape t;
    CHECK(vexp(t.constant(0.0)).scalar() == 1.0);
    CHECK(vsigmoid(t.constant(0.0)).scalar() == 0.5);
    CHECK(vrelu(t.constant(-3.0)).scalar() == 0.0);
    CHECK(vabs(t.constant(-2.5)).scalar() == 2.5);
    CHECK(vclamp(t.constant(5.0), -1.0, 1.0).scalar() == 1.0);
}

TEST_CASE("tanh derivative matches central difference at 0.3") {
    Array x = Array::scalar(0.3);
    Tape t;
    Var leaf = t.leaf(x, true);
    Var y = vtanh(leaf);
    t.backward(y);
    auto eval = [&]() {
        Tape t2;
        return vtanh(t2.leaf(x)).scalar();
    };
    const double fd = central_diff(eval, &x[0], 1e-6);
    CHECK(std::fabs(leaf.adjoint()[0] - fd) < 1e-6);
}

TEST_CASE("broadcast is scalar-with-array only") {
    Tape t;
    Var v = t.constant(Array::vec({1, 2, 3}));
    Var s = t.constant(2.0);
    Var w = v * s;
    CHECK(w.value()[2] == 6.0);
    Var u = t.constant(Array::vec({1, 2}));
    CHECK_THROWS_AS(v + u, ShapeError);
}

TEST_CASE("logsumexp values and stability") {
    Tape t;
    CHECK(logsumexp(t.constant(Array::vec({0, 0}))).scalar() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const double big = logsumexp(t.constant(Array::vec({1000, 1000}))).scalar();
    CHECK(big == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
    CHECK(std::isfinite(big));
}

TEST_CASE("sum gradient is all-ones") {
    Tape t;
    Var leaf = t.leaf(Array::vec({1, 2, 3, 4}), true);
    t.backward(vsum(leaf));
    for (long i = 0; i < 4; ++i) CHECK(leaf.adjoint()[i] == 1.0);
}

TEST_CASE("empty reduction errors") {
    Tape t;
    Var v = t.constant(Array({0}));
    CHECK_THROWS_AS(vsum(v), ShapeError);
    CHECK_THROWS_AS(logsumexp(v), ShapeError);
}

TEST_CASE("axis reductions") {
    Tape t;
    Var m = t.constant(Array::mat(2, 3, {1, 2, 3, 4, 5, 6}));
    Var s0 = vsum(m, 0);
    CHECK(s0.value()[0] == 5.0);
    CHECK(s0.value()[2] == 9.0);
    Var m1 = vmean(m, 1);
    CHECK(m1.value()[0] == doctest::Approx(2.0));
    CHECK(m1.value()[1] == doctest::Approx(5.0));
    Var mx = vmax(m, 1);
    CHECK(mx.value()[1] == 6.0);
}

TEST_CASE("diamond graph accumulates both paths") {
    // f(x) = x * x via two references to the same node; df/dx = 2x
    Array x = Array::scalar(1.7);
    Tape t;
    Var leaf = t.leaf(x, true);
    Var f = leaf * leaf;
    t.backward(f);
    CHECK(leaf.adjoint()[0] == doctest::Approx(2 * 1.7).epsilon(1e-14));
}

TEST_CASE("every differentiable op matches finite differences on random inputs") {
    Rng rng(11);
    struct Case {
        const char* name;
        std::function<Var(Tape&, Var)> build;
        // keep inputs inside the op's comfortable domain
        double lo, hi;
    };
    std::vector<Case> cases = {
        {"exp", [](Tape&, Var x) { return vsum(vexp(x)); }, -2, 2},
        {"log", [](Tape&, Var x) { return vsum(vlog(x)); }, 0.1, 2},
        {"tanh", [](Tape&, Var x) { return vsum(vtanh(x)); }, -2, 2},
        {"sigmoid", [](Tape&, Var x) { return vsum(vsigmoid(x)); }, -2, 2},
        {"relu", [](Tape&, Var x) { return vsum(vrelu(x)); }, 0.1, 2},
        {"cos", [](Tape&, Var x) { return vsum(vcos(x)); }, -2, 2},
        {"sin", [](Tape&, Var x) { return vsum(vsin(x)); }, -2, 2},
        {"cosh", [](Tape&, Var x) { return vsum(vcosh(x)); }, -2, 2},
        {"sinh", [](Tape&, Var x) { return vsum(vsinh(x)); }, -2, 2},
        {"sqrt", [](Tape&, Var x) { return vsum(vsqrt(x)); }, 0.1, 2},
        {"abs", [](Tape&, Var x) { return vsum(vabs(x)); }, 0.1, 2},
        {"clamp", [](Tape&, Var x) { return vsum(vclamp(x, -1.5, 1.5)); }, -1.2, 1.2},
        {"acos", [](Tape&, Var x) { return vsum(vacos(x)); }, -0.8, 0.8},
        {"acosh", [](Tape&, Var x) { return vsum(vacosh(x)); }, 1.2, 2},
        {"atan", [](Tape&, Var x) { return vsum(vatan(x)); }, -2, 2},
        {"atanh", [](Tape&, Var x) { return vsum(vatanh(x)); }, -0.8, 0.8},
        {"mul", [](Tape& t, Var x) { return vsum(x * t.constant(1.3)); }, -2, 2},
        {"div", [](Tape& t, Var x) { return vsum(t.constant(2.0) / x); }, 0.5, 2},
        {"mean", [](Tape&, Var x) { return vmean(x); }, -2, 2},
        {"logsumexp", [](Tape&, Var x) { return logsumexp(x); }, -2, 2},
        {"dot", [](Tape&, Var x) { return dot(x, x); }, -2, 2},
        {"slice", [](Tape&, Var x) { return vsum(slice(x, 1, 3)); }, -2, 2},
        {"concat",
         [](Tape&, Var x) { return vsum(concat(slice(x, 0, 2), slice(x, 2, 3)) * 2.0); }, -2, 2},
        {"interleave2",
         [](Tape&, Var x) { return vsum(interleave2(slice(x, 0, 2), slice(x, 2, 2)) * 1.5); },
         -2, 2},
    };
    for (auto& c : cases) {
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            Array x({5});
            for (long i = 0; i < 5; ++i) x[i] = rng.uniform(c.lo, c.hi);
            worst = std::max(worst, max_grad_rel_err(x, c.build));
        }
        INFO("op = ", c.name);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("adam minimizes a quadratic") {
    ParamStore store;
    Param& x = store.create("x", Array::scalar(1.0));
    Adam adam({.lr = 0.05});
    for (int i = 0; i < 200; ++i) {
        Tape t;
        Var v = t.param(x);
        t.backward(v * v);
        adam.step(store);
    }
    CHECK(std::fabs(x.value[0]) < 1e-2);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    ParamStore store;
    Param& x = store.create("x", Array::scalar(3.0));
    Adam adam({.lr = 0.1});
    adam.step(store);  // grad is zero
    CHECK(x.value[0] == 3.0);
}

TEST_CASE("adam: NaN gradient skips the step and raises the warning flag") {
    ParamStore store;
    Param& x = store.create("x", Array::scalar(3.0));
    x.grad[0] = std::nan("");
    Adam adam({.lr = 0.1});
    adam.step(store);
    CHECK(x.value[0] == 3.0);
    CHECK(adam.saw_nonfinite_gradient());
}

TEST_CASE("identical seed gives bitwise-identical trajectories") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        ParamStore store;
        Param& w = store.create("w", Array({4}));
        for (long i = 0; i < 4; ++i) w.value[i] = rng.uniform(-1, 1);
        Adam adam({.lr = 0.01});
        for (int s = 0; s < 50; ++s) {
            Tape t;
            Var v = t.param(w);
            Array probe({4});
            for (long i = 0; i < 4; ++i) probe[i] = rng.uniform(-1, 1);
            t.backward(dot(vtanh(v), t.constant(probe)));
            adam.step(store);
        }
        return std::vector<double>(w.value.data(), w.value.data() + 4);
    };
    auto a = run(42);
    auto b = run(42);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("param leaf is shared within a tape") {
    ParamStore store;
    Param& x = store.create("x", Array::scalar(2.0));
    Tape t;
    Var a = t.param(x);
    Var b = t.param(x);
    CHECK(a.node() == b.node());
    t.backward(a * b);  // d(x^2)/dx = 2x = 4
    CHECK(x.grad[0] == doctest::Approx(4.0));
}
