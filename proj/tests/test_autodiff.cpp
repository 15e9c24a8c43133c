#include <random>

#include "doctest.h"
#include "nsrl/autodiff.hpp"
#include "oracles.hpp"

using namespace nsrl;
using ad::Tape;
using ad::Var;

TEST_CASE("lift and leaf gradients") {
    Tape t;
    Var x = t.lift(3.0);
    CHECK(x.value() == 3.0);
    CHECK(t.lift(0.0).value() == 0.0);

    t.backward(x);
    CHECK(x.grad() == 1.0);  // d x / d x
}

TEST_CASE("arithmetic values and local gradients") {
    Tape t;
    Var a = t.lift(2.0), b = t.lift(3.0);
    Var p = a * b;
    CHECK(p.value() == 6.0);
    t.backward(p);
    CHECK(a.grad() == 3.0);
    CHECK(b.grad() == 2.0);

    Tape t2;
    Var x = t2.lift(-1.5);
    Var r = ad::max0(x);
    CHECK(r.value() == 0.0);
    t2.backward(r);
    CHECK(x.grad() == 0.0);

    Tape t3;
    Var w = t3.lift(0.5);
    CHECK(ad::pow_int(w, 8).value() == doctest::Approx(0.00390625).epsilon(1e-12));
}

TEST_CASE("division and tape-mismatch errors") {
    Tape t;
    Var a = t.lift(1.0), z = t.lift(0.0);
    CHECK_THROWS_AS(a / z, std::domain_error);

    Tape t2;
    Var b = t2.lift(2.0);
    CHECK_THROWS_AS(a + b, UsageError);
}

TEST_CASE("sigmoid") {
    Tape t;
    Var x = t.lift(0.0);
    Var s = ad::sigmoid(x);
    CHECK(s.value() == 0.5);
    t.backward(s);
    CHECK(x.grad() == doctest::Approx(0.25).epsilon(1e-12));

    // 1/(1+e^-10), evaluated independently
    const double expect = 1.0 / (1.0 + std::exp(-10.0));
    CHECK(expect == doctest::Approx(0.9999546).epsilon(1e-7));
    Tape t2;
    CHECK(ad::sigmoid(t2.lift(10.0)).value() == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("backward of composite: sigma(2x) at 0") {
    Tape t;
    Var x = t.lift(0.0);
    Var loss = ad::sigmoid(Var(2.0) * x);
    t.backward(loss);
    CHECK(x.grad() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("backward accumulates over fan-out and is idempotent with zeroing") {
    Tape t;
    Var x = t.lift(1.5);
    Var y = x * x + x;  // dy/dx = 2x + 1 = 4
    t.backward(y);
    const double g1 = x.grad();
    CHECK(g1 == doctest::Approx(4.0).epsilon(1e-12));
    t.backward(y);
    CHECK(x.grad() == doctest::Approx(2.0 * g1).epsilon(1e-12));  // accumulation
    t.zero_grad();
    t.backward(y);
    CHECK(x.grad() == doctest::Approx(g1).epsilon(1e-12));  // idempotent after zeroing
}

TEST_CASE("detached constants participate without gradients") {
    Tape t;
    Var x = t.lift(2.0);
    Var y = 3.0 * x - 1.0;
    CHECK(y.value() == 5.0);
    t.backward(y);
    CHECK(x.grad() == 3.0);
    CHECK(Var(7.0).grad() == 0.0);
}

namespace {

// A small random expression recipe evaluated two ways: on a tape and with
// plain doubles, so finite differences stay independent of the tape.
struct RandomGraph {
    int leaves;
    struct Op {
        int kind;  // 0 add 1 sub 2 mul 3 sigmoid 4 tanh 5 max0-of-diff 6 div
        int a, b;
    };
    std::vector<Op> ops;

    static RandomGraph make(std::mt19937& rng, int leaves, int n_ops) {
        RandomGraph g{leaves, {}};
        std::uniform_int_distribution<int> kind(0, 6);
        for (int i = 0; i < n_ops; ++i) {
            std::uniform_int_distribution<int> pick(0, leaves + i - 1);
            g.ops.push_back({kind(rng), pick(rng), pick(rng)});
        }
        return g;
    }

    template <class T>
    T eval(const std::vector<T>& leaf_vals) const {
        using std::tanh;
        std::vector<T> vals = leaf_vals;
        for (const auto& op : ops) {
            const T& a = vals[static_cast<size_t>(op.a)];
            const T& b = vals[static_cast<size_t>(op.b)];
            T r(0.0);
            switch (op.kind) {
                case 0: r = a + b; break;
                case 1: r = a - b; break;
                case 2: r = a * b; break;
                case 3: r = sigmoid(a); break;
                case 4: r = tanh(a); break;
                case 5: r = max0(a - b - T(0.05)); break;
                case 6: r = a / (b * b + T(1.0)); break;
            }
            vals.push_back(r);
        }
        return vals.back();
    }
};

}  // namespace

TEST_CASE("random 50-node graphs: gradients match central finite differences") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int leaves = 5;
        auto g = RandomGraph::make(rng, leaves, 50);
        VecD x(leaves);
        for (int i = 0; i < leaves; ++i) x(i) = u(rng);

        auto f = [&](const VecD& p) {
            std::vector<double> lv(p.data(), p.data() + p.size());
            return g.eval(lv);
        };

        Tape t;
        std::vector<Var> lv;
        for (int i = 0; i < leaves; ++i) lv.push_back(t.lift(x(i)));
        Var loss = g.eval(lv);
        t.backward(loss);

        for (int i = 0; i < leaves; ++i) {
            const double fd = oracle::central_diff(f, x, i);
            CHECK(oracle::rel_err(lv[static_cast<size_t>(i)].grad(), fd) < 1e-5);
        }
    }
}

TEST_CASE("dense_layer") {
    SUBCASE("identity weights pass through") {
        Tape t;
        Mat<Var> W(2, 2);
        W << t.lift(1.0), t.lift(0.0), t.lift(0.0), t.lift(1.0);
        Vec<Var> b(2), x(2);
        b << t.lift(0.0), t.lift(0.0);
        x << t.lift(0.3), t.lift(-0.7);
        auto y = ad::dense_layer(W, b, x, ad::Activation::Identity);
        CHECK(y(0).value() == 0.3);
        CHECK(y(1).value() == -0.7);
    }
    SUBCASE("1x1 affine") {
        Tape t;
        Mat<Var> W(1, 1);
        W(0, 0) = t.lift(2.0);
        Vec<Var> b(1), x(1);
        b(0) = t.lift(1.0);
        x(0) = t.lift(3.0);
        auto y = ad::dense_layer(W, b, x, ad::Activation::Identity);
        CHECK(y(0).value() == 7.0);
    }
    SUBCASE("dimension mismatch") {
        Mat<Var> W(2, 3);
        Vec<Var> b(2), x(2);
        CHECK_THROWS_AS(ad::dense_layer(W, b, x, ad::Activation::Identity), UsageError);
    }
    SUBCASE("gradient of sum(tanh(Wx+b)) matches finite differences") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const int n = 3, m = 2;
        VecD params(m * n + m + n);
        for (Eigen::Index i = 0; i < params.size(); ++i) params(i) = u(rng);

        auto f = [&](const VecD& p) {
            MatD W(m, n);
            VecD b(m), x(n);
            int k = 0;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) W(i, j) = p(k++);
            for (int i = 0; i < m; ++i) b(i) = p(k++);
            for (int j = 0; j < n; ++j) x(j) = p(k++);
            double s = 0;
            VecD y = (W * x + b).array().tanh();
            for (int i = 0; i < m; ++i) s += y(i);
            return s;
        };

        Tape t;
        std::vector<Var> vars;
        for (Eigen::Index i = 0; i < params.size(); ++i) vars.push_back(t.lift(params(i)));
        Mat<Var> W(m, n);
        Vec<Var> b(m), x(n);
        int k = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) W(i, j) = vars[static_cast<size_t>(k++)];
        for (int i = 0; i < m; ++i) b(i) = vars[static_cast<size_t>(k++)];
        for (int j = 0; j < n; ++j) x(j) = vars[static_cast<size_t>(k++)];
        auto y = ad::dense_layer(W, b, x, ad::Activation::Tanh);
        Var s = Var(0.0);
        for (int i = 0; i < m; ++i) s += y(i);
        t.backward(s);

        for (Eigen::Index i = 0; i < params.size(); ++i) {
            const double fd = oracle::central_diff(f, params, i);
            CHECK(oracle::rel_err(vars[static_cast<size_t>(i)].grad(), fd) < 1e-5);
        }
    }
}

TEST_CASE("per-op gradient checks at random points") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);

    auto check1 = [&](auto fv, auto fd_fn, double lo, double hi, double avoid_band = 0.0) {
        std::uniform_real_distribution<double> dom(lo, hi);
        for (int i = 0; i < 100; ++i) {
            double x0 = dom(rng);
            if (avoid_band > 0.0 && std::abs(x0) < avoid_band) x0 += 2.0 * avoid_band;
            Tape t;
            Var x = t.lift(x0);
            Var y = fv(x);
            t.backward(y);
            VecD p(1);
            p(0) = x0;
            auto f = [&](const VecD& q) { return fd_fn(q(0)); };
            CHECK(oracle::rel_err(x.grad(), oracle::central_diff(f, p, 0)) < 1e-5);
        }
    };

    check1([](Var x) { return ad::sigmoid(x); }, [](double x) { return sigmoid(x); }, -4.0, 4.0);
    check1([](Var x) { return ad::tanh(x); }, [](double x) { return std::tanh(x); }, -3.0, 3.0);
    check1([](Var x) { return ad::exp(x); }, [](double x) { return std::exp(x); }, -2.0, 2.0);
    check1([](Var x) { return ad::log(x); }, [](double x) { return std::log(x); }, 0.1, 5.0);
    check1([](Var x) { return ad::max0(x); }, [](double x) { return max0(x); }, -3.0, 3.0, 0.01);
    check1([](Var x) { return ad::abs(x); }, [](double x) { return std::abs(x); }, -3.0, 3.0, 0.01);
    check1([](Var x) { return ad::pow_int(x, 5); }, [](double x) { return pow_int(x, 5); }, -2.0,
           2.0);
    check1([](Var x) { return ad::pow(x, 0.125); }, [](double x) { return std::pow(x, 0.125); },
           0.05, 3.0);
    check1([](Var x) { return -x; }, [](double x) { return -x; }, -3.0, 3.0);

    // binary ops
    for (int i = 0; i < 100; ++i) {
        double a0 = u(rng), b0 = u(rng);
        if (std::abs(b0) < 0.1) b0 += 0.5;
        VecD p(2);
        p << a0, b0;
        for (int op = 0; op < 4; ++op) {
            auto fd = [&](const VecD& q) {
                switch (op) {
                    case 0: return q(0) + q(1);
                    case 1: return q(0) - q(1);
                    case 2: return q(0) * q(1);
                    default: return q(0) / q(1);
                }
            };
            Tape t;
            Var a = t.lift(a0), b = t.lift(b0);
            Var y = op == 0 ? a + b : op == 1 ? a - b : op == 2 ? a * b : a / b;
            t.backward(y);
            CHECK(oracle::rel_err(a.grad(), oracle::central_diff(fd, p, 0)) < 1e-5);
            CHECK(oracle::rel_err(b.grad(), oracle::central_diff(fd, p, 1)) < 1e-5);
        }
    }
}

TEST_CASE("tape evaluation is deterministic") {
    auto build = [] {
        Tape t;
        Var x = t.lift(0.123456789);
        Var y = ad::sigmoid(x * x - ad::exp(x) / (x + 3.0));
        return y.value();
    };
    CHECK(build() == build());
}
