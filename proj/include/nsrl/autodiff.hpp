#pragma once

#include <cstddef>
#include <vector>

#include "nsrl/types.hpp"

namespace nsrl::ad {

class Tape;

// Handle to one scalar node on a tape.  A default-constructed Var (or one
// built from a double) is a detached constant: it participates in
// arithmetic but carries no gradient.
class Var {
  public:
    Var() = default;
    Var(double v) : v_(v) {}  // NOLINT: implicit by design, lifts constants

    double value() const { return v_; }
    double grad() const;
    Tape* tape() const { return tape_; }
    int index() const { return idx_; }

  private:
    friend class Tape;
    Var(Tape* tape, int idx, double v) : tape_(tape), idx_(idx), v_(v) {}

    Tape* tape_ = nullptr;
    int idx_ = -1;
    double v_ = 0.0;
};

// Append-only record of a scalar computation.  Every node stores its value
// and the local partial derivatives w.r.t. its (at most two) parents, so a
// single reverse sweep yields all gradients.  Gradients accumulate across
// backward() calls until zero_grad(); fan-out accumulates additively.
//
// A tape has a single owner while under construction.  Independent
// episodes each get their own tape.
class Tape {
  public:
    Var lift(double v) {
        nodes_.push_back({-1, -1, 0.0, 0.0, v});
        grad_.push_back(0.0);
        return Var(this, static_cast<int>(nodes_.size()) - 1, v);
    }

    Var unary(double v, const Var& a, double da) {
        nodes_.push_back({a.index(), -1, da, 0.0, v});
        grad_.push_back(0.0);
        return Var(this, static_cast<int>(nodes_.size()) - 1, v);
    }

    Var binary(double v, const Var& a, double da, const Var& b, double db) {
        nodes_.push_back({a.tape() ? a.index() : -1, b.tape() ? b.index() : -1, da, db, v});
        grad_.push_back(0.0);
        return Var(this, static_cast<int>(nodes_.size()) - 1, v);
    }

    // Reverse sweep from `loss`; adds resulting adjoints into the gradient
    // slots.  Zero gradients between calls unless accumulation is wanted.
    void backward(const Var& loss) {
        if (loss.tape() != this) throw UsageError("backward: loss is not on this tape");
        adjoint_.assign(nodes_.size(), 0.0);
        adjoint_[static_cast<std::size_t>(loss.index())] = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            const double a = adjoint_[i];
            if (a == 0.0) continue;
            const Node& n = nodes_[i];
            if (n.p0 >= 0) adjoint_[static_cast<std::size_t>(n.p0)] += n.d0 * a;
            if (n.p1 >= 0) adjoint_[static_cast<std::size_t>(n.p1)] += n.d1 * a;
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) grad_[i] += adjoint_[i];
    }

    void zero_grad() { grad_.assign(grad_.size(), 0.0); }

    double grad(const Var& v) const {
        if (v.tape() != this) return 0.0;
        return grad_[static_cast<std::size_t>(v.index())];
    }

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        int p0, p1;
        double d0, d1;
        double v;
    };
    std::vector<Node> nodes_;
    std::vector<double> grad_;
    std::vector<double> adjoint_;  // scratch for backward
};

inline double Var::grad() const { return tape_ ? tape_->grad(*this) : 0.0; }

namespace detail {
inline Tape* common_tape(const Var& a, const Var& b) {
    if (a.tape() && b.tape() && a.tape() != b.tape())
        throw UsageError("autodiff: operands belong to different tapes");
    return a.tape() ? a.tape() : b.tape();
}
}  // namespace detail

inline double value_of(const Var& v) { return v.value(); }

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = detail::common_tape(a, b);
    const double v = a.value() + b.value();
    return t ? t->binary(v, a, 1.0, b, 1.0) : Var(v);
}

inline Var operator-(const Var& a, const Var& b) {
    Tape* t = detail::common_tape(a, b);
    const double v = a.value() - b.value();
    return t ? t->binary(v, a, 1.0, b, -1.0) : Var(v);
}

inline Var operator*(const Var& a, const Var& b) {
    Tape* t = detail::common_tape(a, b);
    const double v = a.value() * b.value();
    return t ? t->binary(v, a, b.value(), b, a.value()) : Var(v);
}

inline Var operator/(const Var& a, const Var& b) {
    if (b.value() == 0.0) throw std::domain_error("autodiff: division by zero");
    Tape* t = detail::common_tape(a, b);
    const double v = a.value() / b.value();
    return t ? t->binary(v, a, 1.0 / b.value(), b, -v / b.value()) : Var(v);
}

inline Var operator-(const Var& a) {
    return a.tape() ? a.tape()->unary(-a.value(), a, -1.0) : Var(-a.value());
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

// ReLU; the subgradient at 0 is taken as 0.
inline Var max0(const Var& a) {
    const double v = nsrl::max0(a.value());
    return a.tape() ? a.tape()->unary(v, a, a.value() > 0.0 ? 1.0 : 0.0) : Var(v);
}

inline Var abs(const Var& a) {
    const double v = std::abs(a.value());
    const double d = a.value() > 0.0 ? 1.0 : (a.value() < 0.0 ? -1.0 : 0.0);
    return a.tape() ? a.tape()->unary(v, a, d) : Var(v);
}

inline Var pow_int(const Var& a, int n) {
    const double v = nsrl::pow_int(a.value(), n);
    const double d = n == 0 ? 0.0 : n * nsrl::pow_int(a.value(), n - 1);
    return a.tape() ? a.tape()->unary(v, a, d) : Var(v);
}

// Real power for non-negative bases (used by p-norms).  The derivative at
// exactly 0 is clamped to 0 to keep descent finite.
inline Var pow(const Var& a, double c) {
    if (a.value() < 0.0) throw std::domain_error("pow: negative base");
    const double v = std::pow(a.value(), c);
    double d = c * std::pow(a.value(), c - 1.0);
    if (!std::isfinite(d)) d = 0.0;
    return a.tape() ? a.tape()->unary(v, a, d) : Var(v);
}

inline Var sigmoid(const Var& a) {
    const double s = nsrl::sigmoid(a.value());
    return a.tape() ? a.tape()->unary(s, a, s * (1.0 - s)) : Var(s);
}

inline Var tanh(const Var& a) {
    const double v = std::tanh(a.value());
    return a.tape() ? a.tape()->unary(v, a, 1.0 - v * v) : Var(v);
}

inline Var exp(const Var& a) {
    const double v = std::exp(a.value());
    return a.tape() ? a.tape()->unary(v, a, v) : Var(v);
}

inline Var log(const Var& a) {
    if (a.value() <= 0.0) throw std::domain_error("log: non-positive argument");
    return a.tape() ? a.tape()->unary(std::log(a.value()), a, 1.0 / a.value())
                    : Var(std::log(a.value()));
}

enum class Activation { Identity, Tanh };

// act(W x + b), element-wise.
template <class T>
Vec<T> dense_layer(const Mat<T>& W, const Vec<T>& b, const Vec<T>& x, Activation act) {
    using std::tanh;
    if (W.cols() != x.size() || W.rows() != b.size())
        throw UsageError("dense_layer: dimension mismatch");
    Vec<T> out(W.rows());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        T acc = b(i);
        for (Eigen::Index j = 0; j < W.cols(); ++j) acc = acc + W(i, j) * x(j);
        out(i) = act == Activation::Tanh ? tanh(acc) : acc;
    }
    return out;
}

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
    if (a.size() != b.size()) throw UsageError("dot: dimension mismatch");
    T acc(0.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) acc = acc + a(i) * b(i);
    return acc;
}

}  // namespace nsrl::ad
