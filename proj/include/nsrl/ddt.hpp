#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nsrl/autodiff.hpp"
#include "nsrl/types.hpp"

namespace nsrl::ddt {

// Complete binary soft decision tree.  Internal nodes are stored in level
// order (heap layout): children of node i sit at 2i+1 / 2i+2, the left
// child taking the TRUE branch (sigmoid mass).  Leaves are indexed by the
// depth-length bit string of branch choices, bit 0 = TRUE.
//
// Trees are plain values: evaluation is pure, training mutates a private
// copy.
template <class T>
struct DdtNode {
    Vec<T> w;     // weight per input attribute
    T threshold;  // comparator value c
    T sharpness;  // sigmoid strength gamma > 0
};

template <class T>
struct DdtLeaf {
    Vec<T> logits;  // softmax gives the action-level probabilities
};

template <class T>
struct Ddt {
    int depth = 1;
    std::vector<DdtNode<T>> nodes;   // 2^depth - 1
    std::vector<DdtLeaf<T>> leaves;  // 2^depth
    VecD action_levels;              // strictly increasing

    int input_dim() const { return static_cast<int>(nodes.front().w.size()); }
    int n_actions() const { return static_cast<int>(action_levels.size()); }
    int n_leaves() const { return 1 << depth; }
};

// Logit magnitude used when a leaf distribution is pinned to one level.
inline constexpr double kOneHotLogit = 40.0;

// Default sharpness a crispened tree gets.
inline constexpr double kCrispSharpness = 1e3;

template <class T>
Vec<T> softmax(const Vec<T>& z) {
    using std::exp;
    double m = value_of(z(0));
    for (Eigen::Index i = 1; i < z.size(); ++i) m = std::max(m, value_of(z(i)));
    Vec<T> e(z.size());
    T s(0.0);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        e(i) = exp(z(i) - T(m));  // constant shift, softmax is shift invariant
        s = s + e(i);
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) e(i) = e(i) / s;
    return e;
}

inline double softmax(double) = delete;  // guard against scalar misuse

template <class T>
T branch_probability(const DdtNode<T>& n, const VecD& x) {
    T acc(0.0);
    for (Eigen::Index j = 0; j < n.w.size(); ++j) acc = acc + n.w(j) * T(x(j));
    return sigmoid(n.sharpness * (acc - n.threshold));
}

// Probability of reaching each leaf.  True branch gets sigma(gamma(w.x-c))
// times the parent mass, the sibling the complement; masses sum to one.
template <class T>
Vec<T> path_probabilities(const Ddt<T>& t, const VecD& x) {
    if (x.size() != t.input_dim()) throw UsageError("path_probabilities: dimension mismatch");
    const int internal = (1 << t.depth) - 1;
    std::vector<T> p(static_cast<size_t>(internal + t.n_leaves()));
    p[0] = T(1.0);
    for (int i = 0; i < internal; ++i) {
        const T s = branch_probability(t.nodes[static_cast<size_t>(i)], x);
        p[static_cast<size_t>(2 * i + 1)] = s * p[static_cast<size_t>(i)];
        p[static_cast<size_t>(2 * i + 2)] = (T(1.0) - s) * p[static_cast<size_t>(i)];
    }
    Vec<T> leaf(t.n_leaves());
    for (int i = 0; i < t.n_leaves(); ++i) leaf(i) = p[static_cast<size_t>(internal + i)];
    return leaf;
}

// r_k = sum over leaves of q_leaf^k * p_leaf(x).
template <class T>
Vec<T> action_distribution(const Ddt<T>& t, const VecD& x) {
    const Vec<T> p = path_probabilities(t, x);
    Vec<T> r(t.n_actions());
    for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = T(0.0);
    for (int i = 0; i < t.n_leaves(); ++i) {
        const Vec<T> q = softmax(t.leaves[static_cast<size_t>(i)].logits);
        for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = r(k) + q(k) * p(i);
    }
    return r;
}

// Expected action level under the induced distribution; always inside
// [min level, max level].
template <class T>
T soft_action(const Ddt<T>& t, const VecD& x) {
    const Vec<T> r = action_distribution(t, x);
    T a(0.0);
    for (Eigen::Index k = 0; k < r.size(); ++k) a = a + r(k) * T(t.action_levels(k));
    return a;
}

// Hard tree walk: follow w.x - c > 0 branches, return the argmax level of
// the reached leaf.
double crisp_action(const Ddt<double>& t, const VecD& x);

// Depth-2 compilation of the precooling rule-based controller over the
// observation (T_in, T_out, P_cur, P_fut).  The TRUE subtree repeats the
// root's price test with both leaves pinned to the highest setpoint.
Ddt<double> warm_start_precool(const VecD& levels, double sharpness);

// Snap node weights to a signed one-hot on the dominant attribute, leaves
// to one-hot on their argmax, and set sharpness to crisp_sharpness.
Ddt<double> crispen(const Ddt<double>& t, double crisp_sharpness = kCrispSharpness);

// lambda * sum over nodes of (|w|_p + | |w|_1 - 1 |).
template <class T>
T integer_regularizer(const Ddt<T>& t, int p, double lambda) {
    using std::pow;
    if (p < 2) throw UsageError("integer_regularizer: p must be >= 2");
    if (lambda < 0.0) throw UsageError("integer_regularizer: lambda must be >= 0");
    T total(0.0);
    if (lambda == 0.0) return total;
    for (const auto& n : t.nodes) {
        T sum_p(0.0), sum_1(0.0);
        for (Eigen::Index j = 0; j < n.w.size(); ++j) {
            const T a = abs(n.w(j));
            sum_p = sum_p + pow_int(a, p);
            sum_1 = sum_1 + a;
        }
        total = total + pow(sum_p, 1.0 / p) + abs(sum_1 - T(1.0));
    }
    return T(lambda) * total;
}

Ddt<ad::Var> lift(const Ddt<double>& t, ad::Tape& tape);

// Flat parameter vector in level order: per node (w..., c, log gamma),
// then per leaf the logits.  Sharpness travels in log space so Gaussian
// perturbations keep it positive.
VecD flatten(const Ddt<double>& t);
Ddt<double> unflatten(const Ddt<double>& proto, const VecD& params);
void read_gradients(const Ddt<ad::Var>& t, VecD& out);

Ddt<double> random_ddt(int depth, int input_dim, const VecD& levels, std::mt19937& rng);

// Human-readable indented rule view.
std::string render(const Ddt<double>& t, const std::vector<std::string>& attr_names);

std::string to_json(const Ddt<double>& t);
Ddt<double> from_json(const std::string& text);
void save(const Ddt<double>& t, const std::string& path);
Ddt<double> load(const std::string& path);

}  // namespace nsrl::ddt
