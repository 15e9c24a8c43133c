#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsrl/autodiff.hpp"
#include "nsrl/types.hpp"

namespace nsrl::lnn {

enum class GateKind { And, Or, Not, Implies, Pred };

// Children with weight at or below this are treated as pruned: they drop
// out of the semantics constraints and are removed by crispening.  A child
// with zero weight cannot satisfy the per-input constraint rows (they would
// assert it still drives the output), so the rows only bind active inputs.
inline constexpr double kActiveWeightTol = 0.05;

// Weighted logical gate.  And/Or compute f(s(w.x - theta)) with f = sigmoid
// and s the formula-wide sharpness; Not(x) = 1 - x; Implies(a, b) is an Or
// over (Not(a), b) with its own learnable weights.  Formulas are values and
// evaluation is pure; fitting mutates a private copy.
template <class T>
struct Gate {
    GateKind kind = GateKind::Pred;
    std::string pred;  // predicate name, Pred only
    std::vector<Gate<T>> children;
    Vec<T> weights;  // per child; absent for Not/Pred
    T theta{0.0};

    bool has_params() const {
        return kind == GateKind::And || kind == GateKind::Or || kind == GateKind::Implies;
    }
};

template <class T>
struct Formula {
    Gate<T> root;
    double alpha = 0.95;    // truth threshold, 0.5 < alpha < 1
    double sharpness = 1.0;  // activation scale, annealed during DPC
};

enum class TruthClass { False, Unknown, True };

void check_alpha(double alpha);

inline TruthClass classify(double v, double alpha) {
    check_alpha(alpha);
    if (v >= alpha) return TruthClass::True;
    if (v <= 1.0 - alpha) return TruthClass::False;
    return TruthClass::Unknown;
}

template <class T>
T evaluate_gate(const Gate<T>& g, double sharpness, const std::map<std::string, T>& bindings) {
    switch (g.kind) {
        case GateKind::Pred: {
            auto it = bindings.find(g.pred);
            if (it == bindings.end()) throw UsageError("lnn: unbound predicate '" + g.pred + "'");
            return it->second;
        }
        case GateKind::Not:
            return T(1.0) - evaluate_gate(g.children.front(), sharpness, bindings);
        case GateKind::And:
        case GateKind::Or:
        case GateKind::Implies: {
            T acc(0.0);
            for (size_t j = 0; j < g.children.size(); ++j) {
                T x = evaluate_gate(g.children[j], sharpness, bindings);
                if (g.kind == GateKind::Implies && j == 0) x = T(1.0) - x;
                acc = acc + g.weights(static_cast<Eigen::Index>(j)) * x;
            }
            return sigmoid(T(sharpness) * (acc - g.theta));
        }
    }
    throw UsageError("lnn: corrupt gate");
}

template <class T>
T evaluate(const Formula<T>& f, const std::map<std::string, T>& bindings) {
    return evaluate_gate(f.root, f.sharpness, bindings);
}

// Sum of squared violations of the AND/OR semantics constraints, scoped to
// active children.  Zero iff every inequality holds.  The f^-1 bounds are
// divided by the sharpness since the activation is f(s z).
template <class T>
T gate_residual(const Gate<T>& g, double alpha, double sharpness) {
    T total(0.0);
    if (g.has_params()) {
        const double ct = logit(alpha) / sharpness;  // f^-1(alpha) under f(s z)
        std::vector<size_t> active;
        for (size_t j = 0; j < g.children.size(); ++j)
            if (value_of(g.weights(static_cast<Eigen::Index>(j))) > kActiveWeightTol)
                active.push_back(j);
        T sum_w(0.0);
        for (size_t j : active) sum_w = sum_w + g.weights(static_cast<Eigen::Index>(j));
        if (g.kind == GateKind::And) {
            // one input False means output False (per active input)
            for (size_t i : active) {
                T v = sum_w - g.weights(static_cast<Eigen::Index>(i)) * T(alpha) - g.theta + T(ct);
                T m = max0(v);
                total = total + m * m;
            }
            // all inputs True means output True
            T v = T(ct) - (sum_w * T(alpha) - g.theta);
            T m = max0(v);
            total = total + m * m;
        } else {
            // one input True means output True (per active input)
            for (size_t j : active) {
                T v = T(ct) - (g.weights(static_cast<Eigen::Index>(j)) * T(alpha) - g.theta);
                T m = max0(v);
                total = total + m * m;
            }
            // all inputs False means output False
            T acc(0.0);
            for (size_t j : active)
                acc = acc + (T(1.0) - g.weights(static_cast<Eigen::Index>(j))) * T(alpha);
            T v = acc - g.theta + T(ct);
            T m = max0(v);
            total = total + m * m;
        }
    }
    for (const auto& c : g.children) total = total + gate_residual(c, alpha, sharpness);
    return total;
}

template <class T>
T constraint_residual(const Formula<T>& f) {
    check_alpha(f.alpha);
    return gate_residual(f.root, f.alpha, f.sharpness);
}

// Mutable views of every gate weight and bias, in preorder.
template <class T>
struct ParamRefs {
    std::vector<T*> weights;
    std::vector<T*> thetas;
};

template <class T>
void collect_params(Gate<T>& g, ParamRefs<T>& out) {
    if (g.has_params()) {
        for (Eigen::Index j = 0; j < g.weights.size(); ++j) out.weights.push_back(&g.weights(j));
        out.thetas.push_back(&g.theta);
    }
    for (auto& c : g.children) collect_params(c, out);
}

template <class T>
ParamRefs<T> params(Formula<T>& f) {
    ParamRefs<T> out;
    collect_params(f.root, out);
    return out;
}

Formula<ad::Var> lift(const Formula<double>& f, ad::Tape& tape);

struct Example {
    std::map<std::string, double> bindings;
    double target;  // truth value in [0,1]
};

struct FitConfig {
    double lr = 0.08;
    double lr_decay = 0.9995;  // per epoch
    double max_step = 0.05;    // per-parameter step clip
    int warmup_epochs = 500;   // penalty-free, fixed sharpness
    int epochs = 6000;
    double penalty0 = 0.5;
    double penalty_growth = 1.004;
    double penalty_max = 200.0;
    double sharpness_growth = 1.001;  // annealed like the DPC loop
    double sharpness_max = 200.0;
    int polish_epochs = 800;
    double residual_target = 1e-6;
};

// Three-phase gradient descent.  Warmup minimizes the MSE alone so the
// data can shape the weights while the activations are still responsive
// (a Table-1-feasible gate is saturated away from all-true inputs, which
// would kill the signal).  The main phase ramps the constraint penalty
// and anneals the sharpness upward; annealing matters because an input
// the gate has to ignore otherwise stalls at a fractional weight, caught
// between its semantics row and the data terms.  Weights are clamped to
// [0,1] after every step; the final prune-and-polish phase zeros
// near-inactive weights and lets the biases settle.  Throws FitError if
// the final residual misses the target.
Formula<double> fit(Formula<double> f, const std::vector<Example>& data, const FitConfig& cfg);

// Mean squared error of the formula against a dataset.
double mse(const Formula<double>& f, const std::vector<Example>& data);

// Snap weights to {0,1} (pruning zeros, collapsing single-child And/Or),
// re-solving each bias to the equal-margin crisp value.  A weight away
// from both 0 and 1 by more than tol raises CrispenError.
Formula<double> crispen_formula(const Formula<double>& f, double tol = kActiveWeightTol);

bool is_crisp(const Formula<double>& f);

// Classical evaluation of a crisp formula over boolean bindings.
bool evaluate_classical(const Gate<double>& g, const std::map<std::string, bool>& bindings);
bool evaluate_classical(const Formula<double>& f, const std::map<std::string, bool>& bindings);

// Nested-call template grammar: Name(x) | Not(e) | And(e,...) | Or(e,...)
// | Implies(e,e), each gate optionally annotated [w=(...),theta=...].
// Unannotated gates start with weight 1 on every child and the crisp
// equal-margin bias.
Formula<double> parse_template(const std::string& text, double alpha = 0.95,
                               double sharpness = 1.0);

// Annotated round-trip form, e.g. And[w=(1,0.5),theta=1.2](a(x), b(x)).
std::string serialize(const Formula<double>& f);
Formula<double> parse_formula(const std::string& text);

// Bare Table-3 style text of the structure, no annotations.
std::string template_text(const Formula<double>& f);

// Crisp-limit equal-margin bias for a gate with n unit-weight children.
double crisp_theta(GateKind kind, int n, double alpha);

// Predicate names appearing in the formula.
std::vector<std::string> predicates(const Formula<double>& f);

}  // namespace nsrl::lnn
