#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nsrl {

// Dense types, templated on scalar so the same code runs on plain doubles
// and on autodiff variables.
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using VecD = Vec<double>;
using MatD = Mat<double>;

// Error taxonomy shared across modules.  CLI maps these onto exit codes.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GroundingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleAssignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CrispenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelInconsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
    double residual;
    FitError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
};

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& what, int line_ = -1, int column_ = -1)
        : std::runtime_error(what), line(line_), column(column_) {}
};
struct UnsupportedFeatureError : ParseError {
    using ParseError::ParseError;
};

// Scalar helpers on plain doubles.  Autodiff overloads with the same names
// live in nsrl::ad and are picked up by ADL, so templated code can call
// them unqualified.
inline double value_of(double x) { return x; }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double max0(double x) { return x > 0.0 ? x : 0.0; }

inline double abs(double x) { return x < 0.0 ? -x : x; }

inline double pow_int(double x, int n) {
    if (n < 0) {
        if (x == 0.0) throw std::domain_error("pow_int: zero base, negative exponent");
        return 1.0 / pow_int(x, -n);
    }
    double r = 1.0, b = x;
    for (int k = n; k > 0; k >>= 1) {
        if (k & 1) r *= b;
        b *= b;
    }
    return r;
}

// Logit; inverse of the sigmoid activation on (0,1).
inline double logit(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::domain_error("logit: argument outside (0,1)");
    return std::log(p / (1.0 - p));
}

}  // namespace nsrl
