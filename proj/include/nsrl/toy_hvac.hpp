#pragma once

#include "nsrl/autodiff.hpp"
#include "nsrl/types.hpp"

namespace nsrl::sim {

// Tiny differentiable cooling process: full control drops the temperature
// one unit per step, no control lets it creep up 0.1; running costs the
// current power price and temperatures above the comfort limit cost
// discomfort_weight per unit of overshoot.
struct ToyConfig {
    int horizon = 10;
    double start_temp = 5.0;
    double comfort_limit = 2.0;
    double discomfort_weight = 5.0;
    double base_price = 1.0;
    double spike_price = 20.0;
    int spike_step = 1;
};

enum class ToyScenario { Uniform, Spike };

ToyScenario toy_scenario_from_string(const std::string& name);

inline VecD toy_price_path(ToyScenario scenario, const ToyConfig& cfg) {
    if (cfg.horizon <= 0) throw ConfigError("toy hvac: horizon must be positive");
    VecD prices = VecD::Constant(cfg.horizon, cfg.base_price);
    if (scenario == ToyScenario::Spike) {
        if (cfg.spike_step < 0 || cfg.spike_step >= cfg.horizon)
            throw ConfigError("toy hvac: spike step outside horizon");
        prices(cfg.spike_step) = cfg.spike_price;
    }
    return prices;
}

template <class T>
struct ToyStep {
    T temp;  // temperature after the step
    T cost;  // price * u + discomfort
};

// Convex relaxation of the on/off dynamics; exact at u in {0,1}.
template <class T>
ToyStep<T> toy_step(const T& temp, const T& u, double price, const ToyConfig& cfg) {
    const double uv = value_of(u);
    if (uv < 0.0 || uv > 1.0) throw UsageError("toy hvac: control must lie in [0,1]");
    const T next = temp - u * T(1.0) + (T(1.0) - u) * T(0.1);
    const T cost = u * T(price) + T(cfg.discomfort_weight) * max0(next - T(cfg.comfort_limit));
    return {next, cost};
}

}  // namespace nsrl::sim
