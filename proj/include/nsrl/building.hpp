#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "nsrl/types.hpp"

namespace nsrl::sim {

// Single-zone 1R1C thermal model with an ideal cooling actuator and
// time-of-use pricing (10x base between noon and 18:00).
struct ThermalParams {
    double r_c_per_kw = 2.0;    // envelope resistance
    double c_kwh_per_c = 2.0;   // heat capacity
    double cop = 3.0;
    double max_cool_kw = 5.0;   // electric
    double dt_hours = 1.0;
    double internal_gain_kw = 2.5;  // occupants and equipment; 0 disables
};

struct Tariff {
    double base = 0.2;  // currency per kWh
    static constexpr double kPeakMultiplier = 10.0;
    static constexpr double kPeakStart = 12.0, kPeakEnd = 18.0;  // half-open window

    double price(double hour) const {
        return hour >= kPeakStart && hour < kPeakEnd ? base * kPeakMultiplier : base;
    }
};

struct Comfort {
    double center = 22.0;
    double deadband = 1.0;
    double lambda = 0.1;
};

struct WeatherModel {
    std::array<double, 12> monthly_mean = {13.0, 13.5, 14.5, 16.0, 18.5, 22.0,
                                           25.0, 24.5, 21.5, 18.0, 15.0, 13.0};
    double amplitude = 4.0;

    double outdoor(int month, double hour) const;
};

struct EnvConfig {
    ThermalParams thermal;
    Tariff tariff;
    Comfort comfort;
    WeatherModel weather;
    int days = 30;
    int fut_hours = 3;        // averaging horizon of the "future price" signal
    int lookahead_hours = 6;  // exact price lookahead in the FULL profile

    void validate() const;
};

struct BuildingState {
    double t_in = 22.0;
    double t_out = 0.0;
    int hour = 0;
    int day = 1;
    double cum_cost = 0.0;
    double last_power_kw = 0.0;
};

struct StepOutcome {
    BuildingState state;
    double reward;
    double energy_kwh;  // electric
    double price;
};

// Free drift toward outdoor (plus internal gains), then ideal cooling down
// to the setpoint, capped by the actuator power.
StepOutcome building_step(const BuildingState& s, double setpoint, const EnvConfig& cfg,
                          int month);

double future_price(const Tariff& tariff, int hour, int fut_hours);

enum class ObsProfile { Rbc, Ddt, Full };

ObsProfile obs_profile_from_string(const std::string& name);
std::vector<std::string> obs_names(ObsProfile profile, const EnvConfig& cfg);
VecD observe(const BuildingState& s, ObsProfile profile, const EnvConfig& cfg);

struct Controller {
    std::string name;
    ObsProfile profile = ObsProfile::Rbc;
    std::function<double(const VecD&)> act;
};

struct EpisodeTrace {
    std::vector<int> step, hour;
    std::vector<double> t_out, t_in, setpoint, price, energy_kwh, step_cost;
    std::vector<bool> clamped;
    double total_cost = 0.0;
};

inline constexpr double kSetpointMin = 10.0, kSetpointMax = 35.0;

// 30 days x (24 / dt) steps; controller outputs outside the setpoint
// bounds are clamped and flagged in the trace.
EpisodeTrace run_episode(const EnvConfig& cfg, const Controller& controller, int month);

std::string trace_to_csv(const EpisodeTrace& trace);

EnvConfig env_from_json_text(const std::string& text);
std::string env_to_json_text(const EnvConfig& cfg);
EnvConfig load_env(const std::string& path);

}  // namespace nsrl::sim
