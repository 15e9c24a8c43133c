#include "nsrl/building.hpp"

#include <cmath>
#include <json.hpp>

#include "nsrl/io.hpp"
#include "nsrl/toy_hvac.hpp"

namespace nsrl::sim {

using nlohmann::json;

ToyScenario toy_scenario_from_string(const std::string& name) {
    if (name == "uniform") return ToyScenario::Uniform;
    if (name == "spike") return ToyScenario::Spike;
    throw ConfigError("unknown toy scenario '" + name + "' (expected uniform or spike)");
}

double WeatherModel::outdoor(int month, double hour) const {
    if (month < 1 || month > 12) throw UsageError("weather: month must be in 1..12");
    const double mean = monthly_mean[static_cast<size_t>(month - 1)];
    return mean + amplitude * std::sin(2.0 * M_PI * (hour - 15.0) / 24.0);
}

void EnvConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw ConfigError(std::string("env config: ") + what + " must be > 0");
    };
    positive(thermal.r_c_per_kw, "R");
    positive(thermal.c_kwh_per_c, "C");
    positive(thermal.cop, "COP");
    positive(thermal.max_cool_kw, "max cooling power");
    positive(thermal.dt_hours, "dt");
    positive(tariff.base, "base price");
    positive(comfort.deadband, "deadband");
    if (comfort.lambda < 0.0) throw ConfigError("env config: lambda must be >= 0");
    if (thermal.internal_gain_kw < 0.0)
        throw ConfigError("env config: internal gains must be >= 0");
    if (days <= 0 || fut_hours <= 0 || lookahead_hours <= 0)
        throw ConfigError("env config: horizon fields must be positive");
    // contraction of the free dynamics
    const double ratio = thermal.dt_hours / (thermal.r_c_per_kw * thermal.c_kwh_per_c);
    if (ratio >= 1.0) throw ConfigError("env config: dt/(R*C) must be < 1");
    if (std::fmod(24.0, thermal.dt_hours) != 0.0)
        throw ConfigError("env config: dt must divide 24 hours evenly");
}

StepOutcome building_step(const BuildingState& s, double setpoint, const EnvConfig& cfg,
                          int month) {
    if (setpoint < kSetpointMin || setpoint > kSetpointMax)
        throw UsageError("building_step: setpoint outside [10, 35] C");
    cfg.validate();
    const ThermalParams& th = cfg.thermal;

    const double t_out = cfg.weather.outdoor(month, s.hour);
    const double drift = th.dt_hours * (t_out - s.t_in) / (th.r_c_per_kw * th.c_kwh_per_c) +
                         th.dt_hours * th.internal_gain_kw / th.c_kwh_per_c;
    double t_in = s.t_in + drift;

    double energy_kwh = 0.0;
    if (t_in > setpoint) {
        const double needed_thermal = (t_in - setpoint) * th.c_kwh_per_c;
        const double max_thermal = th.max_cool_kw * th.dt_hours * th.cop;
        const double delivered = std::min(needed_thermal, max_thermal);
        t_in -= delivered / th.c_kwh_per_c;
        energy_kwh = delivered / th.cop;
    }

    const double price = cfg.tariff.price(s.hour);
    const double over = std::abs(t_in - cfg.comfort.center) - cfg.comfort.deadband;
    const double discomfort = cfg.comfort.lambda * max0(over) * max0(over);
    const double reward = -(price * energy_kwh) - discomfort;

    BuildingState next = s;
    next.t_in = t_in;
    next.t_out = t_out;
    next.hour = (s.hour + static_cast<int>(th.dt_hours)) % 24;
    next.day = s.day + (s.hour + static_cast<int>(th.dt_hours)) / 24;
    next.cum_cost = s.cum_cost - reward;
    next.last_power_kw = energy_kwh / th.dt_hours;
    return {next, reward, energy_kwh, price};
}

double future_price(const Tariff& tariff, int hour, int fut_hours) {
    double sum = 0.0;
    for (int k = 1; k <= fut_hours; ++k) sum += tariff.price((hour + k) % 24);
    return sum / fut_hours;
}

ObsProfile obs_profile_from_string(const std::string& name) {
    if (name == "rbc") return ObsProfile::Rbc;
    if (name == "ddt") return ObsProfile::Ddt;
    if (name == "full") return ObsProfile::Full;
    throw ConfigError("unknown observation profile '" + name + "'");
}

std::vector<std::string> obs_names(ObsProfile profile, const EnvConfig& cfg) {
    switch (profile) {
        case ObsProfile::Rbc: return {"P_cur", "P_fut"};
        case ObsProfile::Ddt: return {"T_in", "T_out", "P_cur", "P_fut"};
        case ObsProfile::Full: {
            std::vector<std::string> names = {"T_in", "T_out", "hour",  "day",
                                              "cost", "power", "P_cur", "P_fut"};
            for (int k = 1; k <= cfg.lookahead_hours; ++k)
                names.push_back("price_t+" + std::to_string(k));
            return names;
        }
    }
    throw UsageError("obs_names: bad profile");
}

VecD observe(const BuildingState& s, ObsProfile profile, const EnvConfig& cfg) {
    const double p_cur = cfg.tariff.price(s.hour);
    const double p_fut = future_price(cfg.tariff, s.hour, cfg.fut_hours);
    switch (profile) {
        case ObsProfile::Rbc: {
            VecD o(2);
            o << p_cur, p_fut;
            return o;
        }
        case ObsProfile::Ddt: {
            VecD o(4);
            o << s.t_in, s.t_out, p_cur, p_fut;
            return o;
        }
        case ObsProfile::Full: {
            VecD o(8 + cfg.lookahead_hours);
            o(0) = s.t_in;
            o(1) = s.t_out;
            o(2) = s.hour;
            o(3) = s.day;
            o(4) = s.cum_cost;
            o(5) = s.last_power_kw;
            o(6) = p_cur;
            o(7) = p_fut;
            for (int k = 1; k <= cfg.lookahead_hours; ++k)
                o(7 + k) = cfg.tariff.price((s.hour + k) % 24);
            return o;
        }
    }
    throw UsageError("observe: bad profile");
}

EpisodeTrace run_episode(const EnvConfig& cfg, const Controller& controller, int month) {
    cfg.validate();
    const int steps_per_day = static_cast<int>(24.0 / cfg.thermal.dt_hours);
    const int total_steps = cfg.days * steps_per_day;

    BuildingState s;
    s.t_in = cfg.comfort.center;
    s.t_out = cfg.weather.outdoor(month, 0.0);

    EpisodeTrace trace;
    for (int t = 0; t < total_steps; ++t) {
        const VecD obs = observe(s, controller.profile, cfg);
        double setpoint = controller.act(obs);
        const bool clamp = setpoint < kSetpointMin || setpoint > kSetpointMax;
        if (clamp) setpoint = std::clamp(setpoint, kSetpointMin, kSetpointMax);

        const StepOutcome out = building_step(s, setpoint, cfg, month);
        trace.step.push_back(t);
        trace.hour.push_back(s.hour);
        trace.t_out.push_back(out.state.t_out);
        trace.t_in.push_back(out.state.t_in);
        trace.setpoint.push_back(setpoint);
        trace.price.push_back(out.price);
        trace.energy_kwh.push_back(out.energy_kwh);
        trace.step_cost.push_back(-out.reward);
        trace.clamped.push_back(clamp);
        trace.total_cost += -out.reward;
        s = out.state;
    }
    return trace;
}

std::string trace_to_csv(const EpisodeTrace& trace) {
    io::Csv csv({"step", "hour", "T_out", "T_in", "setpoint", "price", "energy_kwh", "step_cost",
                 "clamped"});
    for (size_t i = 0; i < trace.step.size(); ++i)
        csv.add_row({io::csv_field(trace.step[i]), io::csv_field(trace.hour[i]),
                     io::csv_field(trace.t_out[i]), io::csv_field(trace.t_in[i]),
                     io::csv_field(trace.setpoint[i]), io::csv_field(trace.price[i]),
                     io::csv_field(trace.energy_kwh[i]), io::csv_field(trace.step_cost[i]),
                     trace.clamped[i] ? "1" : "0"});
    return csv.text();
}

EnvConfig env_from_json_text(const std::string& text) {
    json j = json::parse(text);
    EnvConfig cfg;
    if (j.contains("thermal")) {
        const json& t = j["thermal"];
        if (t.contains("R")) cfg.thermal.r_c_per_kw = t["R"].get<double>();
        if (t.contains("C")) cfg.thermal.c_kwh_per_c = t["C"].get<double>();
        if (t.contains("COP")) cfg.thermal.cop = t["COP"].get<double>();
        if (t.contains("max_cool_kw")) cfg.thermal.max_cool_kw = t["max_cool_kw"].get<double>();
        if (t.contains("dt_hours")) cfg.thermal.dt_hours = t["dt_hours"].get<double>();
        if (t.contains("internal_gain_kw"))
            cfg.thermal.internal_gain_kw = t["internal_gain_kw"].get<double>();
    }
    if (j.contains("tariff") && j["tariff"].contains("base"))
        cfg.tariff.base = j["tariff"]["base"].get<double>();
    if (j.contains("comfort")) {
        const json& c = j["comfort"];
        if (c.contains("center")) cfg.comfort.center = c["center"].get<double>();
        if (c.contains("deadband")) cfg.comfort.deadband = c["deadband"].get<double>();
        if (c.contains("lambda")) cfg.comfort.lambda = c["lambda"].get<double>();
    }
    if (j.contains("weather")) {
        const json& w = j["weather"];
        if (w.contains("monthly_mean")) {
            auto means = w["monthly_mean"].get<std::vector<double>>();
            if (means.size() != 12) throw ConfigError("env config: monthly_mean needs 12 entries");
            std::copy(means.begin(), means.end(), cfg.weather.monthly_mean.begin());
        }
        if (w.contains("amplitude")) cfg.weather.amplitude = w["amplitude"].get<double>();
    }
    if (j.contains("days")) cfg.days = j["days"].get<int>();
    if (j.contains("fut_hours")) cfg.fut_hours = j["fut_hours"].get<int>();
    if (j.contains("lookahead_hours")) cfg.lookahead_hours = j["lookahead_hours"].get<int>();
    cfg.validate();
    return cfg;
}

std::string env_to_json_text(const EnvConfig& cfg) {
    json j;
    j["thermal"] = {{"R", cfg.thermal.r_c_per_kw},
                    {"C", cfg.thermal.c_kwh_per_c},
                    {"COP", cfg.thermal.cop},
                    {"max_cool_kw", cfg.thermal.max_cool_kw},
                    {"dt_hours", cfg.thermal.dt_hours},
                    {"internal_gain_kw", cfg.thermal.internal_gain_kw}};
    j["tariff"] = {{"base", cfg.tariff.base}};
    j["comfort"] = {{"center", cfg.comfort.center},
                    {"deadband", cfg.comfort.deadband},
                    {"lambda", cfg.comfort.lambda}};
    j["weather"] = {{"monthly_mean", cfg.weather.monthly_mean}, {"amplitude", cfg.weather.amplitude}};
    j["days"] = cfg.days;
    j["fut_hours"] = cfg.fut_hours;
    j["lookahead_hours"] = cfg.lookahead_hours;
    return j.dump(2) + "\n";
}

EnvConfig load_env(const std::string& path) { return env_from_json_text(io::read_file(path)); }

}  // namespace nsrl::sim
