#pragma once

// Independent oracles used by unit and acceptance tests.  Everything here
// is deliberately written without touching the implementation paths it
// checks: plain-double finite differences, an integer re-implementation of
// the toy HVAC process, exhaustive schedule search, a brute-force plan
// enumerator, and the rule-based controller restated from its three rules.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsrl/planner.hpp"
#include "nsrl/types.hpp"

namespace oracle {

// Central finite difference d f / d x_i at x.
inline double central_diff(const std::function<double(const nsrl::VecD&)>& f, nsrl::VecD x,
                           Eigen::Index i, double h = 1e-5) {
    const double xi = x(i);
    x(i) = xi + h;
    const double fp = f(x);
    x(i) = xi - h;
    const double fm = f(x);
    x(i) = xi;
    return (fp - fm) / (2.0 * h);
}

// Scaled relative error, the usual gradient-check metric.
inline double rel_err(double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}

// The precooling rule-based controller, restated directly from its rules.
inline double rbc_reference(double p_cur, double p_fut) {
    if (p_cur > 1.5) return 30.0;
    if (p_fut > 1.5) return 15.0;
    return 20.0;
}

// Integer/double re-implementation of the toy HVAC step for crisp on/off
// controls.  Mirrors the process description, not the library code.
struct ToyOracleStep {
    double temp;
    double cost;
};
inline ToyOracleStep toy_step_int(double temp, int u, double price, double comfort_limit,
                                  double discomfort_weight) {
    const double t_next = u == 1 ? temp - 1.0 : temp + 0.1;
    const double over = t_next - comfort_limit;
    const double cost = (u == 1 ? price : 0.0) + discomfort_weight * (over > 0.0 ? over : 0.0);
    return {t_next, cost};
}

inline double toy_schedule_cost(uint32_t schedule, int horizon, double t0,
                                const std::vector<double>& prices, double comfort_limit,
                                double discomfort_weight) {
    double temp = t0, total = 0.0;
    for (int t = 0; t < horizon; ++t) {
        const int u = (schedule >> t) & 1u;
        const auto s = toy_step_int(temp, u, prices[static_cast<size_t>(t)], comfort_limit,
                                    discomfort_weight);
        temp = s.temp;
        total += s.cost;
    }
    return total;
}

// Exhaustive minimum over all 2^horizon crisp schedules.
struct BestSchedule {
    uint32_t schedule;
    double cost;
};
inline BestSchedule toy_best_schedule(int horizon, double t0, const std::vector<double>& prices,
                                      double comfort_limit, double discomfort_weight) {
    BestSchedule best{0, std::numeric_limits<double>::infinity()};
    for (uint32_t s = 0; s < (1u << horizon); ++s) {
        const double c =
            toy_schedule_cost(s, horizon, t0, prices, comfort_limit, discomfort_weight);
        if (c < best.cost) best = {s, c};
    }
    return best;
}

// Brute-force plan search: enumerate all action sequences up to max_len and
// return the length of the shortest goal-achieving one.
inline bool strips_applicable(const nsrl::planner::StripsAction& a,
                              const std::set<std::string>& state) {
    for (const auto& p : a.pre_pos)
        if (!state.count(p)) return false;
    for (const auto& p : a.pre_neg)
        if (state.count(p)) return false;
    return true;
}

inline std::set<std::string> strips_apply(const nsrl::planner::StripsAction& a,
                                          std::set<std::string> state) {
    for (const auto& p : a.del) state.erase(p);
    for (const auto& p : a.add) state.insert(p);
    return state;
}

inline bool strips_goal(const nsrl::planner::PlanningProblem& pr,
                        const std::set<std::string>& state) {
    for (const auto& p : pr.goal_pos)
        if (!state.count(p)) return false;
    for (const auto& p : pr.goal_neg)
        if (state.count(p)) return false;
    return true;
}

inline std::optional<int> brute_force_plan_length(const nsrl::planner::PlanningProblem& pr,
                                                  int max_len) {
    if (strips_goal(pr, pr.init)) return 0;
    std::vector<std::set<std::string>> frontier{pr.init};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::set<std::string>> next;
        for (const auto& st : frontier) {
            for (const auto& a : pr.actions) {
                if (!strips_applicable(a, st)) continue;
                auto st2 = strips_apply(a, st);
                if (strips_goal(pr, st2)) return len;
                next.push_back(std::move(st2));
            }
        }
        frontier = std::move(next);
        if (frontier.empty()) return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace oracle
