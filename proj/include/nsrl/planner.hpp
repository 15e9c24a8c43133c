#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nsrl/types.hpp"

namespace nsrl::planner {

struct StripsAction {
    std::string name;
    std::set<std::string> pre_pos, pre_neg;
    std::set<std::string> add, del;

    // add/delete and positive/negative preconditions must not overlap
    void validate() const;

    bool operator==(const StripsAction&) const = default;
};

struct PlanningProblem {
    std::vector<std::string> atoms;  // ground-atom universe
    std::string object = "x";
    std::vector<StripsAction> actions;
    std::set<std::string> init;
    std::set<std::string> goal_pos, goal_neg;

    void validate() const;

    bool operator==(const PlanningProblem&) const = default;
};

using Plan = std::vector<std::string>;

// Breadth-first search over atom-set states; returns a shortest plan or
// nullopt if the goal is unreachable in the (finite) state space.
std::optional<Plan> solve(const PlanningProblem& problem);

// Replays a plan through STRIPS semantics.
bool plan_is_valid(const PlanningProblem& problem, const Plan& plan);

struct PddlText {
    std::string domain;
    std::string problem;
};

// Deterministic STRIPS-subset PDDL (atoms and actions in sorted order).
PddlText emit_pddl(const PlanningProblem& problem, const std::string& domain_name = "learned");

PlanningProblem parse_pddl(const std::string& domain_text, const std::string& problem_text);

}  // namespace nsrl::planner
