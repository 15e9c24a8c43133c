#include "nsrl/planner.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <unordered_map>

namespace nsrl::planner {

namespace {

void check_disjoint(const std::set<std::string>& a, const std::set<std::string>& b,
                    const char* what) {
    for (const auto& s : a)
        if (b.count(s)) throw ModelInconsistencyError(std::string(what) + " overlap on '" + s + "'");
}

}  // namespace

void StripsAction::validate() const {
    check_disjoint(add, del, "add/delete effects");
    check_disjoint(pre_pos, pre_neg, "positive/negative preconditions");
}

void PlanningProblem::validate() const {
    std::set<std::string> universe(atoms.begin(), atoms.end());
    auto member = [&](const std::set<std::string>& s, const char* what) {
        for (const auto& a : s)
            if (!universe.count(a))
                throw UsageError(std::string("planning problem: ") + what + " atom '" + a +
                                 "' is not in the universe");
    };
    member(init, "init");
    member(goal_pos, "goal");
    member(goal_neg, "goal");
    for (const auto& act : actions) {
        act.validate();
        member(act.pre_pos, "precondition");
        member(act.pre_neg, "precondition");
        member(act.add, "effect");
        member(act.del, "effect");
    }
    if (atoms.size() > 64) throw UsageError("planning problem: more than 64 atoms unsupported");
}

namespace {

struct GroundProblem {
    std::vector<uint64_t> pre_pos, pre_neg, add, del;
    uint64_t init, goal_pos, goal_neg;
};

uint64_t to_mask(const std::set<std::string>& s,
                 const std::unordered_map<std::string, int>& index) {
    uint64_t m = 0;
    for (const auto& a : s) m |= uint64_t{1} << index.at(a);
    return m;
}

GroundProblem ground(const PlanningProblem& p) {
    std::unordered_map<std::string, int> index;
    for (size_t i = 0; i < p.atoms.size(); ++i) index[p.atoms[i]] = static_cast<int>(i);
    GroundProblem g;
    for (const auto& a : p.actions) {
        g.pre_pos.push_back(to_mask(a.pre_pos, index));
        g.pre_neg.push_back(to_mask(a.pre_neg, index));
        g.add.push_back(to_mask(a.add, index));
        g.del.push_back(to_mask(a.del, index));
    }
    g.init = to_mask(p.init, index);
    g.goal_pos = to_mask(p.goal_pos, index);
    g.goal_neg = to_mask(p.goal_neg, index);
    return g;
}

}  // namespace

std::optional<Plan> solve(const PlanningProblem& problem) {
    problem.validate();
    const GroundProblem g = ground(problem);
    auto is_goal = [&](uint64_t s) {
        return (s & g.goal_pos) == g.goal_pos && (s & g.goal_neg) == 0;
    };

    // parent state and the action taken to reach each visited state
    std::unordered_map<uint64_t, std::pair<uint64_t, int>> visited;
    visited[g.init] = {g.init, -1};
    std::deque<uint64_t> queue{g.init};
    uint64_t goal_state = g.init;
    bool found = is_goal(g.init);

    while (!found && !queue.empty()) {
        const uint64_t s = queue.front();
        queue.pop_front();
        for (size_t a = 0; a < g.pre_pos.size(); ++a) {
            if ((s & g.pre_pos[a]) != g.pre_pos[a] || (s & g.pre_neg[a]) != 0) continue;
            const uint64_t s2 = (s & ~g.del[a]) | g.add[a];
            if (visited.count(s2)) continue;
            visited[s2] = {s, static_cast<int>(a)};
            if (is_goal(s2)) {
                goal_state = s2;
                found = true;
                break;
            }
            queue.push_back(s2);
        }
    }
    if (!found) return std::nullopt;

    Plan plan;
    for (uint64_t s = goal_state;;) {
        const auto& [parent, action] = visited.at(s);
        if (action < 0) break;
        plan.push_back(problem.actions[static_cast<size_t>(action)].name);
        s = parent;
    }
    std::reverse(plan.begin(), plan.end());
    return plan;
}

bool plan_is_valid(const PlanningProblem& problem, const Plan& plan) {
    std::set<std::string> state = problem.init;
    for (const auto& name : plan) {
        const StripsAction* act = nullptr;
        for (const auto& a : problem.actions)
            if (a.name == name) {
                act = &a;
                break;
            }
        if (!act) return false;
        for (const auto& p : act->pre_pos)
            if (!state.count(p)) return false;
        for (const auto& p : act->pre_neg)
            if (state.count(p)) return false;
        for (const auto& p : act->del) state.erase(p);
        for (const auto& p : act->add) state.insert(p);
    }
    for (const auto& p : problem.goal_pos)
        if (!state.count(p)) return false;
    for (const auto& p : problem.goal_neg)
        if (state.count(p)) return false;
    return true;
}

}  // namespace nsrl::planner
