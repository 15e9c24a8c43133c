#include <random>

#include "doctest.h"
#include "nsrl/planner.hpp"
#include "oracles.hpp"

using namespace nsrl;
using planner::PlanningProblem;
using planner::StripsAction;

namespace {

PlanningProblem pull_switch_problem() {
    StripsAction a;
    a.name = "pull_switch";
    a.pre_pos = {"cold"};
    a.del = {"cold"};
    PlanningProblem p;
    p.atoms = {"cold", "red"};
    p.actions = {a};
    p.init = {"cold", "red"};
    p.goal_neg = {"cold"};
    return p;
}

PlanningProblem random_problem(std::mt19937& rng, int n_atoms, int n_actions) {
    std::uniform_int_distribution<int> pick(0, n_atoms - 1), count(0, 2), one(0, 1);
    auto atom = [&](int i) { return "a" + std::to_string(i); };

    PlanningProblem p;
    for (int i = 0; i < n_atoms; ++i) p.atoms.push_back(atom(i));
    for (int k = 0; k < n_actions; ++k) {
        StripsAction a;
        a.name = "act" + std::to_string(k);
        for (int i = 0, n = count(rng); i < n; ++i) a.pre_pos.insert(atom(pick(rng)));
        for (int i = 0, n = one(rng); i < n; ++i) {
            const auto neg = atom(pick(rng));
            if (!a.pre_pos.count(neg)) a.pre_neg.insert(neg);
        }
        for (int i = 0, n = 1 + one(rng); i < n; ++i) a.add.insert(atom(pick(rng)));
        for (int i = 0, n = one(rng); i < n; ++i) {
            const auto d = atom(pick(rng));
            if (!a.add.count(d)) a.del.insert(d);
        }
        p.actions.push_back(a);
    }
    for (int i = 0; i < n_atoms; ++i)
        if (one(rng)) p.init.insert(atom(i));
    p.goal_pos.insert(atom(pick(rng)));
    if (one(rng)) {
        const auto neg = atom(pick(rng));
        if (!p.goal_pos.count(neg)) p.goal_neg.insert(neg);
    }
    return p;
}

}  // namespace

TEST_CASE("solve") {
    SUBCASE("satisfied goals give the empty plan") {
        auto p = pull_switch_problem();
        p.init = {"red"};
        const auto plan = planner::solve(p);
        REQUIRE(plan.has_value());
        CHECK(plan->empty());
    }
    SUBCASE("the cold house needs exactly one switch pull") {
        const auto plan = planner::solve(pull_switch_problem());
        REQUIRE(plan.has_value());
        CHECK(*plan == planner::Plan{"pull_switch"});
        CHECK(planner::plan_is_valid(pull_switch_problem(), *plan));
    }
    SUBCASE("unreachable goals report no plan") {
        auto p = pull_switch_problem();
        p.goal_pos = {"red"};
        p.goal_neg = {"red"};
        CHECK_FALSE(planner::solve(p).has_value());
    }
    SUBCASE("invariants are validated") {
        auto p = pull_switch_problem();
        p.init.insert("unknown");
        CHECK_THROWS_AS(planner::solve(p), UsageError);
        StripsAction bad;
        bad.name = "bad";
        bad.add = {"x"};
        bad.del = {"x"};
        CHECK_THROWS_AS(bad.validate(), ModelInconsistencyError);
    }
}

TEST_CASE("optimality against brute-force enumeration") {
    std::mt19937 rng(31);
    int solved = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::uniform_int_distribution<int> atoms(3, 6), actions(2, 5);
        const auto p = random_problem(rng, atoms(rng), actions(rng));
        const auto plan = planner::solve(p);
        const auto oracle_len = oracle::brute_force_plan_length(p, 6);
        if (oracle_len) {
            REQUIRE(plan.has_value());
            CHECK(static_cast<int>(plan->size()) == *oracle_len);
            CHECK(planner::plan_is_valid(p, *plan));
            ++solved;
        } else if (plan) {
            CHECK(plan->size() > 6);  // solvable but not within the oracle bound
        }
    }
    CHECK(solved > 50);  // the generator produces plenty of solvable instances
}

TEST_CASE("pddl emission") {
    const auto p = pull_switch_problem();
    const auto text = planner::emit_pddl(p);

    CHECK(text.domain.find("(:action pull_switch") != std::string::npos);
    CHECK(text.domain.find(":precondition (and (cold ?x))") != std::string::npos);
    CHECK(text.domain.find(":effect (and (not (cold ?x)))") != std::string::npos);
    CHECK(text.problem.find("(:init (cold x) (red x))") != std::string::npos);
    CHECK(text.problem.find("(:goal (and (not (cold x))))") != std::string::npos);

    SUBCASE("emission is deterministic") {
        const auto again = planner::emit_pddl(p);
        CHECK(again.domain == text.domain);
        CHECK(again.problem == text.problem);
    }
    SUBCASE("empty goal emits an empty and") {
        auto q = p;
        q.goal_pos.clear();
        q.goal_neg.clear();
        CHECK(planner::emit_pddl(q).problem.find("(:goal (and))") != std::string::npos);
    }
}

TEST_CASE("pddl parsing") {
    const auto p = pull_switch_problem();
    const auto text = planner::emit_pddl(p);

    SUBCASE("round trip is the identity") {
        const auto back = planner::parse_pddl(text.domain, text.problem);
        CHECK(back == p);
    }
    SUBCASE("whitespace and comments do not change the parse") {
        std::string domain = text.domain;
        domain.insert(0, ";; a comment line\n\n");
        std::string spaced;
        for (char c : domain) {
            spaced += c;
            if (c == ')') spaced += "\n ";
        }
        const auto back = planner::parse_pddl(spaced, text.problem);
        CHECK(back == p);
    }
    SUBCASE("case is folded") {
        std::string domain = text.domain;
        for (auto& c : domain) c = std::toupper(static_cast<unsigned char>(c));
        std::string problem = text.problem;
        for (auto& c : problem) c = std::toupper(static_cast<unsigned char>(c));
        const auto back = planner::parse_pddl(domain, problem);
        CHECK(back == p);
    }
    SUBCASE("random problems round trip") {
        std::mt19937 rng(41);
        for (int rep = 0; rep < 50; ++rep) {
            const auto q = random_problem(rng, 5, 4);
            const auto t = planner::emit_pddl(q);
            auto back = planner::parse_pddl(t.domain, t.problem);
            // emission sorts actions by name; compare order-insensitively
            auto sorted = q;
            std::sort(sorted.actions.begin(), sorted.actions.end(),
                      [](const auto& a, const auto& b) { return a.name < b.name; });
            CHECK(back == sorted);
        }
    }
    SUBCASE("unsupported constructs are named") {
        const std::string domain = R"((define (domain d)
          (:requirements :strips)
          (:predicates (p ?x))
          (:action a :parameters (?x)
            :precondition (forall (?y) (p ?y))
            :effect (p ?x))))";
        try {
            planner::parse_pddl(domain, planner::emit_pddl(pull_switch_problem()).problem);
            FAIL("expected unsupported-feature error");
        } catch (const UnsupportedFeatureError& e) {
            CHECK(std::string(e.what()).find("forall") != std::string::npos);
        }
    }
    SUBCASE("syntax errors carry line and column") {
        try {
            planner::parse_pddl("(define (domain", "(define (problem p))");
            FAIL("expected parse error");
        } catch (const ParseError& e) {
            CHECK(e.line >= 1);
            CHECK(e.column >= 1);
        }
    }
    SUBCASE("quantified requirements are rejected") {
        const std::string domain = R"((define (domain d)
          (:requirements :strips :universal-preconditions)
          (:predicates (p ?x))))";
        CHECK_THROWS_AS(
            planner::parse_pddl(domain, planner::emit_pddl(pull_switch_problem()).problem),
            UnsupportedFeatureError);
    }
}
