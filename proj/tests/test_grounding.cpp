#include <random>

#include "doctest.h"
#include "nsrl/grounding.hpp"
#include "oracles.hpp"

using namespace nsrl;
using grounding::Cmp;
using grounding::Mode;
using grounding::SimState;
using grounding::VocabEntry;

namespace {

grounding::Vocabulary demo_vocab() {
    return grounding::vocabulary_from_json_text(R"json({
      "constants": {"mydesiredtemp": 20.0},
      "margin": 2.0,
      "vocab": {
        "cold": ["Temperature - Indoor (C)", "abs", "<", "mydesiredtemp"],
        "red": ["Color", "abs", "==", "red"]
      },
      "actions": {
        "turn_heat_on": ["Load Fraction", "abs", 1, 5, 0],
        "turn_heat_off": ["Load Fraction", "abs", 0, 5, 1],
        "turn_setpoint_up": ["Setpoint", "delta", 2, 0, 0],
        "turn_setpoint_down": ["Setpoint", "delta", -2, 0, 0]
      }
    })json");
}

}  // namespace

TEST_CASE("eval_predicate") {
    auto vocab = demo_vocab();
    const VocabEntry& cold = *vocab.find("cold");
    const VocabEntry& red = *vocab.find("red");

    SimState s;
    s.num["Temperature - Indoor (C)"] = 18.0;
    s.cat["Color"] = "red";
    CHECK(grounding::eval_predicate(cold, s));
    CHECK(grounding::eval_predicate(red, s));

    s.num["Temperature - Indoor (C)"] = 25.0;
    s.cat["Color"] = "blue";
    CHECK_FALSE(grounding::eval_predicate(cold, s));
    CHECK_FALSE(grounding::eval_predicate(red, s));

    SimState empty;
    CHECK_THROWS_AS(grounding::eval_predicate(cold, empty), GroundingError);

    SUBCASE("delta mode compares the change over the last step") {
        VocabEntry warming;
        warming.name = "warming";
        warming.attribute = "T";
        warming.mode = Mode::Delta;
        warming.cmp = Cmp::Gt;
        warming.threshold = 0.5;
        SimState d;
        d.num["T"] = 21.0;
        d.prev["T"] = 20.0;
        CHECK(grounding::eval_predicate(warming, d));
        d.prev["T"] = 20.8;
        CHECK_FALSE(grounding::eval_predicate(warming, d));
        SimState no_prev;
        no_prev.num["T"] = 21.0;
        CHECK_THROWS_AS(grounding::eval_predicate(warming, no_prev), GroundingError);
    }
}

TEST_CASE("soft predicates") {
    VocabEntry hot;
    hot.name = "Hot";
    hot.attribute = "T";
    hot.cmp = Cmp::Gt;
    hot.threshold = 2.0;

    SUBCASE("boundary gives one half") {
        CHECK(grounding::soft_compare(hot, 10.0, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("wide margins saturate") {
        CHECK(grounding::soft_compare(hot, 10.0, 5.0) ==
              doctest::Approx(sigmoid(30.0)).epsilon(1e-12));
        CHECK(grounding::soft_compare(hot, 10.0, 5.0) > 0.999999);
    }
    SUBCASE("sharp limit matches the crisp predicate off the boundary") {
        SimState s;
        for (double v : {0.5, 1.9, 2.1, 7.0}) {
            s.num["T"] = v;
            const bool crisp = grounding::eval_predicate(hot, s);
            const double soft = grounding::soft_compare(hot, 1e6, v);
            CHECK(std::abs(soft - (crisp ? 1.0 : 0.0)) < 1e-9);
        }
    }
    SUBCASE("stays strictly inside (0,1) and matches finite differences") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        for (int i = 0; i < 100; ++i) {
            const double v = u(rng);
            ad::Tape tape;
            ad::Var raw = tape.lift(v);
            ad::Var soft = grounding::soft_compare(hot, 3.0, raw);
            CHECK(soft.value() > 0.0);
            CHECK(soft.value() < 1.0);
            tape.backward(soft);
            VecD p(1);
            p(0) = v;
            auto f = [&](const VecD& q) { return grounding::soft_compare(hot, 3.0, q(0)); };
            CHECK(oracle::rel_err(raw.grad(), oracle::central_diff(f, p, 0)) < 1e-5);
        }
    }
    SUBCASE("equality comparisons have no soft form") {
        VocabEntry eq;
        eq.attribute = "T";
        eq.cmp = Cmp::Eq;
        CHECK_THROWS_AS(grounding::soft_compare(eq, 10.0, 1.0), UsageError);
        VocabEntry bad = hot;
        CHECK_THROWS_AS(grounding::soft_compare(bad, -1.0, 1.0), UsageError);
    }
}

TEST_CASE("apply_action") {
    auto vocab = demo_vocab();
    std::map<std::string, double> controls{{"Load Fraction", 0.0}, {"Setpoint", 20.0}};

    grounding::apply_action(*std::find_if(vocab.actions.begin(), vocab.actions.end(),
                                          [](auto& a) { return a.name == "turn_heat_on"; }),
                            controls);
    CHECK(controls["Load Fraction"] == 1.0);

    const auto& up = *std::find_if(vocab.actions.begin(), vocab.actions.end(),
                                   [](auto& a) { return a.name == "turn_setpoint_up"; });
    grounding::apply_action(up, controls);
    CHECK(controls["Setpoint"] == 22.0);

    SUBCASE("abs writes are idempotent, delta writes add up") {
        const auto& on = *std::find_if(vocab.actions.begin(), vocab.actions.end(),
                                       [](auto& a) { return a.name == "turn_heat_on"; });
        grounding::apply_action(on, controls);
        grounding::apply_action(on, controls);
        CHECK(controls["Load Fraction"] == 1.0);
        grounding::apply_action(up, controls);
        CHECK(controls["Setpoint"] == 24.0);
    }
    SUBCASE("missing control key") {
        std::map<std::string, double> none;
        const auto& on = vocab.actions.front();
        CHECK_THROWS_AS(grounding::apply_action(on, none), GroundingError);
    }
    SUBCASE("the opaque trailing fields are preserved") {
        const auto& on = *std::find_if(vocab.actions.begin(), vocab.actions.end(),
                                       [](auto& a) { return a.name == "turn_heat_on"; });
        CHECK(on.on1 == 5.0);
        CHECK(on.on2 == 0.0);
    }
}

TEST_CASE("realize_assignment") {
    auto vocab = demo_vocab();
    SimState base;
    base.num["Temperature - Indoor (C)"] = 22.0;
    base.cat["Color"] = "white";

    SUBCASE("round trip over every assignment") {
        for (int bits = 0; bits < 4; ++bits) {
            std::map<std::string, bool> want{{"cold", (bits & 1) != 0},
                                             {"red", (bits & 2) != 0}};
            const SimState s = grounding::realize_assignment(vocab, want, base);
            CHECK(grounding::eval_predicate(*vocab.find("cold"), s) == want["cold"]);
            CHECK(grounding::eval_predicate(*vocab.find("red"), s) == want["red"]);
        }
    }
    SUBCASE("empty assignment returns the base state") {
        const SimState s = grounding::realize_assignment(vocab, {}, base);
        CHECK(s.num.at("Temperature - Indoor (C)") == 22.0);
        CHECK(s.cat.at("Color") == "white");
    }
    SUBCASE("contradictory entries over one attribute") {
        auto v = vocab;
        VocabEntry alias = *v.find("cold");
        alias.name = "cold_alias";
        v.entries.push_back(alias);
        CHECK_THROWS_AS(grounding::realize_assignment(
                            v, {{"cold", true}, {"cold_alias", false}}, base),
                        InfeasibleAssignmentError);
    }
    SUBCASE("unknown predicate") {
        CHECK_THROWS_AS(grounding::realize_assignment(vocab, {{"hot", true}}, base),
                        GroundingError);
    }
}

TEST_CASE("round trip over randomized six-predicate vocabularies") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> th(-10.0, 10.0);
    for (int rep = 0; rep < 20; ++rep) {
        grounding::Vocabulary v;
        const int n = 6;
        for (int i = 0; i < n; ++i) {
            VocabEntry e;
            e.name = "p" + std::to_string(i);
            e.attribute = "attr" + std::to_string(i % 4);  // share some attributes
            e.cmp = (i % 2) ? Cmp::Lt : Cmp::Gt;
            e.threshold = th(rng);
            v.entries.push_back(e);
        }
        SimState base;
        for (int a = 0; a < 4; ++a) base.num["attr" + std::to_string(a)] = 0.0;

        for (int bits = 0; bits < (1 << n); ++bits) {
            std::map<std::string, bool> want;
            for (int i = 0; i < n; ++i) want["p" + std::to_string(i)] = (bits >> i) & 1;
            try {
                const SimState s = grounding::realize_assignment(v, want, base);
                for (const auto& e : v.entries)
                    CHECK(grounding::eval_predicate(e, s) == want[e.name]);
            } catch (const InfeasibleAssignmentError&) {
                // genuinely conflicting combinations over shared attributes
            }
        }
    }
}

TEST_CASE("vocabulary file round trip keeps the field shapes") {
    auto vocab = demo_vocab();
    const std::string text = grounding::vocabulary_to_json_text(vocab);
    auto back = grounding::vocabulary_from_json_text(text);
    CHECK(back.entries.size() == vocab.entries.size());
    CHECK(back.actions.size() == vocab.actions.size());
    CHECK(back.margin == vocab.margin);
    CHECK(back.find("cold")->threshold == 20.0);
    CHECK(back.find("cold")->threshold_symbol == "mydesiredtemp");
    CHECK(back.find("red")->is_string);
    CHECK(back.find("red")->string_value == "red");
    const std::string again = grounding::vocabulary_to_json_text(back);
    CHECK(again == text);
}
