#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "nsrl/grounding.hpp"
#include "nsrl/lnn.hpp"
#include "nsrl/planner.hpp"
#include "nsrl/types.hpp"

namespace nsrl::worldmodel {

struct ProbeRecord {
    std::string action;
    std::map<std::string, bool> before, after;
    bool changed = false;  // any predicate flipped
};

struct ProbeResult {
    std::vector<ProbeRecord> records;
    int skipped = 0;  // infeasible assignments
};

// Environment interface for probing: a base raw state, base controls, and
// a one-step transition.
class ProbeSim {
  public:
    virtual ~ProbeSim() = default;
    virtual grounding::SimState base_state() const = 0;
    virtual std::map<std::string, double> base_controls() const = 0;
    virtual grounding::SimState step(const grounding::SimState& state,
                                     const std::map<std::string, double>& controls) = 0;
};

// The mystery-switch environment: a house that may be cold and may be
// painted red; engaging the switch turns the heat on, which un-colds a
// cold house and touches nothing else.
class HeatSwitchSim : public ProbeSim {
  public:
    explicit HeatSwitchSim(double desired_temp = 20.0) : desired_temp_(desired_temp) {}
    grounding::SimState base_state() const override;
    std::map<std::string, double> base_controls() const override;
    grounding::SimState step(const grounding::SimState& state,
                             const std::map<std::string, double>& controls) override;

  private:
    double desired_temp_;
};

// Runs every action against the full tensor product of predicate
// assignments, one simulator step each.
ProbeResult probe(ProbeSim& sim, const grounding::Vocabulary& vocab);

std::string probe_records_to_csv(const grounding::Vocabulary& vocab,
                                 const std::vector<ProbeRecord>& records);

// AND over every predicate and its negation; negative preconditions are
// learnable through the negated children.
lnn::Formula<double> default_precondition_template(const grounding::Vocabulary& vocab,
                                                   double alpha = 0.95, double sharpness = 4.0);

struct PreconditionFit {
    lnn::Formula<double> fitted;    // soft, constraint-satisfying
    bool always_applicable = false;  // every probe changed the state
    bool never_applicable = false;   // no probe changed the state
};

// Fits the template with the changed flag as target over this action's
// records.  All-true / all-false targets short-circuit to the degenerate
// empty-conjunction cases.
PreconditionFit learn_preconditions(const std::vector<ProbeRecord>& records,
                                    const std::string& action, lnn::Formula<double> tmpl,
                                    const lnn::FitConfig& cfg = {});

struct Effects {
    std::set<std::string> add, del;
};

// Effect extraction over the applicable (state-changing) records: a
// predicate forced true everywhere is an add effect, forced false a delete
// effect, carried through unchanged no effect; anything else is a
// conditional effect and rejected.
Effects learn_effects(const std::vector<ProbeRecord>& records, const std::string& action);

// Maps a crisp conjunction and effect sets onto a STRIPS action.
planner::StripsAction to_strips(const std::string& name, const lnn::Formula<double>& precondition,
                                const Effects& effects);

}  // namespace nsrl::worldmodel
