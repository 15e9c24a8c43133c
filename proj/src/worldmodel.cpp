#include "nsrl/worldmodel.hpp"

#include <algorithm>

#include "nsrl/io.hpp"

namespace nsrl::worldmodel {

grounding::SimState HeatSwitchSim::base_state() const {
    grounding::SimState s;
    s.num["Temperature - Indoor (C)"] = desired_temp_ + 2.0;
    s.cat["Color"] = "white";
    return s;
}

std::map<std::string, double> HeatSwitchSim::base_controls() const {
    return {{"Load Fraction", 0.0}};
}

grounding::SimState HeatSwitchSim::step(const grounding::SimState& state,
                                        const std::map<std::string, double>& controls) {
    grounding::SimState next = state;
    next.prev = state.num;
    auto it = controls.find("Load Fraction");
    if (it != controls.end() && it->second == 1.0) {
        // heater on: warm the house by a fixed swing
        next.num["Temperature - Indoor (C)"] += 10.0;
    }
    return next;
}

ProbeResult probe(ProbeSim& sim, const grounding::Vocabulary& vocab) {
    ProbeResult out;
    const int n = static_cast<int>(vocab.entries.size());
    if (n > 16) throw UsageError("probe: too many predicates for a tensor-product sweep");

    for (const auto& action : vocab.actions) {
        for (int bits = 0; bits < (1 << n); ++bits) {
            std::map<std::string, bool> assignment;
            for (int i = 0; i < n; ++i)
                assignment[vocab.entries[static_cast<size_t>(i)].name] = (bits >> i) & 1;

            grounding::SimState start;
            try {
                start = grounding::realize_assignment(vocab, assignment, sim.base_state());
            } catch (const InfeasibleAssignmentError&) {
                ++out.skipped;
                continue;
            }

            auto controls = sim.base_controls();
            grounding::apply_action(action, controls);
            const grounding::SimState after_state = sim.step(start, controls);

            ProbeRecord rec;
            rec.action = action.name;
            for (const auto& e : vocab.entries) {
                rec.before[e.name] = grounding::eval_predicate(e, start);
                rec.after[e.name] = grounding::eval_predicate(e, after_state);
            }
            rec.changed = rec.before != rec.after;
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

std::string probe_records_to_csv(const grounding::Vocabulary& vocab,
                                 const std::vector<ProbeRecord>& records) {
    std::vector<std::string> names;
    for (const auto& e : vocab.entries) names.push_back(e.name);
    std::sort(names.begin(), names.end());

    std::vector<std::string> header{"action"};
    for (const auto& n : names) header.push_back("before_" + n);
    for (const auto& n : names) header.push_back("after_" + n);
    header.push_back("changed");

    io::Csv csv(header);
    for (const auto& r : records) {
        std::vector<std::string> row{r.action};
        for (const auto& n : names) row.push_back(r.before.at(n) ? "1" : "0");
        for (const auto& n : names) row.push_back(r.after.at(n) ? "1" : "0");
        row.push_back(r.changed ? "1" : "0");
        csv.add_row(row);
    }
    return csv.text();
}

lnn::Formula<double> default_precondition_template(const grounding::Vocabulary& vocab,
                                                   double alpha, double sharpness) {
    lnn::Formula<double> f;
    f.alpha = alpha;
    f.sharpness = sharpness;
    f.root.kind = lnn::GateKind::And;
    for (const auto& e : vocab.entries) {
        lnn::Gate<double> pred;
        pred.kind = lnn::GateKind::Pred;
        pred.pred = e.name;
        f.root.children.push_back(pred);

        lnn::Gate<double> neg;
        neg.kind = lnn::GateKind::Not;
        neg.children.push_back(pred);
        f.root.children.push_back(neg);
    }
    const int n = static_cast<int>(f.root.children.size());
    f.root.weights = VecD::Ones(n);
    // half the children are true in any assignment, so bias to half mass
    // to keep the initial activations alive
    f.root.theta = n / 2.0;
    return f;
}

PreconditionFit learn_preconditions(const std::vector<ProbeRecord>& records,
                                    const std::string& action, lnn::Formula<double> tmpl,
                                    const lnn::FitConfig& cfg) {
    std::vector<lnn::Example> data;
    for (const auto& r : records) {
        if (r.action != action) continue;
        lnn::Example ex;
        for (const auto& [name, v] : r.before) ex.bindings[name] = v ? 1.0 : 0.0;
        ex.target = r.changed ? 1.0 : 0.0;
        data.push_back(std::move(ex));
    }
    if (data.empty()) throw UsageError("learn_preconditions: no records for '" + action + "'");

    const bool all_true =
        std::all_of(data.begin(), data.end(), [](const auto& e) { return e.target == 1.0; });
    const bool all_false =
        std::all_of(data.begin(), data.end(), [](const auto& e) { return e.target == 0.0; });

    PreconditionFit out;
    if (all_true || all_false) {
        // degenerate truth table: empty conjunction, flagged accordingly
        out.fitted.alpha = tmpl.alpha;
        out.fitted.sharpness = tmpl.sharpness;
        out.fitted.root.kind = lnn::GateKind::And;
        out.fitted.root.weights = VecD(0);
        out.fitted.root.theta = lnn::crisp_theta(lnn::GateKind::And, 0, tmpl.alpha);
        out.always_applicable = all_true;
        out.never_applicable = all_false;
        return out;
    }
    lnn::Formula<double> fitted = lnn::fit(std::move(tmpl), data, cfg);

    // Backward ablation over the root conjunction: a child whose removal
    // does not hurt the data fit is uninformative (e.g. a predicate paired
    // with its own negation) and is dropped.  Safe here because mixed
    // targets rule out the trivially-true gate.
    lnn::FitConfig polish = cfg;
    polish.warmup_epochs = 0;
    polish.epochs = 800;
    polish.polish_epochs = 400;
    double best_mse = lnn::mse(fitted, data);
    std::vector<size_t> order(fitted.root.children.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return fitted.root.weights(static_cast<Eigen::Index>(a)) <
               fitted.root.weights(static_cast<Eigen::Index>(b));
    });
    for (size_t j : order) {
        if (fitted.root.weights(static_cast<Eigen::Index>(j)) == 0.0) continue;
        lnn::Formula<double> trial = fitted;
        trial.root.weights(static_cast<Eigen::Index>(j)) = 0.0;
        try {
            trial = lnn::fit(trial, data, polish);
        } catch (const FitError&) {
            continue;
        }
        if (trial.root.weights(static_cast<Eigen::Index>(j)) != 0.0) continue;
        const double trial_mse = lnn::mse(trial, data);
        if (trial_mse <= best_mse + 1e-4) {
            fitted = trial;
            best_mse = std::min(best_mse, trial_mse);
        }
    }

    const double residual = lnn::constraint_residual(fitted);
    if (residual > cfg.residual_target)
        throw FitError("learn_preconditions: residual above target after ablation", residual);
    out.fitted = fitted;
    return out;
}

Effects learn_effects(const std::vector<ProbeRecord>& records, const std::string& action) {
    std::vector<const ProbeRecord*> applicable;
    std::set<std::string> preds;
    for (const auto& r : records) {
        if (r.action != action) continue;
        for (const auto& [name, _] : r.before) preds.insert(name);
        if (r.changed) applicable.push_back(&r);
    }

    Effects out;
    for (const auto& q : preds) {
        bool inertial = true, all_true = true, all_false = true, any_flip_up = false,
             any_flip_down = false;
        for (const auto* r : applicable) {
            const bool b = r->before.at(q), a = r->after.at(q);
            if (a != b) inertial = false;
            if (!a) all_true = false;
            if (a) all_false = false;
            if (!b && a) any_flip_up = true;
            if (b && !a) any_flip_down = true;
        }
        if (applicable.empty() || inertial) continue;
        if (all_true && any_flip_up)
            out.add.insert(q);
        else if (all_false && any_flip_down)
            out.del.insert(q);
        else
            throw ModelInconsistencyError("learn_effects: predicate '" + q + "' changes under '" +
                                          action + "' conditionally; only unconditional STRIPS "
                                          "effects are supported");
    }
    return out;
}

planner::StripsAction to_strips(const std::string& name, const lnn::Formula<double>& precondition,
                                const Effects& effects) {
    if (!lnn::is_crisp(precondition))
        throw CrispenError("to_strips: precondition formula is not crisp");

    planner::StripsAction action;
    action.name = name;

    auto add_literal = [&](const lnn::Gate<double>& g, bool positive) {
        if (g.kind == lnn::GateKind::Pred) {
            (positive ? action.pre_pos : action.pre_neg).insert(g.pred);
            return;
        }
        if (g.kind == lnn::GateKind::Not) {
            const auto& c = g.children.front();
            if (c.kind != lnn::GateKind::Pred)
                throw ModelInconsistencyError("to_strips: negation of a non-literal");
            (positive ? action.pre_neg : action.pre_pos).insert(c.pred);
            return;
        }
        throw ModelInconsistencyError(
            "to_strips: precondition is not a conjunction of literals");
    };

    const auto& root = precondition.root;
    if (root.kind == lnn::GateKind::And) {
        for (const auto& c : root.children) add_literal(c, true);
    } else {
        add_literal(root, true);
    }

    action.add = effects.add;
    action.del = effects.del;
    action.validate();
    return action;
}

}  // namespace nsrl::worldmodel
