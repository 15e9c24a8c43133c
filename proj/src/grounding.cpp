#include "nsrl/grounding.hpp"

#include <algorithm>
#include <json.hpp>
#include <limits>

#include "nsrl/io.hpp"

namespace nsrl::grounding {

using nlohmann::json;

const VocabEntry* Vocabulary::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

namespace {

double numeric_value(const VocabEntry& e, const SimState& state) {
    auto it = state.num.find(e.attribute);
    if (it == state.num.end())
        throw GroundingError("grounding: state has no numeric attribute '" + e.attribute + "'");
    if (e.mode == Mode::Abs) return it->second;
    auto pit = state.prev.find(e.attribute);
    if (pit == state.prev.end())
        throw GroundingError("grounding: no previous value recorded for '" + e.attribute + "'");
    return it->second - pit->second;
}

}  // namespace

bool eval_predicate(const VocabEntry& e, const SimState& state) {
    if (e.is_string) {
        auto it = state.cat.find(e.attribute);
        if (it == state.cat.end())
            throw GroundingError("grounding: state has no attribute '" + e.attribute + "'");
        return it->second == e.string_value;
    }
    const double v = numeric_value(e, state);
    switch (e.cmp) {
        case Cmp::Lt: return v < e.threshold;
        case Cmp::Gt: return v > e.threshold;
        case Cmp::Eq: return v == e.threshold;
    }
    return false;
}

double eval_soft(const VocabEntry& e, double kappa, const SimState& state) {
    return soft_compare(e, kappa, numeric_value(e, state));
}

void apply_action(const ActionDef& a, std::map<std::string, double>& controls) {
    auto it = controls.find(a.attribute);
    if (it == controls.end())
        throw GroundingError("grounding: no control named '" + a.attribute + "'");
    if (a.mode == Mode::Abs)
        it->second = a.value;
    else
        it->second += a.value;
}

namespace {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_strict = false, hi_strict = false;

    void upper(double v) {  // require x < v
        if (v < hi || (v == hi && !hi_strict)) {
            hi = v;
            hi_strict = true;
        }
    }
    void lower(double v) {  // require x > v
        if (v > lo || (v == lo && !lo_strict)) {
            lo = v;
            lo_strict = true;
        }
    }
    bool empty() const { return lo > hi || (lo == hi && (lo_strict || hi_strict)); }
};

double pick(const Interval& iv, double margin) {
    const bool lo_inf = std::isinf(iv.lo), hi_inf = std::isinf(iv.hi);
    if (lo_inf && hi_inf) return 0.0;
    if (lo_inf) return iv.hi - margin;
    if (hi_inf) return iv.lo + margin;
    return (iv.lo + iv.hi) / 2.0;
}

}  // namespace

SimState realize_assignment(const Vocabulary& vocab, const std::map<std::string, bool>& assignment,
                            const SimState& base) {
    SimState out = base;

    // group constraints per attribute; delta entries constrain cur - prev
    std::map<std::string, Interval> num_abs, num_delta;
    std::map<std::string, std::optional<double>> pinned_abs;   // == true
    std::map<std::string, std::vector<double>> avoided_abs;    // == false
    std::map<std::string, std::pair<std::optional<std::string>, std::vector<std::string>>> cats;

    for (const auto& [name, want] : assignment) {
        const VocabEntry* e = vocab.find(name);
        if (!e) throw GroundingError("grounding: unknown predicate '" + name + "'");
        auto fail = [&](const std::string& why) {
            throw InfeasibleAssignmentError("infeasible assignment: predicate '" + name + "' (" +
                                            why + ")");
        };
        if (e->is_string) {
            auto& [eq, neq] = cats[e->attribute];
            if (want) {
                if (eq && *eq != e->string_value) fail("conflicting categorical values");
                eq = e->string_value;
            } else {
                neq.push_back(e->string_value);
            }
            continue;
        }
        if (e->cmp == Cmp::Eq) {
            if (e->mode == Mode::Delta) fail("== over delta attributes is unsupported");
            if (want) {
                auto& pin = pinned_abs[e->attribute];
                if (pin && *pin != e->threshold) fail("conflicting pinned values");
                pin = e->threshold;
            } else {
                avoided_abs[e->attribute].push_back(e->threshold);
            }
            num_abs[e->attribute];  // ensure the attribute gets realized
            continue;
        }
        auto& iv = e->mode == Mode::Abs ? num_abs[e->attribute] : num_delta[e->attribute];
        const bool less = (e->cmp == Cmp::Lt) == want;  // effective direction
        if (less)
            iv.upper(e->threshold);
        else
            iv.lower(e->threshold);
    }

    for (auto& [attr, iv] : num_abs) {
        if (iv.empty())
            throw InfeasibleAssignmentError("infeasible assignment: attribute '" + attr +
                                            "' has contradictory requirements");
        const auto& avoid = avoided_abs[attr];
        auto inside = [&](double v) {
            if (v < iv.lo || (v == iv.lo && iv.lo_strict)) return false;
            if (v > iv.hi || (v == iv.hi && iv.hi_strict)) return false;
            return std::find(avoid.begin(), avoid.end(), v) == avoid.end();
        };
        double v;
        if (auto pit = pinned_abs.find(attr); pit != pinned_abs.end() && pit->second) {
            v = *pit->second;
            if (!inside(v))
                throw InfeasibleAssignmentError("infeasible assignment: pinned value for '" + attr +
                                                "' conflicts with other requirements");
        } else {
            v = pick(iv, vocab.margin);
            double step = vocab.margin;
            for (int tries = 0; !inside(v) && tries < 16; ++tries) {
                v = pick(iv, vocab.margin) + (tries % 2 ? -step : step);
                if (tries % 2) step /= 2.0;
            }
            if (!inside(v))
                throw InfeasibleAssignmentError("infeasible assignment: no value found for '" +
                                                attr + "'");
        }
        out.num[attr] = v;
    }

    for (auto& [attr, iv] : num_delta) {
        if (iv.empty())
            throw InfeasibleAssignmentError("infeasible assignment: delta over '" + attr +
                                            "' has contradictory requirements");
        const double delta = pick(iv, vocab.margin);
        if (!out.num.count(attr))
            throw GroundingError("grounding: delta predicate over unknown attribute '" + attr +
                                 "'");
        out.prev[attr] = out.num[attr] - delta;
    }

    for (auto& [attr, want] : cats) {
        auto& [eq, neq] = want;
        if (eq) {
            for (const auto& bad : neq)
                if (bad == *eq)
                    throw InfeasibleAssignmentError("infeasible assignment: attribute '" + attr +
                                                    "' must equal and differ from '" + bad + "'");
            out.cat[attr] = *eq;
        } else {
            std::string candidate = "none";
            while (std::find(neq.begin(), neq.end(), candidate) != neq.end()) candidate += "_";
            out.cat[attr] = candidate;
        }
    }

    // round trip: every requested predicate must hold
    for (const auto& [name, want] : assignment) {
        const VocabEntry* e = vocab.find(name);
        if (eval_predicate(*e, out) != want)
            throw InfeasibleAssignmentError("infeasible assignment: predicate '" + name +
                                            "' could not be realized");
    }
    return out;
}

namespace {

json entry_to_json(const VocabEntry& e) {
    json arr = json::array();
    arr.push_back(e.attribute);
    arr.push_back(e.mode == Mode::Abs ? "abs" : "delta");
    arr.push_back(e.cmp == Cmp::Lt ? "<" : e.cmp == Cmp::Gt ? ">" : "==");
    if (e.is_string)
        arr.push_back(e.string_value);
    else if (!e.threshold_symbol.empty())
        arr.push_back(e.threshold_symbol);
    else
        arr.push_back(e.threshold);
    return arr;
}

VocabEntry entry_from_json(const std::string& name, const json& arr,
                           const std::map<std::string, double>& constants) {
    if (!arr.is_array() || arr.size() != 4)
        throw ConfigError("vocabulary: predicate '" + name + "' must be a 4-field entry");
    VocabEntry e;
    e.name = name;
    e.attribute = arr[0].get<std::string>();
    const std::string mode = arr[1].get<std::string>();
    if (mode == "abs")
        e.mode = Mode::Abs;
    else if (mode == "delta")
        e.mode = Mode::Delta;
    else
        throw ConfigError("vocabulary: unknown mode '" + mode + "'");
    const std::string cmp = arr[2].get<std::string>();
    if (cmp == "<")
        e.cmp = Cmp::Lt;
    else if (cmp == ">")
        e.cmp = Cmp::Gt;
    else if (cmp == "==")
        e.cmp = Cmp::Eq;
    else
        throw ConfigError("vocabulary: unknown comparator '" + cmp + "'");
    if (arr[3].is_number()) {
        e.threshold = arr[3].get<double>();
    } else {
        const std::string s = arr[3].get<std::string>();
        auto it = constants.find(s);
        if (it != constants.end()) {
            e.threshold = it->second;
            e.threshold_symbol = s;
        } else if (e.cmp == Cmp::Eq) {
            e.is_string = true;
            e.string_value = s;
        } else {
            throw ConfigError("vocabulary: unknown constant '" + s + "' in predicate '" + name +
                              "'");
        }
    }
    return e;
}

}  // namespace

Vocabulary vocabulary_from_json_text(const std::string& text) {
    json j = json::parse(text);
    Vocabulary v;
    if (j.contains("constants"))
        for (auto& [k, val] : j["constants"].items()) v.constants[k] = val.get<double>();
    if (j.contains("margin")) v.margin = j["margin"].get<double>();
    if (j.contains("vocab"))
        for (auto& [name, arr] : j["vocab"].items())
            v.entries.push_back(entry_from_json(name, arr, v.constants));
    if (j.contains("actions"))
        for (auto& [name, arr] : j["actions"].items()) {
            if (!arr.is_array() || arr.size() != 5)
                throw ConfigError("vocabulary: action '" + name + "' must be a 5-field entry");
            ActionDef a;
            a.name = name;
            a.attribute = arr[0].get<std::string>();
            const std::string mode = arr[1].get<std::string>();
            if (mode == "abs")
                a.mode = Mode::Abs;
            else if (mode == "delta")
                a.mode = Mode::Delta;
            else
                throw ConfigError("vocabulary: unknown action mode '" + mode + "'");
            a.value = arr[2].get<double>();
            a.on1 = arr[3].get<double>();
            a.on2 = arr[4].get<double>();
            v.actions.push_back(a);
        }
    return v;
}

std::string vocabulary_to_json_text(const Vocabulary& vocab) {
    json j;
    j["constants"] = vocab.constants;
    j["margin"] = vocab.margin;
    j["vocab"] = json::object();
    for (const auto& e : vocab.entries) j["vocab"][e.name] = entry_to_json(e);
    j["actions"] = json::object();
    for (const auto& a : vocab.actions)
        j["actions"][a.name] = json::array(
            {a.attribute, a.mode == Mode::Abs ? "abs" : "delta", a.value, a.on1, a.on2});
    return j.dump(2) + "\n";
}

Vocabulary load_vocabulary(const std::string& path) {
    return vocabulary_from_json_text(io::read_file(path));
}

}  // namespace nsrl::grounding
