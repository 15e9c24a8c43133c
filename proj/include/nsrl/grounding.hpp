#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsrl/autodiff.hpp"
#include "nsrl/types.hpp"

namespace nsrl::grounding {

// Raw simulator state: numeric and categorical attributes, plus the
// previous numeric values for delta-mode predicates.
struct SimState {
    std::map<std::string, double> num;
    std::map<std::string, std::string> cat;
    std::map<std::string, double> prev;
};

enum class Mode { Abs, Delta };
enum class Cmp { Lt, Gt, Eq };

// One vocabulary predicate: attribute, mode, comparator, threshold.  The
// threshold may be given symbolically and resolved against the vocabulary
// constants; string-valued attributes only support ==.
struct VocabEntry {
    std::string name;
    std::string attribute;
    Mode mode = Mode::Abs;
    Cmp cmp = Cmp::Lt;
    double threshold = 0.0;
    std::string threshold_symbol;  // non-empty if threshold was symbolic
    std::string string_value;      // for == over categorical attributes
    bool is_string = false;
};

// Logical action: a single control write.  The two trailing on-params come
// with the 5-field entry format; they are stored, not interpreted.
struct ActionDef {
    std::string name;
    std::string attribute;
    Mode mode = Mode::Abs;
    double value = 0.0;
    double on1 = 0.0, on2 = 0.0;
};

struct Vocabulary {
    std::vector<VocabEntry> entries;
    std::vector<ActionDef> actions;
    std::map<std::string, double> constants;
    double margin = 2.0;  // canonical satisfying/violating offset

    const VocabEntry* find(const std::string& name) const;
};

bool eval_predicate(const VocabEntry& e, const SimState& state);

// Differentiable relaxation of a numeric comparison: sigma(kappa * signed
// margin).  Converges to the crisp indicator as kappa grows.
template <class T>
T soft_compare(const VocabEntry& e, double kappa, const T& raw) {
    if (kappa <= 0.0) throw UsageError("soft predicate: kappa must be > 0");
    if (e.is_string || e.cmp == Cmp::Eq)
        throw UsageError("soft predicate: == comparisons have no soft form");
    const T z = e.cmp == Cmp::Gt ? raw - T(e.threshold) : T(e.threshold) - raw;
    return sigmoid(T(kappa) * z);
}

double eval_soft(const VocabEntry& e, double kappa, const SimState& state);

void apply_action(const ActionDef& a, std::map<std::string, double>& controls);

// Build a state in which every entry evaluates to the requested truth
// value, starting from `base`.  Conflicting requirements over one
// attribute raise InfeasibleAssignmentError.
SimState realize_assignment(const Vocabulary& vocab, const std::map<std::string, bool>& assignment,
                            const SimState& base);

// Structured-text vocabulary file with Fig.-style 4-field predicate and
// 5-field action entries.
Vocabulary load_vocabulary(const std::string& path);
Vocabulary vocabulary_from_json_text(const std::string& text);
std::string vocabulary_to_json_text(const Vocabulary& vocab);

}  // namespace nsrl::grounding
