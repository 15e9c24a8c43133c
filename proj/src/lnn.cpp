#include "nsrl/lnn.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "nsrl/io.hpp"

namespace nsrl::lnn {

const char* kind_name(GateKind k);

void check_alpha(double alpha) {
    if (!(alpha > 0.5 && alpha < 1.0))
        throw UsageError("lnn: alpha must lie strictly between 0.5 and 1");
}

double crisp_theta(GateKind kind, int n, double alpha) {
    check_alpha(alpha);
    if (kind == GateKind::And) return ((n - alpha) + n * alpha) / 2.0;
    return alpha / 2.0;  // Or / Implies
}

Formula<ad::Var> lift(const Formula<double>& f, ad::Tape& tape) {
    Formula<ad::Var> out;
    out.alpha = f.alpha;
    out.sharpness = f.sharpness;

    struct Rec {
        ad::Tape& tape;
        Gate<ad::Var> run(const Gate<double>& g) {
            Gate<ad::Var> v;
            v.kind = g.kind;
            v.pred = g.pred;
            if (g.has_params()) {
                v.weights.resize(g.weights.size());
                for (Eigen::Index j = 0; j < g.weights.size(); ++j)
                    v.weights(j) = tape.lift(g.weights(j));
                v.theta = tape.lift(g.theta);
            }
            for (const auto& c : g.children) v.children.push_back(run(c));
            return v;
        }
    } rec{tape};
    out.root = rec.run(f.root);
    return out;
}

Formula<double> fit(Formula<double> f, const std::vector<Example>& data, const FitConfig& cfg) {
    if (data.empty()) throw UsageError("fit: empty dataset");
    for (const auto& ex : data)
        if (ex.target < 0.0 || ex.target > 1.0) throw UsageError("fit: target outside [0,1]");

    const double n = static_cast<double>(data.size());
    double penalty = cfg.penalty0;
    double lr = cfg.lr;

    auto step = [&](double pen, bool dead_zone) {
        ad::Tape tape;
        Formula<ad::Var> lifted = lift(f, tape);
        ParamRefs<ad::Var> vslots = params(lifted);

        ad::Var loss(0.0);
        for (const auto& ex : data) {
            std::map<std::string, ad::Var> b;
            for (const auto& [k, v] : ex.bindings) b.emplace(k, ad::Var(v));
            ad::Var err = evaluate(lifted, b) - ad::Var(ex.target);
            loss = loss + err * err;
        }
        loss = loss / ad::Var(n) + ad::Var(pen) * constraint_residual(lifted);
        tape.backward(loss);

        auto clip = [&](double delta) { return std::clamp(delta, -cfg.max_step, cfg.max_step); };
        ParamRefs<double> slots = params(f);
        for (size_t i = 0; i < slots.weights.size(); ++i) {
            double w = *slots.weights[i] + clip(-lr * vslots.weights[i]->grad());
            w = std::clamp(w, 0.0, 1.0);
            if (dead_zone && w < kActiveWeightTol) w = 0.0;
            *slots.weights[i] = w;
        }
        for (size_t i = 0; i < slots.thetas.size(); ++i)
            *slots.thetas[i] += clip(-lr * vslots.thetas[i]->grad());
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch < cfg.warmup_epochs) {
            step(0.0, false);
        } else {
            step(penalty, false);
            penalty = std::min(penalty * cfg.penalty_growth, cfg.penalty_max);
            f.sharpness = std::min(f.sharpness * cfg.sharpness_growth, cfg.sharpness_max);
        }
        lr *= cfg.lr_decay;
    }
    // prune-and-polish: zero out inactive weights and let the biases settle
    for (auto* w : params(f).weights)
        if (*w < kActiveWeightTol) *w = 0.0;
    for (int epoch = 0; epoch < cfg.polish_epochs; ++epoch) {
        step(cfg.penalty_max, true);
        lr *= cfg.lr_decay;
    }

    const double residual = value_of(constraint_residual(f));
    if (residual > cfg.residual_target)
        throw FitError("lnn fit did not reach the constraint residual target (residual = " +
                           io::format_double(residual) + ")",
                       residual);
    return f;
}

double mse(const Formula<double>& f, const std::vector<Example>& data) {
    if (data.empty()) throw UsageError("mse: empty dataset");
    double sum = 0.0;
    for (const auto& ex : data) {
        const double err = evaluate(f, ex.bindings) - ex.target;
        sum += err * err;
    }
    return sum / static_cast<double>(data.size());
}

namespace {

struct CrispRec {
    double alpha;
    double tol;

    Gate<double> run(const Gate<double>& g, const std::string& where) {
        Gate<double> out;
        out.kind = g.kind;
        out.pred = g.pred;
        if (g.kind == GateKind::Pred) return out;
        if (g.kind == GateKind::Not) {
            out.children.push_back(run(g.children.front(), where + "/Not"));
            return out;
        }

        std::vector<const Gate<double>*> kept;
        std::vector<size_t> kept_idx;
        for (size_t j = 0; j < g.children.size(); ++j) {
            const double w = g.weights(static_cast<Eigen::Index>(j));
            if (std::abs(w) <= tol) continue;  // pruned child
            if (std::abs(w - 1.0) > tol)
                throw CrispenError("crispen: weight " + io::format_double(w) + " at " + where +
                                   " child " + std::to_string(j) +
                                   " is not within tolerance of 0 or 1");
            kept.push_back(&g.children[j]);
            kept_idx.push_back(j);
        }

        if (g.kind == GateKind::Implies) {
            const bool has_ante = std::find(kept_idx.begin(), kept_idx.end(), 0u) != kept_idx.end();
            const bool has_cons = std::find(kept_idx.begin(), kept_idx.end(), 1u) != kept_idx.end();
            if (has_ante && has_cons) {
                out.children.push_back(run(g.children[0], where + "/Implies.lhs"));
                out.children.push_back(run(g.children[1], where + "/Implies.rhs"));
                out.weights = VecD::Ones(2);
                out.theta = crisp_theta(GateKind::Implies, 2, alpha);
                return out;
            }
            if (has_cons) return run(g.children[1], where + "/Implies.rhs");
            if (has_ante) {  // Or(Not a) with consequent dropped
                Gate<double> neg;
                neg.kind = GateKind::Not;
                neg.children.push_back(run(g.children[0], where + "/Implies.lhs"));
                return neg;
            }
            // everything pruned: empty Or, constant false
            out.kind = GateKind::Or;
            out.weights = VecD(0);
            out.theta = crisp_theta(GateKind::Or, 0, alpha);
            return out;
        }

        std::vector<Gate<double>> children;
        for (size_t k = 0; k < kept.size(); ++k)
            children.push_back(
                run(*kept[k], where + "/" + std::to_string(kept_idx[k])));
        if (children.size() == 1) return children.front();  // collapse unary And/Or
        out.children = std::move(children);
        out.weights = VecD::Ones(static_cast<Eigen::Index>(out.children.size()));
        out.theta = crisp_theta(g.kind, static_cast<int>(out.children.size()), alpha);
        return out;
    }
};

}  // namespace

Formula<double> crispen_formula(const Formula<double>& f, double tol) {
    check_alpha(f.alpha);
    Formula<double> out;
    out.alpha = f.alpha;
    out.sharpness = f.sharpness;
    CrispRec rec{f.alpha, tol};
    out.root = rec.run(f.root, kind_name(f.root.kind));
    return out;
}

namespace {
bool is_crisp_gate(const Gate<double>& g) {
    if (g.has_params())
        for (Eigen::Index j = 0; j < g.weights.size(); ++j)
            if (g.weights(j) != 1.0) return false;
    for (const auto& c : g.children)
        if (!is_crisp_gate(c)) return false;
    return true;
}
}  // namespace

bool is_crisp(const Formula<double>& f) { return is_crisp_gate(f.root); }

bool evaluate_classical(const Gate<double>& g, const std::map<std::string, bool>& bindings) {
    switch (g.kind) {
        case GateKind::Pred: {
            auto it = bindings.find(g.pred);
            if (it == bindings.end()) throw UsageError("lnn: unbound predicate '" + g.pred + "'");
            return it->second;
        }
        case GateKind::Not:
            return !evaluate_classical(g.children.front(), bindings);
        case GateKind::And: {
            for (const auto& c : g.children)
                if (!evaluate_classical(c, bindings)) return false;
            return true;
        }
        case GateKind::Or: {
            for (const auto& c : g.children)
                if (evaluate_classical(c, bindings)) return true;
            return false;
        }
        case GateKind::Implies:
            return !evaluate_classical(g.children[0], bindings) ||
                   evaluate_classical(g.children[1], bindings);
    }
    throw UsageError("lnn: corrupt gate");
}

bool evaluate_classical(const Formula<double>& f, const std::map<std::string, bool>& bindings) {
    if (!is_crisp(f)) throw CrispenError("evaluate_classical: formula is not crisp");
    return evaluate_classical(f.root, bindings);
}

const char* kind_name(GateKind k) {
    switch (k) {
        case GateKind::And: return "And";
        case GateKind::Or: return "Or";
        case GateKind::Not: return "Not";
        case GateKind::Implies: return "Implies";
        case GateKind::Pred: return "Pred";
    }
    return "?";
}

namespace {

class TemplateParser {
  public:
    TemplateParser(const std::string& text, double alpha) : text_(text), alpha_(alpha) {}

    Gate<double> parse() {
        Gate<double> g = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters after formula");
        return g;
    }

  private:
    [[noreturn]] void fail(const std::string& msg) const {
        int line = 1, col = 1;
        for (size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream ss;
        ss << "lnn template:" << line << ":" << col << ": " << msg;
        throw ParseError(ss.str(), line, col);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }

    std::string ident() {
        skip_ws();
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        return text_.substr(start, pos_ - start);
    }

    double number() {
        skip_ws();
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("expected number");
        pos_ += static_cast<size_t>(end - begin);
        return v;
    }

    struct Annotation {
        bool present = false;
        std::vector<double> w;
        double theta = 0.0;
    };

    Annotation annotation() {
        Annotation a;
        if (!eat('[')) return a;
        a.present = true;
        skip_ws();
        if (ident() != "w") fail("expected 'w' in annotation");
        expect('=');
        expect('(');
        a.w.push_back(number());
        while (eat(',')) a.w.push_back(number());
        expect(')');
        expect(',');
        if (ident() != "theta") fail("expected 'theta' in annotation");
        expect('=');
        a.theta = number();
        expect(']');
        return a;
    }

    Gate<double> expr() {
        const std::string name = ident();
        if (name == "Not") {
            if (eat('[')) fail("Not carries no annotation");
            expect('(');
            Gate<double> g;
            g.kind = GateKind::Not;
            g.children.push_back(expr());
            expect(')');
            return g;
        }
        if (name == "And" || name == "Or" || name == "Implies") {
            Gate<double> g;
            g.kind = name == "And"   ? GateKind::And
                     : name == "Or"  ? GateKind::Or
                                     : GateKind::Implies;
            Annotation ann = annotation();
            expect('(');
            g.children.push_back(expr());
            while (eat(',')) g.children.push_back(expr());
            expect(')');
            const int n = static_cast<int>(g.children.size());
            if (g.kind == GateKind::Implies && n != 2) fail("Implies takes exactly two operands");
            if (ann.present) {
                if (static_cast<int>(ann.w.size()) != n)
                    fail("annotation weight count does not match operand count");
                g.weights = Eigen::Map<VecD>(ann.w.data(), n);
                g.theta = ann.theta;
            } else {
                g.weights = VecD::Ones(n);  // equal weights over all features
                g.theta = crisp_theta(g.kind, n, alpha_);
            }
            return g;
        }
        // predicate, optionally applied to the single free variable
        Gate<double> g;
        g.kind = GateKind::Pred;
        g.pred = name;
        if (eat('(')) {
            const std::string var = ident();
            if (var != "x") fail("predicates take the single variable 'x'");
            expect(')');
        }
        return g;
    }

    const std::string& text_;
    double alpha_;
    size_t pos_ = 0;
};

void serialize_gate(const Gate<double>& g, std::ostringstream& out) {
    switch (g.kind) {
        case GateKind::Pred:
            out << g.pred << "(x)";
            return;
        case GateKind::Not:
            out << "Not(";
            serialize_gate(g.children.front(), out);
            out << ")";
            return;
        default: {
            out << kind_name(g.kind) << "[w=(";
            for (Eigen::Index j = 0; j < g.weights.size(); ++j) {
                if (j) out << ",";
                out << io::format_double(g.weights(j));
            }
            out << "),theta=" << io::format_double(g.theta) << "](";
            for (size_t j = 0; j < g.children.size(); ++j) {
                if (j) out << ", ";
                serialize_gate(g.children[j], out);
            }
            out << ")";
        }
    }
}

void template_gate(const Gate<double>& g, std::ostringstream& out) {
    switch (g.kind) {
        case GateKind::Pred:
            out << g.pred << "(x)";
            return;
        case GateKind::Not:
            out << "Not(";
            template_gate(g.children.front(), out);
            out << ")";
            return;
        default: {
            out << kind_name(g.kind) << "(";
            for (size_t j = 0; j < g.children.size(); ++j) {
                if (j) out << ",";
                template_gate(g.children[j], out);
            }
            out << ")";
        }
    }
}

}  // namespace

Formula<double> parse_template(const std::string& text, double alpha, double sharpness) {
    check_alpha(alpha);
    std::string body = text;
    double a = alpha, s = sharpness;
    if (body.rfind("# ", 0) == 0) {  // optional header line
        const size_t nl = body.find('\n');
        std::istringstream hdr(body.substr(2, nl - 2));
        std::string kv;
        while (hdr >> kv) {
            const size_t eq = kv.find('=');
            if (eq == std::string::npos) throw ParseError("lnn header: expected key=value");
            const std::string key = kv.substr(0, eq);
            const double val = std::strtod(kv.c_str() + eq + 1, nullptr);
            if (key == "alpha")
                a = val;
            else if (key == "sharpness")
                s = val;
            else
                throw ParseError("lnn header: unknown key '" + key + "'");
        }
        body = nl == std::string::npos ? "" : body.substr(nl + 1);
    }
    Formula<double> f;
    f.alpha = a;
    f.sharpness = s;
    f.root = TemplateParser(body, a).parse();
    return f;
}

Formula<double> parse_formula(const std::string& text) { return parse_template(text); }

std::string serialize(const Formula<double>& f) {
    std::ostringstream out;
    out << "# alpha=" << io::format_double(f.alpha)
        << " sharpness=" << io::format_double(f.sharpness) << "\n";
    serialize_gate(f.root, out);
    out << "\n";
    return out.str();
}

std::string template_text(const Formula<double>& f) {
    std::ostringstream out;
    template_gate(f.root, out);
    return out.str();
}

namespace {
void collect_preds(const Gate<double>& g, std::vector<std::string>& out) {
    if (g.kind == GateKind::Pred) {
        if (std::find(out.begin(), out.end(), g.pred) == out.end()) out.push_back(g.pred);
    }
    for (const auto& c : g.children) collect_preds(c, out);
}
}  // namespace

std::vector<std::string> predicates(const Formula<double>& f) {
    std::vector<std::string> out;
    collect_preds(f.root, out);
    return out;
}

}  // namespace nsrl::lnn
