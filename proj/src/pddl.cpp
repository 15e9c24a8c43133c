#include <algorithm>
#include <cctype>
#include <sstream>

#include "nsrl/planner.hpp"

namespace nsrl::planner {

namespace {

struct Token {
    enum Kind { LParen, RParen, Symbol, End } kind;
    std::string text;
    int line, col;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_ws_and_comments();
        if (pos_ >= text_.size()) return {Token::End, "", line_, col_};
        const int l = line_, c = col_;
        const char ch = text_[pos_];
        if (ch == '(') {
            advance();
            return {Token::LParen, "(", l, c};
        }
        if (ch == ')') {
            advance();
            return {Token::RParen, ")", l, c};
        }
        std::string sym;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
            sym += static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_])));
            advance();
        }
        return {Token::Symbol, sym, l, c};
    }

  private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_ws_and_comments() {
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(ch))) {
                advance();
            } else if (ch == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

[[noreturn]] void fail(const Token& t, const std::string& msg) {
    std::ostringstream ss;
    ss << "pddl:" << t.line << ":" << t.col << ": " << msg;
    throw ParseError(ss.str(), t.line, t.col);
}

[[noreturn]] void unsupported(const Token& t, const std::string& feature) {
    std::ostringstream ss;
    ss << "pddl:" << t.line << ":" << t.col << ": unsupported construct '" << feature
       << "' (STRIPS subset only)";
    throw UnsupportedFeatureError(ss.str(), t.line, t.col);
}

class Parser {
  public:
    explicit Parser(const std::string& text) : lex_(text) { cur_ = lex_.next(); }

    Token cur() const { return cur_; }

    Token take() {
        Token t = cur_;
        cur_ = lex_.next();
        return t;
    }

    void expect(Token::Kind kind, const char* what) {
        if (cur_.kind != kind) fail(cur_, std::string("expected ") + what);
        take();
    }

    std::string symbol(const char* what) {
        if (cur_.kind != Token::Symbol) fail(cur_, std::string("expected ") + what);
        return take().text;
    }

    void keyword(const std::string& kw) {
        if (cur_.kind != Token::Symbol || cur_.text != kw) fail(cur_, "expected '" + kw + "'");
        take();
    }

    bool at_symbol(const std::string& s) const {
        return cur_.kind == Token::Symbol && cur_.text == s;
    }

    // skips an optional "- typename" marker
    void skip_type_marker() {
        if (cur_.kind == Token::Symbol && cur_.text == "-") {
            take();
            symbol("type name");
        }
    }

  private:
    Lexer lex_;
    Token cur_;
};

struct Literal {
    std::string atom;
    bool positive;
};

// (pred ?x) or (not (pred ?x)); `var` is "?x" in domains, the object name
// in problems.
Literal parse_literal(Parser& p, const std::string& var) {
    p.expect(Token::LParen, "'('");
    if (p.at_symbol("not")) {
        p.take();
        Literal inner = parse_literal(p, var);
        if (!inner.positive) fail(p.cur(), "double negation is not STRIPS");
        p.expect(Token::RParen, "')'");
        return {inner.atom, false};
    }
    const Token head = p.cur();
    const std::string name = p.symbol("predicate name");
    for (const char* quantified : {"forall", "exists", "when", "or", "imply", "="})
        if (name == quantified) unsupported(head, name);
    if (p.cur().kind == Token::Symbol) {
        const std::string arg = p.symbol("argument");
        if (arg != var) fail(head, "expected single argument '" + var + "', got '" + arg + "'");
    }
    if (p.cur().kind != Token::RParen) fail(p.cur(), "predicates take at most one argument");
    p.take();
    return {name, true};
}

// (and lit...) or a bare literal
std::vector<Literal> parse_condition(Parser& p, const std::string& var) {
    std::vector<Literal> lits;
    p.expect(Token::LParen, "'('");
    if (p.at_symbol("and")) {
        p.take();
        while (p.cur().kind == Token::LParen) lits.push_back(parse_literal(p, var));
        p.expect(Token::RParen, "')'");
        return lits;
    }
    // bare literal: re-parse the head we already consumed the paren of
    if (p.at_symbol("not")) {
        p.take();
        Literal inner = parse_literal(p, var);
        p.expect(Token::RParen, "')'");
        lits.push_back({inner.atom, false});
        return lits;
    }
    const Token head = p.cur();
    const std::string name = p.symbol("predicate name");
    for (const char* quantified : {"forall", "exists", "when", "or", "imply"})
        if (name == quantified) unsupported(head, name);
    if (p.cur().kind == Token::Symbol) p.take();
    p.expect(Token::RParen, "')'");
    lits.push_back({name, true});
    return lits;
}

}  // namespace

PddlText emit_pddl(const PlanningProblem& problem, const std::string& domain_name) {
    problem.validate();
    std::vector<std::string> atoms = problem.atoms;
    std::sort(atoms.begin(), atoms.end());
    std::vector<const StripsAction*> actions;
    for (const auto& a : problem.actions) actions.push_back(&a);
    std::sort(actions.begin(), actions.end(),
              [](const auto* a, const auto* b) { return a->name < b->name; });

    std::ostringstream d;
    d << "(define (domain " << domain_name << ")\n";
    d << "  (:requirements :strips :negative-preconditions)\n";
    d << "  (:predicates";
    for (const auto& a : atoms) d << "\n    (" << a << " ?x)";
    d << ")\n";
    for (const auto* a : actions) {
        d << "  (:action " << a->name << "\n";
        d << "    :parameters (?x)\n";
        d << "    :precondition (and";
        for (const auto& p : a->pre_pos) d << " (" << p << " ?x)";
        for (const auto& p : a->pre_neg) d << " (not (" << p << " ?x))";
        d << ")\n";
        d << "    :effect (and";
        for (const auto& p : a->add) d << " (" << p << " ?x)";
        for (const auto& p : a->del) d << " (not (" << p << " ?x))";
        d << "))\n";
    }
    d << ")\n";

    std::ostringstream pr;
    pr << "(define (problem " << domain_name << "-problem)\n";
    pr << "  (:domain " << domain_name << ")\n";
    pr << "  (:objects " << problem.object << ")\n";
    pr << "  (:init";
    for (const auto& a : problem.init) pr << " (" << a << " " << problem.object << ")";
    pr << ")\n";
    pr << "  (:goal (and";
    for (const auto& a : problem.goal_pos) pr << " (" << a << " " << problem.object << ")";
    for (const auto& a : problem.goal_neg) pr << " (not (" << a << " " << problem.object << "))";
    pr << ")))\n";

    return {d.str(), pr.str()};
}

PlanningProblem parse_pddl(const std::string& domain_text, const std::string& problem_text) {
    PlanningProblem out;

    {  // domain
        Parser p(domain_text);
        p.expect(Token::LParen, "'('");
        p.keyword("define");
        p.expect(Token::LParen, "'('");
        p.keyword("domain");
        p.symbol("domain name");
        p.expect(Token::RParen, "')'");

        while (p.cur().kind == Token::LParen) {
            p.take();
            const Token head = p.cur();
            const std::string section = p.symbol("section keyword");
            if (section == ":requirements") {
                while (p.cur().kind == Token::Symbol) {
                    const std::string req = p.take().text;
                    if (req != ":strips" && req != ":negative-preconditions" && req != ":typing")
                        unsupported(head, req);
                }
                p.expect(Token::RParen, "')'");
            } else if (section == ":predicates") {
                while (p.cur().kind == Token::LParen) {
                    p.take();
                    const std::string name = p.symbol("predicate name");
                    if (p.cur().kind == Token::Symbol && p.cur().text[0] == '?') {
                        p.take();
                        p.skip_type_marker();
                    }
                    if (p.cur().kind == Token::Symbol) fail(p.cur(), "predicates must be unary");
                    p.expect(Token::RParen, "')'");
                    out.atoms.push_back(name);
                }
                p.expect(Token::RParen, "')'");
            } else if (section == ":action") {
                StripsAction act;
                act.name = p.symbol("action name");
                std::string var = "?x";
                while (p.cur().kind == Token::Symbol) {
                    const std::string key = p.take().text;
                    if (key == ":parameters") {
                        p.expect(Token::LParen, "'('");
                        var = p.symbol("parameter");
                        if (var[0] != '?') fail(p.cur(), "parameter must start with '?'");
                        p.skip_type_marker();
                        if (p.cur().kind == Token::Symbol)
                            unsupported(p.cur(), "multiple parameters");
                        p.expect(Token::RParen, "')'");
                    } else if (key == ":precondition") {
                        for (const auto& lit : parse_condition(p, var))
                            (lit.positive ? act.pre_pos : act.pre_neg).insert(lit.atom);
                    } else if (key == ":effect") {
                        for (const auto& lit : parse_condition(p, var))
                            (lit.positive ? act.add : act.del).insert(lit.atom);
                    } else {
                        unsupported(head, key);
                    }
                }
                p.expect(Token::RParen, "')'");
                out.actions.push_back(std::move(act));
            } else {
                unsupported(head, section);
            }
        }
        p.expect(Token::RParen, "')'");
        if (p.cur().kind != Token::End) fail(p.cur(), "trailing content after domain");
    }

    {  // problem
        Parser p(problem_text);
        p.expect(Token::LParen, "'('");
        p.keyword("define");
        p.expect(Token::LParen, "'('");
        p.keyword("problem");
        p.symbol("problem name");
        p.expect(Token::RParen, "')'");

        while (p.cur().kind == Token::LParen) {
            p.take();
            const Token head = p.cur();
            const std::string section = p.symbol("section keyword");
            if (section == ":domain") {
                p.symbol("domain name");
                p.expect(Token::RParen, "')'");
            } else if (section == ":objects") {
                out.object = p.symbol("object name");
                p.skip_type_marker();
                if (p.cur().kind == Token::Symbol) unsupported(head, "multiple objects");
                p.expect(Token::RParen, "')'");
            } else if (section == ":init") {
                while (p.cur().kind == Token::LParen) {
                    Literal lit = parse_literal(p, out.object);
                    if (!lit.positive) fail(head, "negative literals are not allowed in :init");
                    out.init.insert(lit.atom);
                }
                p.expect(Token::RParen, "')'");
            } else if (section == ":goal") {
                for (const auto& lit : parse_condition(p, out.object))
                    (lit.positive ? out.goal_pos : out.goal_neg).insert(lit.atom);
                p.expect(Token::RParen, "')'");
            } else {
                unsupported(head, section);
            }
        }
        p.expect(Token::RParen, "')'");
        if (p.cur().kind != Token::End) fail(p.cur(), "trailing content after problem");
    }

    std::sort(out.atoms.begin(), out.atoms.end());
    out.validate();
    return out;
}

}  // namespace nsrl::planner
