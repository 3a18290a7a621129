#include "mixplan/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mixplan/error.hpp"

namespace mixplan::ltl {

Formula::Formula() : Formula(make(Op::True, {})) {}

Formula Formula::make(Op op, std::vector<Formula> kids, std::string name) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->name = std::move(name);
    n->kids = std::move(kids);
    return Formula(std::move(n));
}

Formula Formula::truth() { return make(Op::True, {}); }
Formula Formula::atom(std::string name) { return make(Op::Atom, {}, std::move(name)); }
Formula Formula::negation(Formula f) { return make(Op::Not, {std::move(f)}); }
Formula Formula::conjunction(Formula l, Formula r) { return make(Op::And, {std::move(l), std::move(r)}); }
Formula Formula::disjunction(Formula l, Formula r) { return make(Op::Or, {std::move(l), std::move(r)}); }
Formula Formula::implication(Formula l, Formula r) {
    return make(Op::Implies, {std::move(l), std::move(r)});
}
Formula Formula::next(Formula f) { return make(Op::Next, {std::move(f)}); }
Formula Formula::until(Formula l, Formula r) { return make(Op::Until, {std::move(l), std::move(r)}); }
Formula Formula::always(Formula f) { return make(Op::Always, {std::move(f)}); }
Formula Formula::eventually(Formula f) { return make(Op::Eventually, {std::move(f)}); }

const Formula& Formula::lhs() const { return node_->kids.at(0); }
const Formula& Formula::rhs() const { return node_->kids.at(1); }
bool Formula::is_unary() const { return node_->kids.size() == 1; }
bool Formula::is_binary() const { return node_->kids.size() == 2; }

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op() || a.name() != b.name() || a.node_->kids.size() != b.node_->kids.size())
        return false;
    for (std::size_t i = 0; i < a.node_->kids.size(); ++i)
        if (!(a.node_->kids[i] == b.node_->kids[i])) return false;
    return true;
}

namespace {

enum class Tok { End, Ident, True, False, Not, Next, Always, Eventually, Until, And, Or, Implies, LParen, RParen };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t pos = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && ident_char(s[j])) ++j;
            t.text = std::string(s.substr(i, j - i));
            if (t.text == "true") t.kind = Tok::True;
            else if (t.text == "false") t.kind = Tok::False;
            else if (t.text == "X") t.kind = Tok::Next;
            else if (t.text == "U") t.kind = Tok::Until;
            else t.kind = Tok::Ident;
            i = j;
        } else if (starts("&&")) {
            t.kind = Tok::And, t.text = "&&", i += 2;
        } else if (starts("||")) {
            t.kind = Tok::Or, t.text = "||", i += 2;
        } else if (starts("->")) {
            t.kind = Tok::Implies, t.text = "->", i += 2;
        } else if (starts("[]")) {
            t.kind = Tok::Always, t.text = "[]", i += 2;
        } else if (starts("<>")) {
            t.kind = Tok::Eventually, t.text = "<>", i += 2;
        } else if (c == '!') {
            t.kind = Tok::Not, t.text = "!", ++i;
        } else if (c == '(') {
            t.kind = Tok::LParen, t.text = "(", ++i;
        } else if (c == ')') {
            t.kind = Tok::RParen, t.text = ")", ++i;
        } else {
            std::size_t j = i + 1;
            while (j < s.size() && std::ispunct(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
                   s[j] != ')' && s[j] != '!')
                ++j;
            throw ParseError("unknown operator '" + std::string(s.substr(i, j - i)) + "'", i);
        }
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "", s.size()});
    return out;
}

// Binary temporal operators of other LTL dialects that this grammar does not support.
bool foreign_binary(const std::string& w) { return w == "R" || w == "W" || w == "M" || w == "V"; }

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Formula run() {
        if (peek().kind == Tok::End) throw ParseError("empty formula", peek().pos);
        Formula f = implies();
        if (peek().kind != Tok::End) unexpected();
        return f;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    Token take() { return toks_[i_++]; }

    [[noreturn]] void unexpected() const {
        const Token& t = peek();
        if (t.kind == Tok::Ident && foreign_binary(t.text))
            throw ParseError("unknown operator '" + t.text + "'", t.pos);
        if (t.kind == Tok::End) throw ParseError("unexpected end of input", t.pos);
        throw ParseError("unexpected token '" + t.text + "'", t.pos);
    }

    Formula implies() {
        Formula l = disj();
        if (peek().kind == Tok::Implies) {
            take();
            return Formula::implication(l, implies());
        }
        return l;
    }
    Formula disj() {
        Formula l = conj();
        while (peek().kind == Tok::Or) {
            take();
            l = Formula::disjunction(l, conj());
        }
        return l;
    }
    Formula conj() {
        Formula l = until();
        while (peek().kind == Tok::And) {
            take();
            l = Formula::conjunction(l, until());
        }
        return l;
    }
    Formula until() {
        Formula l = unary();
        if (peek().kind == Tok::Until) {
            take();
            return Formula::until(l, until());
        }
        return l;
    }
    Formula unary() {
        switch (peek().kind) {
            case Tok::Not: take(); return Formula::negation(unary());
            case Tok::Next: take(); return Formula::next(unary());
            case Tok::Always: take(); return Formula::always(unary());
            case Tok::Eventually: take(); return Formula::eventually(unary());
            default: return primary();
        }
    }
    Formula primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::True: take(); return Formula::truth();
            case Tok::False: take(); return Formula::negation(Formula::truth());
            case Tok::Ident: {
                if (foreign_binary(t.text)) unexpected();
                return Formula::atom(take().text);
            }
            case Tok::LParen: {
                take();
                Formula f = implies();
                if (peek().kind != Tok::RParen) {
                    if (peek().kind == Tok::End) throw ParseError("missing ')'", peek().pos);
                    unexpected();
                }
                take();
                return f;
            }
            default: unexpected();
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

// Binding strength used by the printer; higher binds tighter.
int prec(Op op) {
    switch (op) {
        case Op::Implies: return 1;
        case Op::Or: return 2;
        case Op::And: return 3;
        case Op::Until: return 4;
        case Op::Not:
        case Op::Next:
        case Op::Always:
        case Op::Eventually: return 5;
        default: return 6;
    }
}

bool right_assoc(Op op) { return op == Op::Until || op == Op::Implies; }

void print(const Formula& f, std::string& out) {
    auto child = [&](const Formula& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };
    switch (f.op()) {
        case Op::True: out += "true"; return;
        case Op::Atom: out += f.name(); return;
        case Op::Not: out += '!'; break;
        case Op::Next: out += "X "; break;
        case Op::Always: out += "[]"; break;
        case Op::Eventually: out += "<>"; break;
        default: {
            const int p = prec(f.op());
            const bool ra = right_assoc(f.op());
            child(f.lhs(), prec(f.lhs().op()) < p || (ra && prec(f.lhs().op()) == p));
            switch (f.op()) {
                case Op::And: out += " && "; break;
                case Op::Or: out += " || "; break;
                case Op::Implies: out += " -> "; break;
                default: out += " U "; break;
            }
            child(f.rhs(), prec(f.rhs().op()) < p || (!ra && prec(f.rhs().op()) == p));
            return;
        }
    }
    child(f.lhs(), prec(f.lhs().op()) < prec(f.op()));
}

void collect_atoms(const Formula& f, std::set<std::string>& out) {
    if (f.op() == Op::Atom) out.insert(f.name());
    if (f.is_unary()) collect_atoms(f.lhs(), out);
    if (f.is_binary()) {
        collect_atoms(f.lhs(), out);
        collect_atoms(f.rhs(), out);
    }
}

Formula neg(Formula f) {
    if (f.op() == Op::Not) return f.lhs();
    return Formula::negation(std::move(f));
}

}  // namespace

Formula parse(std::string_view text) { return Parser(tokenize(text)).run(); }

std::string to_string(const Formula& f) {
    std::string out;
    print(f, out);
    return out;
}

Formula normalize(const Formula& f) {
    switch (f.op()) {
        case Op::True:
        case Op::Atom: return f;
        case Op::Not: return neg(normalize(f.lhs()));
        case Op::And: return Formula::conjunction(normalize(f.lhs()), normalize(f.rhs()));
        case Op::Or:
            return neg(Formula::conjunction(neg(normalize(f.lhs())), neg(normalize(f.rhs()))));
        case Op::Implies:
            return neg(Formula::conjunction(normalize(f.lhs()), neg(normalize(f.rhs()))));
        case Op::Next: return Formula::next(normalize(f.lhs()));
        case Op::Until: return Formula::until(normalize(f.lhs()), normalize(f.rhs()));
        case Op::Eventually: return Formula::until(Formula::truth(), normalize(f.lhs()));
        case Op::Always:
            return neg(Formula::until(Formula::truth(), neg(normalize(f.lhs()))));
    }
    return f;
}

bool is_sc_ltl(const Formula& f) {
    switch (f.op()) {
        case Op::True:
        case Op::Atom: return true;
        case Op::Not: return f.lhs().op() == Op::Atom;
        case Op::And:
        case Op::Or:
        case Op::Until: return is_sc_ltl(f.lhs()) && is_sc_ltl(f.rhs());
        case Op::Next:
        case Op::Eventually: return is_sc_ltl(f.lhs());
        case Op::Implies:
        case Op::Always: return false;
    }
    return false;
}

std::vector<std::string> atoms(const Formula& f) {
    std::set<std::string> s;
    collect_atoms(f, s);
    return {s.begin(), s.end()};
}

int depth(const Formula& f) {
    if (f.is_unary()) return 1 + depth(f.lhs());
    if (f.is_binary()) return 1 + std::max(depth(f.lhs()), depth(f.rhs()));
    return 0;
}

}  // namespace mixplan::ltl
