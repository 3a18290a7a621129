#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mixplan::ltl {

enum class Op {
    True,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Always,
    Eventually,
};

/// Immutable LTL syntax tree. Copies share structure; equality is structural.
class Formula {
public:
    /// The constant `true`.
    Formula();

    static Formula truth();
    static Formula atom(std::string name);
    static Formula negation(Formula f);
    static Formula conjunction(Formula l, Formula r);
    static Formula disjunction(Formula l, Formula r);
    static Formula implication(Formula l, Formula r);
    static Formula next(Formula f);
    static Formula until(Formula l, Formula r);
    static Formula always(Formula f);
    static Formula eventually(Formula f);

    Op op() const { return node_->op; }
    /// Proposition name; empty unless op() == Op::Atom.
    const std::string& name() const { return node_->name; }
    /// Operand of a unary node, left operand of a binary node.
    const Formula& lhs() const;
    const Formula& rhs() const;
    bool is_unary() const;
    bool is_binary() const;

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node {
        Op op = Op::True;
        std::string name;
        std::vector<Formula> kids;
    };
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Formula make(Op op, std::vector<Formula> kids, std::string name = {});

    std::shared_ptr<const Node> node_;
};

/// Parses the concrete syntax
///
///     f ::= true | false | ident | ( f ) | ! f | X f | [] f | <> f
///         | f U f | f && f | f || f | f -> f
///
/// with precedence `! X [] <>` > `U` > `&&` > `||` > `->`. `U` and `->` associate to the
/// right, `&&` and `||` to the left. `false` is read as `!true`.
/// Throws ParseError carrying the byte offset of the problem.
Formula parse(std::string_view text);

/// Minimal-parenthesis rendering; parse(to_string(f)) == f for every tree.
std::string to_string(const Formula& f);

/// Rewrites derived operators into {true, atom, !, &&, X, U}. Double negations are removed.
Formula normalize(const Formula& f);

/// Syntactically co-safe: negation only on atoms, operators from {&&, ||, X, U, <>}.
bool is_sc_ltl(const Formula& f);

/// Sorted, de-duplicated proposition names occurring in f.
std::vector<std::string> atoms(const Formula& f);

/// Number of operator nodes on the longest root-to-leaf path (an atom has depth 0).
int depth(const Formula& f);

}  // namespace mixplan::ltl
