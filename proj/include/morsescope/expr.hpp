// Expression trees for vector-field components.
//
// Grammar (see README for the EBNF):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' integer)*        right-associative
//   primary := number | ident | func '(' expr ')' | '(' expr ')'
// Identifiers x1..xd denote state variables; sin, cos, sqrt, abs, sign are
// functions; every other identifier is a parameter.
#pragma once

#include "morsescope/interval.hpp"

#include <cstddef>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace morsescope {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at position " + std::to_string(pos)), position(pos)
    {
    }
    std::size_t position;
};

class UnknownIdentifier : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Op { Const, Param, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Sqrt, Abs, Sign };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    explicit Node(Op o) : op(o) {}

    Op op;
    // Const: rigorous enclosure of the literal plus its nearest double.
    Interval value{};
    double real = 0.0;
    std::string name; // Param
    int var = 0;      // Var: zero-based index
    unsigned exponent = 0;
    Expr a, b;
};

namespace ex {

Expr constant(double x);
Expr constant(const Interval& enclosure, double nearest);
Expr param(std::string name);
Expr var(int index);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, unsigned n);
Expr call(Op fn, Expr a);

} // namespace ex

bool is_zero(const Expr& e);
bool is_one(const Expr& e);

Expr parse_expr(std::string_view src);
std::string to_string(const Expr& e);

// Partial derivative with respect to the zero-based variable `index`.
// abs is differentiated as sign(x) with sign(0) = 0.
Expr diff(const Expr& e, int index);

// Replaces parameters by constants; throws UnknownIdentifier on unbound
// names or on variables outside [0, dim).
Expr bind_params(const Expr& e, const std::map<std::string, double>& params, int dim);

std::size_t node_count(const Expr& e);
// Highest variable index + 1 referenced by e (0 when none).
int max_var(const Expr& e);

// Flat evaluation program over a DAG of expressions: structurally equal
// subtrees are evaluated once. Parameters must be bound before compiling.
class Tape {
public:
    explicit Tape(const std::vector<Expr>& outputs);

    std::size_t size() const { return code_.size(); }
    std::size_t output_count() const { return outputs_.size(); }

    void eval(const double* x, double* out, std::vector<double>& scratch) const;
    void eval(const Interval* x, Interval* out, std::vector<Interval>& scratch) const;

private:
    struct Instr {
        Op op;
        int a = -1;
        int b = -1;
        unsigned n = 0;
        Interval value{};
        double real = 0.0;
    };
    template <class T>
    void run(const T* x, T* out, std::vector<T>& scratch) const;

    std::vector<Instr> code_;
    std::vector<int> outputs_;
};

} // namespace morsescope
