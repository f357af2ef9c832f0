#include "morsescope/expr.hpp"

#include <charconv>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <tuple>
#include <unordered_map>

namespace morsescope {

namespace {

Expr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_const(const Expr& e) { return e->op == Op::Const; }

bool is_exact_const(const Expr& e, double x)
{
    return is_const(e) && e->value.lo == x && e->value.hi == x;
}

} // namespace

bool is_zero(const Expr& e) { return is_exact_const(e, 0.0); }
bool is_one(const Expr& e) { return is_exact_const(e, 1.0); }

namespace ex {

Expr constant(double x) { return constant(Interval(x), x); }

Expr constant(const Interval& enclosure, double nearest)
{
    Node n{Op::Const};
    n.value = enclosure;
    n.real = nearest;
    return make(std::move(n));
}

Expr param(std::string name)
{
    Node n{Op::Param};
    n.name = std::move(name);
    return make(std::move(n));
}

Expr var(int index)
{
    Node n{Op::Var};
    n.var = index;
    return make(std::move(n));
}

Expr neg(Expr a)
{
    if (is_const(a))
        return constant(-a->value, -a->real);
    if (a->op == Op::Neg)
        return a->a;
    Node n{Op::Neg};
    n.a = std::move(a);
    return make(std::move(n));
}

namespace {

Expr binary(Op op, Expr a, Expr b)
{
    Node n{op};
    n.a = std::move(a);
    n.b = std::move(b);
    return make(std::move(n));
}

} // namespace

Expr add(Expr a, Expr b)
{
    if (is_zero(a))
        return b;
    if (is_zero(b))
        return a;
    if (is_const(a) && is_const(b))
        return constant(a->value + b->value, a->real + b->real);
    return binary(Op::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b)
{
    if (is_zero(b))
        return a;
    if (is_zero(a))
        return neg(std::move(b));
    if (is_const(a) && is_const(b))
        return constant(a->value - b->value, a->real - b->real);
    return binary(Op::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b)
{
    if (is_zero(a) || is_zero(b))
        return constant(0.0);
    if (is_one(a))
        return b;
    if (is_one(b))
        return a;
    if (is_const(a) && is_const(b))
        return constant(a->value * b->value, a->real * b->real);
    return binary(Op::Mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b)
{
    if (is_one(b))
        return a;
    if (is_zero(a) && !(is_const(b) && b->value.contains_zero()))
        return constant(0.0);
    if (is_const(a) && is_const(b) && !b->value.contains_zero())
        return constant(a->value / b->value, a->real / b->real);
    return binary(Op::Div, std::move(a), std::move(b));
}

Expr pow(Expr a, unsigned n)
{
    if (n == 0)
        return constant(1.0);
    if (n == 1)
        return a;
    if (is_const(a)) {
        double r = 1.0;
        for (unsigned i = 0; i < n; ++i)
            r *= a->real;
        return constant(morsescope::pow(a->value, n), r);
    }
    Node node{Op::Pow};
    node.a = std::move(a);
    node.exponent = n;
    return make(std::move(node));
}

Expr call(Op fn, Expr a)
{
    Node n{fn};
    n.a = std::move(a);
    return make(std::move(n));
}

} // namespace ex

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse()
    {
        Expr e = expr();
        skip();
        if (pos_ != src_.size())
            throw SyntaxError("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
        return e;
    }

private:
    void skip()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr()
    {
        Expr e = term();
        for (;;) {
            if (accept('+'))
                e = ex::add(e, term());
            else if (accept('-'))
                e = ex::sub(e, term());
            else
                return e;
        }
    }

    Expr term()
    {
        Expr e = unary();
        for (;;) {
            if (accept('*'))
                e = ex::mul(e, unary());
            else if (accept('/'))
                e = ex::div(e, unary());
            else
                return e;
        }
    }

    Expr unary()
    {
        if (accept('-'))
            return ex::neg(unary());
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (!accept('^'))
            return base;
        return ex::pow(base, exponent_chain());
    }

    // Right-associative chain of integer literals: 2^3^2 = 2^(3^2).
    unsigned exponent_chain()
    {
        skip();
        const std::size_t at = pos_;
        unsigned long long n = integer_literal();
        if (accept('^')) {
            const unsigned e = exponent_chain();
            unsigned long long r = 1;
            for (unsigned i = 0; i < e; ++i) {
                r *= n;
                if (r > 64)
                    throw SyntaxError("exponent too large", at);
            }
            n = r;
        }
        if (n > 64)
            throw SyntaxError("exponent too large", at);
        return static_cast<unsigned>(n);
    }

    unsigned long long integer_literal()
    {
        skip();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (start == pos_)
            throw SyntaxError("expected nonnegative integer exponent", start);
        return std::stoull(std::string(src_.substr(start, pos_ - start)));
    }

    Expr primary()
    {
        skip();
        if (pos_ >= src_.size())
            throw SyntaxError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!accept(')'))
                throw SyntaxError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        throw SyntaxError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    Expr number()
    {
        const std::size_t start = pos_;
        bool integral = true;
        bool zero_fraction = true;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            integral = false;
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                zero_fraction = zero_fraction && src_[pos_] == '0';
                ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            integral = false;
            zero_fraction = false;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
                ++pos_;
            const std::size_t digits = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            if (digits == pos_)
                throw SyntaxError("malformed exponent", pos_);
        }
        const std::string text(src_.substr(start, pos_ - start));
        if (text == ".")
            throw SyntaxError("malformed number", start);
        const double x = std::strtod(text.c_str(), nullptr);
        const bool exact = (integral || zero_fraction) && std::fabs(x) < 0x1p53;
        if (exact)
            return ex::constant(x);
        return ex::constant(Interval::unchecked(rounding::next_down(x), rounding::next_up(x)), x);
    }

    Expr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string id(src_.substr(start, pos_ - start));

        static const std::map<std::string, Op> functions = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"sign", Op::Sign}};
        if (auto it = functions.find(id); it != functions.end()) {
            if (!accept('('))
                throw SyntaxError("expected '(' after " + id, pos_);
            Expr arg = expr();
            if (!accept(')'))
                throw SyntaxError("expected ')'", pos_);
            return ex::call(it->second, arg);
        }
        if (id.size() > 1 && id[0] == 'x' &&
            id.find_first_not_of("0123456789", 1) == std::string::npos && id[1] != '0') {
            const int index = std::stoi(id.substr(1));
            return ex::var(index - 1);
        }
        return ex::param(id);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace

Expr parse_expr(std::string_view src) { return Parser(src).parse(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Expr& e)
{
    switch (e->op) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
    case Op::Div:
        return 2;
    case Op::Neg:
        return 3;
    case Op::Pow:
        return 4;
    case Op::Const:
        return e->real < 0 || std::signbit(e->real) ? 3 : 5;
    default:
        return 5;
    }
}

std::string format_real(double x)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

const char* function_name(Op op)
{
    switch (op) {
    case Op::Sin:
        return "sin";
    case Op::Cos:
        return "cos";
    case Op::Sqrt:
        return "sqrt";
    case Op::Abs:
        return "abs";
    case Op::Sign:
        return "sign";
    default:
        return "?";
    }
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out)
{
    if (precedence(e) < min_prec) {
        out += '(';
        print(e, out);
        out += ')';
    } else {
        print(e, out);
    }
}

void print(const Expr& e, std::string& out)
{
    switch (e->op) {
    case Op::Const:
        out += format_real(e->real);
        break;
    case Op::Param:
        out += e->name;
        break;
    case Op::Var:
        out += 'x' + std::to_string(e->var + 1);
        break;
    case Op::Neg:
        out += '-';
        print_child(e->a, 3, out);
        break;
    case Op::Add:
        print_child(e->a, 1, out);
        out += " + ";
        print_child(e->b, 2, out);
        break;
    case Op::Sub:
        print_child(e->a, 1, out);
        out += " - ";
        print_child(e->b, 2, out);
        break;
    case Op::Mul:
        print_child(e->a, 2, out);
        out += '*';
        print_child(e->b, 3, out);
        break;
    case Op::Div:
        print_child(e->a, 2, out);
        out += '/';
        print_child(e->b, 3, out);
        break;
    case Op::Pow:
        print_child(e->a, 5, out);
        out += '^' + std::to_string(e->exponent);
        break;
    default:
        out += function_name(e->op);
        out += '(';
        print(e->a, out);
        out += ')';
        break;
    }
}

} // namespace

std::string to_string(const Expr& e)
{
    std::string out;
    print(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Differentiation and binding

Expr diff(const Expr& e, int index)
{
    using namespace ex;
    switch (e->op) {
    case Op::Const:
    case Op::Param:
    case Op::Sign:
        return constant(0.0);
    case Op::Var:
        return constant(e->var == index ? 1.0 : 0.0);
    case Op::Neg:
        return neg(diff(e->a, index));
    case Op::Add:
        return add(diff(e->a, index), diff(e->b, index));
    case Op::Sub:
        return sub(diff(e->a, index), diff(e->b, index));
    case Op::Mul:
        return add(mul(diff(e->a, index), e->b), mul(e->a, diff(e->b, index)));
    case Op::Div: {
        Expr da = diff(e->a, index);
        Expr db = diff(e->b, index);
        if (is_zero(db))
            return div(da, e->b);
        return div(sub(mul(da, e->b), mul(e->a, db)), pow(e->b, 2));
    }
    case Op::Pow: {
        Expr da = diff(e->a, index);
        if (is_zero(da))
            return constant(0.0);
        const unsigned n = e->exponent;
        return mul(mul(constant(static_cast<double>(n)), pow(e->a, n - 1)), da);
    }
    case Op::Sin:
        return mul(call(Op::Cos, e->a), diff(e->a, index));
    case Op::Cos:
        return neg(mul(call(Op::Sin, e->a), diff(e->a, index)));
    case Op::Sqrt:
        return div(diff(e->a, index), mul(constant(2.0), e));
    case Op::Abs:
        return mul(call(Op::Sign, e->a), diff(e->a, index));
    }
    return constant(0.0);
}

Expr bind_params(const Expr& e, const std::map<std::string, double>& params, int dim)
{
    using namespace ex;
    switch (e->op) {
    case Op::Const:
        return e;
    case Op::Param: {
        auto it = params.find(e->name);
        if (it == params.end())
            throw UnknownIdentifier("unbound identifier '" + e->name + "'");
        return constant(it->second);
    }
    case Op::Var:
        if (e->var < 0 || e->var >= dim)
            throw UnknownIdentifier("variable x" + std::to_string(e->var + 1) + " outside dimension " +
                                    std::to_string(dim));
        return e;
    case Op::Neg:
        return neg(bind_params(e->a, params, dim));
    case Op::Add:
        return add(bind_params(e->a, params, dim), bind_params(e->b, params, dim));
    case Op::Sub:
        return sub(bind_params(e->a, params, dim), bind_params(e->b, params, dim));
    case Op::Mul:
        return mul(bind_params(e->a, params, dim), bind_params(e->b, params, dim));
    case Op::Div:
        return div(bind_params(e->a, params, dim), bind_params(e->b, params, dim));
    case Op::Pow:
        return pow(bind_params(e->a, params, dim), e->exponent);
    default:
        return call(e->op, bind_params(e->a, params, dim));
    }
}

std::size_t node_count(const Expr& e)
{
    if (!e)
        return 0;
    return 1 + node_count(e->a) + node_count(e->b);
}

int max_var(const Expr& e)
{
    if (!e)
        return 0;
    if (e->op == Op::Var)
        return e->var + 1;
    return std::max(max_var(e->a), max_var(e->b));
}

// ---------------------------------------------------------------------------
// Tape

namespace {

using InstrKey = std::tuple<int, int, int, unsigned, double, double, double, int>;

struct KeyHash {
    std::size_t operator()(const InstrKey& k) const
    {
        std::size_t h = 1469598103934665603ull;
        auto mix = [&h](std::size_t v) { h = (h ^ v) * 1099511628211ull; };
        mix(std::get<0>(k));
        mix(static_cast<std::size_t>(std::get<1>(k)));
        mix(static_cast<std::size_t>(std::get<2>(k)));
        mix(std::get<3>(k));
        mix(std::hash<double>{}(std::get<4>(k)));
        mix(std::hash<double>{}(std::get<5>(k)));
        mix(static_cast<std::size_t>(std::get<7>(k)));
        return h;
    }
};

} // namespace

Tape::Tape(const std::vector<Expr>& outputs)
{
    std::unordered_map<const Node*, int> by_node;
    std::unordered_map<InstrKey, int, KeyHash> by_key;

    std::function<int(const Expr&)> emit = [&](const Expr& e) -> int {
        if (auto it = by_node.find(e.get()); it != by_node.end())
            return it->second;
        if (e->op == Op::Param)
            throw UnknownIdentifier("parameter '" + e->name + "' must be bound before compiling");
        Instr ins{e->op};
        if (e->a)
            ins.a = emit(e->a);
        if (e->b)
            ins.b = emit(e->b);
        ins.n = e->op == Op::Var ? static_cast<unsigned>(e->var) : e->exponent;
        ins.value = e->value;
        ins.real = e->real;
        const InstrKey key{static_cast<int>(ins.op), ins.a, ins.b, ins.n, ins.value.lo, ins.value.hi, ins.real, 0};
        int id;
        if (auto it = by_key.find(key); it != by_key.end()) {
            id = it->second;
        } else {
            id = static_cast<int>(code_.size());
            code_.push_back(ins);
            by_key.emplace(key, id);
        }
        by_node.emplace(e.get(), id);
        return id;
    };

    outputs_.reserve(outputs.size());
    for (const auto& e : outputs)
        outputs_.push_back(emit(e));
}

namespace {

inline double apply_pow(double x, unsigned n)
{
    double r = 1.0;
    for (unsigned i = 0; i < n; ++i)
        r *= x;
    return r;
}

inline Interval apply_pow(const Interval& x, unsigned n) { return pow(x, n); }

inline double apply_sign(double x) { return static_cast<double>((x > 0) - (x < 0)); }

inline Interval apply_sign(const Interval& x)
{
    return Interval::unchecked(apply_sign(x.lo), apply_sign(x.hi));
}

template <class T>
T const_value(const Interval& v, double real)
{
    if constexpr (std::is_same_v<T, double>)
        return real;
    else
        return v;
}

} // namespace

template <class T>
void Tape::run(const T* x, T* out, std::vector<T>& s) const
{
    using std::abs;
    using std::cos;
    using std::sin;
    using std::sqrt;
    s.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        switch (in.op) {
        case Op::Const:
            s[i] = const_value<T>(in.value, in.real);
            break;
        case Op::Var:
            s[i] = x[in.n];
            break;
        case Op::Neg:
            s[i] = -s[in.a];
            break;
        case Op::Add:
            s[i] = s[in.a] + s[in.b];
            break;
        case Op::Sub:
            s[i] = s[in.a] - s[in.b];
            break;
        case Op::Mul:
            s[i] = s[in.a] * s[in.b];
            break;
        case Op::Div:
            s[i] = s[in.a] / s[in.b];
            break;
        case Op::Pow:
            s[i] = apply_pow(s[in.a], in.n);
            break;
        case Op::Sin:
            s[i] = sin(s[in.a]);
            break;
        case Op::Cos:
            s[i] = cos(s[in.a]);
            break;
        case Op::Sqrt:
            s[i] = sqrt(s[in.a]);
            break;
        case Op::Abs:
            s[i] = abs(s[in.a]);
            break;
        case Op::Sign:
            s[i] = apply_sign(s[in.a]);
            break;
        case Op::Param:
            break;
        }
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k)
        out[k] = s[outputs_[k]];
}

void Tape::eval(const double* x, double* out, std::vector<double>& scratch) const { run(x, out, scratch); }

void Tape::eval(const Interval* x, Interval* out, std::vector<Interval>& scratch) const
{
    run(x, out, scratch);
}

} // namespace morsescope
