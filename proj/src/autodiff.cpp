#include "rtg/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace rtg {

namespace {

void require_same_tape(const Var& a, const Var& b) {
    if (a.tape() != b.tape()) throw std::logic_error("operands belong to different tapes");
}

bool broadcast_ok(const Array& a, const Array& b) {
    return a.same_shape(b) || a.size() == 1 || b.size() == 1;
}

// Result shape of a broadcasting binary op.
const Array& wide(const Array& a, const Array& b) { return a.size() == 1 ? b : a; }

double& grow(Array& adj, const Array& like) {
    if (adj.size() == 0) adj = Array::zeros_like(like);
    return adj[0];
}

void accumulate(DiffNode* n, const Array& g) {
    if (!n->requires_grad) return;
    grow(n->adjoint, n->value);
    if (g.same_shape(n->value)) {
        for (long i = 0; i < g.size(); ++i) n->adjoint[i] += g[i];
    } else if (n->value.size() == 1) {
        // operand was broadcast: reduce the incoming gradient
        double s = 0.0;
        for (long i = 0; i < g.size(); ++i) s += g[i];
        n->adjoint[0] += s;
    } else {
        throw ShapeError("gradient shape " + g.shape_str() + " does not reduce to " +
                         n->value.shape_str());
    }
}

// Scatter a value at index i of the incoming gradient to the operand
// (identity or broadcast slot 0).
inline long src_index(const DiffNode* n, long i) { return n->value.size() == 1 ? 0 : i; }

}  // namespace

Param& ParamStore::create(const std::string& name, Array init) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    params_.emplace_back(name, std::move(init));
    index_[name] = params_.size() - 1;
    return params_.back();
}

Param* ParamStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
}

DiffNode* Tape::alloc(Array value, Op op, bool requires_grad) {
    nodes_.emplace_back();
    DiffNode* n = &nodes_.back();
    n->value = std::move(value);
    n->op = op;
    n->requires_grad = requires_grad;
    n->tape = this;
    return n;
}

Var Tape::leaf(Array v, bool requires_grad) {
    return Var(alloc(std::move(v), Op::Leaf, requires_grad));
}

Var Tape::param(Param& p) {
    auto it = param_leaves_.find(&p);
    if (it != param_leaves_.end()) return Var(it->second);
    DiffNode* n = alloc(p.value, Op::Leaf, true);
    n->param = &p;
    param_leaves_[&p] = n;
    return Var(n);
}

void Tape::clear() {
    nodes_.clear();
    param_leaves_.clear();
}

namespace {

Var make_unary(Op op, const Var& a, Array value, double pa = 0.0, double pb = 0.0) {
    DiffNode* n = a.tape()->alloc(std::move(value), op, a.node()->requires_grad);
    n->parents = {a.node()};
    n->payload_a = pa;
    n->payload_b = pb;
    return Var(n);
}

Var make_binary(Op op, const Var& a, const Var& b, Array value) {
    require_same_tape(a, b);
    DiffNode* n = a.tape()->alloc(std::move(value), op,
                                  a.node()->requires_grad || b.node()->requires_grad);
    n->parents = {a.node(), b.node()};
    return Var(n);
}

Array ew_binary(const Array& a, const Array& b, double (*f)(double, double),
                const char* what) {
    if (!broadcast_ok(a, b))
        throw ShapeError(std::string(what) + ": incompatible shapes " + a.shape_str() + " and " +
                         b.shape_str());
    const Array& w = wide(a, b);
    Array out = Array::zeros_like(w);
    const bool sa = a.size() == 1, sb = b.size() == 1;
    for (long i = 0; i < w.size(); ++i) out[i] = f(a[sa ? 0 : i], b[sb ? 0 : i]);
    return out;
}

Array ew_unary(const Array& a, double (*f)(double)) {
    Array out = Array::zeros_like(a);
    for (long i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
    return make_binary(Op::Add, a, b, ew_binary(a.value(), b.value(),
                                                [](double x, double y) { return x + y; }, "add"));
}

Var operator-(const Var& a, const Var& b) {
    return make_binary(Op::Sub, a, b, ew_binary(a.value(), b.value(),
                                                [](double x, double y) { return x - y; }, "sub"));
}

Var operator*(const Var& a, const Var& b) {
    return make_binary(Op::Mul, a, b, ew_binary(a.value(), b.value(),
                                                [](double x, double y) { return x * y; }, "mul"));
}

Var operator/(const Var& a, const Var& b) {
    return make_binary(Op::Div, a, b, ew_binary(a.value(), b.value(),
                                                [](double x, double y) { return x / y; }, "div"));
}

Var operator-(const Var& a) {
    return make_unary(Op::Neg, a, ew_unary(a.value(), [](double x) { return -x; }));
}

Var operator*(const Var& a, double c) {
    Array out = Array::zeros_like(a.value());
    for (long i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
    return make_unary(Op::Scale, a, std::move(out), c);
}
Var operator*(double c, const Var& a) { return a * c; }
Var operator/(const Var& a, double c) { return a * (1.0 / c); }
Var operator/(double c, const Var& a) { return a.tape()->constant(c) / a; }

Var operator+(const Var& a, double c) {
    Array out = Array::zeros_like(a.value());
    for (long i = 0; i < out.size(); ++i) out[i] = a.value()[i] + c;
    return make_unary(Op::AddC, a, std::move(out), c);
}
Var operator+(double c, const Var& a) { return a + c; }
Var operator-(const Var& a, double c) { return a + (-c); }
Var operator-(double c, const Var& a) { return (-a) + c; }

Var vexp(const Var& a) { return make_unary(Op::Exp, a, ew_unary(a.value(), std::exp)); }
Var vlog(const Var& a) { return make_unary(Op::Log, a, ew_unary(a.value(), std::log)); }
Var vtanh(const Var& a) { return make_unary(Op::Tanh, a, ew_unary(a.value(), std::tanh)); }

Var vsigmoid(const Var& a) {
    return make_unary(Op::Sigmoid, a,
                      ew_unary(a.value(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
}

Var vrelu(const Var& a) {
    return make_unary(Op::Relu, a, ew_unary(a.value(), [](double x) { return x > 0 ? x : 0.0; }));
}

Var vcos(const Var& a) { return make_unary(Op::Cos, a, ew_unary(a.value(), std::cos)); }
Var vsin(const Var& a) { return make_unary(Op::Sin, a, ew_unary(a.value(), std::sin)); }
Var vcosh(const Var& a) { return make_unary(Op::Cosh, a, ew_unary(a.value(), std::cosh)); }
Var vsinh(const Var& a) { return make_unary(Op::Sinh, a, ew_unary(a.value(), std::sinh)); }
Var vsqrt(const Var& a) { return make_unary(Op::Sqrt, a, ew_unary(a.value(), std::sqrt)); }

Var vabs(const Var& a) {
    return make_unary(Op::Abs, a, ew_unary(a.value(), [](double x) { return std::fabs(x); }));
}

Var vclamp(const Var& a, double lo, double hi) {
    Array out = Array::zeros_like(a.value());
    for (long i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, a.value()[i]));
    return make_unary(Op::Clamp, a, std::move(out), lo, hi);
}

Var vacos(const Var& a) { return make_unary(Op::Acos, a, ew_unary(a.value(), std::acos)); }
Var vacosh(const Var& a) { return make_unary(Op::Acosh, a, ew_unary(a.value(), std::acosh)); }
Var vatan(const Var& a) { return make_unary(Op::Atan, a, ew_unary(a.value(), std::atan)); }
Var vatanh(const Var& a) { return make_unary(Op::Atanh, a, ew_unary(a.value(), std::atanh)); }

Var matmul(const Var& a, const Var& b) {
    const Array& A = a.value();
    const Array& B = b.value();
    if (A.ndim() != 2 || B.ndim() != 2 || A.dim(1) != B.dim(0))
        throw ShapeError("matmul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    const long m = A.dim(0), k = A.dim(1), n = B.dim(1);
    Array out({m, n});
    for (long i = 0; i < m; ++i)
        for (long p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            for (long j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
        }
    return make_binary(Op::Matmul, a, b, std::move(out));
}

Var matvec(const Var& a, const Var& v) {
    const Array& A = a.value();
    const Array& x = v.value();
    if (A.ndim() != 2 || x.ndim() != 1 || A.dim(1) != x.dim(0))
        throw ShapeError("matvec: incompatible shapes " + A.shape_str() + " and " + x.shape_str());
    const long m = A.dim(0), k = A.dim(1);
    Array out({m});
    for (long i = 0; i < m; ++i) {
        double s = 0.0;
        for (long p = 0; p < k; ++p) s += A[i * k + p] * x[p];
        out[i] = s;
    }
    return make_binary(Op::Matvec, a, v, std::move(out));
}

Var dot(const Var& a, const Var& b) {
    const Array& x = a.value();
    const Array& y = b.value();
    if (x.ndim() != 1 || y.ndim() != 1 || x.size() != y.size())
        throw ShapeError("dot: incompatible shapes " + x.shape_str() + " and " + y.shape_str());
    double s = 0.0;
    for (long i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return make_binary(Op::Dot, a, b, Array::scalar(s));
}

namespace {

void check_axis(const Array& a, int axis, const char* what) {
    if (axis == -1) {
        if (a.size() == 0) throw ShapeError(std::string(what) + ": empty reduction");
        return;
    }
    if (a.ndim() != 2 || (axis != 0 && axis != 1))
        throw ShapeError(std::string(what) + ": axis " + std::to_string(axis) +
                         " invalid for shape " + a.shape_str());
    if (a.dim(axis) == 0) throw ShapeError(std::string(what) + ": empty reduction axis");
}

// Apply `f` over each reduction group of a 2-D array along `axis`.
template <typename F>
Array reduce_axis(const Array& a, int axis, F&& f) {
    const long r = a.dim(0), c = a.dim(1);
    const long groups = axis == 0 ? c : r;
    const long len = axis == 0 ? r : c;
    Array out({groups});
    for (long g = 0; g < groups; ++g) {
        std::vector<double> vals(static_cast<size_t>(len));
        for (long i = 0; i < len; ++i)
            vals[static_cast<size_t>(i)] = axis == 0 ? a[i * c + g] : a[g * c + i];
        out[g] = f(vals);
    }
    return out;
}

double reduce_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

double reduce_max(const std::vector<double>& v) {
    double m = v[0];
    for (double x : v) m = std::max(m, x);
    return m;
}

double reduce_lse(const std::vector<double>& v) {
    const double m = reduce_max(v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

Var vsum(const Var& a, int axis) {
    check_axis(a.value(), axis, "sum");
    if (axis == -1) {
        double s = 0.0;
        for (long i = 0; i < a.size(); ++i) s += a.value()[i];
        Var out = make_unary(Op::Sum, a, Array::scalar(s));
        return out;
    }
    Var out = make_unary(Op::SumAxis, a, reduce_axis(a.value(), axis, reduce_sum));
    out.node()->axis = axis;
    return out;
}

Var vmean(const Var& a, int axis) {
    check_axis(a.value(), axis, "mean");
    if (axis == -1) {
        double s = 0.0;
        for (long i = 0; i < a.size(); ++i) s += a.value()[i];
        return make_unary(Op::Mean, a, Array::scalar(s / static_cast<double>(a.size())));
    }
    const double n = static_cast<double>(a.value().dim(axis));
    Var out = make_unary(Op::MeanAxis, a,
                         reduce_axis(a.value(), axis,
                                     [n](const std::vector<double>& v) { return reduce_sum(v) / n; }));
    out.node()->axis = axis;
    return out;
}

Var vmax(const Var& a, int axis) {
    check_axis(a.value(), axis, "max");
    if (axis == -1) {
        double m = a.value()[0];
        for (long i = 0; i < a.size(); ++i) m = std::max(m, a.value()[i]);
        return make_unary(Op::Max, a, Array::scalar(m));
    }
    Var out = make_unary(Op::MaxAxis, a, reduce_axis(a.value(), axis, reduce_max));
    out.node()->axis = axis;
    return out;
}

Var logsumexp(const Var& a, int axis) {
    check_axis(a.value(), axis, "logsumexp");
    if (axis == -1) {
        std::vector<double> v(a.value().data(), a.value().data() + a.size());
        return make_unary(Op::LogSumExp, a, Array::scalar(reduce_lse(v)));
    }
    Var out = make_unary(Op::LogSumExpAxis, a, reduce_axis(a.value(), axis, reduce_lse));
    out.node()->axis = axis;
    return out;
}

Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    long total = 0;
    bool rg = false;
    for (const Var& p : parts) {
        if (p.value().ndim() != 1)
            throw ShapeError("concat: operands must be vectors, got " + p.value().shape_str());
        total += p.size();
        rg = rg || p.node()->requires_grad;
    }
    Array out({total});
    long off = 0;
    for (const Var& p : parts)
        for (long i = 0; i < p.size(); ++i) out[off++] = p.value()[i];
    DiffNode* n = parts[0].tape()->alloc(std::move(out), Op::Concat, rg);
    n->parents.reserve(parts.size());
    for (const Var& p : parts) n->parents.push_back(p.node());
    return Var(n);
}

Var concat(const Var& a, const Var& b) {
    const Var parts[2] = {a, b};
    return concat(std::span<const Var>(parts, 2));
}

Var slice(const Var& a, long start, long len) {
    const Array& x = a.value();
    if (x.ndim() != 1 || start < 0 || len < 0 || start + len > x.size())
        throw ShapeError("slice: [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") out of range for " + x.shape_str());
    Array out({len});
    for (long i = 0; i < len; ++i) out[i] = x[start + i];
    return make_unary(Op::Slice, a, std::move(out), static_cast<double>(start),
                      static_cast<double>(len));
}

Var interleave2(const Var& a, const Var& b) {
    const Array& x = a.value();
    const Array& y = b.value();
    if (x.ndim() != 1 || !x.same_shape(y))
        throw ShapeError("interleave2: incompatible shapes " + x.shape_str() + " and " +
                         y.shape_str());
    Array out({2 * x.size()});
    for (long i = 0; i < x.size(); ++i) {
        out[2 * i] = x[i];
        out[2 * i + 1] = y[i];
    }
    return make_binary(Op::Interleave2, a, b, std::move(out));
}

// ---------------------------------------------------------------------------
// backward

namespace {

// Per-element chain rule for unary ops: g -> g * f'(x).
void backward_unary(DiffNode* n) {
    DiffNode* p = n->parents[0];
    if (!p->requires_grad) return;
    grow(p->adjoint, p->value);
    const Array& g = n->adjoint;
    const Array& x = p->value;
    const Array& y = n->value;
    for (long i = 0; i < g.size(); ++i) {
        double d = 0.0;
        switch (n->op) {
            case Op::Neg: d = -1.0; break;
            case Op::Exp: d = y[i]; break;
            case Op::Log: d = 1.0 / x[i]; break;
            case Op::Tanh: d = 1.0 - y[i] * y[i]; break;
            case Op::Sigmoid: d = y[i] * (1.0 - y[i]); break;
            case Op::Relu: d = x[i] > 0 ? 1.0 : 0.0; break;
            case Op::Cos: d = -std::sin(x[i]); break;
            case Op::Sin: d = std::cos(x[i]); break;
            case Op::Cosh: d = std::sinh(x[i]); break;
            case Op::Sinh: d = std::cosh(x[i]); break;
            case Op::Sqrt: d = 0.5 / y[i]; break;
            case Op::Abs: d = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0); break;
            case Op::Clamp: d = (x[i] > n->payload_a && x[i] < n->payload_b) ? 1.0 : 0.0; break;
            case Op::Acos: d = -1.0 / std::sqrt(1.0 - x[i] * x[i]); break;
            case Op::Acosh: d = 1.0 / std::sqrt(x[i] * x[i] - 1.0); break;
            case Op::Atan: d = 1.0 / (1.0 + x[i] * x[i]); break;
            case Op::Atanh: d = 1.0 / (1.0 - x[i] * x[i]); break;
            case Op::Scale: d = n->payload_a; break;
            case Op::AddC: d = 1.0; break;
            default: throw std::logic_error("backward_unary: bad op");
        }
        p->adjoint[i] += g[i] * d;
    }
}

void backward_binary_ew(DiffNode* n) {
    DiffNode* pa = n->parents[0];
    DiffNode* pb = n->parents[1];
    const Array& g = n->adjoint;
    const Array& a = pa->value;
    const Array& b = pb->value;
    Array ga = Array::zeros_like(g);
    Array gb = Array::zeros_like(g);
    for (long i = 0; i < g.size(); ++i) {
        const double av = a[src_index(pa, i)];
        const double bv = b[src_index(pb, i)];
        switch (n->op) {
            case Op::Add: ga[i] = g[i]; gb[i] = g[i]; break;
            case Op::Sub: ga[i] = g[i]; gb[i] = -g[i]; break;
            case Op::Mul: ga[i] = g[i] * bv; gb[i] = g[i] * av; break;
            case Op::Div: ga[i] = g[i] / bv; gb[i] = -g[i] * av / (bv * bv); break;
            default: throw std::logic_error("backward_binary_ew: bad op");
        }
    }
    accumulate(pa, ga);
    accumulate(pb, gb);
}

void backward_matmul(DiffNode* n) {
    DiffNode* pa = n->parents[0];
    DiffNode* pb = n->parents[1];
    const Array& G = n->adjoint;
    const Array& A = pa->value;
    const Array& B = pb->value;
    const long m = A.dim(0), k = A.dim(1), c = B.dim(1);
    if (pa->requires_grad) {
        grow(pa->adjoint, A);
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < c; ++j) {
                const double gv = G[i * c + j];
                if (gv == 0.0) continue;
                for (long p = 0; p < k; ++p) pa->adjoint[i * k + p] += gv * B[p * c + j];
            }
    }
    if (pb->requires_grad) {
        grow(pb->adjoint, B);
        for (long i = 0; i < m; ++i)
            for (long p = 0; p < k; ++p) {
                const double av = A[i * k + p];
                if (av == 0.0) continue;
                for (long j = 0; j < c; ++j) pb->adjoint[p * c + j] += av * G[i * c + j];
            }
    }
}

void backward_matvec(DiffNode* n) {
    DiffNode* pa = n->parents[0];
    DiffNode* pv = n->parents[1];
    const Array& g = n->adjoint;
    const Array& A = pa->value;
    const Array& x = pv->value;
    const long m = A.dim(0), k = A.dim(1);
    if (pa->requires_grad) {
        grow(pa->adjoint, A);
        for (long i = 0; i < m; ++i) {
            const double gv = g[i];
            if (gv == 0.0) continue;
            for (long p = 0; p < k; ++p) pa->adjoint[i * k + p] += gv * x[p];
        }
    }
    if (pv->requires_grad) {
        grow(pv->adjoint, x);
        for (long i = 0; i < m; ++i) {
            const double gv = g[i];
            if (gv == 0.0) continue;
            for (long p = 0; p < k; ++p) pv->adjoint[p] += gv * A[i * k + p];
        }
    }
}

void backward_reduce_all(DiffNode* n) {
    DiffNode* p = n->parents[0];
    if (!p->requires_grad) return;
    grow(p->adjoint, p->value);
    const double g = n->adjoint[0];
    const Array& x = p->value;
    switch (n->op) {
        case Op::Sum:
            for (long i = 0; i < x.size(); ++i) p->adjoint[i] += g;
            break;
        case Op::Mean: {
            const double inv = 1.0 / static_cast<double>(x.size());
            for (long i = 0; i < x.size(); ++i) p->adjoint[i] += g * inv;
            break;
        }
        case Op::Max: {
            // subgradient: all mass to the first maximizer
            long arg = 0;
            for (long i = 1; i < x.size(); ++i)
                if (x[i] > x[arg]) arg = i;
            p->adjoint[arg] += g;
            break;
        }
        case Op::LogSumExp: {
            const double lse = n->value[0];
            for (long i = 0; i < x.size(); ++i) p->adjoint[i] += g * std::exp(x[i] - lse);
            break;
        }
        default: throw std::logic_error("backward_reduce_all: bad op");
    }
}

void backward_reduce_axis(DiffNode* n) {
    DiffNode* p = n->parents[0];
    if (!p->requires_grad) return;
    grow(p->adjoint, p->value);
    const Array& x = p->value;
    const long r = x.dim(0), c = x.dim(1);
    const int axis = n->axis;
    const long groups = axis == 0 ? c : r;
    const long len = axis == 0 ? r : c;
    auto at = [&](long g, long i) { return axis == 0 ? i * c + g : g * c + i; };
    for (long g = 0; g < groups; ++g) {
        const double gv = n->adjoint[g];
        switch (n->op) {
            case Op::SumAxis:
                for (long i = 0; i < len; ++i) p->adjoint[at(g, i)] += gv;
                break;
            case Op::MeanAxis:
                for (long i = 0; i < len; ++i)
                    p->adjoint[at(g, i)] += gv / static_cast<double>(len);
                break;
            case Op::MaxAxis: {
                long arg = 0;
                for (long i = 1; i < len; ++i)
                    if (x[at(g, i)] > x[at(g, arg)]) arg = i;
                p->adjoint[at(g, arg)] += gv;
                break;
            }
            case Op::LogSumExpAxis: {
                const double lse = n->value[g];
                for (long i = 0; i < len; ++i)
                    p->adjoint[at(g, i)] += gv * std::exp(x[at(g, i)] - lse);
                break;
            }
            default: throw std::logic_error("backward_reduce_axis: bad op");
        }
    }
}

void backward_node(DiffNode* n) {
    switch (n->op) {
        case Op::Leaf:
            break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
            backward_binary_ew(n);
            break;
        case Op::Matmul:
            backward_matmul(n);
            break;
        case Op::Matvec:
            backward_matvec(n);
            break;
        case Op::Dot: {
            DiffNode* pa = n->parents[0];
            DiffNode* pb = n->parents[1];
            const double g = n->adjoint[0];
            if (pa->requires_grad) {
                grow(pa->adjoint, pa->value);
                for (long i = 0; i < pa->value.size(); ++i)
                    pa->adjoint[i] += g * pb->value[i];
            }
            if (pb->requires_grad) {
                grow(pb->adjoint, pb->value);
                for (long i = 0; i < pb->value.size(); ++i)
                    pb->adjoint[i] += g * pa->value[i];
            }
            break;
        }
        case Op::Sum: case Op::Mean: case Op::Max: case Op::LogSumExp:
            backward_reduce_all(n);
            break;
        case Op::SumAxis: case Op::MeanAxis: case Op::MaxAxis: case Op::LogSumExpAxis:
            backward_reduce_axis(n);
            break;
        case Op::Concat: {
            long off = 0;
            for (DiffNode* p : n->parents) {
                if (p->requires_grad) {
                    grow(p->adjoint, p->value);
                    for (long i = 0; i < p->value.size(); ++i) p->adjoint[i] += n->adjoint[off + i];
                }
                off += p->value.size();
            }
            break;
        }
        case Op::Slice: {
            DiffNode* p = n->parents[0];
            if (p->requires_grad) {
                grow(p->adjoint, p->value);
                const long start = static_cast<long>(n->payload_a);
                for (long i = 0; i < n->value.size(); ++i) p->adjoint[start + i] += n->adjoint[i];
            }
            break;
        }
        case Op::Interleave2: {
            DiffNode* pa = n->parents[0];
            DiffNode* pb = n->parents[1];
            const long half = pa->value.size();
            if (pa->requires_grad) {
                grow(pa->adjoint, pa->value);
                for (long i = 0; i < half; ++i) pa->adjoint[i] += n->adjoint[2 * i];
            }
            if (pb->requires_grad) {
                grow(pb->adjoint, pb->value);
                for (long i = 0; i < half; ++i) pb->adjoint[i] += n->adjoint[2 * i + 1];
            }
            break;
        }
        default:
            backward_unary(n);
            break;
    }
}

}  // namespace

void Tape::backward(const Var& root) {
    if (!root.valid() || root.tape() != this)
        throw std::logic_error("backward: root does not belong to this tape");
    if (!root.value().is_scalar())
        throw ShapeError("backward: root must be scalar, got " + root.value().shape_str());

    // mark the subgraph reachable from the root (iterative DFS; graphs
    // can be deep enough to overflow the call stack)
    std::vector<DiffNode*> stack{root.node()};
    root.node()->reached = true;
    while (!stack.empty()) {
        DiffNode* n = stack.back();
        stack.pop_back();
        for (DiffNode* p : n->parents)
            if (!p->reached && p->requires_grad) {
                p->reached = true;
                stack.push_back(p);
            }
    }

    grow(root.node()->adjoint, root.value());
    root.node()->adjoint[0] += 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        DiffNode* n = &*it;
        if (!n->reached || !n->requires_grad) continue;
        if (n->adjoint.size() == 0) continue;
        backward_node(n);
        if (n->param != nullptr)
            for (long i = 0; i < n->adjoint.size(); ++i) n->param->grad[i] += n->adjoint[i];
        n->reached = false;
    }
    // clear any stray marks (nodes marked but skipped by the sweep)
    for (auto& n : nodes_) n.reached = false;
}

}  // namespace rtg
