#pragma once

#include <deque>
#include <span>
#include <unordered_map>
#include <vector>

#include "rtg/array.hpp"

namespace rtg {

class Tape;
struct Param;

enum class Op : uint8_t {
    Leaf,
    Add, Sub, Mul, Div, Neg,
    Exp, Log, Tanh, Sigmoid, Relu,
    Cos, Sin, Cosh, Sinh,
    Sqrt, Abs, Clamp,
    Acos, Acosh, Atan, Atanh,
    Scale, AddC,
    Matmul, Matvec, Dot,
    Sum, Mean, Max, LogSumExp,
    SumAxis, MeanAxis, MaxAxis, LogSumExpAxis,
    Concat, Slice, Interleave2,
};

/// One node of the reverse-mode differentiation graph: a value, its
/// adjoint (allocated lazily during backward), the parent links and
/// enough payload to replay the local derivative rule.
struct DiffNode {
    Array value;
    Array adjoint;
    std::vector<DiffNode*> parents;
    Tape* tape = nullptr;
    Param* param = nullptr;  // leaf write-back target, if any
    Op op = Op::Leaf;
    bool requires_grad = false;
    bool reached = false;
    double payload_a = 0.0;  // clamp lo / scale factor / slice start
    double payload_b = 0.0;  // clamp hi / slice length
    int axis = -1;
};

/// Lightweight handle to a tape-owned node.
class Var {
public:
    Var() = default;
    explicit Var(DiffNode* n) : n_(n) {}

    bool valid() const { return n_ != nullptr; }
    const Array& value() const { return n_->value; }
    const Array& adjoint() const { return n_->adjoint; }
    double scalar() const { return n_->value.scalar_value(); }
    long size() const { return n_->value.size(); }
    DiffNode* node() const { return n_; }
    Tape* tape() const { return n_ ? n_->tape : nullptr; }

private:
    DiffNode* n_ = nullptr;
};

/// Persistent trainable parameter. Lives outside the tape; each
/// training step creates one leaf per parameter and the backward pass
/// accumulates the leaf adjoint into `grad`.
struct Param {
    std::string name;
    Array value;
    Array grad;
    Array adam_m;
    Array adam_v;

    explicit Param(std::string n, Array v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(Array::zeros_like(value)),
          adam_m(Array::zeros_like(value)),
          adam_v(Array::zeros_like(value)) {}
};

/// Registry of parameters with stable registration order (the order
/// defines optimizer iteration and checkpoint layout).
class ParamStore {
public:
    Param& create(const std::string& name, Array init);
    Param* find(const std::string& name);
    const std::deque<Param>& all() const { return params_; }
    std::deque<Param>& all() { return params_; }
    size_t size() const { return params_.size(); }

private:
    std::deque<Param> params_;
    std::unordered_map<std::string, size_t> index_;
};

/// Arena for one differentiation graph. Nodes are appended in
/// construction order, which is a topological order, so the backward
/// sweep is a single reverse pass over the arena.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Array v, bool requires_grad = false);
    Var constant(double v) { return leaf(Array::scalar(v)); }
    Var constant(Array v) { return leaf(std::move(v)); }

    /// Memoized: one leaf per parameter per tape, so gradient paths
    /// through repeated uses accumulate into a single adjoint.
    Var param(Param& p);

    /// Reverse sweep from a scalar root. Marks the nodes reachable
    /// from the root, seeds the root adjoint with 1 and visits each
    /// reachable node exactly once in reverse topological order.
    /// Parameter leaf adjoints are accumulated into Param::grad.
    void backward(const Var& root);

    void clear();
    size_t size() const { return nodes_.size(); }

    DiffNode* alloc(Array value, Op op, bool requires_grad);

private:
    std::deque<DiffNode> nodes_;
    std::unordered_map<const Param*, DiffNode*> param_leaves_;
};

// ---- elementwise / arithmetic ----------------------------------------
// Binary ops broadcast a size-1 operand against any shape; other shape
// combinations must match exactly.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& a);
Var operator/(const Var& a, double c);
Var operator/(double c, const Var& a);

Var vexp(const Var& a);
Var vlog(const Var& a);
Var vtanh(const Var& a);
Var vsigmoid(const Var& a);
Var vrelu(const Var& a);
Var vcos(const Var& a);
Var vsin(const Var& a);
Var vcosh(const Var& a);
Var vsinh(const Var& a);
Var vsqrt(const Var& a);
Var vabs(const Var& a);
Var vclamp(const Var& a, double lo, double hi);
Var vacos(const Var& a);
Var vacosh(const Var& a);
Var vatan(const Var& a);
Var vatanh(const Var& a);

// ---- linear algebra ---------------------------------------------------
Var matmul(const Var& a, const Var& b);   // (m,k)x(k,n) -> (m,n)
Var matvec(const Var& a, const Var& v);   // (m,k)x(k)   -> (m)
Var dot(const Var& a, const Var& b);      // (n).(n)     -> scalar

// ---- reductions (axis = -1 reduces everything) ------------------------
Var vsum(const Var& a, int axis = -1);
Var vmean(const Var& a, int axis = -1);
Var vmax(const Var& a, int axis = -1);
Var logsumexp(const Var& a, int axis = -1);

// ---- structure ---------------------------------------------------------
Var concat(std::span<const Var> parts);          // vectors -> vector
Var concat(const Var& a, const Var& b);
Var slice(const Var& a, long start, long len);   // vector slice
Var interleave2(const Var& a, const Var& b);     // [a0,b0,a1,b1,...]

}  // namespace rtg
