#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtg {

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major array of 64-bit floats. Scalars are shape {1},
/// vectors {n}, matrices {rows, cols}. Immutable by convention once
/// it has been handed to the differentiation graph.
class Array {
public:
    Array() = default;

    explicit Array(std::vector<long> shape, double fill = 0.0)
        : shape_(std::move(shape)) {
        long n = 1;
        for (long d : shape_) {
            if (d < 0) throw ShapeError("negative dimension in shape " + shape_str_of(shape_));
            n *= d;
        }
        data_.assign(static_cast<size_t>(n), fill);
    }

    static Array scalar(double v) {
        Array a({1});
        a.data_[0] = v;
        return a;
    }

    static Array vec(std::vector<double> v) {
        Array a;
        a.shape_ = {static_cast<long>(v.size())};
        a.data_ = std::move(v);
        return a;
    }

    static Array mat(long rows, long cols, std::vector<double> v) {
        if (static_cast<long>(v.size()) != rows * cols)
            throw ShapeError("matrix data length does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
        Array a;
        a.shape_ = {rows, cols};
        a.data_ = std::move(v);
        return a;
    }

    static Array zeros_like(const Array& o) { return Array(o.shape_); }

    const std::vector<long>& shape() const { return shape_; }
    long ndim() const { return static_cast<long>(shape_.size()); }
    long dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    long size() const { return static_cast<long>(data_.size()); }
    bool is_scalar() const { return data_.size() == 1; }

    double& operator[](long i) { return data_[static_cast<size_t>(i)]; }
    double operator[](long i) const { return data_[static_cast<size_t>(i)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double scalar_value() const {
        if (!is_scalar()) throw ShapeError("expected scalar, got shape " + shape_str());
        return data_[0];
    }

    bool same_shape(const Array& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const { return shape_str_of(shape_); }

    static std::string shape_str_of(const std::vector<long>& s) {
        std::ostringstream os;
        os << "(";
        for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
        os << ")";
        return os.str();
    }

private:
    std::vector<long> shape_;
    std::vector<double> data_;
};

}  // namespace rtg
