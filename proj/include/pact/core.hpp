#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pact {

inline constexpr const char* kVersion = "0.3.0";

// ---------------------------------------------------------------------------
// Errors. Every failure surfaced by the toolkit derives from pact::Error; the
// CLI maps the concrete type to its exit code.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DependencyError : public Error {
public:
    using Error::Error;
};

inline void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw ContractViolation(std::string(what) + ": size " + std::to_string(got) +
                                " does not match expected " + std::to_string(want));
}

// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// ---------------------------------------------------------------------------
// Flat vector helpers shared by every field type. All fields in the toolkit
// store their components in one contiguous std::vector<double>.

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_size(b.size(), a.size(), "vec::dot");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// y += s * x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    require_size(y.size(), x.size(), "vec::axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    require_size(b.size(), a.size(), "vec::dist2");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace vec

// ---------------------------------------------------------------------------
// Image: row-major, ny rows by nx columns. Row index i runs along y, column
// index j along x.

class Image {
public:
    Image() = default;
    Image(std::size_t nx, std::size_t ny, double fill = 0.0)
        : nx_(nx), ny_(ny), data_(nx * ny, fill) {}
    Image(std::size_t nx, std::size_t ny, std::vector<double> values)
        : nx_(nx), ny_(ny), data_(std::move(values)) {
        require_size(data_.size(), nx * ny, "Image");
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * nx_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * nx_ + j]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::vector<double>& vector() { return data_; }
    const std::vector<double>& vector() const { return data_; }

    bool same_shape(const Image& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }
    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> data_;
};

// Two image-shaped components (x-derivative first).
class VectorField {
public:
    VectorField() = default;
    VectorField(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), data_(2 * nx * ny, 0.0) {}

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t pixels() const { return nx_ * ny_; }

    std::span<double> x() { return {data_.data(), pixels()}; }
    std::span<double> y() { return {data_.data() + pixels(), pixels()}; }
    std::span<const double> x() const { return {data_.data(), pixels()}; }
    std::span<const double> y() const { return {data_.data() + pixels(), pixels()}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> data_;
};

// Symmetric 2x2 tensor per pixel, stored as (xx, yy, xy). The off-diagonal is
// stored once and counts twice in the inner product and the pointwise norm.
class SymTensorField {
public:
    SymTensorField() = default;
    SymTensorField(std::size_t nx, std::size_t ny)
        : nx_(nx), ny_(ny), data_(3 * nx * ny, 0.0) {}

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t pixels() const { return nx_ * ny_; }

    std::span<double> xx() { return {data_.data(), pixels()}; }
    std::span<double> yy() { return {data_.data() + pixels(), pixels()}; }
    std::span<double> xy() { return {data_.data() + 2 * pixels(), pixels()}; }
    std::span<const double> xx() const { return {data_.data(), pixels()}; }
    std::span<const double> yy() const { return {data_.data() + pixels(), pixels()}; }
    std::span<const double> xy() const { return {data_.data() + 2 * pixels(), pixels()}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> data_;
};

// <a, b> with the off-diagonal counted twice.
inline double dot(const SymTensorField& a, const SymTensorField& b) {
    return vec::dot(a.xx(), b.xx()) + vec::dot(a.yy(), b.yy()) + 2.0 * vec::dot(a.xy(), b.xy());
}

}  // namespace pact
