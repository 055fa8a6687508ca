#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace advfl {

/// A point in parameter space shared by the server and every client.
class ModelVector {
public:
    ModelVector() = default;
    explicit ModelVector(std::size_t dim, double fill = 0.0) : coords_(dim, fill) {}
    explicit ModelVector(std::vector<double> coords) : coords_(std::move(coords)) {}
    ModelVector(std::initializer_list<double> init) : coords_(init) {}

    std::size_t size() const { return coords_.size(); }
    bool empty() const { return coords_.empty(); }

    double& operator[](std::size_t i) { return coords_[i]; }
    double operator[](std::size_t i) const { return coords_[i]; }

    double* data() { return coords_.data(); }
    const double* data() const { return coords_.data(); }

    auto begin() { return coords_.begin(); }
    auto end() { return coords_.end(); }
    auto begin() const { return coords_.begin(); }
    auto end() const { return coords_.end(); }

    std::span<double> span() { return coords_; }
    std::span<const double> span() const { return coords_; }

    const std::vector<double>& coords() const { return coords_; }

    ModelVector& operator+=(const ModelVector& o);
    ModelVector& operator-=(const ModelVector& o);
    ModelVector& operator*=(double c);

    bool all_finite() const;

    friend bool operator==(const ModelVector&, const ModelVector&) = default;

private:
    std::vector<double> coords_;
};

ModelVector operator+(ModelVector a, const ModelVector& b);
ModelVector operator-(ModelVector a, const ModelVector& b);
ModelVector operator*(double c, ModelVector a);

double dot(const ModelVector& a, const ModelVector& b);
double norm_sq(const ModelVector& a);
inline double norm(const ModelVector& a) { return std::sqrt(norm_sq(a)); }
double dist_sq(const ModelVector& a, const ModelVector& b);

/// y += a * x
void axpy(double a, const ModelVector& x, ModelVector& y);

/// Throws std::invalid_argument naming `what` when sizes differ.
void require_same_dim(const ModelVector& a, const ModelVector& b, const char* what);

}  // namespace advfl
