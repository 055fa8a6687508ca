#include "advfl/model_vector.hpp"

namespace advfl {

ModelVector& ModelVector::operator+=(const ModelVector& o) {
    require_same_dim(*this, o, "ModelVector +=");
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += o.coords_[i];
    return *this;
}

ModelVector& ModelVector::operator-=(const ModelVector& o) {
    require_same_dim(*this, o, "ModelVector -=");
    for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= o.coords_[i];
    return *this;
}

ModelVector& ModelVector::operator*=(double c) {
    for (double& x : coords_) x *= c;
    return *this;
}

bool ModelVector::all_finite() const {
    for (double x : coords_)
        if (!std::isfinite(x)) return false;
    return true;
}

ModelVector operator+(ModelVector a, const ModelVector& b) { return a += b; }
ModelVector operator-(ModelVector a, const ModelVector& b) { return a -= b; }
ModelVector operator*(double c, ModelVector a) { return a *= c; }

double dot(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_sq(const ModelVector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

double dist_sq(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "dist_sq");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void axpy(double a, const ModelVector& x, ModelVector& y) {
    require_same_dim(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void require_same_dim(const ModelVector& a, const ModelVector& b, const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

}  // namespace advfl
