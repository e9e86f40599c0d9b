#include "sdlab/latent.hpp"

#include <cmath>
#include <string>

#include "sdlab/errors.hpp"

namespace sdlab {

std::size_t shape_size(const std::vector<int>& dims) {
    if (dims.empty()) throw ShapeError("latent shape must have at least one dimension");
    std::size_t n = 1;
    for (int d : dims) {
        if (d <= 0) throw ShapeError("latent dimensions must be positive, got " + std::to_string(d));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Latent::Latent(std::vector<double> values, std::vector<int> dims)
    : data(std::move(values)), shape(std::move(dims)) {
    if (shape_size(shape) != data.size()) {
        throw ShapeError("latent buffer has " + std::to_string(data.size()) +
                         " values, which does not match its shape");
    }
}

Latent Latent::zeros(const std::vector<int>& dims) {
    return Latent(std::vector<double>(shape_size(dims), 0.0), dims);
}

bool Latent::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_same_shape(const Latent& a, const Latent& b, const char* where) {
    if (!a.same_shape(b)) throw ShapeError(std::string(where) + ": latent shapes differ");
}

Latent add(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "add");
    Latent out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Latent sub(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "sub");
    Latent out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Latent scaled(const Latent& a, double factor) {
    Latent out = a;
    for (double& v : out.data) v *= factor;
    return out;
}

void axpy(Latent& y, double factor, const Latent& x) {
    require_same_shape(y, x, "axpy");
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += factor * x.data[i];
}

Latent lincomb(double a, const Latent& x, double b, const Latent& y) {
    require_same_shape(x, y, "lincomb");
    Latent out = Latent::zeros(x.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x.data[i] + b * y.data[i];
    return out;
}

double dot(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double squared_norm(const Latent& a) { return dot(a, a); }

double norm(const Latent& a) { return std::sqrt(squared_norm(a)); }

double max_abs(const Latent& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace sdlab
