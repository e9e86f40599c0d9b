#pragma once

#include <cstddef>
#include <vector>

namespace sdlab {

// Dense latent state: a flat row-major buffer of doubles plus its shape.
// Rank 1 is a vector world, rank 2 a grayscale grid; nothing here cares beyond
// the element count except the image metrics, which require rank 2.
struct Latent {
    std::vector<double> data;
    std::vector<int> shape;

    Latent() = default;
    Latent(std::vector<double> values, std::vector<int> dims);

    static Latent zeros(const std::vector<int>& dims);

    std::size_t size() const { return data.size(); }
    bool same_shape(const Latent& other) const { return shape == other.shape; }

    // True iff every entry is finite (no NaN/Inf).
    bool all_finite() const;
};

// Number of elements implied by a shape; validates positive dims.
std::size_t shape_size(const std::vector<int>& dims);

// Throws ShapeError mentioning `where` if shapes differ.
void require_same_shape(const Latent& a, const Latent& b, const char* where);

Latent add(const Latent& a, const Latent& b);
Latent sub(const Latent& a, const Latent& b);
Latent scaled(const Latent& a, double factor);

// y += factor * x
void axpy(Latent& y, double factor, const Latent& x);

// a*x + b*y as a new latent
Latent lincomb(double a, const Latent& x, double b, const Latent& y);

double dot(const Latent& a, const Latent& b);
double squared_norm(const Latent& a);
double norm(const Latent& a);
double max_abs(const Latent& a);

}  // namespace sdlab
