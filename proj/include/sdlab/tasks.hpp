#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdlab/backend.hpp"
#include "sdlab/latent.hpp"
#include "sdlab/rng.hpp"
#include "sdlab/schedule.hpp"

namespace sdlab {

// ---------------------------------------------------------------------------
// Vector worlds: each label is a Gaussian mode; editing moves a sample from
// one mode toward another while ideally keeping its offset from the mode.

struct VectorWorldLabel {
    std::vector<double> mode;
    double sigma = 0.3;
};

struct VectorWorldSpec {
    std::vector<VectorWorldLabel> labels;  // >= 2, equal dimensions, sigma > 0
    NoiseSchedule schedule;
};

class VectorWorld {
public:
    explicit VectorWorld(const VectorWorldSpec& spec);

    int dim() const { return dim_; }
    int num_labels() const { return static_cast<int>(modes_.size()); }
    const Latent& mode(int label) const;
    double sigma(int label) const;
    const GaussianMixtureBackend& backend() const { return backend_; }

    // mode + sigma * standard normal, element order fixed by the rng stream.
    Latent sample(int label, Rng& rng) const;

private:
    int dim_;
    std::vector<Latent> modes_;
    std::vector<double> sigmas_;
    GaussianMixtureBackend backend_;
};

VectorWorld make_vector_world(const VectorWorldSpec& spec);

// Two labels at -separation/2 and +separation/2 along the first axis.
VectorWorld make_two_mode_world(int dim, double separation, double sigma,
                                const NoiseSchedule& schedule);

// ---------------------------------------------------------------------------
// Shape images: fixed-size object on an empty grid, position carries identity.

enum class ShapeKind { square, disc };

std::string shape_kind_name(ShapeKind kind);

struct ShapeSample {
    Latent image;  // [H, W], values in [0, 1]
    Condition cond = Condition::null();
    ShapeKind kind = ShapeKind::square;
    int row = 0;  // object centre
    int col = 0;
};

struct ShapeDatasetSpec {
    int per_label = 8;
    int height = 16;
    int width = 16;
    int smoothing_passes = 0;  // 3x3 box blurs applied after rasterisation
    std::uint64_t seed = 0;
};

struct ShapeImageDataset {
    int height = 0;
    int width = 0;
    int smoothing_passes = 0;
    std::vector<ShapeSample> samples;  // label 0 block first, then label 1
};

// Binary {0,1} rasterisation. The square covers rows [row-3, row+3) and the
// matching column band; the disc keeps squared distance <= 9.
Latent render_shape(ShapeKind kind, int row, int col, int height, int width);

// Edge-clamped 3x3 box blur, applied `passes` times.
Latent box_smooth(const Latent& image, int passes);

// Intensity-weighted mean position, returned as a 2-vector (row, col).
Latent intensity_centroid(const Latent& image);

// Deterministic in the spec seed: square samples first, then discs, centres
// drawn uniformly over the positions that keep the object fully in frame.
ShapeImageDataset make_shape_dataset(const ShapeDatasetSpec& spec);

// Mixture backend with one component per dataset image (mean = image, shared
// sigma); label k selects the components of shape kind k.
GaussianMixtureBackend make_shape_backend(const ShapeImageDataset& dataset, double sigma,
                                          const NoiseSchedule& schedule);

// ---------------------------------------------------------------------------
// Persistence

// Binary 8-bit PGM (P5); values are clamped to [0,1] and scaled to 0..255
// with ties rounded to even.
void write_pgm(const std::filesystem::path& path, const Latent& image);

// Per-sample listing (file name, label, kind, centre) plus grid geometry.
nlohmann::ordered_json shape_dataset_manifest(const ShapeImageDataset& dataset,
                                              const std::vector<std::string>& file_names);

// Writes <dir>/sample-<idx>-<kind>.pgm for every sample plus
// <dir>/manifest.json; returns the file names in sample order.
std::vector<std::string> save_shape_dataset(const std::filesystem::path& dir,
                                            const ShapeImageDataset& dataset);

}  // namespace sdlab
