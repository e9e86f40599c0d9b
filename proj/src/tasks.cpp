#include "sdlab/tasks.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sdlab/diffusion.hpp"
#include "sdlab/errors.hpp"

namespace sdlab {

namespace {

void check_world_spec(const VectorWorldSpec& spec) {
    if (spec.labels.size() < 2) throw DataError("vector world needs at least two labels");
    const std::size_t dim = spec.labels.front().mode.size();
    if (dim == 0) throw DataError("vector world modes must be non-empty");
    for (const VectorWorldLabel& label : spec.labels) {
        if (label.mode.size() != dim) throw DataError("vector world modes must share a dimension");
        if (!(label.sigma > 0.0)) throw DataError("vector world sigma must be positive");
    }
}

GaussianMixtureBackend build_world_backend(const VectorWorldSpec& spec) {
    const int dim = static_cast<int>(spec.labels.front().mode.size());
    std::vector<GmmComponent> components;
    std::vector<std::vector<int>> label_components;
    for (std::size_t k = 0; k < spec.labels.size(); ++k) {
        components.push_back({1.0, Latent(spec.labels[k].mode, {dim}), spec.labels[k].sigma});
        label_components.push_back({static_cast<int>(k)});
    }
    return GaussianMixtureBackend(std::move(components), std::move(label_components),
                                  spec.schedule);
}

}  // namespace

VectorWorld::VectorWorld(const VectorWorldSpec& spec)
    : dim_((check_world_spec(spec), static_cast<int>(spec.labels.front().mode.size()))),
      backend_(build_world_backend(spec)) {
    for (const VectorWorldLabel& label : spec.labels) {
        modes_.emplace_back(label.mode, std::vector<int>{dim_});
        sigmas_.push_back(label.sigma);
    }
}

const Latent& VectorWorld::mode(int label) const {
    if (label < 0 || label >= num_labels()) throw DataError("vector world label out of range");
    return modes_[static_cast<std::size_t>(label)];
}

double VectorWorld::sigma(int label) const {
    if (label < 0 || label >= num_labels()) throw DataError("vector world label out of range");
    return sigmas_[static_cast<std::size_t>(label)];
}

Latent VectorWorld::sample(int label, Rng& rng) const {
    Latent out = mode(label);
    const double s = sigma(label);
    for (double& v : out.data) v += s * rng.next_gaussian();
    return out;
}

VectorWorld make_vector_world(const VectorWorldSpec& spec) { return VectorWorld(spec); }

VectorWorld make_two_mode_world(int dim, double separation, double sigma,
                                const NoiseSchedule& schedule) {
    if (dim < 1) throw DataError("world dimension must be positive");
    if (!(separation > 0.0)) throw DataError("mode separation must be positive");
    std::vector<double> left(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> right(left);
    left[0] = -separation / 2.0;
    right[0] = separation / 2.0;
    VectorWorldSpec spec;
    spec.labels = {{left, sigma}, {right, sigma}};
    spec.schedule = schedule;
    return VectorWorld(spec);
}

// ---------------------------------------------------------------------------

std::string shape_kind_name(ShapeKind kind) {
    return kind == ShapeKind::square ? "square" : "disc";
}

Latent render_shape(ShapeKind kind, int row, int col, int height, int width) {
    if (height < 1 || width < 1) throw DataError("shape image dimensions must be positive");
    Latent image = Latent::zeros({height, width});
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            bool inside = false;
            if (kind == ShapeKind::square) {
                inside = r >= row - 3 && r < row + 3 && c >= col - 3 && c < col + 3;
            } else {
                const int dr = r - row;
                const int dc = c - col;
                inside = dr * dr + dc * dc <= 9;
            }
            if (inside) image.data[static_cast<std::size_t>(r * width + c)] = 1.0;
        }
    }
    return image;
}

Latent box_smooth(const Latent& image, int passes) {
    if (image.shape.size() != 2) throw ShapeError("box smoothing expects a 2-d grid");
    if (passes < 0) throw DataError("smoothing passes must be non-negative");
    const int height = image.shape[0];
    const int width = image.shape[1];
    Latent current = image;
    for (int pass = 0; pass < passes; ++pass) {
        Latent next = Latent::zeros(image.shape);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                double sum = 0.0;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = std::clamp(r + dr, 0, height - 1);
                        const int cc = std::clamp(c + dc, 0, width - 1);
                        sum += current.data[static_cast<std::size_t>(rr * width + cc)];
                    }
                }
                next.data[static_cast<std::size_t>(r * width + c)] = sum / 9.0;
            }
        }
        current = std::move(next);
    }
    return current;
}

Latent intensity_centroid(const Latent& image) {
    if (image.shape.size() != 2) throw ShapeError("centroid expects a 2-d grid");
    const int height = image.shape[0];
    const int width = image.shape[1];
    double total = 0.0;
    double row_sum = 0.0;
    double col_sum = 0.0;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double v = image.data[static_cast<std::size_t>(r * width + c)];
            total += v;
            row_sum += v * r;
            col_sum += v * c;
        }
    }
    if (!(total > 0.0)) throw DomainError("centroid of a zero-intensity image is undefined");
    return Latent({row_sum / total, col_sum / total}, {2});
}

ShapeImageDataset make_shape_dataset(const ShapeDatasetSpec& spec) {
    if (spec.per_label < 1) throw DataError("shape dataset needs at least one sample per label");
    if (spec.height < 7 || spec.width < 7)
        throw DataError("shape grid must be at least 7x7 to hold the object");
    if (spec.smoothing_passes < 0) throw DataError("smoothing passes must be non-negative");

    // Centres that keep both object kinds fully inside the frame.
    const int row_lo = 3, row_hi = spec.height - 4;
    const int col_lo = 3, col_hi = spec.width - 4;
    Rng rng(spec.seed);
    auto draw_centre = [&rng](int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(rng.next_u64() % span);
    };

    ShapeImageDataset dataset;
    dataset.height = spec.height;
    dataset.width = spec.width;
    dataset.smoothing_passes = spec.smoothing_passes;
    for (ShapeKind kind : {ShapeKind::square, ShapeKind::disc}) {
        const int label = kind == ShapeKind::square ? 0 : 1;
        for (int i = 0; i < spec.per_label; ++i) {
            ShapeSample sample;
            sample.kind = kind;
            sample.cond = Condition::label(label);
            sample.row = draw_centre(row_lo, row_hi);
            sample.col = draw_centre(col_lo, col_hi);
            sample.image = box_smooth(
                render_shape(kind, sample.row, sample.col, spec.height, spec.width),
                spec.smoothing_passes);
            dataset.samples.push_back(std::move(sample));
        }
    }
    return dataset;
}

GaussianMixtureBackend make_shape_backend(const ShapeImageDataset& dataset, double sigma,
                                          const NoiseSchedule& schedule) {
    if (!(sigma > 0.0)) throw DataError("shape backend sigma must be positive");
    std::vector<GmmComponent> components;
    std::vector<std::vector<int>> label_components(2);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const ShapeSample& sample = dataset.samples[i];
        components.push_back({1.0, sample.image, sigma});
        label_components[sample.kind == ShapeKind::square ? 0 : 1].push_back(
            static_cast<int>(i));
    }
    if (label_components[0].empty() || label_components[1].empty())
        throw DataError("shape backend needs samples of both kinds");
    return GaussianMixtureBackend(std::move(components), std::move(label_components), schedule);
}

// ---------------------------------------------------------------------------

void write_pgm(const std::filesystem::path& path, const Latent& image) {
    if (image.shape.size() != 2) throw ShapeError("pgm output expects a 2-d grid");
    if (!image.all_finite()) throw DataError("pgm output requires finite pixel values");
    const int height = image.shape[0];
    const int width = image.shape[1];
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(image.data.size());
    for (double v : image.data) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        // nearbyint under the default rounding mode resolves ties to even.
        bytes.push_back(static_cast<unsigned char>(std::nearbyint(clamped * 255.0)));
    }
    file.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!file.good()) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json shape_dataset_manifest(const ShapeImageDataset& dataset,
                                              const std::vector<std::string>& file_names) {
    if (file_names.size() != dataset.samples.size())
        throw DataError("manifest needs one file name per sample");
    nlohmann::ordered_json doc;
    doc["schema"] = 1;
    doc["kind"] = "shape-dataset";
    doc["height"] = dataset.height;
    doc["width"] = dataset.width;
    doc["smoothing_passes"] = dataset.smoothing_passes;
    doc["samples"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const ShapeSample& sample = dataset.samples[i];
        nlohmann::ordered_json entry;
        entry["file"] = file_names[i];
        entry["label"] = sample.cond.label_id();
        entry["kind"] = shape_kind_name(sample.kind);
        entry["row"] = sample.row;
        entry["col"] = sample.col;
        doc["samples"].push_back(std::move(entry));
    }
    return doc;
}

std::vector<std::string> save_shape_dataset(const std::filesystem::path& dir,
                                            const ShapeImageDataset& dataset) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "sample-%03zu-%s.pgm", i,
                      shape_kind_name(dataset.samples[i].kind).c_str());
        write_pgm(dir / name, dataset.samples[i].image);
        names.emplace_back(name);
    }
    std::ofstream manifest(dir / "manifest.json", std::ios::binary);
    if (!manifest) throw IoError("cannot open manifest.json for writing");
    manifest << shape_dataset_manifest(dataset, names).dump(2) << "\n";
    if (!manifest.good()) throw IoError("failed writing manifest.json");
    return names;
}

}  // namespace sdlab
