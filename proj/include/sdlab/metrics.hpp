#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdlab/latent.hpp"

namespace sdlab {

double mse(const Latent& a, const Latent& b);

// PSNR carries two sentinel states so CSV output never contains NaN/Inf
// floats: Infinite for a zero-MSE comparison, Undefined when there was nothing
// to compare (empty mask).
struct PsnrValue {
    enum class Kind { Finite, Infinite, Undefined };
    Kind kind = Kind::Finite;
    double db = 0.0;

    static PsnrValue of(double db) { return {Kind::Finite, db}; }
    static PsnrValue infinite() { return {Kind::Infinite, 0.0}; }
    static PsnrValue undefined() { return {Kind::Undefined, 0.0}; }

    bool is_finite() const { return kind == Kind::Finite; }
    std::string to_csv() const;  // "inf" / "undefined" for the sentinels
};

// 10 * log10(peak^2 / mse); Infinite when the inputs are identical.
PsnrValue psnr(const Latent& a, const Latent& b, double peak);

struct BinaryMask {
    std::vector<std::uint8_t> keep;  // 1 = kept
    std::vector<int> shape;

    static BinaryMask full(const std::vector<int>& dims);
    std::size_t count_kept() const;
};

// Intersection over union of two masks; 1.0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

enum class ThresholdMode { mean, median };

struct BackgroundPsnrResult {
    PsnrValue psnr;
    BinaryMask mask;       // pixels judged to be background
    double threshold = 0;  // the sigma cut that produced the mask
};

// Edit-quality metric for grids: compute the residual target - source, take
// the population std dev of the residual over a square window centred on each
// pixel (clamped at the borders), keep pixels whose sigma is <= the mean (or
// median) sigma, and report PSNR restricted to those pixels. Low sigma means
// locally flat residual, i.e. background the edit should not have touched.
// window must be odd, positive and at most min(H, W).
BackgroundPsnrResult background_psnr(const Latent& source, const Latent& target, int window,
                                     ThresholdMode mode, double peak);

// PSNR over an explicit pixel subset; Undefined on an empty mask.
PsnrValue psnr_over_mask(const Latent& a, const Latent& b, const BinaryMask& mask, double peak);

// Default window for background_psnr, scaled to image size: 5 for a 16x16
// grid, 29 for 512 pixels; always odd, never larger than the image.
int default_background_window(int height, int width);

// How far an edit drifted from a pure mode swap:
// || (edited - mode_target) - (source - mode_source) ||_2.
double identity_residual(const Latent& edited, const Latent& mode_target, const Latent& source,
                         const Latent& mode_source);

// Single-scale SSIM with a uniform 7x7 window over fully-interior positions.
// The two-argument form uses the combined observed value range of both images
// as the dynamic range (so it is symmetric); the three-argument form pins it.
// Grids only; both dimensions must be at least 7.
double ssim(const Latent& a, const Latent& b);
double ssim(const Latent& a, const Latent& b, double dynamic_range);

// d(ssim)/d(b) with the dynamic range held fixed; same window scheme.
Latent ssim_gradient_second(const Latent& a, const Latent& b, double dynamic_range);

// 17-significant-digit float formatting shared by every CSV writer.
std::string format_double(double v);

}  // namespace sdlab
