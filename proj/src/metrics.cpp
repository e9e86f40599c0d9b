#include "sdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sdlab/errors.hpp"

namespace sdlab {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mse(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

std::string PsnrValue::to_csv() const {
    switch (kind) {
        case Kind::Infinite: return "inf";
        case Kind::Undefined: return "undefined";
        case Kind::Finite: break;
    }
    return format_double(db);
}

PsnrValue psnr(const Latent& a, const Latent& b, double peak) {
    if (!(peak > 0.0)) throw DomainError("psnr peak must be positive");
    double err = mse(a, b);
    if (err == 0.0) return PsnrValue::infinite();
    return PsnrValue::of(10.0 * std::log10(peak * peak / err));
}

BinaryMask BinaryMask::full(const std::vector<int>& dims) {
    BinaryMask m;
    m.shape = dims;
    m.keep.assign(shape_size(dims), 1);
    return m;
}

std::size_t BinaryMask::count_kept() const {
    std::size_t n = 0;
    for (auto v : keep) n += v ? 1 : 0;
    return n;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.shape != b.shape) throw ShapeError("iou: mask shapes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.keep.size(); ++i) {
        bool pa = a.keep[i] != 0, pb = b.keep[i] != 0;
        inter += (pa && pb) ? 1 : 0;
        uni += (pa || pb) ? 1 : 0;
    }
    if (uni == 0) return 1.0;  // two empty masks agree perfectly
    return static_cast<double>(inter) / static_cast<double>(uni);
}

PsnrValue psnr_over_mask(const Latent& a, const Latent& b, const BinaryMask& mask, double peak) {
    require_same_shape(a, b, "psnr_over_mask");
    if (mask.shape != a.shape) throw ShapeError("psnr_over_mask: mask shape differs");
    if (!(peak > 0.0)) throw DomainError("psnr peak must be positive");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask.keep[i]) continue;
        double d = a.data[i] - b.data[i];
        acc += d * d;
        ++n;
    }
    if (n == 0) return PsnrValue::undefined();
    double err = acc / static_cast<double>(n);
    if (err == 0.0) return PsnrValue::infinite();
    return PsnrValue::of(10.0 * std::log10(peak * peak / err));
}

namespace {

void require_grid(const Latent& a, const char* where) {
    if (a.shape.size() != 2)
        throw MetricError(std::string(where) + " needs a rank-2 (grid) latent");
}

}  // namespace

BackgroundPsnrResult background_psnr(const Latent& source, const Latent& target, int window,
                                     ThresholdMode mode, double peak) {
    require_grid(source, "background_psnr");
    require_same_shape(source, target, "background_psnr");
    int height = source.shape[0], width = source.shape[1];
    if (window < 1 || window % 2 == 0)
        throw MetricError("background_psnr window must be a positive odd integer");
    if (window > std::min(height, width))
        throw MetricError("background_psnr window exceeds the image");

    std::vector<double> residual(source.size());
    for (std::size_t i = 0; i < source.size(); ++i)
        residual[i] = target.data[i] - source.data[i];

    // Per-pixel population std dev of the residual over a clamped window.
    int half = window / 2;
    std::vector<double> sigma(source.size());
    for (int r = 0; r < height; ++r) {
        int r0 = std::max(0, r - half), r1 = std::min(height - 1, r + half);
        for (int c = 0; c < width; ++c) {
            int c0 = std::max(0, c - half), c1 = std::min(width - 1, c + half);
            double sum = 0.0;
            int n = 0;
            for (int rr = r0; rr <= r1; ++rr)
                for (int cc = c0; cc <= c1; ++cc) {
                    sum += residual[static_cast<std::size_t>(rr) * width + cc];
                    ++n;
                }
            double mean = sum / n;
            double var = 0.0;
            for (int rr = r0; rr <= r1; ++rr)
                for (int cc = c0; cc <= c1; ++cc) {
                    double d = residual[static_cast<std::size_t>(rr) * width + cc] - mean;
                    var += d * d;
                }
            sigma[static_cast<std::size_t>(r) * width + c] = std::sqrt(var / n);
        }
    }

    double threshold;
    if (mode == ThresholdMode::mean) {
        double s = 0.0;
        for (double v : sigma) s += v;
        threshold = s / static_cast<double>(sigma.size());
    } else {
        std::vector<double> sorted = sigma;
        std::sort(sorted.begin(), sorted.end());
        std::size_t n = sorted.size();
        threshold = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }

    BackgroundPsnrResult result;
    result.threshold = threshold;
    result.mask.shape = source.shape;
    result.mask.keep.resize(source.size());
    for (std::size_t i = 0; i < sigma.size(); ++i)
        result.mask.keep[i] = sigma[i] <= threshold ? 1 : 0;
    result.psnr = psnr_over_mask(source, target, result.mask, peak);
    return result;
}

int default_background_window(int height, int width) {
    if (height < 1 || width < 1) throw MetricError("image dimensions must be positive");
    int m = std::min(height, width);
    long scaled = std::lround(30.0 * m / 512.0);
    int window = static_cast<int>(std::max(5L, scaled));
    if (window % 2 == 0) window -= 1;
    if (window > m) window = (m % 2 == 1) ? m : m - 1;
    return std::max(window, 1);
}

double identity_residual(const Latent& edited, const Latent& mode_target, const Latent& source,
                         const Latent& mode_source) {
    require_same_shape(edited, mode_target, "identity_residual");
    require_same_shape(source, mode_source, "identity_residual");
    require_same_shape(edited, source, "identity_residual");
    double acc = 0.0;
    for (std::size_t i = 0; i < edited.size(); ++i) {
        double d = (edited.data[i] - mode_target.data[i]) - (source.data[i] - mode_source.data[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

constexpr int kSsimWindow = 7;

struct WindowMoments {
    double mean_a = 0, mean_b = 0;
    double var_a = 0, var_b = 0, cov = 0;
};

WindowMoments window_moments(const Latent& a, const Latent& b, int r0, int c0, int width) {
    // Two-pass: explicit means, then centred second moments (population form).
    WindowMoments m;
    constexpr int n = kSsimWindow * kSsimWindow;
    for (int r = r0; r < r0 + kSsimWindow; ++r)
        for (int c = c0; c < c0 + kSsimWindow; ++c) {
            std::size_t i = static_cast<std::size_t>(r) * width + c;
            m.mean_a += a.data[i];
            m.mean_b += b.data[i];
        }
    m.mean_a /= n;
    m.mean_b /= n;
    for (int r = r0; r < r0 + kSsimWindow; ++r)
        for (int c = c0; c < c0 + kSsimWindow; ++c) {
            std::size_t i = static_cast<std::size_t>(r) * width + c;
            double da = a.data[i] - m.mean_a;
            double db = b.data[i] - m.mean_b;
            m.var_a += da * da;
            m.var_b += db * db;
            m.cov += da * db;
        }
    m.var_a /= n;
    m.var_b /= n;
    m.cov /= n;
    return m;
}

void check_ssim_args(const Latent& a, const Latent& b) {
    require_grid(a, "ssim");
    require_same_shape(a, b, "ssim");
    if (a.shape[0] < kSsimWindow || a.shape[1] < kSsimWindow)
        throw MetricError("ssim needs both image dimensions >= 7");
}

}  // namespace

double ssim(const Latent& a, const Latent& b, double dynamic_range) {
    check_ssim_args(a, b);
    if (!(dynamic_range > 0.0)) throw MetricError("ssim dynamic range must be positive");
    double c1 = 0.01 * dynamic_range, c2 = 0.03 * dynamic_range;
    c1 *= c1;
    c2 *= c2;
    int height = a.shape[0], width = a.shape[1];
    double total = 0.0;
    int windows = 0;
    for (int r0 = 0; r0 + kSsimWindow <= height; ++r0)
        for (int c0 = 0; c0 + kSsimWindow <= width; ++c0) {
            WindowMoments m = window_moments(a, b, r0, c0, width);
            double num = (2.0 * m.mean_a * m.mean_b + c1) * (2.0 * m.cov + c2);
            double den = (m.mean_a * m.mean_a + m.mean_b * m.mean_b + c1) * (m.var_a + m.var_b + c2);
            total += num / den;
            ++windows;
        }
    return total / windows;
}

double ssim(const Latent& a, const Latent& b) {
    check_ssim_args(a, b);
    double lo = a.data[0], hi = a.data[0];
    for (double v : a.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double range = hi - lo;
    if (range <= 0.0) range = 1.0;  // two constant images: any range gives ssim 1
    return ssim(a, b, range);
}

Latent ssim_gradient_second(const Latent& a, const Latent& b, double dynamic_range) {
    check_ssim_args(a, b);
    if (!(dynamic_range > 0.0)) throw MetricError("ssim dynamic range must be positive");
    double c1 = 0.01 * dynamic_range, c2 = 0.03 * dynamic_range;
    c1 *= c1;
    c2 *= c2;
    int height = a.shape[0], width = a.shape[1];
    constexpr int n = kSsimWindow * kSsimWindow;
    Latent grad = Latent::zeros(a.shape);
    int windows = 0;
    for (int r0 = 0; r0 + kSsimWindow <= height; ++r0)
        for (int c0 = 0; c0 + kSsimWindow <= width; ++c0) {
            WindowMoments m = window_moments(a, b, r0, c0, width);
            double num1 = 2.0 * m.mean_a * m.mean_b + c1;
            double num2 = 2.0 * m.cov + c2;
            double den1 = m.mean_a * m.mean_a + m.mean_b * m.mean_b + c1;
            double den2 = m.var_a + m.var_b + c2;
            double s = (num1 * num2) / (den1 * den2);
            // dS/db_j assembled from dmean/db_j = 1/n, dvar/db_j = 2(b_j-mu_b)/n,
            // dcov/db_j = (a_j-mu_a)/n (the mean terms drop from the covariance
            // because the a-residuals sum to zero).
            for (int r = r0; r < r0 + kSsimWindow; ++r)
                for (int c = c0; c < c0 + kSsimWindow; ++c) {
                    std::size_t i = static_cast<std::size_t>(r) * width + c;
                    double da = a.data[i] - m.mean_a;
                    double db = b.data[i] - m.mean_b;
                    double d_num = (2.0 * m.mean_a / n) * num2 + num1 * (2.0 * da / n);
                    double d_den = (2.0 * m.mean_b / n) / den1 + (2.0 * db / n) / den2;
                    grad.data[i] += d_num / (den1 * den2) - s * d_den;
                }
            ++windows;
        }
    for (double& v : grad.data) v /= windows;
    return grad;
}

}  // namespace sdlab
