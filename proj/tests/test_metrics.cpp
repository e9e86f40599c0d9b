#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "sdlab/errors.hpp"
#include "sdlab/latent.hpp"
#include "sdlab/metrics.hpp"

using namespace sdlab;

namespace {

// Deterministic but structureless grid filler; generic values so no two window
// statistics tie exactly.
Latent wavy(int h, int w, double phase) {
    Latent img = Latent::zeros({h, w});
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            img.data[static_cast<std::size_t>(r) * w + c] =
                std::sin(0.83 * r + 1.31 * c + phase) + 0.2 * std::cos(2.7 * r * c + phase);
    return img;
}

BinaryMask mask_of(std::vector<unsigned char> bits, std::vector<int> shape) {
    BinaryMask m;
    m.keep = std::move(bits);
    m.shape = std::move(shape);
    return m;
}

}  // namespace

TEST_CASE("mse and psnr fixtures") {
    const Latent a({0.0, 0.0}, {2});
    const Latent b({1.0, 1.0}, {2});
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == 1.0);

    PsnrValue same = psnr(a, a, 1.0);
    CHECK(same.kind == PsnrValue::Kind::Infinite);
    CHECK(same.to_csv() == "inf");

    PsnrValue unit = psnr(a, b, 1.0);
    CHECK(unit.kind == PsnrValue::Kind::Finite);
    CHECK(unit.db == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(psnr(a, b, 0.0), DomainError);
    CHECK_THROWS_AS(psnr(a, b, -1.0), DomainError);
    CHECK_THROWS_AS(mse(a, Latent::zeros({3})), ShapeError);
}

TEST_CASE("scaling the error by 100 costs exactly 20 dB") {
    const Latent a = wavy(4, 4, 0.0);
    Latent near = a, far = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = 0.01 * std::sin(1.7 * static_cast<double>(i));
        near.data[i] += d;
        far.data[i] += 10.0 * d;
    }
    CHECK(mse(a, far) == doctest::Approx(100.0 * mse(a, near)).epsilon(1e-12));
    double drop = psnr(a, near, 2.0).db - psnr(a, far, 2.0).db;
    CHECK(drop == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("iou on hand masks") {
    CHECK(iou(mask_of({1, 1, 0, 0}, {4}), mask_of({1, 1, 0, 0}, {4})) == 1.0);
    CHECK(iou(mask_of({1, 1, 0, 0}, {4}), mask_of({0, 0, 1, 1}, {4})) == 0.0);
    CHECK(iou(mask_of({1, 1, 0, 0}, {4}), mask_of({1, 0, 1, 0}, {4})) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    // two empty masks leave nothing to disagree about
    CHECK(iou(mask_of({0, 0, 0}, {3}), mask_of({0, 0, 0}, {3})) == 1.0);
    CHECK_THROWS_AS(iou(mask_of({1}, {1}), mask_of({1, 0}, {2})), ShapeError);

    BinaryMask full = BinaryMask::full({2, 3});
    CHECK(full.count_kept() == 6);
    CHECK(full.shape == std::vector<int>{2, 3});
    CHECK(iou(full, full) == 1.0);
}

TEST_CASE("psnr over mask ignores excluded pixels and can be undefined") {
    const Latent a({0.0, 0.0, 0.0, 0.0}, {4});
    Latent b = a;
    b.data[2] = 5.0;  // damage one pixel

    PsnrValue masked = psnr_over_mask(a, b, mask_of({1, 1, 0, 1}, {4}), 1.0);
    CHECK(masked.kind == PsnrValue::Kind::Infinite);

    PsnrValue seen = psnr_over_mask(a, b, mask_of({0, 0, 1, 0}, {4}), 5.0);
    CHECK(seen.kind == PsnrValue::Kind::Finite);
    CHECK(seen.db == doctest::Approx(0.0).epsilon(1e-12));  // mse 25 against peak 5

    PsnrValue empty = psnr_over_mask(a, b, mask_of({0, 0, 0, 0}, {4}), 1.0);
    CHECK(empty.kind == PsnrValue::Kind::Undefined);
    CHECK(empty.to_csv() == "undefined");

    CHECK_THROWS_AS(psnr_over_mask(a, b, mask_of({1, 1}, {2}), 1.0), ShapeError);
    CHECK_THROWS_AS(psnr_over_mask(a, b, mask_of({1, 1, 1, 1}, {4}), 0.0), DomainError);
}

TEST_CASE("identity residual fixtures") {
    const Latent mu_src({-2.0, 0.0}, {2});
    const Latent mu_trg({2.0, 0.0}, {2});
    // dyadic offsets so the transfer below is exact in floating point
    const Latent source({-1.75, 0.5}, {2});

    // perfect transfer: edited carries the source offset onto the target mode
    Latent perfect = mu_trg;
    for (std::size_t i = 0; i < perfect.size(); ++i)
        perfect.data[i] += source.data[i] - mu_src.data[i];
    CHECK(identity_residual(perfect, mu_trg, source, mu_src) == 0.0);

    // landing exactly on the target mode forfeits the whole offset
    double offset = std::sqrt(0.25 * 0.25 + 0.5 * 0.5);
    CHECK(identity_residual(mu_trg, mu_trg, source, mu_src) ==
          doctest::Approx(offset).epsilon(1e-15));

    CHECK(identity_residual(Latent({1.0, 5.0}, {2}), Latent({0.0, 0.0}, {2}),
                            Latent({3.0, 3.0}, {2}), Latent({2.0, 1.0}, {2})) ==
          doctest::Approx(3.0).epsilon(1e-15));

    CHECK_THROWS_AS(identity_residual(perfect, mu_trg, source, Latent::zeros({3})), ShapeError);
}

namespace {

// Independent ssim reference: accumulate raw sums of products per window and
// derive population moments from them, instead of the two-pass centred form.
double ssim_reference(const Latent& a, const Latent& b, double range) {
    const int win = 7;
    int h = a.shape[0], w = a.shape[1];
    double c1 = 0.01 * range * 0.01 * range;
    double c2 = 0.03 * range * 0.03 * range;
    double total = 0.0;
    int count = 0;
    for (int r0 = 0; r0 + win <= h; ++r0)
        for (int c0 = 0; c0 + win <= w; ++c0) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int r = r0; r < r0 + win; ++r)
                for (int c = c0; c < c0 + win; ++c) {
                    double va = a.data[static_cast<std::size_t>(r) * w + c];
                    double vb = b.data[static_cast<std::size_t>(r) * w + c];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            double n = win * win;
            double ma = sa / n, mb = sb / n;
            double va = saa / n - ma * ma;
            double vb = sbb / n - mb * mb;
            double cov = sab / n - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return total / count;
}

}  // namespace

TEST_CASE("ssim basics") {
    const Latent a = wavy(8, 8, 0.3);
    CHECK(ssim(a, a) == 1.0);
    CHECK(ssim(a, a, 2.0) == 1.0);

    // constant pair: zero range falls back cleanly instead of dividing by it
    const Latent flat = Latent::zeros({7, 7});
    CHECK(ssim(flat, flat) == 1.0);

    // scrambling structure hurts even when the histogram is identical
    Latent shuffled = a;
    std::vector<double> vals = a.data;
    std::size_t n = vals.size();
    for (std::size_t i = 0; i < n; ++i) shuffled.data[i] = vals[(i * 37 + 11) % n];
    CHECK(ssim(a, shuffled) < 0.9);

    // symmetric in its arguments
    const Latent b = wavy(8, 8, 1.9);
    CHECK(ssim(a, b) == ssim(b, a));

    CHECK_THROWS_AS(ssim(Latent::zeros({49}), Latent::zeros({49})), MetricError);
    CHECK_THROWS_AS(ssim(Latent::zeros({6, 8}), Latent::zeros({6, 8})), MetricError);
    CHECK_THROWS_AS(ssim(a, a, 0.0), MetricError);
    CHECK_THROWS_AS(ssim(a, Latent::zeros({8, 9})), ShapeError);
}

TEST_CASE("ssim matches an independent within-window computation") {
    const Latent a = wavy(8, 8, 0.0);
    const Latent b = wavy(8, 8, 0.7);
    CHECK(ssim(a, b, 2.4) == doctest::Approx(ssim_reference(a, b, 2.4)).epsilon(1e-12));

    const Latent big_a = wavy(11, 9, 2.2);
    const Latent big_b = wavy(11, 9, 4.1);
    CHECK(ssim(big_a, big_b, 3.0) ==
          doctest::Approx(ssim_reference(big_a, big_b, 3.0)).epsilon(1e-12));

    // auto-range variant agrees with the pinned-range one at the combined range
    double lo = a.data[0], hi = a.data[0];
    for (double v : a.data) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b.data) { lo = std::min(lo, v); hi = std::max(hi, v); }
    CHECK(ssim(a, b) == ssim(a, b, hi - lo));
}

TEST_CASE("ssim gradient matches finite differences") {
    const Latent a = wavy(8, 8, 0.5);
    const Latent b = wavy(8, 8, 1.4);
    const double range = 2.5;
    const Latent grad = ssim_gradient_second(a, b, range);
    REQUIRE(grad.shape == b.shape);

    const double h = 1e-6;
    // probe a scattered handful of pixels, corners included
    const std::size_t probes[] = {0, 7, 13, 27, 36, 45, 56, 63};
    for (std::size_t i : probes) {
        Latent hi = b, lo = b;
        hi.data[i] += h;
        lo.data[i] -= h;
        double fd = (ssim(a, hi, range) - ssim(a, lo, range)) / (2 * h);
        CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK_THROWS_AS(ssim_gradient_second(a, b, -1.0), MetricError);
}

namespace {

struct BackgroundReference {
    std::vector<double> sigma;
    double threshold = 0.0;
    std::vector<unsigned char> keep;
    PsnrValue psnr;
};

// Straight-line re-computation of the background split: residual std dev over a
// clamped square window, threshold by mean or median, keep the quiet pixels.
BackgroundReference background_reference(const Latent& src, const Latent& trg, int window,
                                         ThresholdMode mode, double peak) {
    int h = src.shape[0], w = src.shape[1];
    int half = window / 2;
    BackgroundReference ref;
    ref.sigma.resize(src.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            std::vector<double> vals;
            for (int rr = r - half; rr <= r + half; ++rr)
                for (int cc = c - half; cc <= c + half; ++cc) {
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                    std::size_t i = static_cast<std::size_t>(rr) * w + cc;
                    vals.push_back(trg.data[i] - src.data[i]);
                }
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            ref.sigma[static_cast<std::size_t>(r) * w + c] =
                std::sqrt(var / static_cast<double>(vals.size()));
        }
    if (mode == ThresholdMode::mean) {
        for (double v : ref.sigma) ref.threshold += v;
        ref.threshold /= static_cast<double>(ref.sigma.size());
    } else {
        std::vector<double> sorted = ref.sigma;
        std::sort(sorted.begin(), sorted.end());
        std::size_t m = sorted.size();
        ref.threshold = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    }
    ref.keep.resize(ref.sigma.size());
    for (std::size_t i = 0; i < ref.sigma.size(); ++i)
        ref.keep[i] = ref.sigma[i] <= ref.threshold ? 1 : 0;
    double acc = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < ref.keep.size(); ++i) {
        if (!ref.keep[i]) continue;
        double d = src.data[i] - trg.data[i];
        acc += d * d;
        ++kept;
    }
    if (kept == 0)
        ref.psnr = PsnrValue::undefined();
    else if (acc == 0.0)
        ref.psnr = PsnrValue::infinite();
    else
        ref.psnr = PsnrValue::of(10.0 * std::log10(peak * peak / (acc / static_cast<double>(kept))));
    return ref;
}

}  // namespace

TEST_CASE("background psnr: one hot pixel in a flat image is fully masked out") {
    const Latent src = Latent::zeros({9, 9});
    Latent trg = src;
    trg.data[4 * 9 + 4] = 1.0;  // centre pixel changes

    BackgroundPsnrResult res = background_psnr(src, trg, 3, ThresholdMode::mean, 1.0);

    // only the 3x3 neighbourhood of the change sees any residual variance:
    // sigma there is sqrt(8)/9, elsewhere 0, so the mean threshold splits them
    double hot_sigma = std::sqrt(8.0) / 9.0;
    CHECK(res.threshold == doctest::Approx(9.0 * hot_sigma / 81.0).epsilon(1e-12));
    CHECK(res.mask.count_kept() == 81 - 9);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            bool hot = std::abs(r - 4) <= 1 && std::abs(c - 4) <= 1;
            CHECK(res.mask.keep[static_cast<std::size_t>(r) * 9 + c] == (hot ? 0 : 1));
        }
    // the kept region is untouched, so the masked comparison is exact
    CHECK(res.psnr.kind == PsnrValue::Kind::Infinite);
}

TEST_CASE("background psnr matches a brute-force recomputation") {
    const Latent src = wavy(9, 9, 0.0);
    Latent trg = wavy(9, 9, 0.05);
    // concentrate extra damage in one corner so the mask is nontrivial
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            trg.data[static_cast<std::size_t>(r) * 9 + c] += 0.8 + 0.1 * (r + c);

    for (ThresholdMode mode : {ThresholdMode::mean, ThresholdMode::median}) {
        CAPTURE(static_cast<int>(mode));
        BackgroundPsnrResult res = background_psnr(src, trg, 5, mode, 2.0);
        BackgroundReference ref = background_reference(src, trg, 5, mode, 2.0);
        CHECK(res.threshold == doctest::Approx(ref.threshold).epsilon(1e-12));
        REQUIRE(res.mask.keep.size() == ref.keep.size());
        for (std::size_t i = 0; i < ref.keep.size(); ++i) CHECK(res.mask.keep[i] == ref.keep[i]);
        REQUIRE(res.psnr.kind == ref.psnr.kind);
        REQUIRE(res.psnr.kind == PsnrValue::Kind::Finite);
        CHECK(res.psnr.db == doctest::Approx(ref.psnr.db).epsilon(1e-12));
        // the sigma split has to separate something: the boundary ring around
        // the shifted corner is noisy, the far field is not
        std::size_t kept = res.mask.count_kept();
        CHECK(kept > 0);
        CHECK(kept < 81);
    }
}

TEST_CASE("background psnr argument validation") {
    const Latent grid = Latent::zeros({9, 9});
    CHECK_THROWS_AS(background_psnr(Latent::zeros({81}), Latent::zeros({81}), 3,
                                    ThresholdMode::mean, 1.0),
                    MetricError);
    CHECK_THROWS_AS(background_psnr(grid, grid, 4, ThresholdMode::mean, 1.0), MetricError);
    CHECK_THROWS_AS(background_psnr(grid, grid, 0, ThresholdMode::mean, 1.0), MetricError);
    CHECK_THROWS_AS(background_psnr(grid, grid, 11, ThresholdMode::mean, 1.0), MetricError);
    CHECK_THROWS_AS(background_psnr(grid, Latent::zeros({9, 8}), 3, ThresholdMode::mean, 1.0),
                    ShapeError);

    // identical images: everything is background and nothing differs
    BackgroundPsnrResult res = background_psnr(grid, grid, 3, ThresholdMode::median, 1.0);
    CHECK(res.mask.count_kept() == 81);
    CHECK(res.psnr.kind == PsnrValue::Kind::Infinite);
}

TEST_CASE("default background window tracks the shorter image side") {
    CHECK(default_background_window(16, 16) == 5);
    CHECK(default_background_window(512, 512) == 29);  // 30 rounded down to odd
    CHECK(default_background_window(512, 1024) == 29);
    CHECK(default_background_window(256, 256) == 15);
    // tiny images: the floor of 5 still has to fit
    CHECK(default_background_window(3, 100) == 3);
    CHECK(default_background_window(4, 4) == 3);
    CHECK(default_background_window(1, 1) == 1);
    for (int m : {7, 16, 33, 100, 211, 512, 777}) {
        int w = default_background_window(m, m);
        CHECK(w % 2 == 1);
        CHECK(w <= m);
        CHECK(w >= 1);
    }
    CHECK_THROWS_AS(default_background_window(0, 5), MetricError);
}

TEST_CASE("format_double survives a parse round trip") {
    for (double v : {0.0, 1.0, -1.0, 1.0 / 3.0, 0.1, 1e-17, 6.02214076e23, -2.5e-300}) {
        std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
}
