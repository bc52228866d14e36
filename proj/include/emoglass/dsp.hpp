#ifndef EMOGLASS_DSP_HPP
#define EMOGLASS_DSP_HPP

#include "emoglass/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace emoglass::dsp {

// ---------------------------------------------------------------------------
// Butterworth low-pass
// ---------------------------------------------------------------------------

struct FilterSpec {
    Real cutoff_hz = 0.2;
    int order = 2;
    bool zero_phase = true;
};

/// Skin conductance slow / very slow response cut-offs.
inline constexpr Real kScsrCutoffHz = 0.2;
inline constexpr Real kScvsrCutoffHz = 0.08;

/// One section of a direct-form II transposed cascade, normalised so a0 = 1.
template <typename Scalar>
struct Biquad {
    Scalar b0, b1, b2;
    Scalar a1, a2;

    /// State (z1, z2) that holds the output at steady state for a constant input.
    std::pair<Scalar, Scalar> steady_state(Scalar input) const {
        const Scalar dc_gain = (b0 + b1 + b2) / (Scalar(1) + a1 + a2);
        const Scalar output = dc_gain * input;
        const Scalar z2 = b2 * input - a2 * output;
        const Scalar z1 = b1 * input - a1 * output + z2;
        return {z1, z2};
    }
};

/// Digital Butterworth low-pass of the given order as a cascade of sections
/// (bilinear transform with pre-warped cut-off). Odd orders end with a first
/// order section stored with b2 = a2 = 0.
template <typename Scalar>
std::vector<Biquad<Scalar>> butterworth_lowpass(int order, Scalar cutoff_hz, Scalar rate_hz) {
    if (order < 1) throw InvalidArgument("filter order must be >= 1");
    if (!(cutoff_hz > 0) || !(cutoff_hz < rate_hz / 2)) {
        throw InvalidArgument("cutoff must lie in (0, Nyquist)");
    }
    const Scalar pi = Scalar(3.14159265358979323846);
    const Scalar k = std::tan(pi * cutoff_hz / rate_hz);
    const Scalar k2 = k * k;
    std::vector<Biquad<Scalar>> sections;
    for (int i = 0; i < order / 2; ++i) {
        // Conjugate pole pair of the analog prototype at angle (2i + 1) pi / (2n).
        const Scalar r = std::sin(pi * Scalar(2 * i + 1) / Scalar(2 * order));
        const Scalar norm = k2 + Scalar(2) * r * k + Scalar(1);
        const Scalar b0 = k2 / norm;
        sections.push_back({b0, Scalar(2) * b0, b0, Scalar(2) * (k2 - Scalar(1)) / norm,
                            (k2 - Scalar(2) * r * k + Scalar(1)) / norm});
    }
    if (order % 2 == 1) {
        const Scalar norm = k + Scalar(1);
        sections.push_back({k / norm, k / norm, Scalar(0), (k - Scalar(1)) / norm, Scalar(0)});
    }
    return sections;
}

/// Causal cascade filter starting from the steady state of the first sample.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cascade_filter(
    const std::vector<Biquad<Scalar>>& sections,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& input) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = input;
    if (x.size() == 0) return x;
    for (const Biquad<Scalar>& s : sections) {
        auto [z1, z2] = s.steady_state(x(0));
        for (Eigen::Index n = 0; n < x.size(); ++n) {
            const Scalar in = x(n);
            const Scalar out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            x(n) = out;
        }
    }
    return x;
}

/// Forward-backward filtering with odd reflection padding of `pad` samples per end.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> filtfilt(
    const std::vector<Biquad<Scalar>>& sections,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& input, Eigen::Index pad) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = input.size();
    if (pad >= n) throw InvalidArgument("series too short for zero-phase filtering");
    Vec ext(n + 2 * pad);
    for (Eigen::Index i = 0; i < pad; ++i) {
        ext(i) = Scalar(2) * input(0) - input(pad - i);
        ext(n + pad + i) = Scalar(2) * input(n - 1) - input(n - 2 - i);
    }
    ext.segment(pad, n) = input;
    Vec y = cascade_filter(sections, ext);
    y.reverseInPlace();
    y = cascade_filter(sections, y);
    y.reverseInPlace();
    return y.segment(pad, n);
}

/// Butterworth low-pass of a series. Zero-phase mode runs the filter forward
/// then backward (squared magnitude response, no delay).
SampleSeries lowpass(const SampleSeries& series, const FilterSpec& spec);

// ---------------------------------------------------------------------------
// Pulse peaks
// ---------------------------------------------------------------------------

struct PPIntervals {
    std::vector<Real> peak_times_s;
    std::vector<Real> intervals_ms;
};

struct PeakDetectorOptions {
    Real threshold_window_s = 2.0;
    Real threshold_std_factor = 0.5;
    Real refractory_s = 0.33;
    Real min_interval_ms = 250.0;
    Real max_interval_ms = 2000.0;
};

/// Systolic peaks of a PPG series and their successive intervals. Throws
/// InvalidArgument if fewer than two valid peaks remain.
PPIntervals detect_pulse_peaks(const SampleSeries& ppg, const PeakDetectorOptions& options = {});

/// Builds intervals from peak times.
PPIntervals intervals_from_peaks(std::vector<Real> peak_times_s);

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct PSDEstimate {
    std::vector<Real> freqs_hz;
    std::vector<Real> power;  // one-sided density, ms^2/Hz for PP intervals
    Real resolution_hz = 0.0;
    /// Mean over segments of sum((w x)^2) / sum(w^2); the Parseval reference.
    Real windowed_variance = 0.0;
};

struct WelchOptions {
    Real resample_hz = 4.0;
    Real segment_s = 64.0;
    Real overlap = 0.5;
    std::size_t min_intervals = 8;
    Real min_span_s = 60.0;
};

/// One-sided Welch estimate (Hann taper) of a uniformly sampled, mean-removed
/// series. Segments shorter than requested fall back to the full length.
PSDEstimate welch(const Vector& x, Real rate_hz, Eigen::Index segment_len, Real overlap);

/// PSD of the PP interval series resampled on a uniform grid.
PSDEstimate pp_psd(const PPIntervals& pp, const WelchOptions& options = {});

struct BandPower {
    Real power = 0.0;
    bool outside_support = false;  // band did not overlap the PSD frequencies
};

/// Trapezoidal integral of the linearly interpolated PSD over [lo, hi).
BandPower band_power(const PSDEstimate& psd, Real lo_hz, Real hi_hz);

struct Band {
    Real lo_hz;
    Real hi_hz;
};

inline constexpr Band kVlfBand{0.0033, 0.04};
inline constexpr Band kLfBand{0.04, 0.15};
inline constexpr Band kHfBand{0.15, 0.4};

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

/// Sample Pearson correlation (two-pass). Throws InvalidArgument on mismatched
/// lengths, fewer than two samples or zero variance.
template <typename Scalar>
Scalar pearson(std::span<const Scalar> x, std::span<const Scalar> y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson: length mismatch");
    if (x.size() < 2) throw InvalidArgument("pearson: need at least 2 samples");
    const auto n = static_cast<Scalar>(x.size());
    Scalar mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    Scalar sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Scalar dx = x[i] - mx;
        const Scalar dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == Scalar(0) || syy == Scalar(0)) throw InvalidArgument("pearson: zero variance");
    const Scalar r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, Scalar(-1), Scalar(1));
}

inline Real pearson(ConstVectorRef x, ConstVectorRef y) {
    return pearson<Real>(std::span<const Real>(x.data(), static_cast<std::size_t>(x.size())),
                         std::span<const Real>(y.data(), static_cast<std::size_t>(y.size())));
}

}  // namespace emoglass::dsp

#endif  // EMOGLASS_DSP_HPP
