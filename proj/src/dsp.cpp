#include "emoglass/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <numbers>

namespace emoglass::dsp {

SampleSeries lowpass(const SampleSeries& series, const FilterSpec& spec) {
    if (!(spec.cutoff_hz < series.rate_hz() / 2.0)) {
        throw InvalidArgument("lowpass: cutoff must be below Nyquist");
    }
    const auto sections = butterworth_lowpass<Real>(spec.order, spec.cutoff_hz, series.rate_hz());
    const Eigen::Index pad = 3 * spec.order;
    if (series.size() < pad + 1) throw InvalidArgument("lowpass: series too short");
    Vector y = spec.zero_phase ? filtfilt(sections, series.samples(), pad)
                               : cascade_filter(sections, series.samples());
    return series.with_samples(std::move(y));
}

// ---------------------------------------------------------------------------

PPIntervals intervals_from_peaks(std::vector<Real> peak_times_s) {
    PPIntervals pp;
    pp.peak_times_s = std::move(peak_times_s);
    for (std::size_t i = 1; i < pp.peak_times_s.size(); ++i) {
        pp.intervals_ms.push_back(1000.0 * (pp.peak_times_s[i] - pp.peak_times_s[i - 1]));
    }
    return pp;
}

namespace {

struct Peak {
    Real time_s;
    Real height;
};

// Centered rolling mean and sample standard deviation, truncated at the edges.
void rolling_stats(const Vector& x, Eigen::Index window, Vector& mean, Vector& sd) {
    const Eigen::Index n = x.size();
    Vector s1 = Vector::Zero(n + 1);
    Vector s2 = Vector::Zero(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        s1(i + 1) = s1(i) + x(i);
        s2(i + 1) = s2(i) + x(i) * x(i);
    }
    mean.resize(n);
    sd.resize(n);
    const Eigen::Index half = window / 2;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n, i + half + 1);
        const auto m = static_cast<Real>(hi - lo);
        const Real mu = (s1(hi) - s1(lo)) / m;
        const Real ss = (s2(hi) - s2(lo)) - m * mu * mu;
        mean(i) = mu;
        sd(i) = m > 1 ? std::sqrt(std::max(ss, 0.0) / (m - 1)) : 0.0;
    }
}

}  // namespace

PPIntervals detect_pulse_peaks(const SampleSeries& ppg, const PeakDetectorOptions& options) {
    if (ppg.channel() != Channel::PPG) throw InvalidArgument("peak detection needs a PPG series");
    const Vector& x = ppg.samples();
    const Eigen::Index n = x.size();
    const Real rate = ppg.rate_hz();

    Vector mean, sd;
    rolling_stats(x, std::max<Eigen::Index>(3, std::llround(options.threshold_window_s * rate)),
                  mean, sd);

    std::vector<Peak> peaks;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (!(x(i) > x(i - 1) && x(i) >= x(i + 1))) continue;
        if (!(x(i) > mean(i) + options.threshold_std_factor * sd(i))) continue;
        // Parabolic refinement of the sample maximum.
        const Real denom = x(i - 1) - 2.0 * x(i) + x(i + 1);
        const Real delta = denom < 0.0 ? 0.5 * (x(i - 1) - x(i + 1)) / denom : 0.0;
        const Peak peak{ppg.start_time_s() + (static_cast<Real>(i) + delta) / rate, x(i)};
        if (!peaks.empty() && peak.time_s - peaks.back().time_s < options.refractory_s) {
            if (peak.height > peaks.back().height) peaks.back() = peak;
            continue;
        }
        peaks.push_back(peak);
    }

    // Merge peaks closer than the minimum plausible interval, keeping the higher.
    const Real min_gap = options.min_interval_ms / 1000.0;
    bool merged = true;
    while (merged && peaks.size() > 1) {
        merged = false;
        for (std::size_t i = 1; i < peaks.size(); ++i) {
            if (peaks[i].time_s - peaks[i - 1].time_s <= min_gap) {
                const std::size_t drop = peaks[i].height > peaks[i - 1].height ? i - 1 : i;
                peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(drop));
                merged = true;
                break;
            }
        }
    }

    // Gaps beyond the maximum interval split the train; keep the longest run.
    const Real max_gap = options.max_interval_ms / 1000.0;
    std::size_t best_first = 0, best_len = peaks.empty() ? 0 : 1, run_first = 0;
    for (std::size_t i = 1; i <= peaks.size(); ++i) {
        if (i == peaks.size() || peaks[i].time_s - peaks[i - 1].time_s >= max_gap) {
            if (i - run_first > best_len) {
                best_first = run_first;
                best_len = i - run_first;
            }
            run_first = i;
        }
    }
    if (best_len < 2) throw InvalidArgument("fewer than 2 valid peaks");

    std::vector<Real> times;
    times.reserve(best_len);
    for (std::size_t i = best_first; i < best_first + best_len; ++i) {
        times.push_back(peaks[i].time_s);
    }
    return intervals_from_peaks(std::move(times));
}

// ---------------------------------------------------------------------------

PSDEstimate welch(const Vector& x, Real rate_hz, Eigen::Index segment_len, Real overlap) {
    const Eigen::Index n = x.size();
    if (n < 4) throw InvalidArgument("welch: series too short");
    const Eigen::Index seg = std::min(segment_len, n);
    const Eigen::Index step =
        std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(seg * (1.0 - overlap))));

    std::vector<Real> window(static_cast<std::size_t>(seg));
    Real window_energy = 0.0;
    for (Eigen::Index i = 0; i < seg; ++i) {
        const Real w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / static_cast<Real>(seg)));
        window[static_cast<std::size_t>(i)] = w;
        window_energy += w * w;
    }

    const Eigen::Index bins = seg / 2 + 1;
    PSDEstimate psd;
    psd.resolution_hz = rate_hz / static_cast<Real>(seg);
    psd.freqs_hz.resize(static_cast<std::size_t>(bins));
    psd.power.assign(static_cast<std::size_t>(bins), 0.0);
    for (Eigen::Index k = 0; k < bins; ++k) {
        psd.freqs_hz[static_cast<std::size_t>(k)] = static_cast<Real>(k) * psd.resolution_hz;
    }

    Eigen::FFT<Real> fft;
    std::vector<Real> buffer(static_cast<std::size_t>(seg));
    std::vector<std::complex<Real>> spectrum;
    int segments = 0;
    for (Eigen::Index start = 0; start + seg <= n; start += step) {
        Real energy = 0.0;
        for (Eigen::Index i = 0; i < seg; ++i) {
            const Real v = window[static_cast<std::size_t>(i)] * x(start + i);
            buffer[static_cast<std::size_t>(i)] = v;
            energy += v * v;
        }
        fft.fwd(spectrum, buffer);
        for (Eigen::Index k = 0; k < bins; ++k) {
            const bool edge = k == 0 || (seg % 2 == 0 && k == seg / 2);
            const Real scale = (edge ? 1.0 : 2.0) / (rate_hz * window_energy);
            psd.power[static_cast<std::size_t>(k)] +=
                scale * std::norm(spectrum[static_cast<std::size_t>(k)]);
        }
        psd.windowed_variance += energy / window_energy;
        ++segments;
    }
    for (Real& p : psd.power) p /= segments;
    psd.windowed_variance /= segments;
    return psd;
}

PSDEstimate pp_psd(const PPIntervals& pp, const WelchOptions& options) {
    const std::size_t m = pp.intervals_ms.size();
    if (m < options.min_intervals) throw InvalidArgument("pp_psd: too few intervals");
    if (pp.peak_times_s.size() != m + 1) throw InvalidArgument("pp_psd: inconsistent intervals");
    // Each interval is stamped at the peak that closes it.
    const Real t0 = pp.peak_times_s[1];
    const Real t1 = pp.peak_times_s[m];
    if (t1 - t0 < options.min_span_s) throw InvalidArgument("pp_psd: interval span too short");

    const auto samples =
        static_cast<Eigen::Index>(std::floor((t1 - t0) * options.resample_hz)) + 1;
    Vector grid(samples);
    std::size_t j = 1;
    for (Eigen::Index i = 0; i < samples; ++i) {
        const Real t = t0 + static_cast<Real>(i) / options.resample_hz;
        while (j + 1 < m + 1 && pp.peak_times_s[j + 1] < t) ++j;
        const std::size_t next = std::min(j + 1, m);
        const Real ta = pp.peak_times_s[j];
        const Real tb = pp.peak_times_s[next];
        const Real va = pp.intervals_ms[j - 1];
        const Real vb = pp.intervals_ms[next - 1];
        const Real frac = tb > ta ? std::clamp((t - ta) / (tb - ta), 0.0, 1.0) : 0.0;
        grid(i) = va + frac * (vb - va);
    }
    grid.array() -= grid.mean();
    const auto segment =
        static_cast<Eigen::Index>(std::llround(options.segment_s * options.resample_hz));
    return welch(grid, options.resample_hz, segment, options.overlap);
}

BandPower band_power(const PSDEstimate& psd, Real lo_hz, Real hi_hz) {
    if (!(lo_hz >= 0.0) || !(hi_hz > lo_hz)) throw InvalidArgument("band_power: need 0 <= lo < hi");
    const auto& f = psd.freqs_hz;
    const auto& p = psd.power;
    if (f.size() < 2) return {0.0, true};
    const Real lo = std::max(lo_hz, f.front());
    const Real hi = std::min(hi_hz, f.back());
    if (!(hi > lo)) return {0.0, true};

    auto value_at = [&](std::size_t i, Real x) {
        const Real t = (x - f[i]) / (f[i + 1] - f[i]);
        return p[i] + t * (p[i + 1] - p[i]);
    };
    Real total = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const Real a = std::max(lo, f[i]);
        const Real b = std::min(hi, f[i + 1]);
        if (!(b > a)) continue;
        total += 0.5 * (value_at(i, a) + value_at(i, b)) * (b - a);
    }
    return {std::max(total, 0.0), false};
}

}  // namespace emoglass::dsp
