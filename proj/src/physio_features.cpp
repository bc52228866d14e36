#include "emoglass/physio_features.hpp"

#include <cmath>

namespace emoglass {

std::string_view to_string(ChannelTag tag) {
    switch (tag) {
    case ChannelTag::PHYSIO: return "PHYSIO";
    case ChannelTag::FACIAL: return "FACIAL";
    case ChannelTag::FUSED: return "FUSED";
    }
    return "?";
}

namespace {

Real sample_std(ConstVectorRef x) {
    if (x.size() < 2) return 0.0;
    const Real mu = x.mean();
    return std::sqrt((x.array() - mu).square().sum() / static_cast<Real>(x.size() - 1));
}

}  // namespace

StatisticalFeatureSet statistical_features(ConstVectorRef x) {
    const Eigen::Index n = x.size();
    if (n < 3) throw InvalidArgument("statistical features need at least 3 samples");
    StatisticalFeatureSet f;
    f.mean = x.mean();
    f.std = sample_std(x);
    f.mean_abs_d1 = (x.tail(n - 1) - x.head(n - 1)).cwiseAbs().mean();
    f.mean_abs_d2 = (x.tail(n - 2) - 2.0 * x.segment(1, n - 2) + x.head(n - 2)).cwiseAbs().mean();
    if (f.std > 0.0) {
        f.ratio_d1_std = f.mean_abs_d1 / f.std;
        f.ratio_d2_std = f.mean_abs_d2 / f.std;
    } else {
        f.degenerate = true;
    }
    return f;
}

HrvStatistics hrv_statistics(std::span<const Real> intervals_ms) {
    if (intervals_ms.size() < 3) throw InvalidArgument("HRV statistics need at least 3 intervals");
    const auto m = static_cast<Eigen::Index>(intervals_ms.size());
    const Eigen::Map<const Vector> nn(intervals_ms.data(), m);
    const Vector diffs = nn.tail(m - 1) - nn.head(m - 1);
    HrvStatistics s;
    s.nn50 = static_cast<Real>((diffs.array().abs() > 50.0).count());
    s.rmssd_ms = std::sqrt(diffs.squaredNorm() / static_cast<Real>(diffs.size()));
    s.sdnn_ms = sample_std(nn);
    s.sddsd_ms = sample_std(diffs);
    return s;
}

Real average_acceleration(ConstVectorRef x) {
    const Eigen::Index n = x.size();
    if (n < 3) throw InvalidArgument("average acceleration needs at least 3 samples");
    const Real sd = sample_std(x);
    if (!(sd > 0.0)) throw InvalidArgument("average acceleration of a constant waveform");
    const Vector z = (x.array() - x.mean()) / sd;
    return (z.tail(n - 2) - 2.0 * z.segment(1, n - 2) + z.head(n - 2)).cwiseAbs().mean();
}

PPGFeatureSet ppg_features(const SampleSeries& window_ppg, const PpgOptions& options) {
    const dsp::PPIntervals pp = dsp::detect_pulse_peaks(window_ppg, options.peaks);
    if (pp.intervals_ms.size() < options.welch.min_intervals) {
        throw InvalidArgument("too few pulse intervals for HRV features");
    }
    const HrvStatistics hrv = hrv_statistics(pp.intervals_ms);
    const dsp::PSDEstimate psd = dsp::pp_psd(pp, options.welch);

    PPGFeatureSet f;
    f.avg_acceleration = average_acceleration(window_ppg.samples());
    f.nn50 = hrv.nn50;
    f.rmssd_ms = hrv.rmssd_ms;
    f.sdnn_ms = hrv.sdnn_ms;
    f.sddsd_ms = hrv.sddsd_ms;
    f.vlf = dsp::band_power(psd, dsp::kVlfBand.lo_hz, dsp::kVlfBand.hi_hz).power;
    f.lf = dsp::band_power(psd, dsp::kLfBand.lo_hz, dsp::kLfBand.hi_hz).power;
    f.hf = dsp::band_power(psd, dsp::kHfBand.lo_hz, dsp::kHfBand.hi_hz).power;
    return f;
}

std::vector<SCREvent> detect_scrs(const SampleSeries& filtered_eda,
                                  const ScrDetectorOptions& options) {
    const Vector& x = filtered_eda.samples();
    const Eigen::Index n = x.size();
    const Real rate = filtered_eda.rate_hz();
    std::vector<SCREvent> events;
    if (n < 3) return events;

    // Zig-zag extrema with a reversal threshold: alternating troughs and peaks.
    struct Extremum {
        Eigen::Index index;
        bool is_peak;
    };
    std::vector<Extremum> extrema;
    const Real h = options.reversal_uS;
    Eigen::Index lo = 0, hi = 0, candidate = 0;
    int direction = 0;  // +1 rising, -1 falling, 0 undecided
    for (Eigen::Index i = 1; i < n; ++i) {
        if (direction == 0) {
            if (x(i) > x(hi)) hi = i;
            if (x(i) < x(lo)) lo = i;
            if (x(hi) - x(lo) > h) {
                extrema.push_back(lo < hi ? Extremum{lo, false} : Extremum{hi, true});
                direction = lo < hi ? 1 : -1;
                candidate = lo < hi ? hi : lo;
            }
        } else if (direction > 0) {
            if (x(i) > x(candidate)) {
                candidate = i;
            } else if (x(candidate) - x(i) > h) {
                extrema.push_back({candidate, true});
                direction = -1;
                candidate = i;
            }
        } else {
            if (x(i) < x(candidate)) {
                candidate = i;
            } else if (x(i) - x(candidate) > h) {
                extrema.push_back({candidate, false});
                direction = 1;
                candidate = i;
            }
        }
    }

    for (std::size_t e = 0; e + 1 < extrema.size(); ++e) {
        if (extrema[e].is_peak || !extrema[e + 1].is_peak) continue;
        const Eigen::Index trough = extrema[e].index;
        const Eigen::Index peak = extrema[e + 1].index;
        if (peak + 1 >= n) continue;  // rise cut off by the window end

        // Walk back from the peak to where the rise flattens out.
        // Start at the steepest point; the slope at the peak itself is ~0.
        Real max_slope = 0.0;
        Eigen::Index onset = peak;
        for (Eigen::Index i = trough; i < peak; ++i) {
            if (x(i + 1) - x(i) > max_slope) {
                max_slope = x(i + 1) - x(i);
                onset = i + 1;
            }
        }
        while (onset > trough && x(onset) - x(onset - 1) > options.onset_slope_fraction * max_slope) {
            --onset;
        }
        // Rise above the pre-onset trend, so a response riding on the tail of the
        // previous one (or on tonic drift) is not under-read.
        Real trend = 0.0;
        const Eigen::Index floor_at = e > 0 ? extrema[e - 1].index : 0;
        const Eigen::Index from = std::max(floor_at, onset - static_cast<Eigen::Index>(std::llround(options.baseline_window_s * rate)));
        if (options.baseline_window_s > 0.0 && onset - from >= static_cast<Eigen::Index>(std::llround(0.5 * rate))) {
            trend = (x(onset) - x(from)) / static_cast<Real>(onset - from);
        }
        const Real amplitude = x(peak) - x(onset) - trend * static_cast<Real>(peak - onset);
        const Real rise = static_cast<Real>(peak - onset) / rate;
        if (amplitude < options.min_amplitude_uS || rise < options.min_rise_s ||
            rise > options.max_rise_s) {
            continue;
        }
        const Real half = x(peak) - amplitude / 2.0;
        Eigen::Index end = peak;
        while (end + 1 < n && x(end) > half) ++end;
        events.push_back(SCREvent{filtered_eda.start_time_s() + static_cast<Real>(onset) / rate,
                                  filtered_eda.start_time_s() + static_cast<Real>(peak) / rate,
                                  amplitude, static_cast<Real>(end - peak) / rate});
    }
    return events;
}

EDAFeatureSet eda_features(const SampleSeries& window_eda, const EdaOptions& options) {
    const auto scsr = detect_scrs(dsp::lowpass(window_eda, options.scsr), options.scr);
    const auto scvsr = detect_scrs(dsp::lowpass(window_eda, options.scvsr), options.scr);
    auto mean_amplitude = [](const std::vector<SCREvent>& events) {
        if (events.empty()) return 0.0;
        Real sum = 0.0;
        for (const SCREvent& e : events) sum += e.amplitude_uS;
        return sum / static_cast<Real>(events.size());
    };
    Real recovery = 0.0;
    for (const SCREvent& e : scsr) recovery += e.recovery_s;

    EDAFeatureSet f;
    f.scsr_recovery_ratio = std::clamp(recovery / window_eda.duration_s(), 0.0, 1.0);
    f.scsr_count = static_cast<Real>(scsr.size());
    f.scvsr_count = static_cast<Real>(scvsr.size());
    f.scsr_mean_amp_uS = mean_amplitude(scsr);
    f.scvsr_mean_amp_uS = mean_amplitude(scvsr);
    return f;
}

const std::vector<std::string>& physio_feature_names() {
    static const std::vector<std::string> names = {
        "eda_mean",         "eda_std",          "eda_mean_abs_d1",   "eda_mean_abs_d2",
        "eda_ratio_d1_std", "eda_ratio_d2_std", "ppg_mean",          "ppg_std",
        "ppg_mean_abs_d1",  "ppg_mean_abs_d2",  "ppg_ratio_d1_std",  "ppg_ratio_d2_std",
        "ppg_avg_accel",    "ppg_nn50",         "ppg_rmssd_ms",      "ppg_sdnn_ms",
        "ppg_sddsd_ms",     "ppg_vlf",          "ppg_lf",            "ppg_hf",
        "scsr_recovery_ratio", "scsr_count",    "scvsr_count",       "scsr_mean_amp_us",
        "scvsr_mean_amp_us"};
    return names;
}

FeatureVector physio_vector(const ObservationWindow& window, const PhysioOptions& options) {
    const StatisticalFeatureSet eda_stats = statistical_features(window.eda_slice);
    const StatisticalFeatureSet ppg_stats = statistical_features(window.ppg_slice);
    const PPGFeatureSet ppg = ppg_features(window.ppg_slice, options.ppg);
    const EDAFeatureSet eda = eda_features(window.eda_slice, options.eda);

    FeatureVector v;
    v.names = physio_feature_names();
    v.values.resize(static_cast<Eigen::Index>(kPhysioFeatureCount));
    v.values << eda_stats.mean, eda_stats.std, eda_stats.mean_abs_d1, eda_stats.mean_abs_d2,
        eda_stats.ratio_d1_std, eda_stats.ratio_d2_std, ppg_stats.mean, ppg_stats.std,
        ppg_stats.mean_abs_d1, ppg_stats.mean_abs_d2, ppg_stats.ratio_d1_std,
        ppg_stats.ratio_d2_std, ppg.avg_acceleration, ppg.nn50, ppg.rmssd_ms, ppg.sdnn_ms,
        ppg.sddsd_ms, ppg.vlf, ppg.lf, ppg.hf, eda.scsr_recovery_ratio, eda.scsr_count,
        eda.scvsr_count, eda.scsr_mean_amp_uS, eda.scvsr_mean_amp_uS;
    if (!v.values.allFinite()) throw InvalidArgument("non-finite physiological feature");
    v.channel_tag = ChannelTag::PHYSIO;
    v.trial_id = window.trial_id;
    v.offset_s = window.offset_s;
    v.label = window.label;
    return v;
}

}  // namespace emoglass
