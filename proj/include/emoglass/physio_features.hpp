#ifndef EMOGLASS_PHYSIO_FEATURES_HPP
#define EMOGLASS_PHYSIO_FEATURES_HPP

#include "emoglass/core.hpp"
#include "emoglass/dsp.hpp"

#include <span>
#include <string>
#include <vector>

namespace emoglass {

enum class ChannelTag { PHYSIO, FACIAL, FUSED };

std::string_view to_string(ChannelTag tag);

/// Named feature values for one observation window.
struct FeatureVector {
    std::vector<std::string> names;
    Vector values;
    ChannelTag channel_tag = ChannelTag::PHYSIO;
    std::string trial_id;
    Real offset_s = 0.0;
    EmotionLabel label;
};

struct StatisticalFeatureSet {
    Real mean = 0.0;
    Real std = 0.0;  // sample (n - 1)
    Real mean_abs_d1 = 0.0;
    Real mean_abs_d2 = 0.0;
    Real ratio_d1_std = 0.0;
    Real ratio_d2_std = 0.0;
    bool degenerate = false;  // std == 0, ratios reported as 0
};

StatisticalFeatureSet statistical_features(ConstVectorRef samples);
inline StatisticalFeatureSet statistical_features(const SampleSeries& series) {
    return statistical_features(series.samples());
}

// -- PPG ---------------------------------------------------------------------

struct HrvStatistics {
    Real nn50 = 0.0;
    Real rmssd_ms = 0.0;
    Real sdnn_ms = 0.0;
    Real sddsd_ms = 0.0;  // sample std of successive differences
};

/// Time-domain HRV statistics of an interval sequence (>= 3 intervals).
HrvStatistics hrv_statistics(std::span<const Real> intervals_ms);

struct PPGFeatureSet {
    Real avg_acceleration = 0.0;
    Real nn50 = 0.0;
    Real rmssd_ms = 0.0;
    Real sdnn_ms = 0.0;
    Real sddsd_ms = 0.0;
    Real vlf = 0.0;
    Real lf = 0.0;
    Real hf = 0.0;
};

struct PpgOptions {
    dsp::PeakDetectorOptions peaks;
    dsp::WelchOptions welch;
};

/// Mean |second difference| of the z-normalised waveform.
Real average_acceleration(ConstVectorRef samples);

PPGFeatureSet ppg_features(const SampleSeries& window_ppg, const PpgOptions& options = {});

// -- EDA ---------------------------------------------------------------------

struct SCREvent {
    Real onset_s = 0.0;
    Real peak_s = 0.0;
    Real amplitude_uS = 0.0;
    Real recovery_s = 0.0;  // peak to 50% decay, clamped at the window end
};

struct ScrDetectorOptions {
    Real min_amplitude_uS = 0.01;
    Real min_rise_s = 0.5;
    Real max_rise_s = 10.0;
    /// Reversals smaller than this are treated as ripple on a rise or fall.
    Real reversal_uS = 0.005;
    /// Onset is where the slope drops below this fraction of the rise's peak slope.
    Real onset_slope_fraction = 0.05;
    /// Span before onset whose linear trend is extrapolated under the rise (0 = plain rise).
    Real baseline_window_s = 2.0;
};

/// Trough-to-peak responses in a low-pass filtered EDA series, sorted by onset.
std::vector<SCREvent> detect_scrs(const SampleSeries& filtered_eda,
                                  const ScrDetectorOptions& options = {});

struct EDAFeatureSet {
    Real scsr_recovery_ratio = 0.0;
    Real scsr_count = 0.0;
    Real scvsr_count = 0.0;
    Real scsr_mean_amp_uS = 0.0;
    Real scvsr_mean_amp_uS = 0.0;
};

struct EdaOptions {
    dsp::FilterSpec scsr{dsp::kScsrCutoffHz, 2, true};
    dsp::FilterSpec scvsr{dsp::kScvsrCutoffHz, 2, true};
    ScrDetectorOptions scr;
};

EDAFeatureSet eda_features(const SampleSeries& window_eda, const EdaOptions& options = {});

// -- Window vector -------------------------------------------------------------

struct PhysioOptions {
    PpgOptions ppg;
    EdaOptions eda;
};

inline constexpr std::size_t kPhysioFeatureCount = 25;

/// Fixed order: EDA statistics (6), PPG statistics (6), PPG domain (8), EDA domain (5).
const std::vector<std::string>& physio_feature_names();

/// All 25 physiological features of a window. Any failing extractor throws, so
/// callers reject the whole window instead of emitting a partial vector.
FeatureVector physio_vector(const ObservationWindow& window, const PhysioOptions& options = {});

// -- Feature selection ----------------------------------------------------------

/// Per-column min-max statistics; constant columns map to 0.
struct MinMaxScaler {
    Vector min;
    Vector max;

    static MinMaxScaler fit(ConstMatrixRef data);
    Matrix transform(ConstMatrixRef data) const;
    Vector transform_row(ConstVectorRef row) const;
};

/// Multi-class ReliefF weights. `data` holds one instance per row, each column
/// scaled to [0, 1]; `labels` are class indices. Every instance is used and the
/// k nearest hits / misses are found with Manhattan distance (ties by index).
Vector relieff_weights(ConstMatrixRef data, std::span<const int> labels, int k = 10);

/// Keeps features with weight > threshold; never returns an empty mask.
std::vector<bool> select_features(ConstVectorRef weights, Real threshold = 0.0);

}  // namespace emoglass

#endif  // EMOGLASS_PHYSIO_FEATURES_HPP
