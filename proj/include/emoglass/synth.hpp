#ifndef EMOGLASS_SYNTH_HPP
#define EMOGLASS_SYNTH_HPP

#include "emoglass/core.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

// Synthetic sessions with known ground truth. Every generator is a pure
// function of its arguments and seed.

namespace emoglass::synth {

inline constexpr Real kInfiniteSnr = std::numeric_limits<Real>::infinity();

/// Bateman time constants of a planted skin conductance response.
inline constexpr Real kScrTau1S = 0.75;
inline constexpr Real kScrTau2S = 4.0;

struct ClassProfile {
    Real heart_rate_bpm = 75.0;
    Real hrv_depth_ms = 30.0;
    Real hrv_freq_hz = 0.1;
    Real scr_rate_per_min = 3.0;
    Real scr_amplitude_uS = 0.15;  // peak height of one response
};

/// Reference profiles in quadrant order. Arousal drives heart rate and SCR
/// activity strongly; valence only changes the HRV modulation depth.
std::array<ClassProfile, 4> reference_profiles();

// -- PPG ----------------------------------------------------------------------

struct PpgSynthOptions {
    Real first_beat_s = 0.4;
    Real interval_jitter_ms = 0.0;  // per-beat Gaussian jitter
    Real gain = 1.0;
    Real snr = kInfiniteSnr;
};

struct SynthPpg {
    SampleSeries series;
    std::vector<Real> beat_times_s;
    std::vector<Real> intervals_ms;  // successive beat differences, exactly as planted
};

/// Beats at t_{k+1} = t_k + T_k with T_k = 60000 / HR + depth sin(2 pi f t_k) + jitter
/// (ms); each beat is a raised-cosine upstroke peaking at t_k followed by a
/// smooth exponential decay.
SynthPpg synth_ppg(const ClassProfile& profile, Real duration_s, Real rate_hz, std::uint64_t seed,
                   const PpgSynthOptions& options = {});

/// Explicit interval sequence, starting at `first_beat_s`; beats continue with
/// the last interval until the series ends.
SynthPpg synth_ppg_from_intervals(std::vector<Real> intervals_ms, Real duration_s, Real rate_hz,
                                  Real first_beat_s = 0.4);

// -- EDA ----------------------------------------------------------------------

struct PlantedScr {
    Real onset_s = 0.0;
    Real amplitude_uS = 0.0;  // peak height above the pre-onset level
    Real peak_s = 0.0;
    Real half_recovery_s = 0.0;  // peak to 50% decay of an isolated response
};

/// Value of a Bateman response with unit peak height at time t after onset.
Real bateman_unit(Real t_s);
/// Onset-to-peak time of the Bateman response.
Real bateman_rise_s();
/// Peak to half-height time of an isolated Bateman response.
Real bateman_half_recovery_s();

struct EdaSynthOptions {
    Real tonic_level_uS = 5.0;
    Real tonic_slope_uS_per_s = 0.0;
    Real tonic_wave_uS = 0.05;  // amplitude of the 0.005 Hz component
    Real amplitude_jitter = 0.0;  // log-normal sigma of per-event amplitudes
    Real min_spacing_s = 5.0;
    Real snr = kInfiniteSnr;
};

struct SynthEda {
    SampleSeries series;
    std::vector<PlantedScr> events;
};

/// Tonic drift plus Bateman responses with Poisson onsets (minimum spacing
/// enforced), plus white noise at the requested SNR.
SynthEda synth_eda(const ClassProfile& profile, Real duration_s, Real rate_hz, std::uint64_t seed,
                   const EdaSynthOptions& options = {});

/// Tonic drift plus responses at the given onsets and peak heights.
SynthEda synth_eda_events(const std::vector<PlantedScr>& planted, Real duration_s, Real rate_hz,
                          const EdaSynthOptions& options = {});

// -- Faces --------------------------------------------------------------------

/// Class templates as signed offsets from mid-gray. A valence pattern carries
/// most of the class signal and an arousal pattern a weaker share.
struct FaceTemplates {
    std::array<Image, 4> offsets;
    Real rms = 0.0;  // RMS of one template's offset

    int width() const { return static_cast<int>(offsets[0].cols()); }
    int height() const { return static_cast<int>(offsets[0].rows()); }
};

inline constexpr Real kTemplateGray = 128.0;

FaceTemplates make_face_templates(int width, int height, std::uint64_t seed,
                                  Real arousal_weight = 0.25, Real amplitude = 24.0);

/// Smooth zero-mean pattern with unit RMS (low-order cosine basis).
Image smooth_pattern(int width, int height, std::uint64_t seed);

/// Frames of one class: template + `nuisance` + Gaussian pixel noise with
/// sigma = rms / facial_snr, clamped to [0, 255]. facial_snr = 0 emits pure
/// noise around mid-gray with sigma = rms; an infinite SNR emits no noise.
FrameSequence synth_frames(const FaceTemplates& templates, int class_id, std::size_t n_frames,
                           Real rate_hz, Real facial_snr, std::uint64_t seed,
                           const Image& nuisance = {});

// -- Sessions -----------------------------------------------------------------

struct SynthSpec {
    std::uint64_t seed = 0;
    int n_trials = kTrialsPerSession;
    Real trial_s = kTrialDurationS;
    Real physio_rate_hz = kPhysioRateHz;
    Real frame_rate_hz = kFrameRateHz;
    int frame_width = 32;
    int frame_height = 32;
    Real facial_snr = 1.0;
    Real physio_snr = 20.0;
    std::array<ClassProfile, 4> profiles = reference_profiles();

    // Trial-to-trial variability that carries no label information.
    Real face_arousal_weight = 0.25;
    Real facial_nuisance = 0.6;  // RMS of a per-trial smooth field, relative to template RMS
    Real heart_rate_jitter_bpm = 3.0;
    Real hrv_depth_jitter = 0.3;  // log-normal sigma of the per-trial modulation depth
    Real interval_jitter_ms = 8.0;
    Real scr_amplitude_jitter = 0.3;
};

/// Throws InvalidArgument when the settings cannot be generated.
void validate(const SynthSpec& spec);

struct TrialTruth {
    std::string trial_id;
    EmotionLabel label;
    int template_id = 0;
    std::vector<Real> intervals_ms;
    std::vector<PlantedScr> scrs;
};

struct GroundTruth {
    std::uint64_t seed = 0;
    std::vector<TrialTruth> trials;
};

struct SynthSession {
    SessionDataset dataset;
    GroundTruth truth;
};

/// Balanced session in a seeded counterbalanced order.
SynthSession synth_session(const SynthSpec& spec);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path);

}  // namespace emoglass::synth

#endif  // EMOGLASS_SYNTH_HPP
