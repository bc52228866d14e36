#include "emoglass/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace emoglass::synth {

namespace {

constexpr Real kTwoPi = 2.0 * std::numbers::pi;

// Seed stages.
constexpr std::uint64_t kStageOrder = 1;
constexpr std::uint64_t kStageTemplates = 2;
constexpr std::uint64_t kStageTrial = 3;

// PPG pulse: raised-cosine upstroke, Gaussian-like shoulder, exponential tail.
constexpr Real kPulseRiseS = 0.12;
constexpr Real kPulseShoulderS = 0.15;
constexpr Real kPulseDecayS = 0.3;

Real pulse_shape(Real tau) {
    if (tau < -kPulseRiseS) return 0.0;
    if (tau <= 0.0) return 0.5 * (1.0 - std::cos(std::numbers::pi * (tau + kPulseRiseS) / kPulseRiseS));
    const Real u = tau / kPulseShoulderS;
    return std::exp(-(kPulseShoulderS / kPulseDecayS) * (std::sqrt(1.0 + u * u) - 1.0));
}

Real rms_about_mean(const Vector& x) {
    if (x.size() == 0) return 0.0;
    return std::sqrt((x.array() - x.mean()).square().mean());
}

void add_noise(Vector& x, Real snr, std::mt19937_64& rng) {
    if (!(snr < kInfiniteSnr)) return;
    if (!(snr > 0.0)) throw InvalidArgument("physiological SNR must be positive");
    const Real sigma = rms_about_mean(x) / snr;
    std::normal_distribution<Real> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += noise(rng);
}

Eigen::Index sample_count(Real duration_s, Real rate_hz) {
    if (!(duration_s > 0.0) || !(rate_hz > 0.0)) {
        throw InvalidArgument("duration and rate must be positive");
    }
    return static_cast<Eigen::Index>(std::llround(duration_s * rate_hz));
}

SynthPpg render_ppg(std::vector<Real> beats, Real duration_s, Real rate_hz, Real gain) {
    const Eigen::Index n = sample_count(duration_s, rate_hz);
    Vector x = Vector::Zero(n);
    const Real tail_s = 12.0 * kPulseDecayS;
    for (Real beat : beats) {
        const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((beat - kPulseRiseS) * rate_hz)));
        const auto last = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(std::ceil((beat + tail_s) * rate_hz)));
        for (Eigen::Index i = first; i <= last; ++i) {
            x(i) += gain * pulse_shape(static_cast<Real>(i) / rate_hz - beat);
        }
    }
    SynthPpg out{SampleSeries(Channel::PPG, rate_hz, std::move(x)), std::move(beats), {}};
    for (std::size_t k = 1; k < out.beat_times_s.size(); ++k) {
        out.intervals_ms.push_back(1000.0 * (out.beat_times_s[k] - out.beat_times_s[k - 1]));
    }
    return out;
}

Vector tonic(Eigen::Index n, Real rate_hz, const EdaSynthOptions& options) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Real t = static_cast<Real>(i) / rate_hz;
        x(i) = options.tonic_level_uS + options.tonic_slope_uS_per_s * t +
               options.tonic_wave_uS * std::sin(kTwoPi * 0.005 * t);
    }
    return x;
}

Real bateman_raw(Real t) {
    return t <= 0.0 ? 0.0 : std::exp(-t / kScrTau2S) - std::exp(-t / kScrTau1S);
}

}  // namespace

std::array<ClassProfile, 4> reference_profiles() {
    // HAHV, HALV, LALV, LAHV
    return {ClassProfile{86.0, 33.0, 0.1, 6.0, 0.25}, ClassProfile{86.0, 27.0, 0.1, 6.0, 0.25},
            ClassProfile{68.0, 27.0, 0.1, 2.0, 0.08}, ClassProfile{68.0, 33.0, 0.1, 2.0, 0.08}};
}

// -- PPG ------------------------------------------------------------------------

SynthPpg synth_ppg(const ClassProfile& profile, Real duration_s, Real rate_hz, std::uint64_t seed,
                   const PpgSynthOptions& options) {
    if (!(profile.heart_rate_bpm >= 40.0 && profile.heart_rate_bpm <= 180.0)) {
        throw InvalidArgument("heart rate must lie in [40, 180] bpm");
    }
    if (!(profile.hrv_depth_ms >= 0.0) || !(profile.hrv_freq_hz >= 0.0)) {
        throw InvalidArgument("HRV modulation must be non-negative");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> jitter(0.0, 1.0);
    const Real base_ms = 60000.0 / profile.heart_rate_bpm;
    std::vector<Real> beats;
    for (Real t = options.first_beat_s; t < duration_s;) {
        beats.push_back(t);
        Real interval = base_ms + profile.hrv_depth_ms * std::sin(kTwoPi * profile.hrv_freq_hz * t);
        if (options.interval_jitter_ms > 0.0) interval += options.interval_jitter_ms * jitter(rng);
        t += std::max(interval, 300.0) / 1000.0;
    }
    SynthPpg out = render_ppg(std::move(beats), duration_s, rate_hz, options.gain);
    Vector x = out.series.samples();
    add_noise(x, options.snr, rng);
    out.series = out.series.with_samples(std::move(x));
    return out;
}

SynthPpg synth_ppg_from_intervals(std::vector<Real> intervals_ms, Real duration_s, Real rate_hz,
                                  Real first_beat_s) {
    if (intervals_ms.empty()) throw InvalidArgument("no intervals to plant");
    for (Real v : intervals_ms) {
        if (!(v > 0.0)) throw InvalidArgument("planted intervals must be positive");
    }
    std::vector<Real> beats;
    std::size_t k = 0;
    for (Real t = first_beat_s; t < duration_s; ++k) {
        beats.push_back(t);
        t += intervals_ms[std::min(k, intervals_ms.size() - 1)] / 1000.0;
    }
    return render_ppg(std::move(beats), duration_s, rate_hz, 1.0);
}

// -- EDA ------------------------------------------------------------------------

Real bateman_rise_s() {
    return std::log(kScrTau2S / kScrTau1S) * kScrTau1S * kScrTau2S / (kScrTau2S - kScrTau1S);
}

Real bateman_unit(Real t_s) {
    static const Real peak = bateman_raw(bateman_rise_s());
    return bateman_raw(t_s) / peak;
}

Real bateman_half_recovery_s() {
    Real lo = bateman_rise_s();
    Real hi = lo + 20.0 * kScrTau2S;
    for (int i = 0; i < 200; ++i) {
        const Real mid = 0.5 * (lo + hi);
        (bateman_unit(mid) > 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) - bateman_rise_s();
}

SynthEda synth_eda_events(const std::vector<PlantedScr>& planted, Real duration_s, Real rate_hz,
                          const EdaSynthOptions& options) {
    const Eigen::Index n = sample_count(duration_s, rate_hz);
    Vector x = tonic(n, rate_hz, options);
    SynthEda out{SampleSeries(Channel::EDA, rate_hz, Vector::Zero(1)), {}};
    for (PlantedScr event : planted) {
        if (!(event.amplitude_uS > 0.0)) throw InvalidArgument("SCR amplitude must be positive");
        const auto first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(event.onset_s * rate_hz)));
        for (Eigen::Index i = first; i < n; ++i) {
            x(i) += event.amplitude_uS * bateman_unit(static_cast<Real>(i) / rate_hz - event.onset_s);
        }
        event.peak_s = event.onset_s + bateman_rise_s();
        event.half_recovery_s = bateman_half_recovery_s();
        out.events.push_back(event);
    }
    std::sort(out.events.begin(), out.events.end(),
              [](const PlantedScr& a, const PlantedScr& b) { return a.onset_s < b.onset_s; });
    out.series = SampleSeries(Channel::EDA, rate_hz, std::move(x));
    return out;
}

SynthEda synth_eda(const ClassProfile& profile, Real duration_s, Real rate_hz, std::uint64_t seed,
                   const EdaSynthOptions& options) {
    if (!(profile.scr_rate_per_min >= 0.0)) throw InvalidArgument("SCR rate must be non-negative");
    std::mt19937_64 rng(seed);
    std::vector<PlantedScr> planted;
    if (profile.scr_rate_per_min > 0.0) {
        const Real mean_gap = 60.0 / profile.scr_rate_per_min;
        const Real free_gap = std::max(mean_gap - options.min_spacing_s, 1e-3);
        std::exponential_distribution<Real> gap(1.0 / free_gap);
        std::normal_distribution<Real> log_amp(0.0, 1.0);
        for (Real t = gap(rng); t < duration_s; t += options.min_spacing_s + gap(rng)) {
            Real amplitude = profile.scr_amplitude_uS;
            if (options.amplitude_jitter > 0.0) amplitude *= std::exp(options.amplitude_jitter * log_amp(rng));
            planted.push_back(PlantedScr{t, amplitude, 0.0, 0.0});
        }
    }
    SynthEda out = synth_eda_events(planted, duration_s, rate_hz, options);
    Vector x = out.series.samples();
    add_noise(x, options.snr, rng);
    out.series = out.series.with_samples(std::move(x));
    return out;
}

// -- Faces ----------------------------------------------------------------------

Image smooth_pattern(int width, int height, std::uint64_t seed) {
    if (width <= 0 || height <= 0) throw InvalidArgument("pattern dimensions must be positive");
    constexpr int kOrder = 4;
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> coef(0.0, 1.0);
    Image img = Image::Zero(height, width);
    for (int u = 0; u < kOrder; ++u) {
        for (int v = 0; v < kOrder; ++v) {
            if (u == 0 && v == 0) continue;
            const Real c = coef(rng) / (1.0 + u + v);
            for (int r = 0; r < height; ++r) {
                const Real cy = std::cos(std::numbers::pi * v * (r + 0.5) / height);
                for (int col = 0; col < width; ++col) {
                    img(r, col) += c * cy * std::cos(std::numbers::pi * u * (col + 0.5) / width);
                }
            }
        }
    }
    img.array() -= img.mean();
    const Real rms = std::sqrt(img.array().square().mean());
    if (rms > 0.0) img /= rms;
    return img;
}

FaceTemplates make_face_templates(int width, int height, std::uint64_t seed, Real arousal_weight,
                                  Real amplitude) {
    const Image valence = smooth_pattern(width, height, derive_seed(seed, 1));
    const Image arousal = smooth_pattern(width, height, derive_seed(seed, 2));
    FaceTemplates t;
    Real sum_sq = 0.0;
    for (Quadrant q : kQuadrants) {
        const EmotionLabel label{q};
        const Real sv = label.high_valence() ? 1.0 : -1.0;
        const Real sa = label.high_arousal() ? 1.0 : -1.0;
        Image& img = t.offsets[static_cast<std::size_t>(label.index())];
        img = amplitude * (sv * valence + arousal_weight * sa * arousal);
        sum_sq += img.array().square().mean();
    }
    t.rms = std::sqrt(sum_sq / 4.0);
    return t;
}

FrameSequence synth_frames(const FaceTemplates& templates, int class_id, std::size_t n_frames,
                           Real rate_hz, Real facial_snr, std::uint64_t seed, const Image& nuisance) {
    if (class_id < 0 || class_id > 3) throw InvalidArgument("class id must lie in 0..3");
    if (!(facial_snr >= 0.0)) throw InvalidArgument("facial SNR must be non-negative");
    const int w = templates.width();
    const int h = templates.height();
    if (nuisance.size() != 0 && (nuisance.cols() != w || nuisance.rows() != h)) {
        throw InvalidArgument("nuisance field dimension mismatch");
    }

    Image base = Image::Constant(h, w, kTemplateGray);
    Real sigma = 0.0;
    if (facial_snr == 0.0) {
        sigma = templates.rms;
    } else {
        base += templates.offsets[static_cast<std::size_t>(class_id)];
        if (nuisance.size() != 0) base += nuisance;
        if (facial_snr < kInfiniteSnr) sigma = templates.rms / facial_snr;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> noise(0.0, 1.0);
    std::vector<Frame> frames;
    frames.reserve(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        Frame frame(h, w);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                Real v = base(r, c);
                if (sigma > 0.0) v += sigma * noise(rng);
                frame(r, c) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
            }
        }
        frames.push_back(std::move(frame));
    }
    return FrameSequence(w, h, rate_hz, std::move(frames));
}

// -- Sessions -------------------------------------------------------------------

void validate(const SynthSpec& spec) {
    if (spec.n_trials <= 0 || spec.n_trials % 4 != 0) {
        throw InvalidArgument("number of trials must be a positive multiple of 4, got " +
                              std::to_string(spec.n_trials));
    }
    if (!(spec.trial_s > 0.0) || !(spec.physio_rate_hz > 0.0) || !(spec.frame_rate_hz > 0.0)) {
        throw InvalidArgument("durations and rates must be positive");
    }
    if (spec.frame_width <= 0 || spec.frame_height <= 0) {
        throw InvalidArgument("frame dimensions must be positive");
    }
    if (!std::isfinite(spec.facial_snr) || spec.facial_snr < 0.0 || !std::isfinite(spec.physio_snr) ||
        !(spec.physio_snr > 0.0)) {
        throw InvalidArgument("SNRs must be finite (facial >= 0, physiological > 0)");
    }
    for (const ClassProfile& p : spec.profiles) {
        if (!(p.heart_rate_bpm >= 40.0 && p.heart_rate_bpm <= 180.0)) {
            throw InvalidArgument("heart rate must lie in [40, 180] bpm");
        }
        if (!(p.scr_rate_per_min >= 0.0) || !(p.scr_amplitude_uS > 0.0) || !(p.hrv_depth_ms >= 0.0)) {
            throw InvalidArgument("invalid physiological profile");
        }
    }
}

SynthSession synth_session(const SynthSpec& spec) {
    validate(spec);
    std::vector<Quadrant> order;
    for (int i = 0; i < spec.n_trials; ++i) order.push_back(kQuadrants[static_cast<std::size_t>(i % 4)]);
    std::mt19937_64 order_rng(derive_seed(spec.seed, kStageOrder));
    std::shuffle(order.begin(), order.end(), order_rng);

    const FaceTemplates templates = make_face_templates(
        spec.frame_width, spec.frame_height, derive_seed(spec.seed, kStageTemplates),
        spec.face_arousal_weight);
    const auto n_frames = static_cast<std::size_t>(std::llround(spec.trial_s * spec.frame_rate_hz));

    SynthSession out;
    out.dataset.subject_id = "synth-" + std::to_string(spec.seed);
    out.truth.seed = spec.seed;
    for (int i = 0; i < spec.n_trials; ++i) {
        const EmotionLabel label{order[static_cast<std::size_t>(i)]};
        const std::uint64_t trial_seed = derive_seed(spec.seed, kStageTrial, static_cast<std::uint64_t>(i));
        std::mt19937_64 rng(trial_seed);
        std::uniform_real_distribution<Real> unit(0.0, 1.0);
        std::normal_distribution<Real> normal(0.0, 1.0);

        ClassProfile profile = spec.profiles[static_cast<std::size_t>(label.index())];
        profile.heart_rate_bpm = std::clamp(profile.heart_rate_bpm + spec.heart_rate_jitter_bpm * normal(rng), 40.0, 180.0);
        profile.hrv_depth_ms *= std::exp(spec.hrv_depth_jitter * normal(rng));

        PpgSynthOptions ppg_options;
        ppg_options.first_beat_s = 0.2 + 0.6 * unit(rng);
        ppg_options.interval_jitter_ms = spec.interval_jitter_ms;
        ppg_options.gain = 0.5 + 1.5 * unit(rng);
        ppg_options.snr = spec.physio_snr;

        EdaSynthOptions eda_options;
        eda_options.tonic_level_uS = 2.0 + 6.0 * unit(rng);
        eda_options.tonic_slope_uS_per_s = 0.004 * (unit(rng) - 0.5);
        eda_options.amplitude_jitter = spec.scr_amplitude_jitter;
        eda_options.snr = spec.physio_snr;

        Image nuisance;
        if (spec.facial_nuisance > 0.0) {
            nuisance = spec.facial_nuisance * templates.rms *
                       smooth_pattern(spec.frame_width, spec.frame_height, derive_seed(trial_seed, 4));
        }

        SynthPpg ppg = synth_ppg(profile, spec.trial_s, spec.physio_rate_hz, derive_seed(trial_seed, 1), ppg_options);
        SynthEda eda = synth_eda(profile, spec.trial_s, spec.physio_rate_hz, derive_seed(trial_seed, 2), eda_options);
        FrameSequence frames = synth_frames(templates, label.index(), n_frames, spec.frame_rate_hz,
                                            spec.facial_snr, derive_seed(trial_seed, 3), nuisance);

        char id[16];
        std::snprintf(id, sizeof id, "t%02d", i + 1);
        out.truth.trials.push_back(TrialTruth{id, label, label.index(), ppg.intervals_ms, eda.events});
        out.dataset.trials.push_back(TrialRecord{id, out.dataset.subject_id, std::move(eda.series),
                                                 std::move(ppg.series), std::move(frames), label});
    }
    emoglass::validate(out.dataset);
    return out;
}

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["seed"] = truth.seed;
    doc["scr_tau1_s"] = kScrTau1S;
    doc["scr_tau2_s"] = kScrTau2S;
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialTruth& t : truth.trials) {
        nlohmann::json scrs = nlohmann::json::array();
        for (const PlantedScr& s : t.scrs) {
            scrs.push_back({{"onset_s", s.onset_s},
                            {"amplitude_uS", s.amplitude_uS},
                            {"peak_s", s.peak_s},
                            {"half_recovery_s", s.half_recovery_s}});
        }
        trials.push_back({{"trial_id", t.trial_id},
                          {"label", std::string(to_string(t.label))},
                          {"template_id", t.template_id},
                          {"intervals_ms", t.intervals_ms},
                          {"scrs", scrs}});
    }
    doc["trials"] = std::move(trials);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(1) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace emoglass::synth
