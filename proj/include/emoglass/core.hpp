#ifndef EMOGLASS_CORE_HPP
#define EMOGLASS_CORE_HPP

#include "emoglass/types.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emoglass {

// Recording protocol defaults.
inline constexpr Real kPhysioRateHz = 200.0;
inline constexpr Real kFrameRateHz = 5.0;
inline constexpr Real kTrialDurationS = 120.0;
inline constexpr int kTrialsPerSession = 32;

/// Child seed for (stage, index) from a master seed (splitmix64 mixing), so
/// every stage draws an independent stream regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t index = 0);

enum class Channel { EDA, PPG };

std::string_view to_string(Channel channel);

/// Uniformly sampled physiological channel. Immutable once constructed.
class SampleSeries {
public:
    SampleSeries(Channel channel, Real rate_hz, Vector samples, Real start_time_s = 0.0);

    Channel channel() const noexcept { return channel_; }
    Real rate_hz() const noexcept { return rate_hz_; }
    Real start_time_s() const noexcept { return start_time_s_; }
    const Vector& samples() const noexcept { return samples_; }
    Eigen::Index size() const noexcept { return samples_.size(); }
    Real duration_s() const noexcept { return static_cast<Real>(samples_.size()) / rate_hz_; }

    /// Same channel, rate and start time with new sample values.
    SampleSeries with_samples(Vector samples) const;

private:
    Channel channel_;
    Real rate_hz_;
    Vector samples_;
    Real start_time_s_;
};

/// Fixed-rate grayscale frames of uniform size. Slices share the frame storage.
class FrameSequence {
public:
    FrameSequence(int width, int height, Real rate_hz, std::vector<Frame> frames,
                  Real start_time_s = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    Real rate_hz() const noexcept { return rate_hz_; }
    Real start_time_s() const noexcept { return start_time_s_; }
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    Real duration_s() const noexcept { return static_cast<Real>(count_) / rate_hz_; }
    /// Indices past the stored frames clamp to the last one (trailing padding).
    const Frame& operator[](std::size_t i) const {
        return (*frames_)[std::min(first_ + i, frames_->size() - 1)];
    }

    /// Frames [first, first + count), sharing storage with this sequence.
    FrameSequence slice(std::size_t first, std::size_t count) const;

private:
    int width_;
    int height_;
    Real rate_hz_;
    Real start_time_s_;
    std::shared_ptr<const std::vector<Frame>> frames_;
    std::size_t first_ = 0;
    std::size_t count_ = 0;
};

/// Arousal-valence quadrant, declared in canonical class order.
enum class Quadrant { HAHV = 0, HALV = 1, LALV = 2, LAHV = 3 };

inline constexpr std::array<Quadrant, 4> kQuadrants{Quadrant::HAHV, Quadrant::HALV,
                                                    Quadrant::LALV, Quadrant::LAHV};

struct EmotionLabel {
    Quadrant quadrant = Quadrant::HAHV;

    bool high_arousal() const noexcept {
        return quadrant == Quadrant::HAHV || quadrant == Quadrant::HALV;
    }
    bool high_valence() const noexcept {
        return quadrant == Quadrant::HAHV || quadrant == Quadrant::LAHV;
    }
    int index() const noexcept { return static_cast<int>(quadrant); }

    friend bool operator==(const EmotionLabel&, const EmotionLabel&) = default;
};

std::string_view to_string(Quadrant quadrant);
inline std::string_view to_string(EmotionLabel label) { return to_string(label.quadrant); }
/// Throws FormatError on an unknown token.
EmotionLabel parse_label(std::string_view token);

struct TrialRecord {
    std::string trial_id;
    std::string subject_id;
    SampleSeries eda;
    SampleSeries ppg;
    FrameSequence frames;
    EmotionLabel label;

    /// Length of the physiological recording.
    Real duration_s() const noexcept { return eda.duration_s(); }
};

/// Throws InvalidArgument when channels are swapped or the streams disagree in length.
void validate(const TrialRecord& trial);

struct ObservationWindow {
    std::string trial_id;
    Real offset_s = 0.0;
    Real length_s = 0.0;
    SampleSeries eda_slice;
    SampleSeries ppg_slice;
    FrameSequence frame_slice;
    EmotionLabel label;
};

struct SessionDataset {
    std::string subject_id;
    std::vector<TrialRecord> trials;
};

/// Throws InvalidArgument on duplicate trial ids or an invalid trial.
void validate(const SessionDataset& dataset);

struct WindowingOptions {
    Real length_s = 100.0;
    Real stride_s = 6.0;
    int count = 3;
};

/// Signal slice [offset, offset + length) as round(length * rate) samples.
/// A single missing trailing sample is padded with the last value.
SampleSeries slice_series(const SampleSeries& series, Real offset_s, Real length_s);

/// Observation windows at offsets 0, stride, 2 * stride, ...
std::vector<ObservationWindow> slice_windows(const TrialRecord& trial,
                                             const WindowingOptions& options = {});

/// Pixelwise mean over every frame of the window.
Image average_frame(const ObservationWindow& window);
Image average_frame(const FrameSequence& frames);

}  // namespace emoglass

#endif  // EMOGLASS_CORE_HPP
