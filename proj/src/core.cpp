#include "emoglass/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace emoglass {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stage) ^ index);
}

std::string_view to_string(Channel channel) {
    return channel == Channel::EDA ? "EDA" : "PPG";
}

SampleSeries::SampleSeries(Channel channel, Real rate_hz, Vector samples, Real start_time_s)
    : channel_(channel), rate_hz_(rate_hz), samples_(std::move(samples)),
      start_time_s_(start_time_s) {
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
        throw InvalidArgument("sample rate must be positive");
    }
    if (!samples_.allFinite()) {
        throw InvalidArgument(std::string(to_string(channel_)) + " series has non-finite samples");
    }
}

SampleSeries SampleSeries::with_samples(Vector samples) const {
    return SampleSeries(channel_, rate_hz_, std::move(samples), start_time_s_);
}

FrameSequence::FrameSequence(int width, int height, Real rate_hz, std::vector<Frame> frames,
                             Real start_time_s)
    : width_(width), height_(height), rate_hz_(rate_hz), start_time_s_(start_time_s),
      frames_(std::make_shared<const std::vector<Frame>>(std::move(frames))),
      count_(frames_->size()) {
    if (width_ <= 0 || height_ <= 0) {
        throw InvalidArgument("frame dimensions must be positive");
    }
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
        throw InvalidArgument("frame rate must be positive");
    }
    for (std::size_t i = 0; i < frames_->size(); ++i) {
        const Frame& f = (*frames_)[i];
        if (f.cols() != width_ || f.rows() != height_) {
            std::ostringstream msg;
            msg << "frame dimension mismatch at frame " << i << ": expected " << width_ << "x"
                << height_ << ", got " << f.cols() << "x" << f.rows();
            throw InvalidArgument(msg.str());
        }
    }
}

FrameSequence FrameSequence::slice(std::size_t first, std::size_t count) const {
    FrameSequence out = *this;
    out.first_ = first_ + first;
    out.count_ = count;
    out.start_time_s_ = start_time_s_ + static_cast<Real>(first) / rate_hz_;
    return out;
}

std::string_view to_string(Quadrant quadrant) {
    switch (quadrant) {
    case Quadrant::HAHV: return "HAHV";
    case Quadrant::HALV: return "HALV";
    case Quadrant::LALV: return "LALV";
    case Quadrant::LAHV: return "LAHV";
    }
    return "?";
}

EmotionLabel parse_label(std::string_view token) {
    for (Quadrant q : kQuadrants) {
        if (to_string(q) == token) return EmotionLabel{q};
    }
    throw FormatError("unknown label token '" + std::string(token) + "'");
}

void validate(const TrialRecord& trial) {
    if (trial.eda.channel() != Channel::EDA || trial.ppg.channel() != Channel::PPG) {
        throw InvalidArgument("trial " + trial.trial_id + ": channel tags do not match");
    }
    const Real duration = trial.duration_s();
    const Real ppg_tol = 1.0 / trial.ppg.rate_hz() + 1.0 / trial.eda.rate_hz();
    if (std::abs(trial.ppg.duration_s() - duration) > ppg_tol) {
        throw InvalidArgument("trial " + trial.trial_id + ": PPG and EDA durations differ");
    }
    const Real frame_tol = 1.0 / trial.frames.rate_hz() + 1.0 / trial.eda.rate_hz();
    if (std::abs(trial.frames.duration_s() - duration) > frame_tol) {
        throw InvalidArgument("trial " + trial.trial_id +
                              ": frame sequence does not cover the trial duration");
    }
}

void validate(const SessionDataset& dataset) {
    std::set<std::string> ids;
    for (const TrialRecord& trial : dataset.trials) {
        if (!ids.insert(trial.trial_id).second) {
            throw InvalidArgument("duplicate trial id '" + trial.trial_id + "'");
        }
        validate(trial);
    }
}

namespace {

Eigen::Index rounded_count(Real seconds, Real rate_hz) {
    return static_cast<Eigen::Index>(std::llround(seconds * rate_hz));
}

}  // namespace

SampleSeries slice_series(const SampleSeries& series, Real offset_s, Real length_s) {
    if (offset_s < 0.0 || !(length_s > 0.0)) {
        throw InvalidArgument("slice offset must be >= 0 and length > 0");
    }
    const Eigen::Index first = rounded_count(offset_s, series.rate_hz());
    const Eigen::Index count = rounded_count(length_s, series.rate_hz());
    const Eigen::Index available = std::max<Eigen::Index>(series.size() - first, 0);
    const Eigen::Index shortfall = count - std::min(count, available);
    if (shortfall > 1 || available == 0) {
        std::ostringstream msg;
        msg << to_string(series.channel()) << " slice at offset " << offset_s << " s exceeds "
            << series.duration_s() << " s recording";
        throw InvalidArgument(msg.str());
    }
    Vector out(count);
    out.head(count - shortfall) = series.samples().segment(first, count - shortfall);
    if (shortfall == 1) out(count - 1) = series.samples()(series.size() - 1);
    return SampleSeries(series.channel(), series.rate_hz(), std::move(out),
                        series.start_time_s() + static_cast<Real>(first) / series.rate_hz());
}

std::vector<ObservationWindow> slice_windows(const TrialRecord& trial,
                                             const WindowingOptions& options) {
    if (!(options.length_s > 0.0) || options.stride_s < 0.0 || options.count < 1) {
        throw InvalidArgument("window length must be > 0, stride >= 0 and count >= 1");
    }
    const Real duration = trial.duration_s();
    const Real tolerance = 1.0 / trial.eda.rate_hz();
    std::vector<ObservationWindow> windows;
    windows.reserve(static_cast<std::size_t>(options.count));
    for (int i = 0; i < options.count; ++i) {
        const Real offset = i * options.stride_s;
        if (offset + options.length_s > duration + tolerance) {
            std::ostringstream msg;
            msg << "trial " << trial.trial_id << ": window at offset " << offset << " s (length "
                << options.length_s << " s) exceeds trial duration " << duration << " s";
            throw InvalidArgument(msg.str());
        }
        const auto frame_first =
            static_cast<std::size_t>(rounded_count(offset, trial.frames.rate_hz()));
        const auto frame_count =
            static_cast<std::size_t>(rounded_count(options.length_s, trial.frames.rate_hz()));
        if (frame_first + frame_count > trial.frames.size() + 1 ||
            frame_first >= trial.frames.size()) {
            std::ostringstream msg;
            msg << "trial " << trial.trial_id << ": frames do not cover window at offset "
                << offset << " s";
            throw InvalidArgument(msg.str());
        }
        windows.push_back(ObservationWindow{
            trial.trial_id, offset, options.length_s,
            slice_series(trial.eda, offset, options.length_s),
            slice_series(trial.ppg, offset, options.length_s),
            trial.frames.slice(frame_first, frame_count), trial.label});
    }
    return windows;
}

Image average_frame(const FrameSequence& frames) {
    if (frames.empty()) throw InvalidArgument("cannot average an empty frame slice");
    // Integer accumulation makes the mean independent of frame order.
    Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sum =
        Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
            frames.height(), frames.width());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        sum += frames[i].cast<std::uint64_t>();
    }
    return sum.cast<Real>() / static_cast<Real>(frames.size());
}

Image average_frame(const ObservationWindow& window) { return average_frame(window.frame_slice); }

}  // namespace emoglass
