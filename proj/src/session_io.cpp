#include "emoglass/session_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace emoglass {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string format_real(Real value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw FormatError("cannot format value");
    return std::string(buf, end);
}

namespace {

void require_file(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("missing file: " + path.string());
}

Real parse_real(std::string_view text, const fs::path& path, std::size_t line) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    Real value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" +
                          std::string(text) + "'");
    }
    return value;
}

// Skips whitespace and '#' comments in a PGM header.
void skip_pgm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string discard;
            std::getline(in, discard);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

int read_pgm_int(std::istream& in, const fs::path& path) {
    skip_pgm_space(in);
    int value = -1;
    if (!(in >> value)) throw FormatError(path.string() + ": malformed PGM header");
    return value;
}

SampleSeries read_signal(const fs::path& path, Channel channel, std::optional<Real> declared) {
    SampleSeries series = read_signal_csv(path, channel);
    if (declared) {
        if (std::abs(series.rate_hz() - *declared) > 1e-3 * *declared) {
            std::ostringstream msg;
            msg << "rate mismatch: " << path.string() << " is sampled at " << series.rate_hz()
                << " Hz but the manifest declares " << *declared << " Hz";
            throw FormatError(msg.str());
        }
        return SampleSeries(channel, *declared, series.samples(), series.start_time_s());
    }
    return series;
}

std::string frame_name(std::size_t index) {
    std::ostringstream name;
    name << "frame_" << std::setw(6) << std::setfill('0') << index << ".pgm";
    return name.str();
}

}  // namespace

SampleSeries read_signal_csv(const fs::path& path, Channel channel) {
    require_file(path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty signal file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time_s,value") {
        throw FormatError(path.string() + ": expected header 'time_s,value'");
    }
    std::vector<Real> times;
    std::vector<Real> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": missing ','");
        }
        const Real t = parse_real(std::string_view(line).substr(0, comma), path, line_no);
        const Real v = parse_real(std::string_view(line).substr(comma + 1), path, line_no);
        if (!times.empty() && !(t > times.back())) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": time is not monotonically increasing");
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) throw FormatError(path.string() + ": fewer than 2 samples");

    const Real span = times.back() - times.front();
    const Real step = span / static_cast<Real>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - step) > 0.01 * step) {
            throw FormatError(path.string() + ": non-uniform sampling near row " +
                              std::to_string(i + 1));
        }
    }
    // Round the inferred rate to 9 significant digits to absorb decimal time stamps.
    const Real raw_rate = 1.0 / step;
    const Real scale = std::pow(10.0, 8 - std::floor(std::log10(raw_rate)));
    const Real rate = std::round(raw_rate * scale) / scale;
    return SampleSeries(channel, rate, Eigen::Map<const Vector>(values.data(),
                                                                static_cast<Eigen::Index>(values.size())),
                        times.front());
}

void write_signal_csv(const SampleSeries& series, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "time_s,value\n";
    const Vector& x = series.samples();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out << format_real(series.start_time_s() + static_cast<Real>(i) / series.rate_hz()) << ','
            << format_real(x(i)) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Frame read_pgm(const fs::path& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5') throw FormatError(path.string() + ": not a P5 PGM");
    const int width = read_pgm_int(in, path);
    const int height = read_pgm_int(in, path);
    const int maxval = read_pgm_int(in, path);
    if (width <= 0 || height <= 0) throw FormatError(path.string() + ": bad PGM dimensions");
    if (maxval != 255) throw FormatError(path.string() + ": only 8-bit PGM is supported");
    in.get();  // single whitespace before the raster
    Frame frame(height, width);
    in.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    if (in.gcount() != static_cast<std::streamsize>(frame.size())) {
        throw FormatError(path.string() + ": truncated PGM raster");
    }
    return frame;
}

void write_pgm(const Frame& frame, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

FrameSequence read_frame_dir(const fs::path& dir, Real rate_hz) {
    if (!fs::is_directory(dir)) throw IoError("missing file: frames directory " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) throw FormatError("no PGM frames in " + dir.string());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    std::vector<Frame> frames;
    frames.reserve(files.size());
    for (const fs::path& file : files) {
        frames.push_back(read_pgm(file));
        if (frames.back().rows() != frames.front().rows() ||
            frames.back().cols() != frames.front().cols()) {
            throw FormatError("frame dimension mismatch: " + file.string());
        }
    }
    const int width = static_cast<int>(frames.front().cols());
    const int height = static_cast<int>(frames.front().rows());
    return FrameSequence(width, height, rate_hz, std::move(frames));
}

SessionDataset load_session(const fs::path& manifest_path) {
    require_file(manifest_path);
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const std::string& rel) { return base / fs::path(rel); };

    SessionDataset dataset;
    try {
        dataset.subject_id = doc.at("subject_id").get<std::string>();
        std::optional<Real> session_rate;
        if (doc.contains("physio_rate_hz")) session_rate = doc["physio_rate_hz"].get<Real>();
        for (const json& t : doc.at("trials")) {
            std::optional<Real> rate = session_rate;
            if (t.contains("physio_rate_hz")) rate = t["physio_rate_hz"].get<Real>();
            const auto trial_id = t.at("trial_id").get<std::string>();
            const EmotionLabel label = parse_label(t.at("label").get<std::string>());
            SampleSeries eda = read_signal(resolve(t.at("eda_csv").get<std::string>()),
                                           Channel::EDA, rate);
            SampleSeries ppg = read_signal(resolve(t.at("ppg_csv").get<std::string>()),
                                           Channel::PPG, rate);
            FrameSequence frames = read_frame_dir(resolve(t.at("frames_dir").get<std::string>()),
                                                  t.at("frame_rate_hz").get<Real>());
            if (t.contains("frame_width") &&
                (t["frame_width"].get<int>() != frames.width() ||
                 t["frame_height"].get<int>() != frames.height())) {
                throw FormatError("trial " + trial_id + ": frame dimension mismatch with manifest");
            }
            dataset.trials.push_back(TrialRecord{trial_id, dataset.subject_id, std::move(eda),
                                                 std::move(ppg), std::move(frames), label});
        }
    } catch (const json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }
    validate(dataset);
    return dataset;
}

fs::path save_session(const SessionDataset& dataset, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());

    json manifest;
    manifest["subject_id"] = dataset.subject_id;
    manifest["trials"] = json::array();
    for (const TrialRecord& trial : dataset.trials) {
        const std::string eda_name = trial.trial_id + "_eda.csv";
        const std::string ppg_name = trial.trial_id + "_ppg.csv";
        const std::string frames_name = trial.trial_id + "_frames";
        write_signal_csv(trial.eda, dir / eda_name);
        write_signal_csv(trial.ppg, dir / ppg_name);
        const fs::path frame_dir = dir / frames_name;
        fs::create_directories(frame_dir, ec);
        if (ec) throw IoError("cannot create directory " + frame_dir.string());
        for (std::size_t i = 0; i < trial.frames.size(); ++i) {
            write_pgm(trial.frames[i], frame_dir / frame_name(i));
        }
        manifest["trials"].push_back({{"trial_id", trial.trial_id},
                                      {"label", std::string(to_string(trial.label))},
                                      {"eda_csv", eda_name},
                                      {"ppg_csv", ppg_name},
                                      {"frames_dir", frames_name},
                                      {"frame_rate_hz", trial.frames.rate_hz()},
                                      {"frame_width", trial.frames.width()},
                                      {"frame_height", trial.frames.height()},
                                      {"physio_rate_hz", trial.eda.rate_hz()}});
    }
    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write " + manifest_path.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + manifest_path.string());
    return manifest_path;
}

}  // namespace emoglass
