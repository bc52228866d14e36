// Acceptance run: one PASS/FAIL line per headline criterion, each timed
// against its budget. Exit status is the number of failures.

#include "emoglass/classifiers.hpp"
#include "emoglass/dsp.hpp"
#include "emoglass/face_fisher.hpp"
#include "emoglass/fusion.hpp"
#include "emoglass/physio_features.hpp"
#include "emoglass/synth.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace emoglass;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records one sub-check; the message is kept either way.
    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (detail.tellp() > 0) detail << "; ";
        detail << what << (ok ? "" : " [miss]");
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// -- windowing -----------------------------------------------------------------

void windowing(Outcome& out, double& fixture_s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto session = synth::synth_session({});
    fixture_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::vector<ObservationWindow> plan;
    for (const TrialRecord& t : session.dataset.trials) {
        for (ObservationWindow& w : slice_windows(t)) plan.push_back(std::move(w));
    }
    out.check(plan.size() == 96, std::to_string(plan.size()) + " windows sliced");
    std::size_t vectors = 0;
    for (const ObservationWindow& w : plan) vectors += physio_vector(w).values.size() == kPhysioFeatureCount;
    out.check(vectors == 96, std::to_string(vectors) + " physiological vectors");
}

// -- HRV -------------------------------------------------------------------------

void hrv_oracle(Outcome& out) {
    synth::ClassProfile p;
    p.heart_rate_bpm = 75.0;
    p.hrv_depth_ms = 50.0;
    p.hrv_freq_hz = 0.1;
    const auto ppg = synth::synth_ppg(p, 100.0, 200.0, 1);
    const auto f = ppg_features(ppg.series);
    const double sdnn = p.hrv_depth_ms / std::sqrt(2.0);
    const double rmssd = std::sqrt(2.0) * p.hrv_depth_ms * std::sin(pi * p.hrv_freq_hz * 60.0 / p.heart_rate_bpm);
    auto rel = [](double a, double b) { return std::abs(a - b) / b; };
    out.check(rel(f.sdnn_ms, sdnn) <= 0.10, "SDNN " + fmt("%.2f", f.sdnn_ms) + " vs " + fmt("%.2f", sdnn));
    out.check(rel(f.rmssd_ms, rmssd) <= 0.10, "RMSSD " + fmt("%.2f", f.rmssd_ms) + " vs " + fmt("%.2f", rmssd));
    out.check(rel(f.sddsd_ms, rmssd) <= 0.10, "SDDSD " + fmt("%.2f", f.sddsd_ms) + " vs " + fmt("%.2f", rmssd));

    // NN50 on an irregular noiseless plant
    std::vector<double> plant;
    const double cycle[] = {800, 800, 900, 880, 760, 780, 800, 700, 760, 860};
    for (int r = 0; r < 15; ++r) plant.insert(plant.end(), std::begin(cycle), std::end(cycle));
    const auto planted = synth::synth_ppg_from_intervals(plant, 100.0, 200.0, 0.4);
    int expected = 0;
    for (std::size_t i = 1; i < planted.intervals_ms.size(); ++i)
        expected += std::abs(planted.intervals_ms[i] - planted.intervals_ms[i - 1]) > 50.0;
    const double nn50 = ppg_features(planted.series).nn50;
    out.check(nn50 == expected, "NN50 " + fmt("%.0f", nn50) + " vs " + std::to_string(expected));
}

// -- SCR -------------------------------------------------------------------------

void scr_oracle(Outcome& out) {
    const dsp::FilterSpec scsr{dsp::kScsrCutoffHz, 2, true};
    // every ordering of four amplitudes, 20 s apart, on the default tonic drift
    std::vector<double> amps{0.05, 0.1, 0.2, 0.5};
    std::size_t plants = 0, exact = 0;
    double worst = 0.0;
    do {
        std::vector<synth::PlantedScr> plant;
        for (std::size_t i = 0; i < amps.size(); ++i) plant.push_back({10.0 + 20.0 * static_cast<double>(i), amps[i]});
        const auto eda = synth::synth_eda_events(plant, 90.0, 200.0);
        const auto events = detect_scrs(dsp::lowpass(eda.series, scsr));
        ++plants;
        if (events.size() != plant.size()) continue;
        ++exact;
        for (std::size_t i = 0; i < plant.size(); ++i)
            worst = std::max(worst, std::abs(events[i].amplitude_uS - amps[i]) / amps[i]);
    } while (std::next_permutation(amps.begin(), amps.end()));
    out.check(exact == plants, "noiseless exact count in " + std::to_string(exact) + "/" + std::to_string(plants) + " plants");
    out.check(worst <= 0.10, "worst amplitude error " + fmt("%.1f%%", 100 * worst));

    // 20 dB: noise RMS one tenth of the signal RMS
    std::size_t planted_total = 0, detected_total = 0, matched = 0;
    synth::ClassProfile profile;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto noisy = synth::synth_eda(profile, 120.0, 200.0, seed, {.amplitude_jitter = 0.3, .snr = 10.0});
        const auto found = detect_scrs(dsp::lowpass(noisy.series, scsr));
        planted_total += noisy.events.size();
        detected_total += found.size();
        std::vector<bool> used(found.size(), false);
        for (const auto& e : noisy.events) {
            for (std::size_t j = 0; j < found.size(); ++j) {
                if (!used[j] && std::abs(found[j].peak_s - e.peak_s) <= 2.0) {
                    used[j] = true;
                    ++matched;
                    break;
                }
            }
        }
    }
    const double recall = static_cast<double>(matched) / static_cast<double>(planted_total);
    const double precision = detected_total ? static_cast<double>(matched) / static_cast<double>(detected_total) : 0.0;
    out.check(recall >= 0.9, "20 dB recall " + fmt("%.3f", recall) + " (" + std::to_string(matched) + "/" + std::to_string(planted_total) + ")");
    out.check(precision >= 0.9, "precision " + fmt("%.3f", precision));
}

// -- filter ----------------------------------------------------------------------

double butterworth_magnitude(double f, double fc, double fs, int order) {
    const double ratio = std::tan(pi * f / fs) / std::tan(pi * fc / fs);
    return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2 * order));
}

double tone_gain(double f) {
    const double fs = 200.0;
    const auto n = static_cast<Eigen::Index>(400.0 * fs);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = std::sin(2 * pi * f * static_cast<double>(i) / fs);
    const Vector y = dsp::lowpass(SampleSeries(Channel::EDA, fs, x), {dsp::kScsrCutoffHz, 2, true}).samples();
    // least-squares amplitude over the middle half
    const Eigen::Index lo = n / 4, len = n / 2;
    Matrix basis(len, 2);
    for (Eigen::Index i = 0; i < len; ++i) {
        const double t = static_cast<double>(lo + i) / fs;
        basis(i, 0) = std::sin(2 * pi * f * t);
        basis(i, 1) = std::cos(2 * pi * f * t);
    }
    return basis.colPivHouseholderQr().solve(y.segment(lo, len)).norm();
}

void filter_check(Outcome& out) {
    // forward-backward: the magnitude is applied twice
    for (double f : {0.02, 1.0}) {
        const double g = tone_gain(f);
        const double analytic = std::pow(butterworth_magnitude(f, dsp::kScsrCutoffHz, 200.0, 2), 2);
        const bool bound = f < 0.1 ? g >= 0.99 : g <= 0.01;
        out.check(bound && std::abs(g - analytic) <= 2e-3,
                  "gain@" + fmt("%g", f) + " Hz " + fmt("%.5f", g) + " (analytic " + fmt("%.5f", analytic) + ")");
    }
    // cross-correlation of an in-band sinusoid with its filtered copy, whole periods only
    const double fs = 200.0, f = 0.05;
    const auto n = static_cast<Eigen::Index>(400.0 * fs);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = std::sin(2 * pi * f * static_cast<double>(i) / fs);
    const Vector y = dsp::lowpass(SampleSeries(Channel::EDA, fs, x), {dsp::kScsrCutoffHz, 2, true}).samples();
    const auto period = static_cast<Eigen::Index>(fs / f);
    int best_lag = 0;
    double best = -1e300;
    for (int lag = -400; lag <= 400; ++lag) {
        double s = 0;
        for (Eigen::Index i = 5 * period; i < 15 * period; ++i) s += x(i) * y(i + lag);
        if (s > best) {
            best = s;
            best_lag = lag;
        }
    }
    out.check(best_lag == 0, "cross-correlation peak lag " + std::to_string(best_lag));
}

// -- PSD -------------------------------------------------------------------------

void psd_check(Outcome& out) {
    std::vector<double> t{0.5};
    while (true) {
        const double next = t.back() + (800.0 + 50.0 * std::sin(2 * pi * 0.1 * t.back())) / 1000.0;
        if (next > 300.0) break;
        t.push_back(next);
    }
    const auto psd = dsp::pp_psd(dsp::intervals_from_peaks(t));
    const double total = dsp::band_power(psd, 0.0, psd.freqs_hz.back()).power;
    const double lf = dsp::band_power(psd, dsp::kLfBand.lo_hz, dsp::kLfBand.hi_hz).power;
    out.check(lf / total >= 0.9, "LF share " + fmt("%.3f", lf / total));
    const double parseval = std::abs(total - psd.windowed_variance) / psd.windowed_variance;
    out.check(parseval <= 0.05, "Parseval error " + fmt("%.2f%%", 100 * parseval));
}

// -- Fisherface ------------------------------------------------------------------

double fisher_criterion(const Matrix& w, const face::Scatter& s) {
    return (w.transpose() * s.within * w).ldlt().solve(w.transpose() * s.between * w).trace();
}

void fisherface_check(Outcome& out) {
    std::mt19937_64 rng(7);
    const auto templates = synth::make_face_templates(16, 16, 21);
    auto faces = [&](int per_class, std::uint64_t seed, std::vector<Image>& images, std::vector<int>& labels) {
        for (int c = 0; c < 4; ++c) {
            for (int i = 0; i < per_class; ++i) {
                const auto seq = synth::synth_frames(templates, c, 5, 5.0, 1.0, seed * 100000 + static_cast<std::uint64_t>(c * 1000 + i));
                images.push_back(average_frame(seq));
                labels.push_back(c);
            }
        }
    };
    std::vector<Image> train_images, test_images;
    std::vector<int> train_labels, test_labels;
    faces(12, 1, train_images, train_labels);
    faces(25, 2, test_images, test_labels);

    // PCA energy against a cumulative sum of the sample covariance spectrum
    const Matrix rows = face::image_rows(train_images);
    const Matrix centered = rows.rowwise() - rows.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> es(centered * centered.transpose() / static_cast<double>(rows.rows() - 1));
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.rbegin(), ev.rend());
    const double total = std::accumulate(ev.begin(), ev.end(), 0.0);
    const auto basis = face::fit_pca(rows);
    const double kept = std::accumulate(ev.begin(), ev.begin() + basis.dimension(), 0.0) / total;
    const double one_less = std::accumulate(ev.begin(), ev.begin() + basis.dimension() - 1, 0.0) / total;
    out.check(kept > 0.9 && one_less <= 0.9 && std::abs(kept - basis.retained_fraction()) < 1e-9,
              "PCA keeps " + std::to_string(basis.dimension()) + " components, energy " + fmt("%.4f", kept));

    // two-class closed form
    const Eigen::Index p = 6;
    Matrix x = testing::gaussian_matrix(300, p, rng) * testing::gaussian_matrix(p, p, rng);
    Vector shift(p);
    shift << 1.0, -0.5, 0.3, 0.0, 0.8, -1.2;
    std::vector<int> two(300);
    for (int i = 0; i < 300; ++i) {
        two[static_cast<std::size_t>(i)] = i < 150 ? 0 : 1;
        if (i >= 150) x.row(i) += shift.transpose();
    }
    const Vector mu0 = x.topRows(150).colwise().mean().transpose();
    const Vector mu1 = x.bottomRows(150).colwise().mean().transpose();
    const Matrix c0 = x.topRows(150).rowwise() - mu0.transpose();
    const Matrix c1 = x.bottomRows(150).rowwise() - mu1.transpose();
    const Matrix sw = c0.transpose() * c0 + c1.transpose() * c1;
    const Vector closed = (sw + 1e-6 * sw.trace() / static_cast<double>(p) * Matrix::Identity(p, p)).ldlt().solve(mu1 - mu0);
    const Vector w = face::fit_lda(x, two).weights.col(0);
    const double cosine = std::abs(closed.dot(w)) / (closed.norm() * w.norm());
    out.check(cosine >= 0.999, "LDA cosine " + fmt("%.6f", cosine));

    // Fisher criterion against random projections
    const auto model = face::fit_fisherface(train_images, train_labels);
    const Matrix z = model.basis.project_rows(rows);
    const auto scatter = face::scatter_matrices(z, train_labels);
    const Matrix& w_lda = model.w_lda;
    const double best = fisher_criterion(w_lda, scatter);
    int beaten = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::HouseholderQR<Matrix> qr(testing::gaussian_matrix(z.cols(), z.cols(), rng));
        const Matrix r = (qr.householderQ() * Matrix::Identity(z.cols(), z.cols())).leftCols(w_lda.cols());
        beaten += best > fisher_criterion(r, scatter);
    }
    out.check(beaten == 100, "beats " + std::to_string(beaten) + "/100 random projections");

    // held-out accuracy with a QDA on the Fisher features
    Matrix train_z(static_cast<Eigen::Index>(train_images.size()), model.output_dimension());
    for (std::size_t i = 0; i < train_images.size(); ++i) train_z.row(static_cast<Eigen::Index>(i)) = face::project(model, train_images[i]).transpose();
    const auto qda = classify::train_qda(train_z, train_labels, 4);
    int correct = 0;
    for (std::size_t i = 0; i < test_images.size(); ++i) correct += classify::predict(qda, face::project(model, test_images[i])).label == test_labels[i];
    const double acc = correct / static_cast<double>(test_images.size());
    out.check(acc >= 0.95, "held-out 4-class accuracy " + fmt("%.3f", acc));
}

// -- classifiers -----------------------------------------------------------------

void classifier_check(Outcome& out) {
    std::mt19937_64 rng(1);
    auto line = [&](int n) {
        Matrix x = testing::gaussian_matrix(2 * n, 1, rng);
        std::vector<int> y(static_cast<std::size_t>(2 * n));
        for (int i = 0; i < 2 * n; ++i) {
            y[static_cast<std::size_t>(i)] = i % 2;
            x(i, 0) += 4.0 * (i % 2);
        }
        return std::pair{x, y};
    };
    const auto [xtr, ytr] = line(500);
    const auto qda = classify::train_qda(xtr, ytr, 2);
    const auto [xte, yte] = line(10000);
    int correct = 0;
    for (Eigen::Index i = 0; i < xte.rows(); ++i) correct += classify::predict(qda, xte.row(i).transpose()).label == yte[static_cast<std::size_t>(i)];
    const double acc = correct / static_cast<double>(xte.rows());
    const double bayes = testing::phi(2.0);
    out.check(std::abs(acc - bayes) <= 0.02, "QDA " + fmt("%.4f", acc) + " vs Bayes " + fmt("%.4f", bayes));

    bool monotone = true;
    double worst_mean = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Matrix x = testing::gaussian_matrix(800, 2, rng, 0.5);
        for (Eigen::Index i = 0; i < 800; ++i) x(i, 0) += i % 2 ? 1.5 : -1.5;
        const auto m = classify::fit_mixture(x, {.n_components = 2, .seed = seed});
        for (std::size_t i = 1; i < m.log_likelihood.size(); ++i) monotone = monotone && m.log_likelihood[i] >= m.log_likelihood[i - 1] - 1e-9;
        const int left = m.components[0].mean()(0) < m.components[1].mean()(0) ? 0 : 1;
        Vector a(2), b(2);
        a << -1.5, 0.0;
        b << 1.5, 0.0;
        worst_mean = std::max({worst_mean, (m.components[static_cast<std::size_t>(left)].mean() - a).norm(),
                               (m.components[static_cast<std::size_t>(1 - left)].mean() - b).norm()});
    }
    out.check(monotone, "EM log-likelihood nondecreasing");
    out.check(worst_mean <= 0.2, "GMM mean error " + fmt("%.3f", worst_mean));

    Matrix centres(4, 2);
    centres << 0, 0, 3, 0, 0, 3, 3, 3;
    Matrix x = testing::gaussian_matrix(160, 2, rng);
    std::vector<int> y(160);
    for (int i = 0; i < 160; ++i) {
        y[static_cast<std::size_t>(i)] = i % 4;
        x.row(i) += centres.row(i % 4);
    }
    const auto knn = classify::train_knn(x, y, 4, 1);
    correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) correct += classify::predict(knn, x.row(i).transpose()).label == y[static_cast<std::size_t>(i)];
    out.check(correct == 160, "KNN k=1 self-accuracy " + std::to_string(correct) + "/160");
}

// -- ReliefF ---------------------------------------------------------------------

void relieff_check(Outcome& out) {
    int wins = 0;
    double constant_weight = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> n(0.0, 1.0);
        Matrix x(200, 11);
        std::vector<int> labels(200);
        for (int i = 0; i < 200; ++i) {
            labels[static_cast<std::size_t>(i)] = i % 2;
            x(i, 0) = 2.0 * labels[static_cast<std::size_t>(i)] + n(rng);  // informative
            for (int j = 1; j < 10; ++j) x(i, j) = n(rng);
            x(i, 10) = 3.0;  // constant
        }
        const Vector w = relieff_weights(x, labels);
        wins += (w.head(10).array() < w(0)).count() == 9;
        constant_weight = std::max(constant_weight, std::abs(w(10)));
    }
    out.check(wins >= 19, "informative feature first in " + std::to_string(wins) + "/20 runs");
    out.check(constant_weight == 0.0, "constant feature weight " + fmt("%g", constant_weight));
}

// -- fusion ----------------------------------------------------------------------

void fusion_ordering(Outcome& out) {
    std::vector<double> ff, fo, po;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        synth::SynthSpec spec;
        spec.seed = seed;
        const auto windows = extract_windows(synth::synth_session(spec).dataset);
        FusionConfig c;
        c.seed = seed;
        c.mode = FusionMode::FEATURE_FUSION;
        ff.push_back(crossvalidate(windows, c, 4).accuracy);
        c.mode = FusionMode::FACIAL_ONLY;
        fo.push_back(crossvalidate(windows, c, 4).accuracy);
        c.mode = FusionMode::PHYSIO_ONLY;
        po.push_back(crossvalidate(windows, c, 4).accuracy);
    }
    const double mff = median(ff), mfo = median(fo), mpo = median(po);
    out.check(mff >= mfo && mfo >= mpo, "medians fused " + fmt("%.3f", mff) + " >= facial " + fmt("%.3f", mfo) + " >= physio " + fmt("%.3f", mpo));
    out.check(mff - std::max(mfo, mpo) >= 0.05, "gain over best single " + fmt("%.1f pts", 100 * (mff - std::max(mfo, mpo))));
    out.check(mff >= 0.85, "fused quadrant accuracy " + fmt("%.3f", mff));
}

// -- nulls -----------------------------------------------------------------------

void nulls(Outcome& out) {
    double facial = 0.0, permuted = 0.0, lo = 1.0, hi = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        synth::SynthSpec spec;
        spec.seed = seed;
        spec.facial_snr = 0.0;
        const auto blank = extract_windows(synth::synth_session(spec).dataset);
        FusionConfig c;
        c.seed = seed;
        c.mode = FusionMode::FACIAL_ONLY;
        facial += crossvalidate(blank, c, 4).accuracy / 10.0;

        spec.facial_snr = 1.0;
        const auto session = synth::synth_session(spec);
        auto windows = extract_windows(session.dataset);
        std::vector<EmotionLabel> labels;
        for (const auto& t : session.dataset.trials) labels.push_back(t.label);
        std::mt19937_64 rng(1000 + seed);
        std::shuffle(labels.begin(), labels.end(), rng);
        std::map<std::string, EmotionLabel> relabel;
        for (std::size_t i = 0; i < labels.size(); ++i) relabel[session.dataset.trials[i].trial_id] = labels[i];
        for (auto& w : windows) w.label = relabel.at(w.trial_id);
        FusionConfig f;
        f.seed = seed;
        const double a = crossvalidate(windows, f, 4).accuracy;
        permuted += a / 10.0;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    out.check(std::abs(facial - 0.25) <= 0.10, "blank-face facial-only mean " + fmt("%.3f", facial));
    out.check(permuted >= 0.15 && permuted <= 0.35,
              "permuted-label fused mean " + fmt("%.3f", permuted) + " (seeds " + fmt("%.3f", lo) + ".." + fmt("%.3f", hi) + ")");
}

// -- determinism -----------------------------------------------------------------

void determinism(Outcome& out) {
    const auto windows = extract_windows(synth::synth_session({}).dataset);
    FusionConfig c;
    c.seed = 5;
    const TrainedSystem a = train_system(windows, c);
    const TrainedSystem b = train_system(windows, c);
    const std::string text = serialize(a);
    out.check(text == serialize(b), "identical seed gives identical system (" + std::to_string(text.size()) + " bytes)");

    testing::TempDir dir("acceptance");
    save_system(a, dir.path() / "system.json");
    const TrainedSystem back = load_system(dir.path() / "system.json");
    std::size_t same = 0;
    for (FusionMode mode : {FusionMode::FEATURE_FUSION, FusionMode::DECISION_VOTE}) {
        TrainedSystem x = a, y = back;
        x.config.mode = y.config.mode = mode;
        std::size_t n = 0;
        for (const auto& w : windows) {
            const auto px = predict(x, w), py = predict(y, w);
            n += px.label == py.label && px.scores == py.scores;
        }
        same += n;
        out.check(n == windows.size() && windows.size() == 96,
                  std::string(to_string(mode)) + " round trip " + std::to_string(n) + "/" + std::to_string(windows.size()));
    }

    const int A = 0, B = 1, C = 2;
    const std::array<int, 6> votes{A, A, B, B, C, C};
    const int winner = vote(votes, 4);
    out.check(winner == votes[0], "tie-break vote -> label " + std::to_string(winner) + " (facial QDA voted " + std::to_string(votes[0]) + ")");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<void(Outcome&)> run;
    };
    double fixture_s = 0.0;
    const std::vector<Criterion> criteria{
        {"Windowing arithmetic", 1.0, [&](Outcome& o) { windowing(o, fixture_s); }},
        {"HRV oracle", 5.0, hrv_oracle},
        {"SCR oracle", 10.0, scr_oracle},
        {"Filter correctness", 1.0, filter_check},
        {"PSD sanity", 5.0, psd_check},
        {"Fisherface", 30.0, fisherface_check},
        {"Classifier oracles", 30.0, classifier_check},
        {"ReliefF", 10.0, relieff_check},
        {"Fusion ordering", 180.0, fusion_ordering},
        {"Nulls", 120.0, nulls},
        {"Determinism & persistence", 10.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // the windowing budget covers planning and extraction, not generating the session
        if (&c == &criteria.front()) elapsed -= fixture_s;
        o.check(elapsed < c.budget_s, fmt("%.2f s", elapsed) + " of " + fmt("%.0f s", c.budget_s));
        std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
