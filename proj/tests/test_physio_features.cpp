#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emoglass/physio_features.hpp"
#include "emoglass/synth.hpp"
#include "support.hpp"

#include <numbers>

using namespace emoglass;

namespace {

Vector values(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// Half-height decay time of a(exp(-t/t2) - exp(-t/t1)), found by bisection on the closed form.
double analytic_half_recovery(double t1, double t2) {
    auto f = [&](double t) { return std::exp(-t / t2) - std::exp(-t / t1); };
    const double peak_t = std::log(t2 / t1) * t1 * t2 / (t2 - t1);
    const double half = 0.5 * f(peak_t);
    double lo = peak_t, hi = peak_t + 50 * t2;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > half ? lo : hi) = mid;
    }
    return lo - peak_t;
}

ObservationWindow window_of(const SampleSeries& eda, const SampleSeries& ppg) {
    return ObservationWindow{"t", 0.0, eda.duration_s(), eda, ppg,
                             FrameSequence(2, 2, 5.0, std::vector<Frame>(500, Frame::Zero(2, 2))),
                             EmotionLabel{Quadrant::HAHV}};
}

}  // namespace

TEST_CASE("statistical features") {
    const auto s = statistical_features(values({1, 2, 3, 4}));
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.std == doctest::Approx(1.29099).epsilon(1e-5));
    CHECK(s.mean_abs_d1 == doctest::Approx(1.0));
    CHECK(s.mean_abs_d2 == doctest::Approx(0.0));
    CHECK(s.ratio_d1_std == doctest::Approx(0.7746).epsilon(1e-4));
    CHECK(s.ratio_d2_std == doctest::Approx(0.0));
    CHECK_FALSE(s.degenerate);

    const auto c = statistical_features(values({5, 5, 5, 5}));
    CHECK(c.mean == 5.0);
    CHECK(c.std == 0.0);
    CHECK(c.mean_abs_d1 == 0.0);
    CHECK(c.ratio_d1_std == 0.0);
    CHECK(c.ratio_d2_std == 0.0);
    CHECK(c.degenerate);

    // shift invariance of everything but the mean
    std::mt19937_64 rng(2);
    const Vector x = testing::gaussian_matrix(200, 1, rng);
    const auto a = statistical_features(x);
    const auto b = statistical_features(Vector(x.array() + 3.25));
    CHECK(b.mean == doctest::Approx(a.mean + 3.25));
    CHECK(b.std == doctest::Approx(a.std));
    CHECK(b.mean_abs_d1 == doctest::Approx(a.mean_abs_d1));
    CHECK(b.mean_abs_d2 == doctest::Approx(a.mean_abs_d2));
    CHECK(b.ratio_d1_std == doctest::Approx(a.ratio_d1_std));
    CHECK(b.ratio_d2_std == doctest::Approx(a.ratio_d2_std));

    CHECK_THROWS_AS(statistical_features(values({1, 2})), InvalidArgument);
}

TEST_CASE("HRV statistics from direct formulas") {
    const std::vector<double> flat(10, 800.0);
    const auto f = hrv_statistics(flat);
    CHECK(f.nn50 == 0);
    CHECK(f.rmssd_ms == 0);
    CHECK(f.sdnn_ms == 0);
    CHECK(f.sddsd_ms == 0);

    const std::vector<double> a{800, 850, 800};
    const auto sa = hrv_statistics(a);
    CHECK(sa.nn50 == 0);  // |50| is not > 50
    CHECK(sa.rmssd_ms == doctest::Approx(50.0));
    CHECK(sa.sddsd_ms == doctest::Approx(std::sqrt(2.0 * 50 * 50)));

    const std::vector<double> b{700, 800, 900};
    CHECK(hrv_statistics(b).sdnn_ms == doctest::Approx(100.0));

    const std::vector<double> c{800, 900, 820, 830, 700};
    CHECK(hrv_statistics(c).nn50 == 3);  // diffs 100, -80, 10, -130

    const std::vector<double> tiny{800, 810};
    CHECK_THROWS_AS(hrv_statistics(tiny), InvalidArgument);
}

TEST_CASE("HRV features recover a sinusoidal plant") {
    synth::ClassProfile p;
    p.heart_rate_bpm = 75.0;
    p.hrv_depth_ms = 50.0;
    p.hrv_freq_hz = 0.1;
    const auto ppg = synth::synth_ppg(p, 100.0, 200.0, 3);
    const auto f = ppg_features(ppg.series);
    const double period_s = 60.0 / p.heart_rate_bpm;
    const double sdnn = p.hrv_depth_ms / std::sqrt(2.0);  // RMS of the modulation
    // successive differences of a sampled sinusoid: amplitude 2 D sin(pi f T)
    const double rmssd = std::sqrt(2.0) * p.hrv_depth_ms * std::sin(std::numbers::pi * p.hrv_freq_hz * period_s);
    CHECK(sdnn == doctest::Approx(35.36).epsilon(1e-3));
    CHECK(f.sdnn_ms == doctest::Approx(sdnn).epsilon(0.10));
    CHECK(f.rmssd_ms == doctest::Approx(rmssd).epsilon(0.10));
    CHECK(f.sddsd_ms == doctest::Approx(rmssd).epsilon(0.10));
    CHECK(f.lf > f.hf);
    CHECK(f.lf > f.vlf);

    // NN50 of a plant whose successive differences are far from the 50 ms edge
    std::vector<double> plant;
    const double cycle[] = {800, 800, 900, 880, 760, 780, 800, 700};
    for (int r = 0; r < 20; ++r) plant.insert(plant.end(), std::begin(cycle), std::end(cycle));
    const auto planted = synth::synth_ppg_from_intervals(plant, 100.0, 200.0, 0.4);
    int expected = 0;
    for (std::size_t i = 1; i < planted.intervals_ms.size(); ++i) {
        expected += std::abs(planted.intervals_ms[i] - planted.intervals_ms[i - 1]) > 50.0;
    }
    CHECK(ppg_features(planted.series).nn50 == expected);
}

TEST_CASE("average acceleration") {
    const Vector x = values({0, 1, 0, 1, 0, 1});
    // z-normalised second differences all have magnitude 2 / sd
    const double sd = std::sqrt((6 * 0.25) / 5.0);
    CHECK(average_acceleration(x) == doctest::Approx(2.0 / sd));
    CHECK_THROWS_AS(average_acceleration(values({1, 1, 1})), InvalidArgument);
}

TEST_CASE("SCR detection against planted responses") {
    const double rate = 200.0;
    const dsp::FilterSpec scsr{dsp::kScsrCutoffHz, 2, true};

    SUBCASE("flat tonic") {
        const SampleSeries flat(Channel::EDA, rate, Vector::Constant(20000, 4.0));
        CHECK(detect_scrs(dsp::lowpass(flat, scsr)).empty());
    }
    SUBCASE("three spaced responses") {
        const std::vector<synth::PlantedScr> plant{{10.0, 0.05}, {30.0, 0.12}, {50.0, 0.3}};
        const auto eda = synth::synth_eda_events(plant, 100.0, rate);
        const auto events = detect_scrs(dsp::lowpass(eda.series, scsr));
        REQUIRE(events.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(events[i].amplitude_uS == doctest::Approx(plant[i].amplitude_uS).epsilon(0.10));
            CHECK(std::abs(events[i].peak_s - eda.events[i].peak_s) < 1.5);
        }
    }
    SUBCASE("small response on the tail of a larger one") {
        const std::vector<synth::PlantedScr> plant{{10.0, 0.3}, {30.0, 0.05}, {50.0, 0.12}};
        const auto eda = synth::synth_eda_events(plant, 100.0, rate);
        const auto events = detect_scrs(dsp::lowpass(eda.series, scsr));
        REQUIRE(events.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(events[i].amplitude_uS == doctest::Approx(plant[i].amplitude_uS).epsilon(0.10));
        }
        // the plain rise under-reads it
        const auto plain = detect_scrs(dsp::lowpass(eda.series, scsr), {.baseline_window_s = 0.0});
        REQUIRE(plain.size() == 3);
        CHECK(plain[1].amplitude_uS < events[1].amplitude_uS);
    }
    SUBCASE("half recovery matches the closed form") {
        const double expected = analytic_half_recovery(synth::kScrTau1S, synth::kScrTau2S);
        CHECK(synth::bateman_half_recovery_s() == doctest::Approx(expected).epsilon(1e-6));
        const auto eda = synth::synth_eda_events({{20.0, 0.2}}, 100.0, rate);
        const auto events = detect_scrs(dsp::lowpass(eda.series, scsr));
        REQUIRE(events.size() == 1);
        CHECK(events[0].recovery_s == doctest::Approx(expected).epsilon(0.15));
    }
    SUBCASE("doubling the amplitude doubles the detection") {
        const auto one = synth::synth_eda_events({{20.0, 0.1}}, 100.0, rate);
        const auto two = synth::synth_eda_events({{20.0, 0.2}}, 100.0, rate);
        const auto e1 = detect_scrs(dsp::lowpass(one.series, scsr));
        const auto e2 = detect_scrs(dsp::lowpass(two.series, scsr));
        REQUIRE(e1.size() == 1);
        REQUIRE(e2.size() == 1);
        CHECK(e2[0].amplitude_uS / e1[0].amplitude_uS == doctest::Approx(2.0).epsilon(0.10));
    }
    SUBCASE("recovery cut by the window end is clamped") {
        const auto eda = synth::synth_eda_events({{95.0, 0.2}}, 100.0, rate);
        const auto events = detect_scrs(dsp::lowpass(eda.series, scsr));
        REQUIRE(events.size() == 1);
        CHECK(events[0].peak_s + events[0].recovery_s <= 100.0 + 1e-9);
    }
}

TEST_CASE("EDA domain features") {
    const double rate = 200.0;
    SUBCASE("tonic only") {
        const auto eda = synth::synth_eda_events({}, 100.0, rate);
        const auto f = eda_features(eda.series);
        CHECK(f.scsr_count == 0);
        CHECK(f.scvsr_count == 0);
        CHECK(f.scsr_mean_amp_uS == 0);
        CHECK(f.scvsr_mean_amp_uS == 0);
        CHECK(f.scsr_recovery_ratio == 0);
    }
    SUBCASE("four responses") {
        const std::vector<synth::PlantedScr> plant{{8.0, 0.1}, {30.0, 0.15}, {52.0, 0.08}, {75.0, 0.2}};
        const auto eda = synth::synth_eda_events(plant, 100.0, rate);
        const auto f = eda_features(eda.series);
        CHECK(f.scsr_count == 4);
        double recovery = 0;
        for (const auto& e : eda.events) recovery += e.half_recovery_s;
        CHECK(std::abs(f.scsr_recovery_ratio - recovery / 100.0) <= 0.02);
    }
}

TEST_CASE("physiological window vector") {
    synth::ClassProfile p;
    const auto eda = synth::synth_eda(p, 100.0, 200.0, 4, {.snr = 20.0});
    const auto ppg = synth::synth_ppg(p, 100.0, 200.0, 5, {.snr = 20.0});
    const ObservationWindow w = window_of(eda.series, ppg.series);
    const FeatureVector v = physio_vector(w);
    CHECK(v.values.size() == static_cast<Eigen::Index>(kPhysioFeatureCount));
    CHECK(v.names.size() == kPhysioFeatureCount);
    CHECK(v.names == physio_feature_names());
    CHECK(v.values.allFinite());
    CHECK(v.channel_tag == ChannelTag::PHYSIO);
    CHECK(physio_vector(w).values == v.values);

    // a flat PPG cannot yield HRV features: the whole window is rejected
    const ObservationWindow bad = window_of(eda.series, SampleSeries(Channel::PPG, 200.0, Vector::Ones(20000)));
    CHECK_THROWS_AS(physio_vector(bad), InvalidArgument);
}

TEST_CASE("min-max scaling") {
    Matrix x(3, 2);
    x << 1, 5, 2, 5, 3, 5;
    const MinMaxScaler s = MinMaxScaler::fit(x);
    const Matrix y = s.transform(x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(1, 0) == 0.5);
    CHECK(y(2, 0) == 1.0);
    CHECK(y.col(1).isZero());
    CHECK(s.transform_row(x.row(1).transpose()) == y.row(1).transpose());
}

TEST_CASE("ReliefF weights") {
    SUBCASE("class indicator beats noise") {
        int wins = 0;
        for (int seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            Matrix x(200, 10);
            std::vector<int> labels(200);
            for (int i = 0; i < 200; ++i) {
                labels[i] = i % 2;
                x(i, 0) = labels[i];
                for (int j = 1; j < 10; ++j) x(i, j) = u(rng);
            }
            const Vector w = relieff_weights(x, labels);
            Eigen::Index best = 0;
            w.maxCoeff(&best);
            wins += best == 0;
        }
        CHECK(wins == 20);
    }
    SUBCASE("constant feature and duplicated column") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Matrix x(60, 4);
        std::vector<int> labels(60);
        for (int i = 0; i < 60; ++i) {
            labels[i] = i % 3;
            x(i, 0) = 0.5;
            x(i, 1) = 0.3 * labels[i] + 0.2 * u(rng);
            x(i, 2) = x(i, 1);
            x(i, 3) = u(rng);
        }
        const Vector w = relieff_weights(x, labels, 5);
        CHECK(w(0) == 0.0);
        CHECK(w(1) == doctest::Approx(w(2)).epsilon(1e-12));
        CHECK(w(1) > w(3));
    }
    SUBCASE("bad input") {
        const Matrix x = Matrix::Zero(4, 2);
        std::vector<int> labels{0, 1, 0};
        CHECK_THROWS_AS(relieff_weights(x, labels), InvalidArgument);
    }
}

TEST_CASE("feature selection rule") {
    CHECK(select_features(values({0.3, -0.1, 0.0})) == std::vector<bool>{true, false, false});
    CHECK(select_features(values({-0.3, -0.1, -0.2})) == std::vector<bool>{false, true, false});
    // permutation equivariance
    const Vector w = values({0.2, -0.5, 0.7, 0.0, 0.1});
    const std::vector<int> perm{3, 0, 4, 1, 2};
    Vector wp(5);
    for (int i = 0; i < 5; ++i) wp(i) = w(perm[i]);
    const auto m = select_features(w);
    const auto mp = select_features(wp);
    for (int i = 0; i < 5; ++i) CHECK(mp[i] == m[perm[i]]);
}
