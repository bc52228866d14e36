// emoglass: command-line front end for the emotion-recognition pipeline.
//
// Exit codes: 0 success, 2 invalid configuration, 3 I/O or unreadable data,
// 4 training failure (the failing stage is printed).

#include "emoglass/fusion.hpp"
#include "emoglass/session_io.hpp"
#include "emoglass/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace emoglass;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kIo = 3, kTraining = 4 };

struct Globals {
    std::uint64_t seed = 7;
    std::string out = "out";
    int verbosity = 0;
};

struct SynthArgs {
    int trials = kTrialsPerSession;
    double trial_s = kTrialDurationS;
    double physio_rate = kPhysioRateHz;
    double frame_rate = kFrameRateHz;
    int width = 32;
    int height = 32;
    double facial_snr = 1.0;
    double physio_snr = 20.0;
    bool uninformative_physio = false;
};

struct PipelineArgs {
    std::string dataset;
    std::string task = "quadrant";
    std::string mode = "feature-fusion";
    std::string fusion_classifier = "qda";
    std::string channel_classifier;
    double obs = 100.0;
    double stride = 6.0;
    int count = 3;
    int knn_k = 5;
    int gmm_components = 2;
    int relieff_k = 10;
    int max_features = 0;
    double face_energy = 0.9;
    double fusion_energy = 0.9;
    double scsr_cutoff = dsp::kScsrCutoffHz;
    double scvsr_cutoff = dsp::kScvsrCutoffHz;
    int folds = 4;
    std::string model;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a, bool learning) {
    cmd->add_option("dataset", a.dataset, "Session directory or manifest.json")->required();
    cmd->add_option("--obs", a.obs, "Observation window length (s)")->capture_default_str();
    cmd->add_option("--stride", a.stride, "Window stride (s)")->capture_default_str();
    cmd->add_option("--count", a.count, "Windows per trial")->capture_default_str();
    cmd->add_option("--scsr-cutoff", a.scsr_cutoff, "SCSR low-pass cut-off (Hz)")->capture_default_str();
    cmd->add_option("--scvsr-cutoff", a.scvsr_cutoff, "SCVSR low-pass cut-off (Hz)")->capture_default_str();
    if (!learning) return;
    cmd->add_option("--task", a.task, "quadrant | arousal | valence")->capture_default_str();
    cmd->add_option("--mode", a.mode, "facial-only | physio-only | decision-vote | feature-fusion")
        ->capture_default_str();
    cmd->add_option("--fusion-classifier", a.fusion_classifier, "qda | gmm | knn")->capture_default_str();
    cmd->add_option("--channel-classifier", a.channel_classifier,
                    "Classifier for single-channel modes (default: best of three in xval, qda otherwise)");
    cmd->add_option("--knn-k", a.knn_k, "KNN neighbours")->capture_default_str();
    cmd->add_option("--gmm-components", a.gmm_components, "GMM mixture components")->capture_default_str();
    cmd->add_option("--relieff-k", a.relieff_k, "ReliefF neighbours")->capture_default_str();
    cmd->add_option("--max-features", a.max_features, "Cap on selected physiological features (0 = automatic)")
        ->capture_default_str();
    cmd->add_option("--face-energy", a.face_energy, "Fisherface PCA energy fraction")->capture_default_str();
    cmd->add_option("--fusion-energy", a.fusion_energy, "Feature-fusion PCA energy fraction")->capture_default_str();
}

FusionConfig make_config(const PipelineArgs& a, const Globals& g) {
    FusionConfig c;
    c.mode = parse_fusion_mode(a.mode);
    c.task = parse_task(a.task);
    c.fusion_classifier = classify::parse_classifier_kind(a.fusion_classifier);
    if (!a.channel_classifier.empty()) c.channel_classifier = classify::parse_classifier_kind(a.channel_classifier);
    c.seed = g.seed;
    c.windowing = WindowingOptions{a.obs, a.stride, a.count};
    c.physio.eda.scsr.cutoff_hz = a.scsr_cutoff;
    c.physio.eda.scvsr.cutoff_hz = a.scvsr_cutoff;
    c.knn_k = a.knn_k;
    c.gmm_components = a.gmm_components;
    c.relieff_k = a.relieff_k;
    if (a.max_features > 0) c.max_selected_features = a.max_features;
    c.face_energy = a.face_energy;
    c.fusion_energy = a.fusion_energy;
    if (a.obs <= 0.0 || a.stride < 0.0 || a.count < 1 || a.knn_k < 1 || a.gmm_components < 1 ||
        a.relieff_k < 1 || !(a.face_energy > 0.0 && a.face_energy <= 1.0) ||
        !(a.fusion_energy > 0.0 && a.fusion_energy <= 1.0)) {
        throw InvalidArgument("invalid pipeline option value");
    }
    return c;
}

fs::path manifest_of(const std::string& dataset) {
    const fs::path p(dataset);
    return fs::is_directory(p) ? p / "manifest.json" : p;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

// Resolved options of the whole invocation, in the config-file syntax.
std::string resolved_config(const CLI::App& app) { return app.config_to_str(true, false); }

// Every output directory carries the configuration that produced it.
void write_provenance(const fs::path& dir, const CLI::App& app) {
    write_text(dir / "run_config.toml", resolved_config(app));
}

std::vector<WindowSample> load_windows(const PipelineArgs& a, const FusionConfig& config, int verbosity) {
    SessionDataset dataset;
    try {
        dataset = load_session(manifest_of(a.dataset));
    } catch (const FormatError& e) {
        throw IoError(std::string("unreadable dataset: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("unreadable dataset: ") + e.what());
    }
    if (verbosity > 0) std::cerr << "loaded " << dataset.trials.size() << " trials\n";
    auto windows = extract_windows(dataset, config.windowing, config.physio);
    for (const WindowSample& w : windows) {
        if (!w.physio) std::cerr << "rejected window " << w.trial_id << " @" << w.offset_s << " s: " << w.reject_reason << '\n';
    }
    return windows;
}

int cmd_synth(const SynthArgs& a, const Globals& g, const CLI::App& app) {
    synth::SynthSpec spec;
    spec.seed = g.seed;
    spec.n_trials = a.trials;
    spec.trial_s = a.trial_s;
    spec.physio_rate_hz = a.physio_rate;
    spec.frame_rate_hz = a.frame_rate;
    spec.frame_width = a.width;
    spec.frame_height = a.height;
    spec.facial_snr = a.facial_snr;
    spec.physio_snr = a.physio_snr;
    if (a.uninformative_physio) spec.profiles.fill(synth::ClassProfile{});
    synth::validate(spec);
    const synth::SynthSession session = synth::synth_session(spec);
    const fs::path dir(g.out);
    const fs::path manifest = save_session(session.dataset, dir);
    synth::write_ground_truth(session.truth, dir / "ground_truth.json");
    write_provenance(dir, app);
    if (g.verbosity > 0) std::cerr << "wrote " << manifest.string() << '\n';
    return kOk;
}

int cmd_extract(const PipelineArgs& a, const Globals& g, const CLI::App& app) {
    const FusionConfig config = make_config(a, g);
    const auto windows = load_windows(a, config, g.verbosity);
    const fs::path dir(g.out);
    ensure_dir(dir);
    write_feature_csv(windows, dir / "features.csv");
    std::ofstream index(dir / "windows.csv");
    if (!index) throw IoError("cannot write " + (dir / "windows.csv").string());
    index << "trial_id,offset_s,label,status\n";
    for (const WindowSample& w : windows) {
        index << w.trial_id << ',' << format_real(w.offset_s) << ',' << to_string(w.label) << ','
              << (w.physio ? "ok" : "rejected") << '\n';
    }
    if (!index) throw IoError("write failed: windows.csv");
    write_provenance(dir, app);
    return kOk;
}

int cmd_train(const PipelineArgs& a, const Globals& g, const CLI::App& app) {
    const FusionConfig config = make_config(a, g);
    const auto windows = load_windows(a, config, g.verbosity);
    const TrainedSystem system = train_system(windows, config);
    const fs::path dir(g.out);
    ensure_dir(dir);
    json doc = json::parse(serialize(system));
    doc["run_config"] = resolved_config(app);
    const fs::path model = a.model.empty() ? dir / "model.sys" : fs::path(a.model);
    write_text(model, doc.dump(1) + "\n");
    write_provenance(dir, app);
    if (g.verbosity > 0) std::cerr << "wrote " << model.string() << '\n';
    return kOk;
}

int cmd_xval(const PipelineArgs& a, const Globals& g, const CLI::App& app, bool fusion_given) {
    const FusionConfig config = make_config(a, g);
    const auto windows = load_windows(a, config, g.verbosity);
    const EvalReport report = crossvalidate(windows, config, a.folds);
    std::cout << format_report(report);

    json doc = json::parse(report_json(report));
    // Feature fusion: also report the other two fusion classifiers.
    if (config.mode == FusionMode::FEATURE_FUSION && !fusion_given) {
        json others = json::array();
        for (classify::ClassifierKind kind : kBankOrder) {
            if (kind == config.fusion_classifier) continue;
            FusionConfig alt = config;
            alt.fusion_classifier = kind;
            const EvalReport r = crossvalidate(windows, alt, a.folds);
            std::printf("fused-%s accuracy %.4f\n", std::string(classify::to_string(kind)).c_str(), r.accuracy);
            others.push_back(json::parse(report_json(r)));
        }
        doc["other_fusion_classifiers"] = std::move(others);
    }
    doc["config"] = json::parse(config_json(config));
    doc["run_config"] = resolved_config(app);
    const fs::path dir(g.out);
    ensure_dir(dir);
    write_text(dir / "report.json", doc.dump(1) + "\n");
    write_text(dir / "confusion.txt", format_report(report));
    write_provenance(dir, app);
    return kOk;
}

int cmd_predict(const PipelineArgs& a, const Globals& g, const CLI::App& app) {
    if (a.model.empty()) throw InvalidArgument("--model is required");
    const TrainedSystem system = load_system(a.model);
    PipelineArgs window_args = a;
    window_args.obs = system.config.windowing.length_s;
    window_args.stride = system.config.windowing.stride_s;
    window_args.count = system.config.windowing.count;
    const auto windows = load_windows(window_args, system.config, g.verbosity);

    const fs::path dir(g.out);
    ensure_dir(dir);
    std::ofstream out(dir / "predictions.csv");
    if (!out) throw IoError("cannot write predictions.csv");
    const auto names = class_names(system.config.task);
    out << "trial_id,offset_s,true_label,predicted_label";
    for (const auto& n : names) out << ",score_" << n;
    out << '\n';
    std::size_t correct = 0, total = 0;
    for (const WindowSample& w : windows) {
        if (!w.physio) continue;
        const classify::Prediction p = predict(system, w);
        const int truth = task_label(system.config.task, w.label);
        out << w.trial_id << ',' << format_real(w.offset_s) << ',' << names[static_cast<std::size_t>(truth)] << ','
            << names[static_cast<std::size_t>(p.label)];
        for (Eigen::Index i = 0; i < p.scores.size(); ++i) out << ',' << format_real(p.scores(i));
        out << '\n';
        correct += p.label == truth;
        ++total;
    }
    if (!out) throw IoError("write failed: predictions.csv");
    write_provenance(dir, app);
    std::printf("windows %zu  accuracy %.4f\n", total, total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0);
    return kOk;
}

int cmd_inspect(const std::string& path) {
    const fs::path p(path);
    if (fs::is_directory(p) || p.filename() == "manifest.json") {
        const SessionDataset ds = load_session(manifest_of(path));
        std::printf("subject %s  trials %zu\n", ds.subject_id.c_str(), ds.trials.size());
        for (const TrialRecord& t : ds.trials) {
            std::printf("%-8s %s  %.1f s  eda %.0f Hz  ppg %.0f Hz  frames %zu @ %.1f Hz (%dx%d)\n", t.trial_id.c_str(),
                        std::string(to_string(t.label)).c_str(), t.duration_s(), t.eda.rate_hz(), t.ppg.rate_hz(),
                        t.frames.size(), t.frames.rate_hz(), t.frames.width(), t.frames.height());
        }
        return kOk;
    }
    const TrainedSystem s = load_system(p);
    std::printf("format_version %d\n", s.format_version);
    std::printf("config %s\n", config_json(s.config).c_str());
    std::printf("fisherface %dx%d  pca components %ld  lda dimensions %ld\n", s.fisher.width, s.fisher.height,
                static_cast<long>(s.fisher.basis.dimension()), static_cast<long>(s.fisher.output_dimension()));
    std::printf("selected physiological features:");
    for (std::size_t i = 0; i < s.relieff_mask.size(); ++i) {
        if (s.relieff_mask[i]) std::printf(" %s", physio_feature_names()[i].c_str());
    }
    std::printf("\n");
    if (s.has_fused) {
        std::printf("fused pca components %ld  fused classifier %s\n", static_cast<long>(s.fused_pca.dimension()),
                    std::string(classify::to_string(s.fused_model.kind)).c_str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Emotion recognition from EDA, PPG and partial-face frames"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Configuration file (TOML/INI); command-line flags take precedence");
    Globals g;
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("-v,--verbose", g.verbosity, "Verbose diagnostics (repeatable)");

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic session with ground truth");
    synth_cmd->add_option("--trials", synth_args.trials, "Number of trials (multiple of 4)")->capture_default_str();
    synth_cmd->add_option("--trial-s", synth_args.trial_s, "Trial duration (s)")->capture_default_str();
    synth_cmd->add_option("--physio-rate", synth_args.physio_rate, "EDA/PPG sample rate (Hz)")->capture_default_str();
    synth_cmd->add_option("--frame-rate", synth_args.frame_rate, "Frame rate (Hz)")->capture_default_str();
    synth_cmd->add_option("--width", synth_args.width, "Frame width")->capture_default_str();
    synth_cmd->add_option("--height", synth_args.height, "Frame height")->capture_default_str();
    synth_cmd->add_option("--facial-snr", synth_args.facial_snr, "Facial SNR (0 = pure noise)")->capture_default_str();
    synth_cmd->add_option("--physio-snr", synth_args.physio_snr, "Physiological SNR")->capture_default_str();
    synth_cmd->add_flag("--uninformative-physio", synth_args.uninformative_physio,
                        "Use one shared physiological profile for every class");

    PipelineArgs extract_args, train_args, xval_args, predict_args;
    CLI::App* extract_cmd = app.add_subcommand("extract", "Write physiological feature CSV and window index");
    add_pipeline_options(extract_cmd, extract_args, false);
    CLI::App* train_cmd = app.add_subcommand("train", "Train and persist a system");
    add_pipeline_options(train_cmd, train_args, true);
    train_cmd->add_option("--model", train_args.model, "Model path (default <out>/model.sys)");
    CLI::App* xval_cmd = app.add_subcommand("xval", "Trial-level stratified cross-validation");
    add_pipeline_options(xval_cmd, xval_args, true);
    xval_cmd->add_option("--folds", xval_args.folds, "Number of folds")->capture_default_str();
    CLI::App* predict_cmd = app.add_subcommand("predict", "Per-window predictions of a persisted system");
    predict_cmd->add_option("dataset", predict_args.dataset, "Session directory or manifest.json")->required();
    predict_cmd->add_option("--model", predict_args.model, "Persisted system")->required();
    std::string inspect_path;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "Summarise a session or a persisted system");
    inspect_cmd->add_option("path", inspect_path, "Session directory, manifest or model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth_args, g, app);
        if (*extract_cmd) return cmd_extract(extract_args, g, app);
        if (*train_cmd) return cmd_train(train_args, g, app);
        if (*xval_cmd) {
            return cmd_xval(xval_args, g, app, xval_cmd->count("--fusion-classifier") > 0);
        }
        if (*predict_cmd) return cmd_predict(predict_args, g, app);
        if (*inspect_cmd) return cmd_inspect(inspect_path);
    } catch (const TrainingError& e) {
        std::cerr << "training failed at stage '" << e.stage() << "': " << e.what() << '\n';
        return kTraining;
    } catch (const NumericalError& e) {
        std::cerr << "training failed: " << e.what() << '\n';
        return kTraining;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const FormatError& e) {
        std::cerr << "unreadable input: " << e.what() << '\n';
        return kIo;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kConfig;
}
