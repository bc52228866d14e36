#include "emoglass/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

namespace emoglass {

namespace {

using classify::ClassifierKind;
using classify::ClassifierModel;
using classify::Prediction;

// Seed stages.
constexpr std::uint64_t kStageSplit = 11;
constexpr std::uint64_t kStageFold = 12;
constexpr std::uint64_t kStageGmm = 13;

std::string normalize_token(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

Matrix stack_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return Matrix();
    Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return out;
}

Vector masked(ConstVectorRef x, const std::vector<bool>& mask) {
    Vector out(static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true)));
    Eigen::Index j = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out(j++) = x(static_cast<Eigen::Index>(i));
    }
    return out;
}

// Drops the lowest-weight selected features beyond `cap` (ties keep the lower index).
void limit_selection(std::vector<bool>& mask, ConstVectorRef weights, int cap) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) kept.push_back(i);
    }
    if (static_cast<int>(kept.size()) <= cap) return;
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return weights(static_cast<Eigen::Index>(a)) > weights(static_cast<Eigen::Index>(b));
    });
    for (std::size_t i = static_cast<std::size_t>(cap); i < kept.size(); ++i) mask[kept[i]] = false;
}

// Runs `fn`, rethrowing any library error as a TrainingError for `stage`.
template <typename Fn>
auto at_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const TrainingError&) {
        throw;
    } catch (const Error& e) {
        throw TrainingError(stage, e.what());
    }
}

std::array<ClassifierModel, 3> train_bank(ConstMatrixRef x, std::span<const int> labels,
                                          const FusionConfig& config, std::uint64_t channel) {
    const int classes = class_count(config.task);
    std::map<int, Eigen::Index> per_class;
    for (int label : labels) ++per_class[label];
    Eigen::Index smallest = x.rows();
    for (const auto& [label, count] : per_class) smallest = std::min(smallest, count);

    classify::TrainOptions options;
    options.knn_k = std::min<int>(config.knn_k, static_cast<int>(x.rows()));
    options.gmm.seed = derive_seed(config.seed, kStageGmm, channel);
    options.gmm.n_components = config.gmm_components;
    // Too few instances for the requested mixture: fall back to one component.
    if (smallest < static_cast<Eigen::Index>(config.gmm_components) * (x.cols() + 1)) {
        options.gmm.n_components = 1;
    }

    std::array<ClassifierModel, 3> bank;
    for (std::size_t i = 0; i < kBankOrder.size(); ++i) {
        bank[i] = classify::train(kBankOrder[i], x, labels, classes, options);
    }
    return bank;
}

}  // namespace

// -- Tasks and modes ---------------------------------------------------------------

std::string_view to_string(FusionMode mode) {
    switch (mode) {
    case FusionMode::FACIAL_ONLY: return "FACIAL_ONLY";
    case FusionMode::PHYSIO_ONLY: return "PHYSIO_ONLY";
    case FusionMode::DECISION_VOTE: return "DECISION_VOTE";
    case FusionMode::FEATURE_FUSION: return "FEATURE_FUSION";
    }
    return "?";
}

std::string_view to_string(Task task) {
    switch (task) {
    case Task::QUADRANT: return "QUADRANT";
    case Task::AROUSAL: return "AROUSAL";
    case Task::VALENCE: return "VALENCE";
    }
    return "?";
}

FusionMode parse_fusion_mode(std::string_view text) {
    const std::string token = normalize_token(text);
    for (FusionMode m : {FusionMode::FACIAL_ONLY, FusionMode::PHYSIO_ONLY, FusionMode::DECISION_VOTE,
                         FusionMode::FEATURE_FUSION}) {
        if (to_string(m) == token) return m;
    }
    throw InvalidArgument("unknown fusion mode '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
    const std::string token = normalize_token(text);
    for (Task t : {Task::QUADRANT, Task::AROUSAL, Task::VALENCE}) {
        if (to_string(t) == token) return t;
    }
    throw InvalidArgument("unknown task '" + std::string(text) + "'");
}

int class_count(Task task) { return task == Task::QUADRANT ? 4 : 2; }

int task_label(Task task, EmotionLabel label) {
    switch (task) {
    case Task::QUADRANT: return label.index();
    case Task::AROUSAL: return label.high_arousal() ? 0 : 1;
    case Task::VALENCE: return label.high_valence() ? 0 : 1;
    }
    return 0;
}

std::vector<std::string> class_names(Task task) {
    switch (task) {
    case Task::QUADRANT: return {"HAHV", "HALV", "LALV", "LAHV"};
    case Task::AROUSAL: return {"HA", "LA"};
    case Task::VALENCE: return {"HV", "LV"};
    }
    return {};
}

// -- Extraction ----------------------------------------------------------------------

std::vector<WindowSample> extract_windows(const SessionDataset& dataset,
                                          const WindowingOptions& windowing,
                                          const PhysioOptions& physio) {
    std::vector<WindowSample> out;
    for (const TrialRecord& trial : dataset.trials) {
        for (const ObservationWindow& window : slice_windows(trial, windowing)) {
            WindowSample sample;
            sample.trial_id = window.trial_id;
            sample.offset_s = window.offset_s;
            sample.label = window.label;
            try {
                sample.physio = physio_vector(window, physio).values;
            } catch (const Error& e) {
                sample.reject_reason = e.what();
            }
            sample.face = average_frame(window);
            out.push_back(std::move(sample));
        }
    }
    return out;
}

void write_feature_csv(std::span<const WindowSample> windows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const std::string& name : physio_feature_names()) out << name << ',';
    out << "label\n";
    out << std::setprecision(17);
    for (const WindowSample& w : windows) {
        if (!w.physio) continue;
        for (Eigen::Index j = 0; j < w.physio->size(); ++j) out << (*w.physio)(j) << ',';
        out << to_string(w.label) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

ZScore ZScore::fit(ConstMatrixRef data) {
    if (data.rows() == 0) throw InvalidArgument("z-score needs at least one row");
    ZScore z;
    z.mean = data.colwise().mean().transpose();
    z.scale = Vector::Ones(data.cols());
    if (data.rows() > 1) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            const Real sd = std::sqrt((data.col(j).array() - z.mean(j)).square().sum() /
                                      static_cast<Real>(data.rows() - 1));
            if (sd > 0.0) z.scale(j) = sd;
        }
    }
    return z;
}

// -- Training ----------------------------------------------------------------------

TrainedSystem train_system(std::span<const WindowSample> windows, const FusionConfig& config) {
    std::vector<const WindowSample*> used;
    for (const WindowSample& w : windows) {
        if (w.physio) used.push_back(&w);
    }
    const int classes = class_count(config.task);
    std::vector<int> labels;
    std::vector<std::set<std::string>> trials_per_class(static_cast<std::size_t>(classes));
    for (const WindowSample* w : used) {
        labels.push_back(task_label(config.task, w->label));
        trials_per_class[static_cast<std::size_t>(labels.back())].insert(w->trial_id);
    }
    for (int c = 0; c < classes; ++c) {
        if (trials_per_class[static_cast<std::size_t>(c)].size() < 2) {
            throw TrainingError("labels", "class " + class_names(config.task)[static_cast<std::size_t>(c)] +
                                              " has fewer than 2 usable trials");
        }
    }
    int min_trials = static_cast<int>(used.size());
    for (const auto& trials : trials_per_class) min_trials = std::min(min_trials, static_cast<int>(trials.size()));
    int smallest = static_cast<int>(used.size());
    for (int c = 0; c < classes; ++c) {
        smallest = std::min(smallest, static_cast<int>(std::count(labels.begin(), labels.end(), c)));
    }

    TrainedSystem system;
    system.config = config;

    std::vector<Vector> raw_rows;
    for (const WindowSample* w : used) raw_rows.push_back(*w->physio);
    const Matrix raw = stack_rows(raw_rows);

    const Matrix scaled = at_stage("physio_scaling", [&] {
        system.physio_scaler = MinMaxScaler::fit(raw);
        return system.physio_scaler.transform(raw);
    });

    at_stage("relieff", [&] {
        const int k = std::min(config.relieff_k, smallest - 1);
        system.relieff_weights = relieff_weights(scaled, labels, k);
        system.relieff_mask = select_features(system.relieff_weights, config.relieff_threshold);
        // Windows of one trial overlap heavily, so trials are the independent
        // units: keep fewer features than the smallest class has trials, and
        // keep the GMM requirement n_c >= components * (dim + 1) satisfiable.
        const int by_gmm = smallest / std::max(1, config.gmm_components) - 1;
        const int cap = config.max_selected_features.value_or(std::max(1, std::min(by_gmm, min_trials - 1)));
        limit_selection(system.relieff_mask, system.relieff_weights, cap);
    });

    Matrix physio(static_cast<Eigen::Index>(used.size()),
                  static_cast<Eigen::Index>(std::count(system.relieff_mask.begin(), system.relieff_mask.end(), true)));
    for (Eigen::Index i = 0; i < physio.rows(); ++i) {
        physio.row(i) = masked(scaled.row(i).transpose(), system.relieff_mask).transpose();
    }

    at_stage("fisherface", [&] {
        std::vector<Image> faces;
        for (const WindowSample* w : used) faces.push_back(w->face);
        system.fisher = face::fit_fisherface(faces, labels, config.face_energy);
    });
    Matrix facial(physio.rows(), system.fisher.output_dimension());
    for (Eigen::Index i = 0; i < facial.rows(); ++i) {
        facial.row(i) = face::project(system.fisher, used[static_cast<std::size_t>(i)]->face).transpose();
    }

    system.facial_models = at_stage("facial_classifiers", [&] { return train_bank(facial, labels, config, 0); });
    system.physio_models = at_stage("physio_classifiers", [&] { return train_bank(physio, labels, config, 1); });

    if (config.mode == FusionMode::FEATURE_FUSION) {
        at_stage("feature_fusion", [&] {
            system.facial_zscore = ZScore::fit(facial);
            system.physio_zscore = ZScore::fit(physio);
            Matrix joined(facial.rows(), facial.cols() + physio.cols());
            for (Eigen::Index i = 0; i < joined.rows(); ++i) {
                joined.row(i) << system.facial_zscore.apply(facial.row(i).transpose()).transpose(),
                    system.physio_zscore.apply(physio.row(i).transpose()).transpose();
            }
            system.fused_pca = face::fit_pca(joined, face::PcaOptions{config.fusion_energy, std::nullopt});
            const Matrix reduced = system.fused_pca.project_rows(joined);
            classify::TrainOptions options;
            options.knn_k = std::min<int>(config.knn_k, static_cast<int>(reduced.rows()));
            options.gmm.seed = derive_seed(config.seed, kStageGmm, 2);
            options.gmm.n_components = config.gmm_components;
            if (smallest < config.gmm_components * (reduced.cols() + 1)) options.gmm.n_components = 1;
            system.fused_model = classify::train(config.fusion_classifier, reduced, labels, classes, options);
            system.has_fused = true;
        });
    }
    return system;
}

TrainedSystem train_system(const SessionDataset& dataset, const FusionConfig& config) {
    const auto windows = at_stage("windowing", [&] {
        return extract_windows(dataset, config.windowing, config.physio);
    });
    return train_system(windows, config);
}

// -- Prediction --------------------------------------------------------------------

Vector facial_features(const TrainedSystem& system, const WindowSample& window) {
    return face::project(system.fisher, window.face);
}

Vector selected_physio_features(const TrainedSystem& system, const WindowSample& window) {
    if (!window.physio) throw InvalidArgument("window was rejected: " + window.reject_reason);
    return masked(system.physio_scaler.transform_row(*window.physio), system.relieff_mask);
}

Vector fused_input(const TrainedSystem& system, const WindowSample& window) {
    if (!system.has_fused) throw InvalidArgument("system has no feature-fusion components");
    const Vector f = system.facial_zscore.apply(facial_features(system, window));
    const Vector p = system.physio_zscore.apply(selected_physio_features(system, window));
    Vector out(f.size() + p.size());
    out << f, p;
    return out;
}

std::array<Prediction, 6> channel_predictions(const TrainedSystem& system, const WindowSample& window) {
    const Vector f = facial_features(system, window);
    const Vector p = selected_physio_features(system, window);
    std::array<Prediction, 6> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = classify::predict(system.facial_models[i], f);
        out[i + 3] = classify::predict(system.physio_models[i], p);
    }
    return out;
}

int vote(std::span<const int, 6> votes, int class_count) {
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    for (int v : votes) {
        if (v < 0 || v >= class_count) throw InvalidArgument("vote label out of range");
        ++counts[static_cast<std::size_t>(v)];
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    std::vector<bool> tied(counts.size(), false);
    for (std::size_t c = 0; c < counts.size(); ++c) tied[c] = counts[c] == top;

    // Facial votes inside the tied set.
    std::vector<int> facial(counts.size(), 0);
    for (std::size_t i = 0; i < 3; ++i) {
        if (tied[static_cast<std::size_t>(votes[i])]) ++facial[static_cast<std::size_t>(votes[i])];
    }
    const int facial_top = *std::max_element(facial.begin(), facial.end());
    if (facial_top > 0) {
        for (std::size_t c = 0; c < counts.size(); ++c) tied[c] = tied[c] && facial[c] == facial_top;
    }
    for (int v : votes) {
        if (tied[static_cast<std::size_t>(v)]) return v;
    }
    return 0;  // unreachable: the top-count label always has a voter
}

Prediction predict_decision_vote(const TrainedSystem& system, const WindowSample& window) {
    const auto preds = channel_predictions(system, window);
    std::array<int, 6> votes{};
    for (std::size_t i = 0; i < 6; ++i) votes[i] = preds[i].label;
    const int classes = class_count(system.config.task);
    Prediction out;
    out.label = vote(votes, classes);
    out.scores = Vector::Zero(classes);
    for (int v : votes) out.scores(v) += 1.0 / 6.0;
    return out;
}

Prediction predict_feature_fusion(const TrainedSystem& system, const WindowSample& window) {
    return classify::predict(system.fused_model, system.fused_pca.project(fused_input(system, window)));
}

Prediction predict(const TrainedSystem& system, const WindowSample& window) {
    const auto bank_index = [&] {
        const ClassifierKind kind = system.config.channel_classifier.value_or(ClassifierKind::QDA);
        return static_cast<std::size_t>(std::find(kBankOrder.begin(), kBankOrder.end(), kind) - kBankOrder.begin());
    };
    switch (system.config.mode) {
    case FusionMode::FACIAL_ONLY:
        return classify::predict(system.facial_models[bank_index()], facial_features(system, window));
    case FusionMode::PHYSIO_ONLY:
        return classify::predict(system.physio_models[bank_index()], selected_physio_features(system, window));
    case FusionMode::DECISION_VOTE: return predict_decision_vote(system, window);
    case FusionMode::FEATURE_FUSION: return predict_feature_fusion(system, window);
    }
    throw InvalidArgument("unknown fusion mode");
}

// -- Evaluation --------------------------------------------------------------------

CountMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth, int class_count) {
    if (predicted.size() != truth.size()) throw InvalidArgument("confusion: length mismatch");
    CountMatrix m = CountMatrix::Zero(class_count, class_count);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
            throw InvalidArgument("confusion: unknown label");
        }
        ++m(t, p);
    }
    return m;
}

std::vector<int> stratified_trial_folds(std::span<const int> trial_labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < trial_labels.size(); ++i) members[trial_labels[i]].push_back(i);
    std::vector<int> assignment(trial_labels.size(), -1);
    std::mt19937_64 rng(seed);
    int next = 0;
    for (auto& [label, idx] : members) {
        if (static_cast<int>(idx.size()) < folds) {
            throw InvalidArgument("stratification infeasible: class " + std::to_string(label) + " has " +
                                  std::to_string(idx.size()) + " trials for " + std::to_string(folds) + " folds");
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i : idx) {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    return assignment;
}

std::vector<EvalReport> crossvalidate_windows(std::span<const WindowSample> windows, Task task, int folds,
                                              std::uint64_t seed, const FoldTrainer& trainer) {
    std::vector<const WindowSample*> usable;
    std::size_t rejected = 0;
    std::map<std::string, std::size_t> trial_index;
    std::vector<int> trial_labels;
    for (const WindowSample& w : windows) {
        if (!w.physio) {
            ++rejected;
            continue;
        }
        usable.push_back(&w);
        if (trial_index.emplace(w.trial_id, trial_labels.size()).second) {
            trial_labels.push_back(task_label(task, w.label));
        }
    }
    const std::vector<int> fold_of = stratified_trial_folds(trial_labels, folds, derive_seed(seed, kStageSplit));
    const int classes = class_count(task);

    std::vector<EvalReport> reports;
    std::vector<std::vector<int>> predicted;
    std::vector<int> truth;
    for (int f = 0; f < folds; ++f) {
        std::vector<WindowSample> train;
        std::vector<const WindowSample*> test;
        for (const WindowSample* w : usable) {
            if (fold_of[trial_index.at(w->trial_id)] == f) {
                test.push_back(w);
            } else {
                train.push_back(*w);
            }
        }
        const std::vector<Candidate> candidates = trainer(train, f);
        if (reports.empty()) {
            for (const Candidate& c : candidates) {
                EvalReport r;
                r.task = task;
                r.classifier = c.name;
                r.chance_level = 1.0 / classes;
                r.folds = folds;
                r.rejected_windows = rejected;
                reports.push_back(std::move(r));
            }
            predicted.resize(candidates.size());
        } else if (candidates.size() != reports.size()) {
            throw InvalidArgument("fold trainer returned a varying number of candidates");
        }
        for (const WindowSample* w : test) truth.push_back(task_label(task, w->label));
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::size_t correct = 0;
            for (const WindowSample* w : test) {
                const int label = candidates[c].predict(*w);
                predicted[c].push_back(label);
                if (label == task_label(task, w->label)) ++correct;
            }
            reports[c].per_fold.push_back(test.empty() ? 0.0 : static_cast<Real>(correct) / static_cast<Real>(test.size()));
        }
    }
    for (std::size_t c = 0; c < reports.size(); ++c) {
        reports[c].confusion = confusion_matrix(predicted[c], truth, classes);
        const auto total = reports[c].confusion.sum();
        reports[c].accuracy = total > 0 ? static_cast<Real>(reports[c].confusion.trace()) / static_cast<Real>(total) : 0.0;
    }
    return reports;
}

EvalReport crossvalidate(std::span<const WindowSample> windows, const FusionConfig& config, int folds,
                         const FoldObserver& observer) {
    const FoldTrainer trainer = [&](std::span<const WindowSample> train, int fold) {
        FusionConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, kStageFold, static_cast<std::uint64_t>(fold));
        auto system = std::make_shared<const TrainedSystem>(
            train_system(train, fold_config));
        if (observer) observer(fold, *system, train);

        std::vector<Candidate> out;
        const auto bank_candidates = [&](bool facial) {
            for (std::size_t i = 0; i < kBankOrder.size(); ++i) {
                if (config.channel_classifier && *config.channel_classifier != kBankOrder[i]) continue;
                out.push_back({std::string(classify::to_string(kBankOrder[i])),
                               [system, facial, i](const WindowSample& w) {
                                   return facial ? classify::predict(system->facial_models[i], facial_features(*system, w)).label
                                                 : classify::predict(system->physio_models[i], selected_physio_features(*system, w)).label;
                               }});
            }
        };
        switch (config.mode) {
        case FusionMode::FACIAL_ONLY: bank_candidates(true); break;
        case FusionMode::PHYSIO_ONLY: bank_candidates(false); break;
        case FusionMode::DECISION_VOTE:
            out.push_back({"vote", [system](const WindowSample& w) { return predict_decision_vote(*system, w).label; }});
            break;
        case FusionMode::FEATURE_FUSION:
            out.push_back({"fused-" + std::string(classify::to_string(config.fusion_classifier)),
                           [system](const WindowSample& w) { return predict_feature_fusion(*system, w).label; }});
            break;
        }
        return out;
    };
    std::vector<EvalReport> reports = crossvalidate_windows(windows, config.task, folds, config.seed, trainer);
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].accuracy > reports[best].accuracy) best = i;
    }
    EvalReport report = std::move(reports[best]);
    report.mode = config.mode;
    return report;
}

EvalReport crossvalidate(const SessionDataset& dataset, const FusionConfig& config, int folds) {
    const auto windows = at_stage("windowing", [&] {
        return extract_windows(dataset, config.windowing, config.physio);
    });
    return crossvalidate(windows, config, folds);
}

std::string format_report(const EvalReport& report) {
    const auto names = class_names(report.task);
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "task " << to_string(report.task) << "  mode " << to_string(report.mode) << "  classifier "
        << report.classifier << '\n';
    out << "accuracy " << report.accuracy << "  chance " << report.chance_level << "  folds " << report.folds;
    if (report.rejected_windows > 0) out << "  rejected windows " << report.rejected_windows;
    out << "\nfold accuracy";
    for (Real a : report.per_fold) out << ' ' << a;
    out << "\n\nconfusion (rows true, columns predicted)\n" << std::setw(6) << "";
    for (const auto& n : names) out << std::setw(6) << n;
    out << '\n';
    for (Eigen::Index i = 0; i < report.confusion.rows(); ++i) {
        out << std::setw(6) << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < report.confusion.cols(); ++j) out << std::setw(6) << report.confusion(i, j);
        out << '\n';
    }
    return out.str();
}

}  // namespace emoglass
