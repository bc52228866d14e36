#ifndef EMOGLASS_FUSION_HPP
#define EMOGLASS_FUSION_HPP

#include "emoglass/classifiers.hpp"
#include "emoglass/core.hpp"
#include "emoglass/face_fisher.hpp"
#include "emoglass/physio_features.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emoglass {

enum class FusionMode { FACIAL_ONLY, PHYSIO_ONLY, DECISION_VOTE, FEATURE_FUSION };
enum class Task { QUADRANT, AROUSAL, VALENCE };

std::string_view to_string(FusionMode mode);
std::string_view to_string(Task task);
/// Case-insensitive; accepts '-' for '_' ("feature-fusion").
FusionMode parse_fusion_mode(std::string_view text);
Task parse_task(std::string_view text);

int class_count(Task task);
/// Class index of a label under a task. Binary tasks map HIGH to 0 and LOW to 1.
int task_label(Task task, EmotionLabel label);
std::vector<std::string> class_names(Task task);

struct FusionConfig {
    FusionMode mode = FusionMode::FEATURE_FUSION;
    Task task = Task::QUADRANT;
    classify::ClassifierKind fusion_classifier = classify::ClassifierKind::QDA;
    /// Classifier used by the single-channel modes. Unset: cross-validation
    /// reports the best of the three and prediction uses QDA.
    std::optional<classify::ClassifierKind> channel_classifier;
    std::uint64_t seed = 0;

    WindowingOptions windowing;
    PhysioOptions physio;
    int knn_k = 5;
    int gmm_components = 2;
    int relieff_k = 10;
    Real relieff_threshold = 0.0;
    /// Upper bound on selected physiological features. Unset: one less than the
    /// smallest per-class trial count, and small enough for the GMM instance
    /// requirement.
    std::optional<int> max_selected_features;
    Real face_energy = 0.9;
    Real fusion_energy = 0.9;
};

/// Features of one observation window, computed once per dataset.
struct WindowSample {
    std::string trial_id;
    Real offset_s = 0.0;
    EmotionLabel label;
    /// Raw physiological vector; empty when the window was rejected.
    std::optional<Vector> physio;
    std::string reject_reason;
    Image face;  // averaged frame
};

/// Windows of every trial with their physiological vectors and averaged frames.
/// Feature extraction failures mark the window rejected instead of throwing.
std::vector<WindowSample> extract_windows(const SessionDataset& dataset,
                                          const WindowingOptions& windowing = {},
                                          const PhysioOptions& physio = {});

/// Physiological features as CSV: header = feature names + "label".
void write_feature_csv(std::span<const WindowSample> windows, const std::filesystem::path& path);

/// Column-wise z-score with sample standard deviation; zero deviation maps to 1.
struct ZScore {
    Vector mean;
    Vector scale;

    static ZScore fit(ConstMatrixRef data);
    Vector apply(ConstVectorRef x) const { return (x - mean).cwiseQuotient(scale); }
};

/// Index of each classifier in a channel bank; also the vote priority order.
inline constexpr std::array<classify::ClassifierKind, 3> kBankOrder{
    classify::ClassifierKind::QDA, classify::ClassifierKind::GMM, classify::ClassifierKind::KNN};

struct TrainedSystem {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    FusionConfig config;
    face::FisherModel fisher;
    MinMaxScaler physio_scaler;
    Vector relieff_weights;
    std::vector<bool> relieff_mask;
    std::array<classify::ClassifierModel, 3> facial_models;
    std::array<classify::ClassifierModel, 3> physio_models;

    // Feature-level fusion (FEATURE_FUSION only).
    bool has_fused = false;
    ZScore facial_zscore;
    ZScore physio_zscore;
    face::EigenBasis fused_pca;
    classify::ClassifierModel fused_model;
};

/// Trains every stage on the given windows. Rejected windows are skipped.
/// Throws TrainingError naming the failing stage.
TrainedSystem train_system(std::span<const WindowSample> windows, const FusionConfig& config);
TrainedSystem train_system(const SessionDataset& dataset, const FusionConfig& config);

Vector facial_features(const TrainedSystem& system, const WindowSample& window);
/// Min-max scaled physiological features restricted to the ReliefF mask.
Vector selected_physio_features(const TrainedSystem& system, const WindowSample& window);
/// Concatenated z-scored channels before the fused PCA.
Vector fused_input(const TrainedSystem& system, const WindowSample& window);

/// Predictions of the six channel classifiers in vote priority order:
/// facial QDA, GMM, KNN, then physiological QDA, GMM, KNN.
std::array<classify::Prediction, 6> channel_predictions(const TrainedSystem& system,
                                                        const WindowSample& window);

/// Majority vote over six labels in priority order. Ties are settled by the
/// facial votes inside the tied set, then by the highest-priority voter.
int vote(std::span<const int, 6> votes, int class_count);

classify::Prediction predict_decision_vote(const TrainedSystem& system, const WindowSample& window);
classify::Prediction predict_feature_fusion(const TrainedSystem& system, const WindowSample& window);
/// Prediction in the system's configured mode.
classify::Prediction predict(const TrainedSystem& system, const WindowSample& window);

// -- Evaluation -------------------------------------------------------------------

using CountMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// Entry (i, j) counts true class i predicted as j.
CountMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth,
                             int class_count);

struct EvalReport {
    Task task = Task::QUADRANT;
    FusionMode mode = FusionMode::FEATURE_FUSION;
    std::string classifier;
    Real accuracy = 0.0;
    CountMatrix confusion;
    std::vector<Real> per_fold;
    Real chance_level = 0.0;
    int folds = 0;
    std::size_t rejected_windows = 0;
};

/// Fold index of every trial: per-class seeded shuffle, dealt round-robin.
/// Throws InvalidArgument when a class has fewer trials than folds.
std::vector<int> stratified_trial_folds(std::span<const int> trial_labels, int folds,
                                        std::uint64_t seed);

using WindowPredictor = std::function<int(const WindowSample&)>;

struct Candidate {
    std::string name;
    WindowPredictor predict;
};

/// Trains on one fold's training windows and returns named predictors.
using FoldTrainer =
    std::function<std::vector<Candidate>(std::span<const WindowSample> train, int fold)>;

/// Trial-level stratified k-fold over pre-extracted windows; one report per
/// candidate, all sharing the same folds. Rejected windows are excluded.
std::vector<EvalReport> crossvalidate_windows(std::span<const WindowSample> windows, Task task,
                                              int folds, std::uint64_t seed,
                                              const FoldTrainer& trainer);

/// Called with every fold's trained system and its training windows.
using FoldObserver =
    std::function<void(int fold, const TrainedSystem&, std::span<const WindowSample> train)>;

/// Cross-validation of the configured mode. Single-channel modes without a
/// channel classifier report the best of the three by accuracy.
EvalReport crossvalidate(std::span<const WindowSample> windows, const FusionConfig& config,
                         int folds = 4, const FoldObserver& observer = {});
EvalReport crossvalidate(const SessionDataset& dataset, const FusionConfig& config, int folds = 4);

/// Plain-text report with the confusion table.
std::string format_report(const EvalReport& report);
/// Structured text (JSON) of the report.
std::string report_json(const EvalReport& report);

// -- Persistence ------------------------------------------------------------------

std::string serialize(const TrainedSystem& system);
/// Throws FormatError on a malformed document and VersionError on an unknown version.
TrainedSystem deserialize(std::string_view text);

void save_system(const TrainedSystem& system, const std::filesystem::path& path);
TrainedSystem load_system(const std::filesystem::path& path);

/// JSON text of a configuration (embedded in every artifact).
std::string config_json(const FusionConfig& config);
FusionConfig parse_config_json(std::string_view text);

}  // namespace emoglass

#endif  // EMOGLASS_FUSION_HPP
