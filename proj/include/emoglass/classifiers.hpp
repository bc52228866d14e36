#ifndef EMOGLASS_CLASSIFIERS_HPP
#define EMOGLASS_CLASSIFIERS_HPP

#include "emoglass/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace emoglass::classify {

enum class ClassifierKind { QDA, GMM, KNN };

inline constexpr std::array<ClassifierKind, 3> kClassifierKinds{ClassifierKind::QDA,
                                                                ClassifierKind::GMM,
                                                                ClassifierKind::KNN};

std::string_view to_string(ClassifierKind kind);
/// Accepts "qda", "gmm", "knn" in any case; throws InvalidArgument otherwise.
ClassifierKind parse_classifier_kind(std::string_view text);

/// Multivariate normal with a cached Cholesky factor.
class Gaussian {
public:
    Gaussian() = default;
    /// Throws NumericalError if the covariance is not positive-definite.
    Gaussian(Vector mean, Matrix covariance);

    const Vector& mean() const noexcept { return mean_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    Real log_det() const noexcept { return log_det_; }
    Real log_density(ConstVectorRef x) const;

private:
    Vector mean_;
    Matrix covariance_;
    Matrix lower_;
    Real log_det_ = 0.0;
};

struct QdaModel {
    std::vector<Gaussian> classes;
    Vector log_priors;
    Real shrinkage = 0.0;
};

struct Mixture {
    Vector weights;
    std::vector<Gaussian> components;
    /// Data log-likelihood at every EM iteration, for diagnostics.
    std::vector<Real> log_likelihood;

    Real log_density(ConstVectorRef x) const;
};

struct GmmModel {
    std::vector<Mixture> classes;
    Vector log_priors;
};

struct KnnModel {
    Matrix train;  // z-scored training vectors, one per row
    std::vector<int> labels;
    Vector center;
    Vector scale;
    int k = 5;
};

struct ClassifierModel {
    ClassifierKind kind = ClassifierKind::QDA;
    int class_count = 0;
    Eigen::Index dimension = 0;
    std::variant<QdaModel, GmmModel, KnnModel> params;
};

struct Prediction {
    int label = 0;
    /// Log-posterior per class for QDA / GMM, vote fraction for KNN.
    Vector scores;
};

/// Index of the largest score; the lowest index wins ties.
int argmax(ConstVectorRef scores);

/// Per-class Gaussian with uniform priors. When any class has fewer than
/// dim + 1 instances the covariances shrink toward their diagonal by 0.1.
ClassifierModel train_qda(ConstMatrixRef x, std::span<const int> labels, int class_count);

struct GmmOptions {
    int n_components = 2;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    Real tolerance = 1e-8;
    Real covariance_floor = 1e-6;
    Real min_weight = 1e-6;
};

/// EM fit of a full-covariance mixture, initialised by seeded k-means++.
/// Covariance eigenvalues are clipped at the floor; a component whose weight
/// drops below min_weight triggers a single-component refit.
Mixture fit_mixture(ConstMatrixRef x, const GmmOptions& options);

/// One mixture per class (seed + class index), class priors 1 / C.
ClassifierModel train_gmm(ConstMatrixRef x, std::span<const int> labels, int class_count,
                          const GmmOptions& options = {});

/// Stores z-scored training vectors. Prediction is the majority label of the
/// k nearest neighbours; tied labels go to the nearest neighbour among them.
ClassifierModel train_knn(ConstMatrixRef x, std::span<const int> labels, int class_count, int k = 5);

struct TrainOptions {
    int knn_k = 5;
    GmmOptions gmm;
};

ClassifierModel train(ClassifierKind kind, ConstMatrixRef x, std::span<const int> labels,
                      int class_count, const TrainOptions& options = {});

Prediction predict(const ClassifierModel& model, ConstVectorRef x);

}  // namespace emoglass::classify

#endif  // EMOGLASS_CLASSIFIERS_HPP
