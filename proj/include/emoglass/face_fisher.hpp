#ifndef EMOGLASS_FACE_FISHER_HPP
#define EMOGLASS_FACE_FISHER_HPP

#include "emoglass/physio_features.hpp"
#include "emoglass/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace emoglass::face {

/// Principal subspace of a data set: mean, orthonormal components (one per
/// column, descending eigenvalue) and the eigenvalues of every kept component.
struct EigenBasis {
    Vector mean;
    Matrix components;
    Vector eigenvalues;
    /// Sum of all covariance eigenvalues, kept or not.
    Real total_variance = 0.0;

    Eigen::Index dimension() const noexcept { return components.cols(); }
    Real retained_fraction() const { return eigenvalues.sum() / total_variance; }

    Vector project(ConstVectorRef x) const { return components.transpose() * (x - mean); }
    /// Rows of `data` projected onto the basis.
    Matrix project_rows(ConstMatrixRef data) const {
        return (data.rowwise() - mean.transpose()) * components;
    }
    Vector reconstruct(ConstVectorRef coefficients) const {
        return mean + components * coefficients;
    }
};

struct PcaOptions {
    /// Keep the smallest prefix whose eigenvalue sum exceeds this fraction of the total.
    Real energy = 0.9;
    /// Upper bound on the number of components (the N - C singularity guard).
    std::optional<Eigen::Index> max_components;
};

/// PCA of `data` (one observation per row) via the covariance eigenproblem,
/// or the N x N Gram matrix when there are more columns than rows. Throws
/// NumericalError when the data have zero covariance.
EigenBasis fit_pca(ConstMatrixRef data, const PcaOptions& options = {});

struct LdaResult {
    Matrix weights;     // p x d, unit-length columns
    Vector eigenvalues;  // generalized eigenvalues, descending
};

/// Fisher discriminant directions: the top d <= C - 1 generalized eigenvectors
/// of (S_B, S_W + eps I) with eps = 1e-6 trace(S_W) / p. Each column is
/// normalised with its largest-magnitude entry positive.
LdaResult fit_lda(ConstMatrixRef projected, std::span<const int> labels);

/// Between-class and within-class scatter of row data.
struct Scatter {
    Matrix between;
    Matrix within;
};
Scatter scatter_matrices(ConstMatrixRef data, std::span<const int> labels);

struct FisherModel {
    int width = 0;
    int height = 0;
    EigenBasis basis;
    Matrix w_lda;
    Vector lda_eigenvalues;
    int class_count = 0;

    Eigen::Index output_dimension() const noexcept { return w_lda.cols(); }
};

/// Flattens images row by row into one observation per row, scaled to [0, 1].
Matrix image_rows(std::span<const Image> images);
Vector image_row(const Image& image);

/// PCA (90% energy, capped at N - C components) followed by LDA.
FisherModel fit_fisherface(std::span<const Image> images, std::span<const int> labels,
                           Real energy = 0.9);

/// Facial features w_lda^T components^T (x - mean) of one image.
Vector project(const FisherModel& model, const Image& image);

FeatureVector facial_vector(const FisherModel& model, const Image& image);

}  // namespace emoglass::face

#endif  // EMOGLASS_FACE_FISHER_HPP
