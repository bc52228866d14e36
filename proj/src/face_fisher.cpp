#include "emoglass/face_fisher.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <set>

namespace emoglass::face {

namespace {

// Unit length, largest-magnitude entry positive (first index wins ties).
void canonicalize_column(Eigen::Ref<Vector> v) {
    v.normalize();
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0.0) v = -v;
}

}  // namespace

EigenBasis fit_pca(ConstMatrixRef data, const PcaOptions& options) {
    const Eigen::Index n = data.rows();
    const Eigen::Index dim = data.cols();
    if (n < 2) throw InvalidArgument("PCA needs at least 2 observations");
    if (!(options.energy > 0.0 && options.energy <= 1.0)) {
        throw InvalidArgument("PCA energy fraction must lie in (0, 1]");
    }

    EigenBasis basis;
    basis.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - basis.mean.transpose();
    const Real denom = static_cast<Real>(n - 1);

    Vector values;
    Matrix vectors;
    if (dim > n) {
        // Gram trick: eigenvectors of X X^T map to covariance eigenvectors via X^T.
        const Matrix gram = centered * centered.transpose() / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
        if (solver.info() != Eigen::Success) throw NumericalError("PCA eigen-solver failed");
        values = solver.eigenvalues();
        vectors = centered.transpose() * solver.eigenvectors();
    } else {
        const Matrix cov = centered.transpose() * centered / denom;
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
        if (solver.info() != Eigen::Success) throw NumericalError("PCA eigen-solver failed");
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    }

    // Ascending from the solver; walk from the top.
    const Real largest = values.size() > 0 ? values.maxCoeff() : 0.0;
    if (!(largest > 0.0)) throw NumericalError("PCA of data with zero covariance");
    const Real floor = largest * 1e-12 * static_cast<Real>(std::max(n, dim));
    std::vector<Eigen::Index> kept;
    Real total = 0.0;
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
        if (values(i) <= floor) break;
        kept.push_back(i);
        total += values(i);
    }
    basis.total_variance = total;

    Eigen::Index p = 0;
    Real cumulative = 0.0;
    while (p < static_cast<Eigen::Index>(kept.size())) {
        cumulative += values(kept[static_cast<std::size_t>(p)]);
        ++p;
        if (cumulative > options.energy * total) break;
    }
    if (options.max_components) p = std::min(p, std::max<Eigen::Index>(1, *options.max_components));

    basis.components.resize(dim, p);
    basis.eigenvalues.resize(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        const Eigen::Index src = kept[static_cast<std::size_t>(c)];
        basis.components.col(c) = vectors.col(src);
        canonicalize_column(basis.components.col(c));
        basis.eigenvalues(c) = values(src);
    }
    return basis;
}

Scatter scatter_matrices(ConstMatrixRef data, std::span<const int> labels) {
    const Eigen::Index p = data.cols();
    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        members[labels[static_cast<std::size_t>(i)]].push_back(i);
    }
    const Vector mu = data.colwise().mean().transpose();
    Scatter s{Matrix::Zero(p, p), Matrix::Zero(p, p)};
    for (const auto& [label, idx] : members) {
        Vector mu_c = Vector::Zero(p);
        for (Eigen::Index i : idx) mu_c += data.row(i).transpose();
        mu_c /= static_cast<Real>(idx.size());
        for (Eigen::Index i : idx) {
            const Vector d = data.row(i).transpose() - mu_c;
            s.within.noalias() += d * d.transpose();
        }
        const Vector b = mu_c - mu;
        s.between.noalias() += static_cast<Real>(idx.size()) * b * b.transpose();
    }
    return s;
}

LdaResult fit_lda(ConstMatrixRef projected, std::span<const int> labels) {
    const Eigen::Index p = projected.cols();
    if (static_cast<Eigen::Index>(labels.size()) != projected.rows()) {
        throw InvalidArgument("LDA: label count does not match observation count");
    }
    std::map<int, int> counts;
    for (int label : labels) ++counts[label];
    if (counts.size() < 2) throw InvalidArgument("LDA needs at least 2 classes");
    for (const auto& [label, count] : counts) {
        if (count < 2) {
            throw InvalidArgument("LDA: class " + std::to_string(label) + " has a single instance");
        }
    }

    const Scatter s = scatter_matrices(projected, labels);
    Real epsilon = 1e-6 * s.within.trace() / static_cast<Real>(p);
    if (!(epsilon > 0.0)) epsilon = 1e-12;
    const Matrix regularized = s.within + epsilon * Matrix::Identity(p, p);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(s.between, regularized);
    if (solver.info() != Eigen::Success) throw NumericalError("LDA eigen-solver failed");
    const Vector& values = solver.eigenvalues();
    const Real largest = values.maxCoeff();

    const Eigen::Index max_d = std::min<Eigen::Index>(static_cast<Eigen::Index>(counts.size()) - 1, p);
    std::vector<Eigen::Index> picked;
    for (Eigen::Index i = values.size() - 1; i >= 0 && static_cast<Eigen::Index>(picked.size()) < max_d; --i) {
        if (!(values(i) > 1e-10 * std::max(largest, 1e-300))) break;
        picked.push_back(i);
    }
    if (picked.empty() || !(largest > 0.0)) {
        throw NumericalError("LDA found no discriminant direction (d = 0)");
    }

    LdaResult result;
    const auto d = static_cast<Eigen::Index>(picked.size());
    result.weights.resize(p, d);
    result.eigenvalues.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        result.weights.col(c) = solver.eigenvectors().col(picked[static_cast<std::size_t>(c)]);
        canonicalize_column(result.weights.col(c));
        result.eigenvalues(c) = values(picked[static_cast<std::size_t>(c)]);
    }
    return result;
}

Vector image_row(const Image& image) {
    return Eigen::Map<const Vector>(image.data(), image.size()) / 255.0;
}

Matrix image_rows(std::span<const Image> images) {
    if (images.empty()) throw InvalidArgument("no images");
    const Eigen::Index rows = images.front().rows();
    const Eigen::Index cols = images.front().cols();
    Matrix data(static_cast<Eigen::Index>(images.size()), rows * cols);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].rows() != rows || images[i].cols() != cols) {
            throw InvalidArgument("image dimension mismatch");
        }
        data.row(static_cast<Eigen::Index>(i)) = image_row(images[i]).transpose();
    }
    return data;
}

FisherModel fit_fisherface(std::span<const Image> images, std::span<const int> labels, Real energy) {
    if (images.size() != labels.size()) {
        throw InvalidArgument("Fisherface: image count does not match label count");
    }
    if (images.size() < 2) throw InvalidArgument("Fisherface needs at least 2 images");
    const Matrix data = image_rows(images);
    const auto n = static_cast<Eigen::Index>(images.size());
    const auto classes = static_cast<Eigen::Index>(std::set<int>(labels.begin(), labels.end()).size());

    FisherModel model;
    model.width = static_cast<int>(images.front().cols());
    model.height = static_cast<int>(images.front().rows());
    model.class_count = static_cast<int>(classes);
    model.basis = fit_pca(data, PcaOptions{energy, n - classes});
    LdaResult lda = fit_lda(model.basis.project_rows(data), labels);
    model.w_lda = std::move(lda.weights);
    model.lda_eigenvalues = std::move(lda.eigenvalues);
    return model;
}

Vector project(const FisherModel& model, const Image& image) {
    if (image.cols() != model.width || image.rows() != model.height) {
        throw InvalidArgument("image dimensions do not match the Fisherface model");
    }
    return model.w_lda.transpose() * model.basis.project(image_row(image));
}

FeatureVector facial_vector(const FisherModel& model, const Image& image) {
    FeatureVector v;
    v.values = project(model, image);
    for (Eigen::Index i = 0; i < v.values.size(); ++i) {
        v.names.push_back("fisher_" + std::to_string(i));
    }
    v.channel_tag = ChannelTag::FACIAL;
    return v;
}

}  // namespace emoglass::face
