#include "emoglass/classifiers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace emoglass::classify {

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::QDA: return "QDA";
    case ClassifierKind::GMM: return "GMM";
    case ClassifierKind::KNN: return "KNN";
    }
    return "?";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (ClassifierKind kind : kClassifierKinds) {
        if (to_string(kind) == upper) return kind;
    }
    throw InvalidArgument("unknown classifier '" + std::string(text) + "'");
}

Gaussian::Gaussian(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    Eigen::LLT<Matrix> llt(covariance_);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive-definite");
    lower_ = llt.matrixL();
    log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

Real Gaussian::log_density(ConstVectorRef x) const {
    const Vector z = lower_.triangularView<Eigen::Lower>().solve(x - mean_);
    const auto d = static_cast<Real>(mean_.size());
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det_ + z.squaredNorm());
}

namespace {

Real log_sum_exp(ConstVectorRef v) {
    const Real top = v.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((v.array() - top).exp().sum());
}

std::vector<std::vector<Eigen::Index>> group_by_class(std::span<const int> labels, int class_count,
                                                      Eigen::Index rows) {
    if (static_cast<Eigen::Index>(labels.size()) != rows) {
        throw InvalidArgument("label count does not match the number of training vectors");
    }
    if (class_count < 1) throw InvalidArgument("class count must be positive");
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(class_count));
    for (Eigen::Index i = 0; i < rows; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= class_count) throw InvalidArgument("label out of range");
        members[static_cast<std::size_t>(label)].push_back(i);
    }
    for (int c = 0; c < class_count; ++c) {
        if (members[static_cast<std::size_t>(c)].empty()) {
            throw InvalidArgument("class " + std::to_string(c) + " is absent from the training data");
        }
    }
    return members;
}

Matrix gather_rows(ConstMatrixRef x, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

// Adds the smallest ridge (growing by 10x) that makes the covariance factorizable.
Gaussian make_gaussian(Vector mean, Matrix cov) {
    cov = 0.5 * (cov + cov.transpose());
    Real ridge = 1e-10 * std::max(cov.diagonal().mean(), 1e-12);
    for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) return Gaussian(std::move(mean), std::move(cov));
        cov.diagonal().array() += ridge;
        ridge *= 10.0;
    }
    throw NumericalError("covariance could not be regularized");
}

// Eigenvalues clipped at `floor`: the constrained maximizer of the Gaussian likelihood.
Matrix clip_covariance(const Matrix& cov, Real floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (cov + cov.transpose()));
    const Vector clipped = solver.eigenvalues().cwiseMax(floor);
    Matrix out = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Vector normalize_log_scores(const Vector& joint) {
    return joint.array() - log_sum_exp(joint);
}

void check_query(const ClassifierModel& model, ConstVectorRef x) {
    if (x.size() != model.dimension) throw InvalidArgument("feature dimension mismatch");
    if (!x.allFinite()) throw InvalidArgument("non-finite feature value");
}

}  // namespace

int argmax(ConstVectorRef scores) {
    int best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
        if (scores(i) > scores(best)) best = static_cast<int>(i);
    }
    return best;
}

ClassifierModel train_qda(ConstMatrixRef x, std::span<const int> labels, int class_count) {
    const auto members = group_by_class(labels, class_count, x.rows());
    const Eigen::Index dim = x.cols();
    QdaModel qda;
    for (const auto& idx : members) {
        if (static_cast<Eigen::Index>(idx.size()) < dim + 1) qda.shrinkage = 0.1;
    }
    for (const auto& idx : members) {
        const Matrix rows = gather_rows(x, idx);
        const Vector mean = rows.colwise().mean().transpose();
        Matrix cov = Matrix::Zero(dim, dim);
        if (rows.rows() > 1) {
            const Matrix centered = rows.rowwise() - mean.transpose();
            cov = centered.transpose() * centered / static_cast<Real>(rows.rows() - 1);
        }
        if (qda.shrinkage > 0.0) {
            const Matrix diag = cov.diagonal().asDiagonal();
            cov = (1.0 - qda.shrinkage) * cov + qda.shrinkage * diag;
        }
        qda.classes.push_back(make_gaussian(mean, std::move(cov)));
    }
    qda.log_priors = Vector::Constant(class_count, -std::log(static_cast<Real>(class_count)));
    return ClassifierModel{ClassifierKind::QDA, class_count, dim, std::move(qda)};
}

Real Mixture::log_density(ConstVectorRef x) const {
    Vector terms(static_cast<Eigen::Index>(components.size()));
    for (std::size_t j = 0; j < components.size(); ++j) {
        terms(static_cast<Eigen::Index>(j)) = std::log(weights(static_cast<Eigen::Index>(j))) +
                                               components[j].log_density(x);
    }
    return log_sum_exp(terms);
}

namespace {

// Seeded k-means++ followed by Lloyd iterations; returns hard assignments.
std::vector<int> kmeans_assign(ConstMatrixRef x, int k, std::uint64_t seed) {
    const Eigen::Index n = x.rows();
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> centers_idx;
    centers_idx.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
    Vector d2(n);
    while (static_cast<int>(centers_idx.size()) < k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Real best = std::numeric_limits<Real>::infinity();
            for (Eigen::Index c : centers_idx) best = std::min(best, (x.row(i) - x.row(c)).squaredNorm());
            d2(i) = best;
        }
        const Real total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            Real u = std::uniform_real_distribution<Real>(0.0, total)(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                u -= d2(pick);
                if (u < 0.0) break;
            }
        }
        centers_idx.push_back(pick);
    }
    Matrix centers(k, x.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = x.row(centers_idx[static_cast<std::size_t>(c)]);

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            Real best_d = (x.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const Real d = (x.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            Vector sum = Vector::Zero(x.cols());
            int count = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (assign[static_cast<std::size_t>(i)] == c) {
                    sum += x.row(i).transpose();
                    ++count;
                }
            }
            if (count > 0) centers.row(c) = (sum / count).transpose();
        }
    }
    return assign;
}

}  // namespace

Mixture fit_mixture(ConstMatrixRef x, const GmmOptions& options) {
    const Eigen::Index n = x.rows();
    const Eigen::Index dim = x.cols();
    const int k = options.n_components;
    if (k < 1) throw InvalidArgument("GMM needs at least one component");
    if (n < static_cast<Eigen::Index>(k) * (dim + 1)) {
        throw InvalidArgument("insufficient instances for a " + std::to_string(k) +
                              "-component GMM in " + std::to_string(dim) + " dimensions");
    }

    // Initial parameters from the k-means partition.
    const std::vector<int> assign = kmeans_assign(x, k, options.seed);
    Matrix resp = Matrix::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) resp(i, assign[static_cast<std::size_t>(i)]) = 1.0;

    Mixture mix;
    auto m_step = [&]() -> bool {
        mix.weights.resize(k);
        mix.components.clear();
        for (int j = 0; j < k; ++j) {
            const Real nj = resp.col(j).sum();
            if (nj / static_cast<Real>(n) < options.min_weight) return false;
            const Vector mean = (x.transpose() * resp.col(j)) / nj;
            const Matrix centered = x.rowwise() - mean.transpose();
            const Matrix cov =
                centered.transpose() * resp.col(j).asDiagonal() * centered / nj;
            mix.weights(j) = nj / static_cast<Real>(n);
            mix.components.push_back(make_gaussian(mean, clip_covariance(cov, options.covariance_floor)));
        }
        return true;
    };

    if (!m_step()) {
        GmmOptions single = options;
        single.n_components = 1;
        return fit_mixture(x, single);
    }
    Matrix log_terms(n, k);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        // E-step and log-likelihood of the current parameters.
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                log_terms(i, j) = std::log(mix.weights(j)) + mix.components[static_cast<std::size_t>(j)].log_density(x.row(i).transpose());
            }
        }
        Real ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Real norm = log_sum_exp(log_terms.row(i).transpose());
            ll += norm;
            resp.row(i) = (log_terms.row(i).array() - norm).exp();
        }
        const bool converged =
            !mix.log_likelihood.empty() && ll - mix.log_likelihood.back() < options.tolerance;
        mix.log_likelihood.push_back(ll);
        if (converged) break;
        if (!m_step()) {
            if (k == 1) throw NumericalError("GMM collapsed to an empty component");
            GmmOptions single = options;
            single.n_components = 1;
            return fit_mixture(x, single);
        }
    }
    return mix;
}

ClassifierModel train_gmm(ConstMatrixRef x, std::span<const int> labels, int class_count,
                          const GmmOptions& options) {
    const auto members = group_by_class(labels, class_count, x.rows());
    GmmModel gmm;
    for (int c = 0; c < class_count; ++c) {
        GmmOptions per_class = options;
        per_class.seed = options.seed + static_cast<std::uint64_t>(c);
        gmm.classes.push_back(fit_mixture(gather_rows(x, members[static_cast<std::size_t>(c)]), per_class));
    }
    gmm.log_priors = Vector::Constant(class_count, -std::log(static_cast<Real>(class_count)));
    return ClassifierModel{ClassifierKind::GMM, class_count, x.cols(), std::move(gmm)};
}

ClassifierModel train_knn(ConstMatrixRef x, std::span<const int> labels, int class_count, int k) {
    group_by_class(labels, class_count, x.rows());
    if (k < 1) throw InvalidArgument("KNN k must be >= 1");
    if (k > x.rows()) throw InvalidArgument("KNN k exceeds the number of training vectors");
    KnnModel knn;
    knn.k = k;
    knn.center = x.colwise().mean().transpose();
    knn.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const Real sd = x.rows() > 1 ? std::sqrt((x.col(j).array() - knn.center(j)).square().sum() /
                                                 static_cast<Real>(x.rows() - 1))
                                     : 0.0;
        knn.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    knn.train = (x.rowwise() - knn.center.transpose()).array().rowwise() / knn.scale.transpose().array();
    knn.labels.assign(labels.begin(), labels.end());
    return ClassifierModel{ClassifierKind::KNN, class_count, x.cols(), std::move(knn)};
}

ClassifierModel train(ClassifierKind kind, ConstMatrixRef x, std::span<const int> labels,
                      int class_count, const TrainOptions& options) {
    switch (kind) {
    case ClassifierKind::QDA: return train_qda(x, labels, class_count);
    case ClassifierKind::GMM: return train_gmm(x, labels, class_count, options.gmm);
    case ClassifierKind::KNN: return train_knn(x, labels, class_count, options.knn_k);
    }
    throw InvalidArgument("unknown classifier kind");
}

Prediction predict(const ClassifierModel& model, ConstVectorRef x) {
    check_query(model, x);
    Prediction out;
    if (const auto* qda = std::get_if<QdaModel>(&model.params)) {
        Vector joint(model.class_count);
        for (int c = 0; c < model.class_count; ++c) {
            joint(c) = qda->log_priors(c) + qda->classes[static_cast<std::size_t>(c)].log_density(x);
        }
        out.scores = normalize_log_scores(joint);
        out.label = argmax(out.scores);
    } else if (const auto* gmm = std::get_if<GmmModel>(&model.params)) {
        Vector joint(model.class_count);
        for (int c = 0; c < model.class_count; ++c) {
            joint(c) = gmm->log_priors(c) + gmm->classes[static_cast<std::size_t>(c)].log_density(x);
        }
        out.scores = normalize_log_scores(joint);
        out.label = argmax(out.scores);
    } else {
        const auto& knn = std::get<KnnModel>(model.params);
        const Vector z = (x - knn.center).cwiseQuotient(knn.scale);
        const Eigen::Index n = knn.train.rows();
        std::vector<Real> dist(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            dist[static_cast<std::size_t>(i)] = (knn.train.row(i).transpose() - z).squaredNorm();
        }
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::partial_sort(order.begin(), order.begin() + knn.k, order.end(),
                          [&](Eigen::Index a, Eigen::Index b) {
                              const Real da = dist[static_cast<std::size_t>(a)];
                              const Real db = dist[static_cast<std::size_t>(b)];
                              return da < db || (da == db && a < b);
                          });
        Vector votes = Vector::Zero(model.class_count);
        for (int i = 0; i < knn.k; ++i) {
            votes(knn.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) += 1.0;
        }
        const Real top = votes.maxCoeff();
        out.label = -1;
        for (int i = 0; i < knn.k && out.label < 0; ++i) {
            const int label = knn.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            if (votes(label) == top) out.label = label;
        }
        out.scores = votes / static_cast<Real>(knn.k);
    }
    return out;
}

}  // namespace emoglass::classify
