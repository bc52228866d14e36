#include "emoglass/physio_features.hpp"

#include <algorithm>
#include <map>

namespace emoglass {

MinMaxScaler MinMaxScaler::fit(ConstMatrixRef data) {
    if (data.rows() == 0) throw InvalidArgument("min-max scaler needs at least one row");
    return MinMaxScaler{data.colwise().minCoeff().transpose(), data.colwise().maxCoeff().transpose()};
}

Vector MinMaxScaler::transform_row(ConstVectorRef row) const {
    if (row.size() != min.size()) throw InvalidArgument("min-max scaler: dimension mismatch");
    Vector out(row.size());
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        const Real span = max(j) - min(j);
        out(j) = span > 0.0 ? (row(j) - min(j)) / span : 0.0;
    }
    return out;
}

Matrix MinMaxScaler::transform(ConstMatrixRef data) const {
    Matrix out(data.rows(), data.cols());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out.row(i) = transform_row(data.row(i).transpose()).transpose();
    }
    return out;
}

Vector relieff_weights(ConstMatrixRef data, std::span<const int> labels, int k) {
    const Eigen::Index m = data.rows();
    const Eigen::Index a = data.cols();
    if (static_cast<Eigen::Index>(labels.size()) != m) {
        throw InvalidArgument("relieff: label count does not match instance count");
    }
    if (k < 1) throw InvalidArgument("relieff: k must be >= 1");

    std::map<int, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < m; ++i) members[labels[static_cast<std::size_t>(i)]].push_back(i);
    if (members.size() < 2) throw InvalidArgument("relieff: need at least two classes");
    for (const auto& [label, idx] : members) {
        if (static_cast<int>(idx.size()) < k + 1) {
            throw InvalidArgument("relieff: class " + std::to_string(label) + " has fewer than k+1 instances");
        }
    }

    Vector weights = Vector::Zero(a);
    const Real norm = static_cast<Real>(m) * static_cast<Real>(k);
    std::vector<Real> dist(static_cast<std::size_t>(m));
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            dist[static_cast<std::size_t>(j)] = (data.row(i) - data.row(j)).cwiseAbs().sum();
        }
        const int own = labels[static_cast<std::size_t>(i)];
        const Real own_prior =
            static_cast<Real>(members[own].size()) / static_cast<Real>(m);

        for (const auto& [label, idx] : members) {
            order.clear();
            for (Eigen::Index j : idx) {
                if (j != i) order.push_back(j);
            }
            std::partial_sort(order.begin(), order.begin() + k, order.end(),
                              [&](Eigen::Index lhs, Eigen::Index rhs) {
                                  const Real dl = dist[static_cast<std::size_t>(lhs)];
                                  const Real dr = dist[static_cast<std::size_t>(rhs)];
                                  return dl < dr || (dl == dr && lhs < rhs);
                              });
            Real factor = -1.0;  // nearest hits pull the weight down
            if (label != own) {
                const Real prior = static_cast<Real>(idx.size()) / static_cast<Real>(m);
                factor = prior / (1.0 - own_prior);
            }
            for (int n = 0; n < k; ++n) {
                const Eigen::Index j = order[static_cast<std::size_t>(n)];
                weights += (factor / norm) * (data.row(i) - data.row(j)).cwiseAbs().transpose();
            }
        }
    }
    return weights;
}

std::vector<bool> select_features(ConstVectorRef weights, Real threshold) {
    if (!weights.allFinite()) throw InvalidArgument("select_features: non-finite weight");
    std::vector<bool> mask(static_cast<std::size_t>(weights.size()), false);
    bool any = false;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        if (weights(j) > threshold) {
            mask[static_cast<std::size_t>(j)] = true;
            any = true;
        }
    }
    if (!any && weights.size() > 0) {
        Eigen::Index best = 0;
        weights.maxCoeff(&best);
        mask[static_cast<std::size_t>(best)] = true;
    }
    return mask;
}

}  // namespace emoglass
