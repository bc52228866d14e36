#include "emoglass/fusion.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace emoglass {

using nlohmann::json;

namespace {

using classify::ClassifierKind;
using classify::ClassifierModel;

json to_json(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

json to_json(const Vector& v) {
    json data = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
    return data;
}

Matrix matrix_from(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
        throw FormatError("matrix size does not match its data");
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data.at(k++).get<Real>();
    }
    return m;
}

Vector vector_from(const json& j) {
    if (!j.is_array()) throw FormatError("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<Real>();
    return v;
}

json to_json(const classify::Gaussian& g) {
    return {{"mean", to_json(g.mean())}, {"covariance", to_json(g.covariance())}};
}

classify::Gaussian gaussian_from(const json& j) {
    return classify::Gaussian(vector_from(j.at("mean")), matrix_from(j.at("covariance")));
}

json to_json(const ClassifierModel& model) {
    json j{{"kind", std::string(classify::to_string(model.kind))},
           {"class_count", model.class_count},
           {"dimension", model.dimension}};
    if (const auto* qda = std::get_if<classify::QdaModel>(&model.params)) {
        json classes = json::array();
        for (const auto& g : qda->classes) classes.push_back(to_json(g));
        j["classes"] = std::move(classes);
        j["log_priors"] = to_json(qda->log_priors);
        j["shrinkage"] = qda->shrinkage;
    } else if (const auto* gmm = std::get_if<classify::GmmModel>(&model.params)) {
        json classes = json::array();
        for (const auto& mix : gmm->classes) {
            json comps = json::array();
            for (const auto& g : mix.components) comps.push_back(to_json(g));
            classes.push_back({{"weights", to_json(mix.weights)},
                               {"components", std::move(comps)},
                               {"log_likelihood", mix.log_likelihood}});
        }
        j["classes"] = std::move(classes);
        j["log_priors"] = to_json(gmm->log_priors);
    } else {
        const auto& knn = std::get<classify::KnnModel>(model.params);
        j["train"] = to_json(knn.train);
        j["labels"] = knn.labels;
        j["center"] = to_json(knn.center);
        j["scale"] = to_json(knn.scale);
        j["k"] = knn.k;
    }
    return j;
}

ClassifierModel classifier_from(const json& j) {
    ClassifierModel model;
    model.kind = classify::parse_classifier_kind(j.at("kind").get<std::string>());
    model.class_count = j.at("class_count").get<int>();
    model.dimension = j.at("dimension").get<Eigen::Index>();
    switch (model.kind) {
    case ClassifierKind::QDA: {
        classify::QdaModel qda;
        for (const json& g : j.at("classes")) qda.classes.push_back(gaussian_from(g));
        qda.log_priors = vector_from(j.at("log_priors"));
        qda.shrinkage = j.at("shrinkage").get<Real>();
        model.params = std::move(qda);
        break;
    }
    case ClassifierKind::GMM: {
        classify::GmmModel gmm;
        for (const json& c : j.at("classes")) {
            classify::Mixture mix;
            mix.weights = vector_from(c.at("weights"));
            for (const json& g : c.at("components")) mix.components.push_back(gaussian_from(g));
            mix.log_likelihood = c.at("log_likelihood").get<std::vector<Real>>();
            gmm.classes.push_back(std::move(mix));
        }
        gmm.log_priors = vector_from(j.at("log_priors"));
        model.params = std::move(gmm);
        break;
    }
    case ClassifierKind::KNN: {
        classify::KnnModel knn;
        knn.train = matrix_from(j.at("train"));
        knn.labels = j.at("labels").get<std::vector<int>>();
        knn.center = vector_from(j.at("center"));
        knn.scale = vector_from(j.at("scale"));
        knn.k = j.at("k").get<int>();
        model.params = std::move(knn);
        break;
    }
    }
    return model;
}

json to_json(const face::EigenBasis& b) {
    return {{"mean", to_json(b.mean)},
            {"components", to_json(b.components)},
            {"eigenvalues", to_json(b.eigenvalues)},
            {"total_variance", b.total_variance}};
}

face::EigenBasis basis_from(const json& j) {
    face::EigenBasis b;
    b.mean = vector_from(j.at("mean"));
    b.components = matrix_from(j.at("components"));
    b.eigenvalues = vector_from(j.at("eigenvalues"));
    b.total_variance = j.at("total_variance").get<Real>();
    return b;
}

json to_json(const ZScore& z) { return {{"mean", to_json(z.mean)}, {"scale", to_json(z.scale)}}; }

ZScore zscore_from(const json& j) { return ZScore{vector_from(j.at("mean")), vector_from(j.at("scale"))}; }

json config_to_json(const FusionConfig& c) {
    json j{{"mode", std::string(to_string(c.mode))},
           {"task", std::string(to_string(c.task))},
           {"fusion_classifier", std::string(classify::to_string(c.fusion_classifier))},
           {"channel_classifier", nullptr},
           {"seed", c.seed},
           {"window_length_s", c.windowing.length_s},
           {"window_stride_s", c.windowing.stride_s},
           {"window_count", c.windowing.count},
           {"scsr_cutoff_hz", c.physio.eda.scsr.cutoff_hz},
           {"scvsr_cutoff_hz", c.physio.eda.scvsr.cutoff_hz},
           {"filter_order", c.physio.eda.scsr.order},
           {"knn_k", c.knn_k},
           {"gmm_components", c.gmm_components},
           {"relieff_k", c.relieff_k},
           {"relieff_threshold", c.relieff_threshold},
           {"max_selected_features", nullptr},
           {"face_energy", c.face_energy},
           {"fusion_energy", c.fusion_energy}};
    if (c.max_selected_features) j["max_selected_features"] = *c.max_selected_features;
    if (c.channel_classifier) j["channel_classifier"] = std::string(classify::to_string(*c.channel_classifier));
    return j;
}

FusionConfig config_from(const json& j) {
    FusionConfig c;
    c.mode = parse_fusion_mode(j.at("mode").get<std::string>());
    c.task = parse_task(j.at("task").get<std::string>());
    c.fusion_classifier = classify::parse_classifier_kind(j.at("fusion_classifier").get<std::string>());
    if (!j.at("channel_classifier").is_null()) {
        c.channel_classifier = classify::parse_classifier_kind(j.at("channel_classifier").get<std::string>());
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    c.windowing.length_s = j.at("window_length_s").get<Real>();
    c.windowing.stride_s = j.at("window_stride_s").get<Real>();
    c.windowing.count = j.at("window_count").get<int>();
    c.physio.eda.scsr.cutoff_hz = j.at("scsr_cutoff_hz").get<Real>();
    c.physio.eda.scvsr.cutoff_hz = j.at("scvsr_cutoff_hz").get<Real>();
    c.physio.eda.scsr.order = c.physio.eda.scvsr.order = j.at("filter_order").get<int>();
    c.knn_k = j.at("knn_k").get<int>();
    c.gmm_components = j.at("gmm_components").get<int>();
    c.relieff_k = j.at("relieff_k").get<int>();
    c.relieff_threshold = j.at("relieff_threshold").get<Real>();
    if (!j.at("max_selected_features").is_null()) {
        c.max_selected_features = j.at("max_selected_features").get<int>();
    }
    c.face_energy = j.at("face_energy").get<Real>();
    c.fusion_energy = j.at("fusion_energy").get<Real>();
    return c;
}

// Parses JSON text, mapping library exceptions onto FormatError.
template <typename Fn>
auto parse_document(std::string_view text, Fn&& fn) {
    try {
        return fn(json::parse(text));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("malformed document: ") + e.what());
    } catch (const NumericalError& e) {
        throw FormatError(std::string("malformed document: ") + e.what());
    }
}

}  // namespace

std::string serialize(const TrainedSystem& s) {
    json j;
    j["format_version"] = s.format_version;
    j["config"] = config_to_json(s.config);
    j["fisher"] = {{"width", s.fisher.width},
                   {"height", s.fisher.height},
                   {"class_count", s.fisher.class_count},
                   {"basis", to_json(s.fisher.basis)},
                   {"w_lda", to_json(s.fisher.w_lda)},
                   {"lda_eigenvalues", to_json(s.fisher.lda_eigenvalues)}};
    j["physio_scaler"] = {{"min", to_json(s.physio_scaler.min)}, {"max", to_json(s.physio_scaler.max)}};
    j["relieff_weights"] = to_json(s.relieff_weights);
    j["relieff_mask"] = s.relieff_mask;
    json facial = json::array(), physio = json::array();
    for (const auto& m : s.facial_models) facial.push_back(to_json(m));
    for (const auto& m : s.physio_models) physio.push_back(to_json(m));
    j["facial_models"] = std::move(facial);
    j["physio_models"] = std::move(physio);
    if (s.has_fused) {
        j["fused"] = {{"facial_zscore", to_json(s.facial_zscore)},
                      {"physio_zscore", to_json(s.physio_zscore)},
                      {"pca", to_json(s.fused_pca)},
                      {"model", to_json(s.fused_model)}};
    } else {
        j["fused"] = nullptr;
    }
    return j.dump(1) + "\n";
}

TrainedSystem deserialize(std::string_view text) {
    return parse_document(text, [](const json& j) {
        const json& version = j.at("format_version");
        if (!version.is_number_integer() || version.get<int>() != TrainedSystem::kFormatVersion) {
            throw VersionError("unsupported format_version " + version.dump() + " (expected " +
                               std::to_string(TrainedSystem::kFormatVersion) + ")");
        }
        TrainedSystem s;
        s.config = config_from(j.at("config"));
        const json& f = j.at("fisher");
        s.fisher.width = f.at("width").get<int>();
        s.fisher.height = f.at("height").get<int>();
        s.fisher.class_count = f.at("class_count").get<int>();
        s.fisher.basis = basis_from(f.at("basis"));
        s.fisher.w_lda = matrix_from(f.at("w_lda"));
        s.fisher.lda_eigenvalues = vector_from(f.at("lda_eigenvalues"));
        s.physio_scaler.min = vector_from(j.at("physio_scaler").at("min"));
        s.physio_scaler.max = vector_from(j.at("physio_scaler").at("max"));
        s.relieff_weights = vector_from(j.at("relieff_weights"));
        s.relieff_mask = j.at("relieff_mask").get<std::vector<bool>>();
        const json& facial = j.at("facial_models");
        const json& physio = j.at("physio_models");
        if (facial.size() != 3 || physio.size() != 3) throw FormatError("expected 3 models per channel");
        for (std::size_t i = 0; i < 3; ++i) {
            s.facial_models[i] = classifier_from(facial[i]);
            s.physio_models[i] = classifier_from(physio[i]);
        }
        const json& fused = j.at("fused");
        if (!fused.is_null()) {
            s.has_fused = true;
            s.facial_zscore = zscore_from(fused.at("facial_zscore"));
            s.physio_zscore = zscore_from(fused.at("physio_zscore"));
            s.fused_pca = basis_from(fused.at("pca"));
            s.fused_model = classifier_from(fused.at("model"));
        }

        // Dimensional consistency.
        const auto selected = static_cast<Eigen::Index>(std::count(s.relieff_mask.begin(), s.relieff_mask.end(), true));
        if (s.physio_scaler.min.size() != static_cast<Eigen::Index>(s.relieff_mask.size()) ||
            s.physio_scaler.max.size() != s.physio_scaler.min.size() ||
            s.fisher.basis.components.rows() != static_cast<Eigen::Index>(s.fisher.width) * s.fisher.height ||
            s.fisher.w_lda.rows() != s.fisher.basis.components.cols()) {
            throw FormatError("inconsistent feature dimensions");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (s.facial_models[i].dimension != s.fisher.w_lda.cols() || s.physio_models[i].dimension != selected) {
                throw FormatError("classifier dimension does not match its channel");
            }
        }
        return s;
    });
}

void save_system(const TrainedSystem& system, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize(system);
    if (!out) throw IoError("write failed: " + path.string());
}

TrainedSystem load_system(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str());
}

std::string config_json(const FusionConfig& config) { return config_to_json(config).dump(1); }

FusionConfig parse_config_json(std::string_view text) {
    return parse_document(text, [](const json& j) { return config_from(j); });
}

std::string report_json(const EvalReport& r) {
    json confusion = json::array();
    for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) row.push_back(r.confusion(i, c));
        confusion.push_back(std::move(row));
    }
    json j{{"task", std::string(to_string(r.task))},
           {"mode", std::string(to_string(r.mode))},
           {"classifier", r.classifier},
           {"accuracy", r.accuracy},
           {"chance_level", r.chance_level},
           {"folds", r.folds},
           {"per_fold", r.per_fold},
           {"classes", class_names(r.task)},
           {"confusion", std::move(confusion)},
           {"rejected_windows", r.rejected_windows}};
    return j.dump(1);
}

}  // namespace emoglass
