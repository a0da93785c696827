#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "helioforge/ar_model.hpp"
#include "helioforge/ensemble.hpp"
#include "helioforge/gate.hpp"
#include "helioforge/kvdoc.hpp"

namespace helioforge {

inline KvDoc to_kvdoc(const ModelParams& m) {
    m.validate();
    KvDoc doc;
    doc.set("kind", "ar-model");
    doc.set_int("seasonal_lag", m.spec.seasonal_lag);
    doc.set_vector("ar_lags", m.spec.ar_lags);
    doc.set_vector("exo_lags", m.spec.exo_lags);
    doc.set_vector("ar_coeffs", m.ar_coeffs);
    doc.set_vector("exo_coeffs", m.exo_coeffs);
    doc.set_double("fit_residual_rms", m.fit_residual_rms);
    doc.set_double("regressor_condition", m.regressor_condition);
    doc.set_int("fit_rows", static_cast<std::int64_t>(m.fit_rows));
    return doc;
}

inline ModelParams model_from_kvdoc(const KvDoc& doc) {
    if (doc.get_or("kind", "") != "ar-model")
        throw std::runtime_error("not an ar-model document");
    ModelParams m;
    m.spec.seasonal_lag = static_cast<int>(doc.get_int("seasonal_lag"));
    m.spec.ar_lags = doc.get_ints("ar_lags");
    m.spec.exo_lags = doc.has("exo_lags") ? doc.get_ints("exo_lags") : std::vector<int>{};
    m.ar_coeffs = doc.get_doubles("ar_coeffs");
    m.exo_coeffs = doc.has("exo_coeffs") ? doc.get_doubles("exo_coeffs") : std::vector<double>{};
    m.fit_residual_rms = doc.get_double_or("fit_residual_rms", 0.0);
    m.regressor_condition = doc.get_double_or("regressor_condition", 0.0);
    m.fit_rows = static_cast<std::size_t>(doc.get_int_or("fit_rows", 0));
    m.validate();
    return m;
}

inline void save_model(const ModelParams& m, const std::string& path) { to_kvdoc(m).save(path); }
inline ModelParams load_model(const std::string& path) { return model_from_kvdoc(KvDoc::load(path)); }

inline KvDoc to_kvdoc(const GateModel& g) {
    KvDoc doc;
    doc.set("kind", "gate-model");
    doc.set_int("period", g.period);
    doc.set_double("c", g.svm.C);
    doc.set_double("gamma", g.svm.gamma);
    doc.set_double("bias", g.svm.bias);
    doc.set_int("converged", g.svm.converged ? 1 : 0);
    doc.set_int("iterations", static_cast<std::int64_t>(g.svm.iterations));
    doc.set_vector("feature_means", g.scaler.mean);
    doc.set_vector("feature_scales", g.scaler.stddev);
    doc.set_int("sv_count", static_cast<std::int64_t>(g.svm.support_vectors.size()));
    for (std::size_t i = 0; i < g.svm.support_vectors.size(); ++i) {
        std::vector<double> row;
        row.push_back(g.svm.dual_coeffs[i]);
        row.insert(row.end(), g.svm.support_vectors[i].begin(), g.svm.support_vectors[i].end());
        doc.set_vector("sv_" + std::to_string(i), row);
    }
    return doc;
}

inline GateModel gate_from_kvdoc(const KvDoc& doc) {
    if (doc.get_or("kind", "") != "gate-model")
        throw std::runtime_error("not a gate-model document");
    GateModel g;
    g.period = static_cast<int>(doc.get_int("period"));
    g.svm.C = doc.get_double("c");
    g.svm.gamma = doc.get_double("gamma");
    g.svm.bias = doc.get_double("bias");
    g.svm.converged = doc.get_int_or("converged", 1) != 0;
    g.svm.iterations = static_cast<std::size_t>(doc.get_int_or("iterations", 0));
    g.scaler.mean = doc.get_doubles("feature_means");
    g.scaler.stddev = doc.get_doubles("feature_scales");
    const std::int64_t count = doc.get_int("sv_count");
    for (std::int64_t i = 0; i < count; ++i) {
        const std::vector<double> row = doc.get_doubles("sv_" + std::to_string(i));
        if (row.size() != g.scaler.mean.size() + 1)
            throw std::runtime_error("gate-model document: malformed support vector");
        g.svm.dual_coeffs.push_back(row[0]);
        g.svm.support_vectors.emplace_back(row.begin() + 1, row.end());
    }
    return g;
}

inline void save_gate(const GateModel& g, const std::string& path) { to_kvdoc(g).save(path); }
inline GateModel load_gate(const std::string& path) { return gate_from_kvdoc(KvDoc::load(path)); }

inline KvDoc to_kvdoc(const EnsembleWeights& w) {
    w.validate();
    KvDoc doc;
    doc.set("kind", "ensemble-weights");
    doc.set("framework", framework_name(w.framework));
    doc.set_int("components", static_cast<std::int64_t>(w.components()));
    doc.set_int("groups", static_cast<std::int64_t>(w.weights.size()));
    if (w.framework == EnsembleFramework::TimeOrder) doc.set_vector("boundaries", w.boundaries);
    for (std::size_t g = 0; g < w.weights.size(); ++g)
        doc.set_vector("weights_" + std::to_string(g), w.weights[g]);
    std::vector<double> rows, cond, deficient;
    for (const auto& d : w.diagnostics) {
        rows.push_back(static_cast<double>(d.rows));
        cond.push_back(d.condition);
        deficient.push_back(d.rank_deficient ? 1.0 : 0.0);
    }
    doc.set_vector("group_rows", rows);
    doc.set_vector("group_condition", cond);
    doc.set_vector("group_rank_deficient", deficient);
    return doc;
}

inline EnsembleWeights weights_from_kvdoc(const KvDoc& doc) {
    if (doc.get_or("kind", "") != "ensemble-weights")
        throw std::runtime_error("not an ensemble-weights document");
    EnsembleWeights w;
    w.framework = framework_from_name(doc.get("framework"));
    if (w.framework == EnsembleFramework::TimeOrder) w.boundaries = doc.get_ints("boundaries");
    const std::int64_t groups = doc.get_int("groups");
    for (std::int64_t g = 0; g < groups; ++g)
        w.weights.push_back(doc.get_doubles("weights_" + std::to_string(g)));
    w.diagnostics.assign(static_cast<std::size_t>(groups), {});
    if (doc.has("group_rows")) {
        const std::vector<double> rows = doc.get_doubles("group_rows");
        const std::vector<double> cond = doc.get_doubles("group_condition");
        const std::vector<double> deficient = doc.get_doubles("group_rank_deficient");
        for (std::size_t g = 0; g < w.diagnostics.size(); ++g) {
            if (g < rows.size()) w.diagnostics[g].rows = static_cast<std::size_t>(rows[g]);
            if (g < cond.size()) w.diagnostics[g].condition = cond[g];
            if (g < deficient.size()) w.diagnostics[g].rank_deficient = deficient[g] != 0.0;
        }
    }
    w.validate();
    return w;
}

inline void save_weights(const EnsembleWeights& w, const std::string& path) {
    to_kvdoc(w).save(path);
}
inline EnsembleWeights load_weights(const std::string& path) {
    return weights_from_kvdoc(KvDoc::load(path));
}

}  // namespace helioforge
