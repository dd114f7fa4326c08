#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgpc/dataset.hpp"
#include "mgpc/gpc.hpp"
#include "mgpc/mesh.hpp"

namespace mgpc {

/// 0.5 (TP/P + TN/N). A class absent from y_true scores 1 if nothing was
/// predicted into it; otherwise the metric is undefined and an
/// undefined_metric Error is thrown.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

double plain_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Labels 1[prob > 0.5] of a field.
std::vector<int> field_labels(const ClassProbabilityField& field);

/// Area-weighted fraction predicted class 1. With a density the weights are
/// area * rho, which must be nonnegative and integrate to 1 within 1e-6.
/// The field must cover every vertex once.
double inducibility(const ClassProbabilityField& field, const TriangleMesh& mesh,
                    const std::vector<double>* density = nullptr);
double inducibility(const std::vector<int>& labels, const TriangleMesh& mesh,
                    const std::vector<double>* density = nullptr);

struct AssessmentConfig {
    std::vector<double> length_scales{0.2, 0.4, 0.6, 0.8, 1.0};
    std::size_t n_fields = 10;
    std::vector<std::size_t> sample_grid{20, 40, 60, 80, 100};
    std::uint64_t seed = 0;
    std::vector<std::string> classifiers{"nn", "gp", "al"};
    /// Truth-field amplitude and smoothness.
    double eta = 1.0;
    double nu = 1.5;
    std::size_t al_init = 20;
    bool exclude_boundary = true;
    GpcConfig gpc;
    /// Cheaper settings for intermediate active-learning retrains; active-learning
    /// scores below the largest grid size then come from these classifiers.
    std::optional<GpcConfig> acquisition_gpc;
    PriorSpec priors = PriorSpec::single_fidelity();
    /// Worker threads; 0 means hardware concurrency.
    std::size_t jobs = 0;

    void validate() const;
};

nlohmann::json to_json(const AssessmentConfig& config);
AssessmentConfig assessment_config_from_json(const nlohmann::json& j);

struct AssessmentRow {
    double ell = 0.0;
    std::size_t replicate = 0;
    std::string classifier;
    std::size_t n_samples = 0;
    double balanced_accuracy = 0.0;
    /// "ok", "plain_accuracy" (balanced accuracy undefined) or "error: ...".
    std::string status = "ok";
};

struct AssessmentResult {
    std::vector<AssessmentRow> rows;

    /// Header ell,replicate,classifier,n_samples,balanced_accuracy,status.
    std::string to_csv() const;
    /// Per (ell, classifier, n_samples): mean, standard error, count.
    nlohmann::json summary() const;
    /// Mean balanced accuracy of one classifier at one (ell, n); NaN if absent.
    double mean(double ell, const std::string& classifier, std::size_t n_samples) const;
    /// Mean over replicates of (a - b) where both cells succeeded.
    double mean_difference(double ell, const std::string& a, const std::string& b, std::size_t n_samples) const;
};

/// Synthetic study: per (ell, replicate) a thresholded prior field, a fixed
/// farthest-point design, and NN / fixed-design GP / active-learning GP scored on
/// all non-training vertices. Cells run in a pool; output order is by cell key.
AssessmentResult run_assessment(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                const AssessmentConfig& config);

struct MultiFidelityStudyConfig {
    double ell = 0.4;
    std::size_t n_fields = 10;
    std::size_t n_low = 100;
    std::size_t n_high = 40;
    double agreement_target = 0.85;
    double ell_noise = 0.2;
    std::uint64_t seed = 0;
    double eta = 1.0;
    double nu = 1.5;
    GpcConfig gpc;
    PriorSpec single_priors = PriorSpec::single_fidelity();
    PriorSpec multi_priors = PriorSpec::multi_fidelity();
    std::size_t jobs = 0;
};

nlohmann::json to_json(const MultiFidelityStudyConfig& config);
MultiFidelityStudyConfig mf_study_config_from_json(const nlohmann::json& j);

struct MultiFidelityStudyRow {
    std::size_t replicate = 0;
    std::string classifier;  ///< nn, gp or mf, all scored against the high labels
    double balanced_accuracy = 0.0;
    double agreement = 0.0;  ///< realized low/high agreement
    double rho_mean = 0.0;   ///< posterior mean of rho (mf rows)
    std::string status = "ok";
};

struct MultiFidelityStudyResult {
    std::vector<MultiFidelityStudyRow> rows;
    std::string to_csv() const;
    double mean(const std::string& classifier) const;
    double mean_difference(const std::string& a, const std::string& b) const;
    nlohmann::json summary() const;
};

/// Per replicate: truth field, calibrated low-fidelity labels, a farthest-point
/// design of n_low points labeled low and its first n_high points labeled high;
/// NN and GP use the high points, MF both; test set is every vertex in neither.
MultiFidelityStudyResult run_mf_study(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                      const MultiFidelityStudyConfig& config);

} // namespace mgpc
