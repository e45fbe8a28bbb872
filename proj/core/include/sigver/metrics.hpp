#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>

#include "sigver/matrix.hpp"
#include "sigver/stacker.hpp"

namespace sigver {

/// Scores are probabilities of the positive (forged) class; a sample is
/// predicted forged when prob >= threshold.
double accuracy_at_threshold(std::span<const double> probs,
                             std::span<const std::uint8_t> labels, double threshold);

/// Best accuracy over the candidate thresholds {0} U {midpoints of
/// consecutive distinct sorted probs} U {1}; ties pick the smallest
/// threshold. Accuracy is piecewise constant between distinct probabilities,
/// so this candidate set is exhaustive.
std::pair<double, double> max_accuracy(std::span<const double> probs,
                                       std::span<const std::uint8_t> labels);

/// FAR = forged samples accepted as genuine (prob < t) / forged count;
/// FRR = genuine samples rejected (prob >= t) / genuine count.
std::pair<double, double> far_frr(std::span<const double> probs,
                                  std::span<const std::uint8_t> labels, double threshold);

struct EvalReport {
    double accuracy_at_half = 0.0;
    double max_accuracy = 0.0;
    double best_threshold = 0.0;
    double far = 0.0; // at best_threshold
    double frr = 0.0; // at best_threshold
    std::size_t n_test = 0;
    double branch_signet_accuracy = 0.0;  // branch alone, threshold 0.5
    double branch_signetf_accuracy = 0.0;

    bool operator==(const EvalReport&) const = default;
};

EvalReport evaluate_ensemble(const EnsembleModel& model, const RowMatrix<double>& feat_signet,
                             const RowMatrix<double>& feat_signetf,
                             std::span<const std::uint8_t> labels);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// Fixed-format table for terminal output.
std::string report_to_table(const EvalReport& report);

} // namespace sigver
