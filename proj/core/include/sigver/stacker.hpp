#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigver/gbt.hpp"
#include "sigver/matrix.hpp"

namespace sigver {

/// Logistic combiner over the two branch probabilities:
/// p = sigmoid(w0 * p_signet + w1 * p_signetf + bias).
struct StackModel {
    double w0 = 0.0;
    double w1 = 0.0;
    double bias = 0.0;
};

struct LogregParams {
    double reg = 1e-6;   // L2 on weights, bias unpenalized
    double tol = 1e-8;   // gradient max-norm stop
    int max_iter = 100;

    void validate() const;
};

struct LogregResult {
    StackModel model;
    bool converged = false;
    int iterations = 0;
    std::vector<double> objective_trace; // value after each accepted step
};

struct EnsembleModel {
    GbtModel gbt_signet;
    GbtModel gbt_signetf;
    StackModel combiner;
};

struct EnsembleOptions {
    GbtParams gbt;
    LogregParams logreg;
    /// 0 = fit the combiner on in-sample training probabilities (the default
    /// protocol). k >= 2 = k-fold out-of-fold probabilities instead.
    int oof_folds = 0;
    std::uint64_t oof_seed = 0;
};

/// Column 0 = signet branch probability, column 1 = signet-f branch.
RowMatrix<double> stack_probs(std::span<const double> p_signet,
                              std::span<const double> p_signetf);

/// Newton's method with step halving on
/// mean logistic loss + reg/2 * ||w||^2, from zero initialization.
/// Probabilities are clipped to [1e-12, 1 - 1e-12] inside the objective.
LogregResult train_logreg(const RowMatrix<double>& stacked,
                          std::span<const std::uint8_t> labels,
                          const LogregParams& params);

double predict_stack(const StackModel& m, double p_signet, double p_signetf);

/// Trains both branch GBTs on row-aligned feature matrices, stacks their
/// training-set probabilities and fits the combiner on the stack.
EnsembleModel train_ensemble(const RowMatrix<double>& feat_signet,
                             const RowMatrix<double>& feat_signetf,
                             std::span<const std::uint8_t> labels,
                             const EnsembleOptions& options);

double predict_ensemble(const EnsembleModel& model, std::span<const double> x_signet,
                        std::span<const double> x_signetf);

} // namespace sigver
