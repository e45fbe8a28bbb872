#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sigver/matrix.hpp"

namespace sigver {

struct GbtParams {
    int n_rounds = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    double min_gain = 0.0;
    double min_child_hessian = 0.0;

    void validate() const;
};

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double weight = 0.0;
    int left = -1;
    int right = -1;
};

/// One regression tree; nodes[0] is the root. Routing: x[feature] < threshold
/// goes left, otherwise right.
struct Tree {
    std::vector<TreeNode> nodes;

    double eval(std::span<const double> x) const;
    int depth() const;
};

struct GbtModel {
    GbtParams params;
    std::size_t n_features = 0;
    double base_margin = 0.0;
    std::vector<Tree> trees;
};

/// Binary logistic loss derivatives at a raw margin:
/// p = sigmoid(margin), g = p - label, h = p (1 - p).
std::pair<double, double> logistic_grad_hess(int label, double margin);

/// Optimal L2-regularized leaf weight -G / (H + lambda).
/// Throws DegenerateLeaf when H + lambda == 0.
double leaf_weight(double grad_sum, double hess_sum, double l2_lambda);

/// Second-order split gain
/// 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, double l2_lambda,
                  double min_gain);

/// Exact greedy tree fit to (g, h): every (feature, midpoint between
/// consecutive distinct values) split is scored; the best one wins, ties
/// resolved by lowest feature index then lowest threshold. Recursion stops at
/// max_depth, when no split has positive gain, or when a child's hessian sum
/// falls below min_child_hessian.
Tree build_tree(const RowMatrix<double>& features, std::span<const double> grad,
                std::span<const double> hess, const GbtParams& params);

/// Boosted logistic model: margins start at base_margin = 0 and accumulate
/// learning_rate * tree(x) per round; (g, h) are refreshed from the current
/// margins before each tree. Deterministic.
GbtModel train_gbt(const RowMatrix<double>& features, std::span<const std::uint8_t> labels,
                   const GbtParams& params);

double predict_margin(const GbtModel& model, std::span<const double> x);
double predict_proba(const GbtModel& model, std::span<const double> x);

std::vector<double> predict_proba_batch(const GbtModel& model, const RowMatrix<double>& features);

double sigmoid(double x);

} // namespace sigver
