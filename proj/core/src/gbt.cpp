#include "sigver/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sigver/error.hpp"

namespace sigver {

void GbtParams::validate() const {
    if (n_rounds < 1) raise(ErrorCode::InvalidConfig, "n_rounds must be >= 1");
    if (max_depth < 1) raise(ErrorCode::InvalidConfig, "max_depth must be >= 1");
    if (!(learning_rate > 0.0)) raise(ErrorCode::InvalidConfig, "learning_rate must be positive");
    if (l2_lambda < 0.0 || min_gain < 0.0 || min_child_hessian < 0.0)
        raise(ErrorCode::InvalidConfig, "regularization terms must be nonnegative");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

std::pair<double, double> logistic_grad_hess(int label, double margin) {
    double p = sigmoid(margin);
    return {p - static_cast<double>(label), p * (1.0 - p)};
}

double leaf_weight(double grad_sum, double hess_sum, double l2_lambda) {
    double denom = hess_sum + l2_lambda;
    if (denom == 0.0) raise(ErrorCode::DegenerateLeaf, "hessian sum + lambda is zero");
    return -grad_sum / denom;
}

double split_gain(double gl, double hl, double gr, double hr, double l2_lambda,
                  double min_gain) {
    double g = gl + gr;
    double h = hl + hr;
    return 0.5 * (gl * gl / (hl + l2_lambda) + gr * gr / (hr + l2_lambda) -
                  g * g / (h + l2_lambda)) -
           min_gain;
}

double Tree::eval(std::span<const double> x) const {
    int i = 0;
    while (!nodes[i].is_leaf)
        i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].weight;
}

int Tree::depth() const {
    // Longest count of internal nodes on any root-to-leaf path.
    struct Item { int node; int depth; };
    std::vector<Item> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        auto [n, d] = stack.back();
        stack.pop_back();
        if (nodes[n].is_leaf) {
            best = std::max(best, d);
        } else {
            stack.push_back({nodes[n].left, d + 1});
            stack.push_back({nodes[n].right, d + 1});
        }
    }
    return best;
}

namespace {

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
};

// Scans every candidate split of `rows`. Features ascending, thresholds
// ascending within a feature; a candidate replaces the incumbent only on
// strictly larger gain, which realizes the lowest-feature / lowest-threshold
// tie rule.
BestSplit find_best_split(const RowMatrix<double>& features, std::span<const double> grad,
                          std::span<const double> hess, std::span<const std::size_t> rows,
                          double g_total, double h_total, const GbtParams& params,
                          std::vector<std::size_t>& order) {
    BestSplit best;
    for (std::size_t f = 0; f < features.cols; ++f) {
        order.assign(rows.begin(), rows.end());
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return features.at(a, f) < features.at(b, f);
        });

        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            gl += grad[order[i]];
            hl += hess[order[i]];
            double v = features.at(order[i], f);
            double v_next = features.at(order[i + 1], f);
            if (v == v_next) continue;
            double gr = g_total - gl;
            double hr = h_total - hl;
            if (hl < params.min_child_hessian || hr < params.min_child_hessian) continue;
            double gain = split_gain(gl, hl, gr, hr, params.l2_lambda, params.min_gain);
            if (gain > best.gain) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (v + v_next);
                best.gain = gain;
                best.gl = gl;
                best.hl = hl;
                best.gr = gr;
                best.hr = hr;
            }
        }
    }
    return best;
}

int grow(Tree& tree, const RowMatrix<double>& features, std::span<const double> grad,
         std::span<const double> hess, std::vector<std::size_t>& rows, double g_total,
         double h_total, int depth, const GbtParams& params,
         std::vector<std::size_t>& scratch) {
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    if (depth < params.max_depth && rows.size() >= 2) {
        BestSplit split = find_best_split(features, grad, hess, rows, g_total, h_total,
                                          params, scratch);
        if (split.found && split.gain > 0.0) {
            std::vector<std::size_t> left_rows, right_rows;
            left_rows.reserve(rows.size());
            right_rows.reserve(rows.size());
            for (std::size_t r : rows) {
                if (features.at(r, split.feature) < split.threshold)
                    left_rows.push_back(r);
                else
                    right_rows.push_back(r);
            }
            rows.clear();
            rows.shrink_to_fit();

            int left = grow(tree, features, grad, hess, left_rows, split.gl, split.hl,
                            depth + 1, params, scratch);
            int right = grow(tree, features, grad, hess, right_rows, split.gr, split.hr,
                             depth + 1, params, scratch);
            tree.nodes[index].is_leaf = false;
            tree.nodes[index].feature = split.feature;
            tree.nodes[index].threshold = split.threshold;
            tree.nodes[index].left = left;
            tree.nodes[index].right = right;
            return index;
        }
    }

    tree.nodes[index].is_leaf = true;
    tree.nodes[index].weight = leaf_weight(g_total, h_total, params.l2_lambda);
    return index;
}

} // namespace

Tree build_tree(const RowMatrix<double>& features, std::span<const double> grad,
                std::span<const double> hess, const GbtParams& params) {
    params.validate();
    if (features.rows == 0) raise(ErrorCode::EmptyInput, "build_tree on empty input");
    if (grad.size() != features.rows || hess.size() != features.rows)
        raise(ErrorCode::LengthMismatch, "grad/hess length must match row count");

    std::vector<std::size_t> rows(features.rows);
    std::iota(rows.begin(), rows.end(), 0);
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
        g_total += grad[r];
        h_total += hess[r];
    }

    Tree tree;
    std::vector<std::size_t> scratch;
    grow(tree, features, grad, hess, rows, g_total, h_total, 0, params, scratch);
    return tree;
}

GbtModel train_gbt(const RowMatrix<double>& features, std::span<const std::uint8_t> labels,
                   const GbtParams& params) {
    params.validate();
    if (features.rows < 2) raise(ErrorCode::EmptyInput, "training needs at least two rows");
    if (labels.size() != features.rows)
        raise(ErrorCode::LengthMismatch, "label count must match row count");

    bool has0 = false, has1 = false;
    for (std::uint8_t y : labels) {
        if (y == 0) has0 = true;
        else if (y == 1) has1 = true;
        else raise(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    if (!has0 || !has1) raise(ErrorCode::SingleClass, "both classes must be present");

    GbtModel model;
    model.params = params;
    model.n_features = features.cols;
    model.base_margin = 0.0;
    model.trees.reserve(static_cast<std::size_t>(params.n_rounds));

    std::vector<double> margins(features.rows, model.base_margin);
    std::vector<double> grad(features.rows), hess(features.rows);

    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < features.rows; ++i) {
            auto [g, h] = logistic_grad_hess(labels[i], margins[i]);
            grad[i] = g;
            hess[i] = h;
        }
        Tree tree = build_tree(features, grad, hess, params);
        for (std::size_t i = 0; i < features.rows; ++i)
            margins[i] += params.learning_rate * tree.eval(features.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double predict_margin(const GbtModel& model, std::span<const double> x) {
    if (x.size() != model.n_features && !model.trees.empty())
        raise(ErrorCode::DimensionMismatch, "feature vector length does not match model");
    double sum = 0.0;
    for (const Tree& t : model.trees) sum += t.eval(x);
    return model.base_margin + model.params.learning_rate * sum;
}

double predict_proba(const GbtModel& model, std::span<const double> x) {
    return sigmoid(predict_margin(model, x));
}

std::vector<double> predict_proba_batch(const GbtModel& model, const RowMatrix<double>& features) {
    std::vector<double> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i)
        out[i] = predict_proba(model, features.row(i));
    return out;
}

} // namespace sigver
