#include "sigver/stacker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sigver/error.hpp"
#include "sigver/rng.hpp"

namespace sigver {

void LogregParams::validate() const {
    if (reg < 0.0) raise(ErrorCode::InvalidConfig, "reg must be nonnegative");
    if (!(tol > 0.0)) raise(ErrorCode::InvalidConfig, "tol must be positive");
    if (max_iter < 1) raise(ErrorCode::InvalidConfig, "max_iter must be >= 1");
}

RowMatrix<double> stack_probs(std::span<const double> p_signet,
                              std::span<const double> p_signetf) {
    if (p_signet.size() != p_signetf.size())
        raise(ErrorCode::LengthMismatch, "branch probability vectors differ in length");
    for (std::size_t i = 0; i < p_signet.size(); ++i) {
        if (p_signet[i] < 0.0 || p_signet[i] > 1.0 || p_signetf[i] < 0.0 || p_signetf[i] > 1.0)
            raise(ErrorCode::OutOfRange, "probabilities must lie in [0,1]");
    }
    RowMatrix<double> out(p_signet.size(), 2);
    for (std::size_t i = 0; i < p_signet.size(); ++i) {
        out.at(i, 0) = p_signet[i];
        out.at(i, 1) = p_signetf[i];
    }
    return out;
}

namespace {

double clip_prob(double p) {
    return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

double objective(const RowMatrix<double>& x, std::span<const std::uint8_t> y,
                 const double theta[3], double reg) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double z = theta[0] * x.at(i, 0) + theta[1] * x.at(i, 1) + theta[2];
        double p = clip_prob(sigmoid(z));
        loss += y[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    loss /= static_cast<double>(x.rows);
    return loss + 0.5 * reg * (theta[0] * theta[0] + theta[1] * theta[1]);
}

// 3x3 linear solve, Gaussian elimination with partial pivoting.
// Returns false on a (numerically) singular system.
bool solve3(double a[3][3], double b[3], double out[3]) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(a[perm[r]][col]) > std::fabs(a[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        double d = a[perm[col]][col];
        if (std::fabs(d) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            double f = a[perm[r]][col] / d;
            for (int c = col; c < 3; ++c) a[perm[r]][c] -= f * a[perm[col]][c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double s = b[perm[col]];
        for (int c = col + 1; c < 3; ++c) s -= a[perm[col]][c] * out[c];
        out[col] = s / a[perm[col]][col];
    }
    return true;
}

} // namespace

LogregResult train_logreg(const RowMatrix<double>& stacked,
                          std::span<const std::uint8_t> labels,
                          const LogregParams& params) {
    params.validate();
    if (stacked.cols != 2) raise(ErrorCode::DimensionMismatch, "stacked matrix must have 2 columns");
    if (stacked.rows < 2) raise(ErrorCode::EmptyInput, "combiner needs at least two rows");
    if (labels.size() != stacked.rows)
        raise(ErrorCode::LengthMismatch, "label count must match row count");
    bool has0 = false, has1 = false;
    for (std::uint8_t y : labels) (y ? has1 : has0) = true;
    if (!has0 || !has1) raise(ErrorCode::SingleClass, "both classes must be present");

    const double n = static_cast<double>(stacked.rows);
    double theta[3] = {0.0, 0.0, 0.0};

    LogregResult result;
    double current = objective(stacked, labels, theta, params.reg);
    result.objective_trace.push_back(current);

    for (int iter = 0; iter < params.max_iter; ++iter) {
        double grad[3] = {params.reg * theta[0], params.reg * theta[1], 0.0};
        double hess[3][3] = {{params.reg, 0, 0}, {0, params.reg, 0}, {0, 0, 0}};
        for (std::size_t i = 0; i < stacked.rows; ++i) {
            double xi[3] = {stacked.at(i, 0), stacked.at(i, 1), 1.0};
            double p = sigmoid(theta[0] * xi[0] + theta[1] * xi[1] + theta[2]);
            double r = (p - static_cast<double>(labels[i])) / n;
            double w = p * (1.0 - p) / n;
            for (int a = 0; a < 3; ++a) {
                grad[a] += r * xi[a];
                for (int b = 0; b < 3; ++b) hess[a][b] += w * xi[a] * xi[b];
            }
        }

        result.iterations = iter;
        double gmax = std::max({std::fabs(grad[0]), std::fabs(grad[1]), std::fabs(grad[2])});
        if (gmax < params.tol) {
            result.converged = true;
            break;
        }

        double step[3];
        double rhs[3] = {-grad[0], -grad[1], -grad[2]};
        if (!solve3(hess, rhs, step)) break;

        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-12) {
            double cand[3] = {theta[0] + alpha * step[0], theta[1] + alpha * step[1],
                              theta[2] + alpha * step[2]};
            double value = objective(stacked, labels, cand, params.reg);
            if (value <= current) {
                theta[0] = cand[0];
                theta[1] = cand[1];
                theta[2] = cand[2];
                current = value;
                result.objective_trace.push_back(current);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break; // no descent direction left
    }

    result.model = StackModel{theta[0], theta[1], theta[2]};
    return result;
}

double predict_stack(const StackModel& m, double p_signet, double p_signetf) {
    if (p_signet < 0.0 || p_signet > 1.0 || p_signetf < 0.0 || p_signetf > 1.0)
        raise(ErrorCode::OutOfRange, "probabilities must lie in [0,1]");
    return sigmoid(m.w0 * p_signet + m.w1 * p_signetf + m.bias);
}

namespace {

// Out-of-fold branch probabilities: rows are dealt into `folds` groups by a
// seeded shuffle; each group is predicted by GBTs trained on the complement.
void oof_probs(const RowMatrix<double>& feat_a, const RowMatrix<double>& feat_b,
               std::span<const std::uint8_t> labels, const EnsembleOptions& options,
               std::vector<double>& pa, std::vector<double>& pb) {
    const std::size_t rows = feat_a.rows;
    std::vector<std::size_t> perm(rows);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(options.oof_seed);
    rng.shuffle(perm);

    std::vector<int> fold_of(rows);
    for (std::size_t i = 0; i < rows; ++i)
        fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(options.oof_folds));

    pa.assign(rows, 0.0);
    pb.assign(rows, 0.0);
    for (int f = 0; f < options.oof_folds; ++f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t i = 0; i < rows; ++i)
            if (fold_of[i] != f) train_rows.push_back(i);

        RowMatrix<double> ta(train_rows.size(), feat_a.cols);
        RowMatrix<double> tb(train_rows.size(), feat_b.cols);
        std::vector<std::uint8_t> ty(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            std::copy_n(feat_a.row(train_rows[i]).data(), feat_a.cols, ta.row(i).data());
            std::copy_n(feat_b.row(train_rows[i]).data(), feat_b.cols, tb.row(i).data());
            ty[i] = labels[train_rows[i]];
        }
        GbtModel ga = train_gbt(ta, ty, options.gbt);
        GbtModel gb = train_gbt(tb, ty, options.gbt);
        for (std::size_t i = 0; i < rows; ++i) {
            if (fold_of[i] != f) continue;
            pa[i] = predict_proba(ga, feat_a.row(i));
            pb[i] = predict_proba(gb, feat_b.row(i));
        }
    }
}

} // namespace

EnsembleModel train_ensemble(const RowMatrix<double>& feat_signet,
                             const RowMatrix<double>& feat_signetf,
                             std::span<const std::uint8_t> labels,
                             const EnsembleOptions& options) {
    if (feat_signet.rows != feat_signetf.rows)
        raise(ErrorCode::LengthMismatch, "branch feature matrices must be row-aligned");
    if (labels.size() != feat_signet.rows)
        raise(ErrorCode::LengthMismatch, "label count must match row count");
    if (options.oof_folds == 1 || options.oof_folds < 0)
        raise(ErrorCode::InvalidConfig, "oof_folds must be 0 or >= 2");

    EnsembleModel model;
    model.gbt_signet = train_gbt(feat_signet, labels, options.gbt);
    model.gbt_signetf = train_gbt(feat_signetf, labels, options.gbt);

    std::vector<double> pa, pb;
    if (options.oof_folds >= 2) {
        oof_probs(feat_signet, feat_signetf, labels, options, pa, pb);
    } else {
        pa = predict_proba_batch(model.gbt_signet, feat_signet);
        pb = predict_proba_batch(model.gbt_signetf, feat_signetf);
    }

    RowMatrix<double> stacked = stack_probs(pa, pb);
    model.combiner = train_logreg(stacked, labels, options.logreg).model;
    return model;
}

double predict_ensemble(const EnsembleModel& model, std::span<const double> x_signet,
                        std::span<const double> x_signetf) {
    double pa = predict_proba(model.gbt_signet, x_signet);
    double pb = predict_proba(model.gbt_signetf, x_signetf);
    return predict_stack(model.combiner, pa, pb);
}

} // namespace sigver
