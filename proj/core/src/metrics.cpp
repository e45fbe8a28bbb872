#include "sigver/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigver/error.hpp"

namespace sigver {

double accuracy_at_threshold(std::span<const double> probs,
                             std::span<const std::uint8_t> labels, double threshold) {
    if (probs.empty()) raise(ErrorCode::EmptyInput, "accuracy over empty input");
    if (probs.size() != labels.size())
        raise(ErrorCode::LengthMismatch, "probs and labels differ in length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        int predicted = probs[i] >= threshold ? 1 : 0;
        correct += predicted == static_cast<int>(labels[i]) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.size());
}

std::pair<double, double> max_accuracy(std::span<const double> probs,
                                       std::span<const std::uint8_t> labels) {
    if (probs.empty()) raise(ErrorCode::EmptyInput, "max_accuracy over empty input");
    if (probs.size() != labels.size())
        raise(ErrorCode::LengthMismatch, "probs and labels differ in length");

    std::vector<double> sorted(probs.begin(), probs.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates;
    candidates.push_back(0.0);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    candidates.push_back(1.0);

    double best_acc = -1.0, best_t = 0.0;
    for (double t : candidates) {
        double acc = accuracy_at_threshold(probs, labels, t);
        if (acc > best_acc) { // candidates ascend, so ties keep the smallest t
            best_acc = acc;
            best_t = t;
        }
    }
    return {best_acc, best_t};
}

std::pair<double, double> far_frr(std::span<const double> probs,
                                  std::span<const std::uint8_t> labels, double threshold) {
    if (probs.size() != labels.size())
        raise(ErrorCode::LengthMismatch, "probs and labels differ in length");
    std::size_t n_forged = 0, n_genuine = 0, accepted_forged = 0, rejected_genuine = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (labels[i]) {
            ++n_forged;
            accepted_forged += probs[i] < threshold ? 1 : 0;
        } else {
            ++n_genuine;
            rejected_genuine += probs[i] >= threshold ? 1 : 0;
        }
    }
    if (n_forged == 0 || n_genuine == 0)
        raise(ErrorCode::SingleClass, "FAR/FRR need both classes");
    return {static_cast<double>(accepted_forged) / static_cast<double>(n_forged),
            static_cast<double>(rejected_genuine) / static_cast<double>(n_genuine)};
}

EvalReport evaluate_ensemble(const EnsembleModel& model, const RowMatrix<double>& feat_signet,
                             const RowMatrix<double>& feat_signetf,
                             std::span<const std::uint8_t> labels) {
    if (feat_signet.rows == 0) raise(ErrorCode::EmptyInput, "empty test set");
    if (feat_signet.rows != feat_signetf.rows || labels.size() != feat_signet.rows)
        raise(ErrorCode::LengthMismatch, "test inputs must be row-aligned");

    std::vector<double> pa = predict_proba_batch(model.gbt_signet, feat_signet);
    std::vector<double> pb = predict_proba_batch(model.gbt_signetf, feat_signetf);
    std::vector<double> pe(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        pe[i] = predict_stack(model.combiner, pa[i], pb[i]);

    EvalReport report;
    report.n_test = pa.size();
    report.accuracy_at_half = accuracy_at_threshold(pe, labels, 0.5);
    auto [acc, t] = max_accuracy(pe, labels);
    report.max_accuracy = acc;
    report.best_threshold = t;
    auto [far, frr] = far_frr(pe, labels, t);
    report.far = far;
    report.frr = frr;
    report.branch_signet_accuracy = accuracy_at_threshold(pa, labels, 0.5);
    report.branch_signetf_accuracy = accuracy_at_threshold(pb, labels, 0.5);
    return report;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j{
        {"accuracy_at_half", r.accuracy_at_half},
        {"max_accuracy", r.max_accuracy},
        {"best_threshold", r.best_threshold},
        {"far", r.far},
        {"frr", r.frr},
        {"n_test", r.n_test},
        {"per_branch", {{"signet", r.branch_signet_accuracy},
                        {"signetf", r.branch_signetf_accuracy}}},
    };
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        EvalReport r;
        r.accuracy_at_half = j.at("accuracy_at_half").get<double>();
        r.max_accuracy = j.at("max_accuracy").get<double>();
        r.best_threshold = j.at("best_threshold").get<double>();
        r.far = j.at("far").get<double>();
        r.frr = j.at("frr").get<double>();
        r.n_test = j.at("n_test").get<std::size_t>();
        r.branch_signet_accuracy = j.at("per_branch").at("signet").get<double>();
        r.branch_signetf_accuracy = j.at("per_branch").at("signetf").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad report JSON: ") + e.what());
    }
}

std::string report_to_table(const EvalReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "n_test            %zu\n"
                  "accuracy@0.5      %.4f\n"
                  "max accuracy      %.4f  (threshold %.4f)\n"
                  "FAR / FRR         %.4f / %.4f  (at best threshold)\n"
                  "branch accuracy   signet %.4f   signet-f %.4f\n",
                  r.n_test, r.accuracy_at_half, r.max_accuracy, r.best_threshold, r.far,
                  r.frr, r.branch_signet_accuracy, r.branch_signetf_accuracy);
    return buf;
}

} // namespace sigver
