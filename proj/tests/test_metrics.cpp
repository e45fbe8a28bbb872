#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/metrics.hpp"
#include "sigver/rng.hpp"
#include "test_support.hpp"

using namespace sigver;
using testsup::thrown_code;

namespace {

// Probabilities on a 1/1000 lattice keep adjacent distinct values at least
// 1e-3 apart, so the 1e-4 dense grid certainly lands inside every constant
// region of the accuracy curve.
std::vector<double> lattice_probs(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    for (auto& v : p) v = static_cast<double>(rng.below(1001)) / 1000.0;
    return p;
}

std::vector<std::uint8_t> random_labels(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = static_cast<std::uint8_t>(rng.below(2));
    return y;
}

double dense_grid_max_accuracy(std::span<const double> probs,
                               std::span<const std::uint8_t> labels) {
    double best = -1.0;
    for (int k = 0; k <= 10000; ++k) {
        double t = static_cast<double>(k) / 10000.0;
        best = std::max(best, accuracy_at_threshold(probs, labels, t));
    }
    return best;
}

} // namespace

TEST_CASE("accuracy_at_threshold basics") {
    std::vector<double> p{0.9, 0.1};
    std::vector<std::uint8_t> hit{1, 0}, miss{0, 1};
    CHECK(accuracy_at_threshold(p, hit, 0.5) == 1.0);
    CHECK(accuracy_at_threshold(p, miss, 0.5) == 0.0);
    CHECK(thrown_code([&] { accuracy_at_threshold({}, {}, 0.5); }) == ErrorCode::EmptyInput);
}

TEST_CASE("accuracy matches a direct count on random cases") {
    Rng rng(211);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> p = lattice_probs(20, rng);
        std::vector<std::uint8_t> y = random_labels(20, rng);
        double t = rng.uniform();
        int correct = 0;
        for (int i = 0; i < 20; ++i)
            correct += ((p[i] >= t ? 1 : 0) == y[i]) ? 1 : 0;
        CHECK(accuracy_at_threshold(p, y, t) == doctest::Approx(correct / 20.0));
    }
}

TEST_CASE("max_accuracy on separated and constant scores") {
    std::vector<double> p{0.1, 0.2, 0.8, 0.9};
    std::vector<std::uint8_t> y{0, 0, 1, 1};
    auto [acc, t] = max_accuracy(p, y);
    CHECK(acc == 1.0);
    CHECK(t == doctest::Approx(0.5)); // the separating midpoint

    std::vector<double> flat{0.4, 0.4, 0.4, 0.4, 0.4};
    std::vector<std::uint8_t> mostly{1, 1, 1, 0, 0};
    auto [acc2, t2] = max_accuracy(flat, mostly);
    CHECK(acc2 == doctest::Approx(0.6));
    CHECK(t2 == 0.0); // threshold 0 predicts everything positive
}

TEST_CASE("max_accuracy equals a dense-grid scan on lattice vectors") {
    Rng rng(223);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng.below(30);
        std::vector<double> p = lattice_probs(n, rng);
        std::vector<std::uint8_t> y = random_labels(n, rng);
        auto [acc, t] = max_accuracy(p, y);
        CHECK(acc == dense_grid_max_accuracy(p, y));
        CHECK(acc >= accuracy_at_threshold(p, y, 0.5));
        CHECK(t >= 0.0);
        CHECK(t <= 1.0);
    }
}

TEST_CASE("max_accuracy tie rule picks the smallest threshold") {
    // accuracy 1.0 at every threshold in (0.2, 0.8); smallest candidate wins
    std::vector<double> p{0.2, 0.8};
    std::vector<std::uint8_t> y{0, 1};
    auto [acc, t] = max_accuracy(p, y);
    CHECK(acc == 1.0);
    CHECK(t == doctest::Approx(0.5)); // only candidate inside the gap
}

TEST_CASE("far_frr boundary behavior and counting oracle") {
    std::vector<double> perfect{0.05, 0.1, 0.9, 0.95};
    std::vector<std::uint8_t> y{0, 0, 1, 1};
    auto [far0, frr0] = far_frr(perfect, y, 0.5);
    CHECK(far0 == 0.0);
    CHECK(frr0 == 0.0);

    // accept-everything threshold: all forged accepted, nothing rejected
    auto [far1, frr1] = far_frr(perfect, y, 1.0 + 1e-9);
    CHECK(far1 == 1.0);
    CHECK(frr1 == 0.0);

    Rng rng(227);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p = lattice_probs(12, rng);
        std::vector<std::uint8_t> labels = random_labels(12, rng);
        bool has0 = false, has1 = false;
        for (auto v : labels) (v ? has1 : has0) = true;
        if (!has0 || !has1) continue;
        double t = rng.uniform();
        int nf = 0, ng = 0, acc_f = 0, rej_g = 0;
        for (int i = 0; i < 12; ++i) {
            if (labels[i]) {
                ++nf;
                acc_f += p[i] < t ? 1 : 0;
            } else {
                ++ng;
                rej_g += p[i] >= t ? 1 : 0;
            }
        }
        auto [far, frr] = far_frr(p, labels, t);
        CHECK(far == doctest::Approx(static_cast<double>(acc_f) / nf));
        CHECK(frr == doctest::Approx(static_cast<double>(rej_g) / ng));
    }

    std::vector<std::uint8_t> single{1, 1, 1, 1};
    CHECK(thrown_code([&] { far_frr(perfect, single, 0.5); }) == ErrorCode::SingleClass);
}

TEST_CASE("accuracy identity with FAR and FRR at threshold 0.5") {
    Rng rng(229);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 4 + rng.below(40);
        std::vector<double> p = lattice_probs(n, rng);
        std::vector<std::uint8_t> y = random_labels(n, rng);
        std::size_t nf = 0, ng = 0;
        for (auto v : y) (v ? nf : ng) += 1;
        if (nf == 0 || ng == 0) continue;

        double acc = accuracy_at_threshold(p, y, 0.5);
        auto [far, frr] = far_frr(p, y, 0.5);
        double identity = 1.0 - (far * static_cast<double>(nf) + frr * static_cast<double>(ng)) /
                                    static_cast<double>(n);
        CHECK(acc == doctest::Approx(identity).epsilon(1e-12));
    }
}

TEST_CASE("evaluate_ensemble fills the full report") {
    testsup::ComplementaryData train_d = testsup::complementary_dataset(300, 31);
    EnsembleOptions options;
    options.gbt.n_rounds = 30;
    EnsembleModel model = train_ensemble(train_d.feat_a, train_d.feat_b, train_d.labels, options);

    // evaluating on the training set of a well-fit model
    EvalReport r = evaluate_ensemble(model, train_d.feat_a, train_d.feat_b, train_d.labels);
    CHECK(r.n_test == 300);
    CHECK(r.accuracy_at_half > 0.9);
    CHECK(r.max_accuracy >= r.accuracy_at_half);
    CHECK(r.far >= 0.0);
    CHECK(r.frr >= 0.0);

    RowMatrix<double> empty_a(0, 2), empty_b(0, 2);
    std::vector<std::uint8_t> no_labels;
    CHECK(thrown_code([&] { evaluate_ensemble(model, empty_a, empty_b, no_labels); }) ==
          ErrorCode::EmptyInput);
}

TEST_CASE("report JSON round trips without loss") {
    EvalReport r;
    r.accuracy_at_half = 0.9123456789012345;
    r.max_accuracy = 0.95;
    r.best_threshold = 1.0 / 3.0;
    r.far = 0.03125;
    r.frr = 0.1;
    r.n_test = 875;
    r.branch_signet_accuracy = 0.875;
    r.branch_signetf_accuracy = 0.9;

    std::string text = report_to_json(r);
    EvalReport back = report_from_json(text);
    CHECK(back == r); // exact: doubles survive the JSON round trip

    CHECK(thrown_code([&] { report_from_json("{ not json"); }) == ErrorCode::ParseError);
}
