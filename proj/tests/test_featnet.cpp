#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/featnet.hpp"
#include "sigver/rng.hpp"
#include "test_support.hpp"

using namespace sigver;
using testsup::thrown_code;

namespace {

NetConfig toy_config(int h, int w, bool forgery, std::uint64_t seed) {
    NetConfig cfg;
    cfg.input_height = h;
    cfg.input_width = w;
    cfg.conv_blocks = {{2, 3, 1}};
    cfg.feature_dim = 4;
    cfg.num_writers = 3;
    cfg.forgery_head = forgery;
    cfg.seed = seed;
    return cfg;
}

std::vector<TrainSample> random_batch(const NetConfig& cfg, std::size_t n, Rng& rng,
                                      bool with_forged) {
    std::vector<TrainSample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        TrainSample s;
        s.image = testsup::random_float_image(cfg.input_height, cfg.input_width, rng);
        s.writer_id = static_cast<int>(rng.below(cfg.num_writers));
        s.forged = with_forged && rng.below(2) == 1;
        batch.push_back(std::move(s));
    }
    return batch;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// Central finite differences over every parameter.
std::vector<double> fd_gradient(FeatNet& net, std::span<const TrainSample> samples,
                                Objective objective, double lambda_f) {
    std::vector<std::size_t> idx = all_indices(samples.size());
    std::span<double> params = net.parameters();
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double save = params[i];
        double eps = 1e-5 * std::max(1.0, std::fabs(save));
        params[i] = save + eps;
        double up = loss_and_gradient(net, samples, idx, objective, lambda_f, nullptr);
        params[i] = save - eps;
        double down = loss_and_gradient(net, samples, idx, objective, lambda_f, nullptr);
        params[i] = save;
        grad[i] = (up - down) / (2 * eps);
    }
    return grad;
}

void check_close_rel(double a, double b, double rel) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1e-4});
    CHECK(std::fabs(a - b) <= rel * scale);
}

} // namespace

TEST_CASE("init is deterministic per seed; seeds change parameters") {
    NetConfig cfg = toy_config(8, 8, true, 42);
    FeatNet a(cfg), b(cfg);
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));

    cfg.seed = 43;
    FeatNet c(cfg);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.parameters().size(); ++i)
        any_differs |= a.parameters()[i] != c.parameters()[i];
    CHECK(any_differs);

    for (double v : a.conv_bias(0)) CHECK(v == 0.0);
    for (double v : a.dense_bias()) CHECK(v == 0.0);
}

TEST_CASE("config validation rejects even kernels and bad dims") {
    NetConfig cfg = toy_config(8, 8, false, 1);
    cfg.conv_blocks[0].kernel = 4;
    CHECK(thrown_code([&] { FeatNet net(cfg); }) == ErrorCode::InvalidConfig);

    NetConfig tiny = toy_config(2, 2, false, 1); // smaller than the 3x3 kernel
    CHECK(thrown_code([&] { FeatNet net(tiny); }) == ErrorCode::InvalidConfig);

    NetConfig one_writer = toy_config(8, 8, false, 1);
    one_writer.num_writers = 1;
    CHECK(thrown_code([&] { FeatNet net(one_writer); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("zero image produces the zero feature vector") {
    FeatNet net(toy_config(8, 8, false, 7));
    FloatImage zero(8, 8, 0.0f);
    std::vector<float> f = net.forward_features(zero);
    CHECK(f.size() == 4);
    for (float v : f) CHECK(v == 0.0f); // all biases are zero at init
}

TEST_CASE("forward shape contract and mismatch error") {
    FeatNet net(toy_config(8, 10, false, 9));
    Rng rng(5);
    FloatImage ok = testsup::random_float_image(8, 10, rng);
    CHECK(net.forward_features(ok).size() == 4);

    FloatImage wrong = testsup::random_float_image(10, 8, rng);
    CHECK(thrown_code([&] { net.forward_features(wrong); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("single-block forward matches a hand-rolled conv/ReLU/pool oracle") {
    NetConfig cfg;
    cfg.input_height = 3;
    cfg.input_width = 3;
    cfg.conv_blocks = {{2, 3, 1}};
    cfg.feature_dim = 3;
    cfg.num_writers = 2;
    cfg.seed = 21;
    FeatNet net(cfg);

    Rng rng(31);
    FloatImage img = testsup::random_float_image(3, 3, rng);

    // conv -> 1x1, pool over a single cell, GAP is the value itself
    std::span<const double> w = net.conv_weight(0);
    std::span<const double> b = net.conv_bias(0);
    double channel[2];
    for (int o = 0; o < 2; ++o) {
        double acc = b[o];
        for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) acc += w[o * 9 + dy * 3 + dx] * img.at(dy, dx);
        channel[o] = std::max(0.0, acc);
    }
    std::span<const double> dw = net.dense_weight();
    std::span<const double> db = net.dense_bias();
    std::vector<float> got = net.forward_features(img);
    for (int f = 0; f < 3; ++f) {
        double expect = std::max(0.0, db[f] + dw[f * 2 + 0] * channel[0] +
                                          dw[f * 2 + 1] * channel[1]);
        CHECK(got[f] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("loss_signet equals ln(num_writers) under uniform logits") {
    FeatNet net(toy_config(8, 8, false, 11));
    std::vector<TrainSample> batch;
    for (int i = 0; i < 3; ++i)
        batch.push_back({FloatImage(8, 8, 0.0f), i, false}); // zero image -> zero logits
    CHECK(loss_signet(net, batch) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("loss_signet matches an independent softmax cross-entropy") {
    FeatNet net(toy_config(6, 7, false, 13));
    Rng rng(17);
    std::vector<TrainSample> batch = random_batch(net.config(), 5, rng, false);

    double expect = 0.0;
    for (const TrainSample& s : batch) {
        std::vector<double> z = net.forward_writer_logits(s.image);
        double m = *std::max_element(z.begin(), z.end());
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        lse = m + std::log(lse);
        expect += lse - z[s.writer_id];
    }
    expect /= static_cast<double>(batch.size());
    CHECK(loss_signet(net, batch) == doctest::Approx(expect).epsilon(1e-12));

    CHECK(loss_signet(net, batch) >= 0.0);
    batch[0].writer_id = 99;
    CHECK(thrown_code([&] { loss_signet(net, batch); }) == ErrorCode::UnknownWriter);
}

TEST_CASE("loss_signet_f composition and reductions") {
    FeatNet net(toy_config(6, 7, true, 19));
    Rng rng(23);

    // lambda_f = 0 on a genuine-only batch reduces to loss_signet
    std::vector<TrainSample> genuine = random_batch(net.config(), 4, rng, false);
    CHECK(loss_signet_f(net, genuine, 0.0) == doctest::Approx(loss_signet(net, genuine)));

    // zero images keep every head at logit 0: BCE term is ln 2
    std::vector<TrainSample> zeros;
    for (int i = 0; i < 4; ++i) zeros.push_back({FloatImage(6, 7, 0.0f), 0, i % 2 == 1});
    double writer_ce = std::log(3.0); // uniform over 3 writers, genuine half only
    CHECK(loss_signet_f(net, zeros, 1.0) ==
          doctest::Approx(writer_ce + std::log(2.0)).epsilon(1e-12));

    // mixed batch against the independent two-term oracle
    std::vector<TrainSample> mixed = random_batch(net.config(), 6, rng, true);
    mixed[0].forged = false; // at least one genuine
    double lambda = 0.7;
    double ce = 0.0;
    std::size_t genuine_count = 0;
    double bce = 0.0;
    for (const TrainSample& s : mixed) {
        double logit = net.forward_forgery_logit(s.image);
        double p = 1.0 / (1.0 + std::exp(-logit));
        bce += s.forged ? -std::log(p) : -std::log(1.0 - p);
        if (s.forged) continue;
        ++genuine_count;
        std::vector<double> z = net.forward_writer_logits(s.image);
        double m = *std::max_element(z.begin(), z.end());
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - m);
        ce += m + std::log(lse) - z[s.writer_id];
    }
    double expect = ce / static_cast<double>(genuine_count) +
                    lambda * bce / static_cast<double>(mixed.size());
    CHECK(loss_signet_f(net, mixed, lambda) == doctest::Approx(expect).epsilon(1e-10));

    FeatNet headless(toy_config(6, 7, false, 19));
    CHECK(thrown_code([&] { loss_signet_f(headless, mixed, 1.0); }) ==
          ErrorCode::MissingForgeryHead);
}

TEST_CASE("backprop matches central finite differences (signet)") {
    FeatNet net(toy_config(6, 7, false, 29));
    REQUIRE(net.parameters().size() <= 500);
    Rng rng(31);
    std::vector<TrainSample> batch = random_batch(net.config(), 3, rng, false);

    std::vector<double> grad;
    loss_and_gradient(net, batch, all_indices(batch.size()), Objective::signet, 0.0, &grad);
    std::vector<double> fd = fd_gradient(net, batch, Objective::signet, 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) check_close_rel(grad[i], fd[i], 1e-4);
}

TEST_CASE("backprop matches central finite differences (signet-f)") {
    FeatNet net(toy_config(6, 7, true, 37));
    REQUIRE(net.parameters().size() <= 500);
    Rng rng(41);
    std::vector<TrainSample> batch = random_batch(net.config(), 4, rng, true);
    batch[0].forged = false;

    std::vector<double> grad;
    loss_and_gradient(net, batch, all_indices(batch.size()), Objective::signet_f, 0.8, &grad);
    std::vector<double> fd = fd_gradient(net, batch, Objective::signet_f, 0.8);
    for (std::size_t i = 0; i < grad.size(); ++i) check_close_rel(grad[i], fd[i], 1e-4);
}

TEST_CASE("training with lr = 0 leaves parameters unchanged") {
    FeatNet net(toy_config(8, 8, false, 43));
    std::vector<double> before(net.parameters().begin(), net.parameters().end());

    Rng rng(47);
    std::vector<TrainSample> samples = random_batch(net.config(), 5, rng, false);
    TrainSpec spec;
    spec.epochs = 1;
    spec.learning_rate = 0.0;
    FeatNet trained = train(std::move(net), samples, spec, Objective::signet);
    CHECK(std::equal(before.begin(), before.end(), trained.parameters().begin()));
}

TEST_CASE("one full-batch SGD step equals w - lr * finite-difference gradient") {
    FeatNet net(toy_config(6, 7, false, 53));
    Rng rng(59);
    std::vector<TrainSample> samples = random_batch(net.config(), 3, rng, false);

    std::vector<double> before(net.parameters().begin(), net.parameters().end());
    std::vector<double> fd = fd_gradient(net, samples, Objective::signet, 0.0);

    TrainSpec spec;
    spec.epochs = 1;
    spec.batch_size = 16; // one batch covers everything
    spec.learning_rate = 0.01;
    spec.momentum = 0.0;
    FeatNet trained = train(std::move(net), samples, spec, Objective::signet);

    for (std::size_t i = 0; i < before.size(); ++i) {
        double step = (before[i] - trained.parameters()[i]) / spec.learning_rate;
        check_close_rel(step, fd[i], 1e-4);
    }
}

TEST_CASE("training reduces the loss on a separable two-writer toy set") {
    NetConfig cfg;
    cfg.input_height = 8;
    cfg.input_width = 8;
    cfg.conv_blocks = {{4, 3, 1}};
    cfg.feature_dim = 8;
    cfg.num_writers = 2;
    cfg.seed = 61;
    FeatNet net(cfg);

    // writer 0 inks the left half, writer 1 the right half
    std::vector<TrainSample> samples;
    Rng rng(67);
    for (int i = 0; i < 6; ++i) {
        FloatImage img(8, 8, 0.0f);
        int writer = i % 2;
        for (int r = 0; r < 8; ++r)
            for (int c = writer == 0 ? 0 : 4; c < (writer == 0 ? 4 : 8); ++c)
                img.at(r, c) = 0.6f + 0.4f * static_cast<float>(rng.uniform());
        samples.push_back({std::move(img), writer, false});
    }

    double initial = loss_signet(net, samples);
    TrainSpec spec;
    spec.epochs = 50;
    spec.batch_size = 6;
    spec.learning_rate = 0.05;
    spec.momentum = 0.9;
    FeatNet trained = train(std::move(net), samples, spec, Objective::signet);
    double final_loss = loss_signet(trained, samples);
    CHECK(final_loss < initial);
}

TEST_CASE("train rejects forged samples under the signet objective") {
    FeatNet net(toy_config(8, 8, false, 71));
    Rng rng(73);
    std::vector<TrainSample> samples = random_batch(net.config(), 4, rng, false);
    samples[2].forged = true;
    TrainSpec spec;
    CHECK(thrown_code([&] {
              train(std::move(net), samples, spec, Objective::signet);
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("extract_batch shape, order and consistency") {
    FeatNet net(toy_config(6, 7, false, 79));
    Rng rng(83);

    FeatureMatrix empty = extract_batch(net, {});
    CHECK(empty.rows == 0);
    CHECK(empty.cols == 4);

    std::vector<FloatImage> images;
    images.push_back(testsup::random_float_image(6, 7, rng));
    images.push_back(images[0]); // duplicate
    images.push_back(testsup::random_float_image(6, 7, rng));

    FeatureMatrix m = extract_batch(net, images);
    CHECK(m.rows == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<float> f = net.forward_features(images[i]);
        for (std::size_t j = 0; j < m.cols; ++j) CHECK(m.at(i, j) == f[j]);
    }
    for (std::size_t j = 0; j < m.cols; ++j) CHECK(m.at(0, j) == m.at(1, j));
}
