#include "moodcast/model.hpp"

#include "moodcast/errors.hpp"
#include "moodcast/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

using namespace moodcast;
using model::ModelParams;

namespace {

std::vector<double> random_seq(int steps, int input_dim, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> seq(static_cast<std::size_t>(steps * input_dim));
    for (auto& v : seq) v = rng.uniform(lo, hi);
    return seq;
}

ModelParams random_params(int input_dim, int hidden, Rng& rng) {
    ModelParams p = ModelParams::zeros(input_dim, hidden);
    for (auto& v : p.flat) v = rng.uniform(-0.8, 0.8);
    return p;
}

// Independent oracle: central finite differences of the per-sample loss over
// the flat parameter vector.
std::vector<double> fd_gradients(ModelParams params, const std::vector<double>& seq, int steps, double target,
                                 double h = 1e-5) {
    std::vector<double> grads(params.flat.size());
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        const double saved = params.flat[i];
        params.flat[i] = saved + h;
        const double up = model::mse(model::forward(params, seq, steps), target);
        params.flat[i] = saved - h;
        const double down = model::mse(model::forward(params, seq, steps), target);
        params.flat[i] = saved;
        grads[i] = (up - down) / (2.0 * h);
    }
    return grads;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

dataset::Sample sample_from(const std::vector<double>& seq, int steps, double target) {
    dataset::Sample s;
    s.target = target;
    for (int t = 0; t < steps; ++t) {
        features::DailyFeatures d;
        d.missing.fill(false);
        for (int i = 0; i < features::kFeatureCount; ++i) {
            d.values[static_cast<std::size_t>(i)] = seq[static_cast<std::size_t>(t * features::kFeatureCount + i)];
        }
        d.day_index = t + 1;
        s.seq.push_back(d);
    }
    return s;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("all-zero parameters predict 0 for any input") {
    Rng rng(1);
    const ModelParams zeros = ModelParams::zeros(19, 4);
    for (int trial = 0; trial < 10; ++trial) {
        const int steps = static_cast<int>(rng.uniform_int(1, 7));
        const auto seq = random_seq(steps, 19, rng);
        CHECK(model::forward(zeros, seq, steps) == 0.0);
    }
}

TEST_CASE("single-step single-unit forward matches a hand computation") {
    ModelParams p = ModelParams::zeros(1, 1);
    p.w_in(model::kGateInput)[0] = 0.5;
    p.bias(model::kGateInput)[0] = 0.1;
    p.w_in(model::kGateForget)[0] = 0.2;
    p.w_in(model::kGateCell)[0] = 0.8;
    p.bias(model::kGateCell)[0] = -0.2;
    p.w_in(model::kGateOutput)[0] = 1.0;
    p.bias(model::kGateOutput)[0] = 0.5;
    p.w_out()[0] = 1.2;
    p.b_out() = 0.3;

    const double x = 2.0;
    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double gate_in = sig(0.5 * x + 0.1);
    const double gate_cell = std::tanh(0.8 * x - 0.2);
    const double gate_out = sig(1.0 * x + 0.5);
    const double cell = gate_in * gate_cell; // forget gate sees zero initial cell
    const double hidden = gate_out * std::tanh(cell);
    const double expected = std::max(0.0, 1.2 * hidden + 0.3);

    const std::vector<double> seq = {x};
    CHECK(model::forward(p, seq, 1) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("predictions are non-negative for random parameters") {
    Rng rng(2);
    for (int trial = 0; trial < 10'000; ++trial) {
        ModelParams p = random_params(3, 2, rng);
        const int steps = static_cast<int>(rng.uniform_int(1, 4));
        const auto seq = random_seq(steps, 3, rng);
        CHECK(model::forward(p, seq, steps) >= 0.0);
    }
}

TEST_CASE("hidden state stays within [-1, 1]") {
    Rng rng(3);
    model::ForwardCache cache;
    for (int trial = 0; trial < 200; ++trial) {
        ModelParams p = random_params(5, 4, rng);
        for (auto& v : p.flat) v *= 4.0; // exaggerate weights
        const int steps = static_cast<int>(rng.uniform_int(1, 7));
        const auto seq = random_seq(steps, 5, rng, -5.0, 5.0);
        model::forward(p, seq, steps, &cache);
        for (double h : cache.hidden_state) {
            CHECK(std::abs(h) <= 1.0);
        }
    }
}

TEST_CASE("non-finite input is rejected") {
    const ModelParams p = ModelParams::zeros(2, 2);
    std::vector<double> seq = {1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(model::forward(p, seq, 1), DataError);
}

TEST_CASE("loss basics") {
    CHECK(model::mse(3.0, 3.0) == 0.0);
    CHECK(model::mse(0.0, 3.0) == 9.0);
    // batch loss is the mean of per-sample losses
    CHECK((model::mse(0.0, 3.0) + model::mse(3.0, 3.0)) / 2.0 == 4.5);
}

TEST_CASE("zero residual gives zero gradients") {
    Rng rng(4);
    ModelParams p = random_params(4, 3, rng);
    const auto seq = random_seq(3, 4, rng);
    model::ForwardCache cache;
    const double pred = model::forward(p, seq, 3, &cache);
    const auto grads = model::backward(p, cache, pred);
    for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("dead output ReLU gives zero gradients") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        ModelParams p = random_params(3, 2, rng);
        p.b_out() = -10.0; // drive the head negative
        const auto seq = random_seq(2, 3, rng);
        model::ForwardCache cache;
        const double pred = model::forward(p, seq, 2, &cache);
        REQUIRE(pred == 0.0);
        const auto grads = model::backward(p, cache, 5.0);
        for (double g : grads) CHECK(g == 0.0);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(6);
    int checked = 0;
    while (checked < 25) {
        ModelParams p = random_params(19, 4, rng);
        const int steps = static_cast<int>(rng.uniform_int(1, 7));
        const auto seq = random_seq(steps, 19, rng);
        const double target = rng.uniform(0.0, 27.0);
        model::ForwardCache cache;
        model::forward(p, seq, steps, &cache);
        if (std::abs(cache.head_pre) < 0.05) continue; // keep away from the ReLU kink
        const auto analytic = model::backward(p, cache, target);
        const auto numeric = fd_gradients(p, seq, steps, target);
        CHECK(max_rel_error(analytic, numeric) < 1e-4);
        ++checked;
    }
}

TEST_CASE("gradients also match with the ReLU between LSTM and head") {
    Rng rng(7);
    int checked = 0;
    while (checked < 10) {
        ModelParams p = random_params(6, 4, rng);
        p.relu_before_head = true;
        const int steps = static_cast<int>(rng.uniform_int(1, 5));
        const auto seq = random_seq(steps, 6, rng);
        const double target = rng.uniform(0.0, 10.0);
        model::ForwardCache cache;
        model::forward(p, seq, steps, &cache);
        // keep hidden units away from the rectifier kink
        bool near_kink = false;
        const auto last = static_cast<std::size_t>((steps - 1) * 4);
        for (int j = 0; j < 4; ++j) {
            if (std::abs(cache.hidden_state[last + static_cast<std::size_t>(j)]) < 1e-3) near_kink = true;
        }
        if (near_kink) continue;
        const auto analytic = model::backward(p, cache, target);
        const auto numeric = fd_gradients(p, seq, steps, target);
        CHECK(max_rel_error(analytic, numeric) < 1e-4);
        ++checked;
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Rng rng(8);
    ModelParams p = random_params(2, 2, rng);
    const auto before = p.flat;
    auto state = model::AdamState::make(p.size());
    state.m.assign(p.size(), 0.1); // pre-existing moments decay
    const std::vector<double> zero(p.size(), 0.0);
    model::adam_step(p, zero, state);
    // epsilon keeps the update finite; parameter motion is bounded by
    // lr * m_hat / eps with v == 0, i.e. dominated by the stale moment.
    for (std::size_t i = 0; i < p.flat.size(); ++i) {
        CHECK(state.m[i] == doctest::Approx(0.09).epsilon(1e-12));
    }
    // with no pre-existing moments nothing moves at all
    ModelParams q = random_params(2, 2, rng);
    const auto q_before = q.flat;
    auto fresh = model::AdamState::make(q.size());
    model::adam_step(q, zero, fresh);
    for (std::size_t i = 0; i < q.flat.size(); ++i) CHECK(q.flat[i] == q_before[i]);
    (void)before;
}

TEST_CASE("adam: first step moves by about lr in the gradient direction") {
    ModelParams p = ModelParams::zeros(1, 1);
    auto state = model::AdamState::make(p.size());
    std::vector<double> grads(p.size(), 0.0);
    grads[0] = 3.7; // arbitrary positive gradient
    grads[1] = -0.002;
    model::adam_step(p, grads, state);
    // bias-corrected first step: lr * g / (|g| + eps') ~= lr * sign(g)
    CHECK(p.flat[0] == doctest::Approx(-0.001).epsilon(1e-4));
    CHECK(p.flat[1] == doctest::Approx(0.001).epsilon(1e-4));
    for (std::size_t i = 2; i < p.flat.size(); ++i) CHECK(p.flat[i] == 0.0);
}

TEST_CASE("adam: two constant-gradient steps match a manual trace") {
    const double g = 0.5;
    const double lr = 0.001;
    const double b1 = 0.9;
    const double b2 = 0.999;
    const double eps = 1e-8;

    double m = 0.0;
    double v = 0.0;
    double x = 1.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        x -= lr * mh / (std::sqrt(vh) + eps);
    }

    ModelParams p = ModelParams::zeros(1, 1);
    p.flat[0] = 1.0;
    auto state = model::AdamState::make(p.size(), lr);
    std::vector<double> grads(p.size(), 0.0);
    grads[0] = g;
    model::adam_step(p, grads, state);
    model::adam_step(p, grads, state);
    CHECK(p.flat[0] == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("training on one repeated sample overfits") {
    Rng rng(9);
    const auto seq = random_seq(7, features::kFeatureCount, rng, -1.0, 1.0);
    const auto sample = sample_from(seq, 7, 2.0);
    const std::vector<dataset::Sample> samples = {sample};

    model::TrainConfig config;
    config.epochs = 2000;
    config.batch_size = 1;
    config.seed = 123;
    config.prefix_augmentation = false;
    const auto result = model::train(samples, config);
    CHECK(result.epoch_loss.back() < 1e-3);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    Rng rng(10);
    std::vector<dataset::Sample> samples;
    for (int i = 0; i < 12; ++i) {
        const int steps = static_cast<int>(rng.uniform_int(2, 7));
        samples.push_back(sample_from(random_seq(steps, features::kFeatureCount, rng), steps,
                                      rng.uniform(0.0, 27.0)));
    }
    model::TrainConfig config;
    config.epochs = 20;
    config.seed = 77;
    const auto a = model::train(samples, config);
    const auto b = model::train(samples, config);
    REQUIRE(a.params.flat.size() == b.params.flat.size());
    for (std::size_t i = 0; i < a.params.flat.size(); ++i) {
        CHECK(a.params.flat[i] == b.params.flat[i]);
    }
    REQUIRE(a.epoch_loss.size() == b.epoch_loss.size());
    for (std::size_t i = 0; i < a.epoch_loss.size(); ++i) CHECK(a.epoch_loss[i] == b.epoch_loss[i]);
}

TEST_CASE("forward is independent of batch composition") {
    Rng rng(11);
    ModelParams p = random_params(19, 4, rng);
    std::vector<dataset::Sample> samples;
    for (int i = 0; i < 6; ++i) {
        samples.push_back(sample_from(random_seq(4, 19, rng), 4, 5.0));
    }
    // Predicting one-by-one or in any grouping is the same computation.
    std::vector<double> alone;
    for (const auto& s : samples) alone.push_back(model::predict(p, s));
    std::vector<double> grouped;
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) grouped.push_back(model::predict(p, *it));
    for (std::size_t i = 0; i < alone.size(); ++i) {
        CHECK(alone[i] == grouped[alone.size() - 1 - i]);
    }
}

TEST_CASE("checkpoint round trip preserves every parameter bit") {
    Rng rng(12);
    ModelParams p = random_params(19, 4, rng);
    model::TrainConfig config;
    config.epochs = 55;
    config.batch_size = 8;
    config.lr = 0.00125;
    config.seed = 99;
    const auto dir = std::filesystem::temp_directory_path() / "moodcast_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / "checkpoint.txt";
    model::save_checkpoint(path, p, config);
    const auto loaded = model::load_checkpoint(path);
    CHECK(loaded.params.input_dim == p.input_dim);
    CHECK(loaded.params.hidden == p.hidden);
    CHECK(loaded.config.epochs == 55);
    CHECK(loaded.config.lr == 0.00125);
    REQUIRE(loaded.params.flat.size() == p.flat.size());
    for (std::size_t i = 0; i < p.flat.size(); ++i) CHECK(loaded.params.flat[i] == p.flat[i]);
}

TEST_CASE("early stopping halts a stale loss after the patience window") {
    Rng rng(13);
    dataset::Sample s = sample_from(random_seq(3, features::kFeatureCount, rng), 3, 0.0);

    model::TrainConfig config;
    config.epochs = 50;
    config.batch_size = 1;
    config.seed = 31;
    config.patience = 2;

    // Target the model's own initial prediction: the loss starts at zero and
    // every parameter gradient vanishes, so nothing can improve.
    Rng init_rng = Rng::derive(config.seed, {0x747261696eULL});
    const auto p0 = model::ModelParams::init(features::kFeatureCount, config.hidden, init_rng);
    s.target = model::predict(p0, s);

    const std::vector<dataset::Sample> samples = {s};
    const auto result = model::train(samples, config);
    CHECK(result.epoch_loss.size() < 50);
    CHECK(result.epoch_loss.front() == 0.0);
}

TEST_CASE("training aborts with a diagnostic when the loss leaves the finite range") {
    // A target this large overflows the squared loss on the first batch.
    std::vector<dataset::Sample> bad = {
        sample_from(std::vector<double>(features::kFeatureCount, 1.0), 1, 1e200)};
    model::TrainConfig config;
    config.epochs = 2;
    CHECK_THROWS_AS((void)model::train(bad, config), TrainingDiverged);

    std::vector<dataset::Sample> none;
    CHECK_THROWS_AS((void)model::train(none, config), DataError);
}

}
