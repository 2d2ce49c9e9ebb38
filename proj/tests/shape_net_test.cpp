#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "cardlv/errors.hpp"
#include "cardlv/shape_net.hpp"
#include "fd_check.hpp"
#include "test_util.hpp"

using namespace cardlv;

namespace {

ShapeNetArch small_arch(int input_dim = 16, int h1 = 4, int h2 = 4) {
    ShapeNetArch a;
    a.input_dim = input_dim;
    a.hidden1 = h1;
    a.hidden2 = h2;
    return a;
}

Eigen::MatrixXd random_unit_batch(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = dist(rng);
    return m;
}

Eigen::VectorXd pack_sae(const StackedAEParams& p) {
    Eigen::VectorXd x(p.W4.size() + p.b4.size() + p.W5.size() + p.b5.size() + p.W6.size() +
                      p.b6.size());
    Eigen::Index off = 0;
    const auto put = [&](const Eigen::MatrixXd& m) {
        x.segment(off, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        off += m.size();
    };
    put(p.W4);
    x.segment(off, p.b4.size()) = p.b4;
    off += p.b4.size();
    put(p.W5);
    x.segment(off, p.b5.size()) = p.b5;
    off += p.b5.size();
    put(p.W6);
    x.segment(off, p.b6.size()) = p.b6;
    off += p.b6.size();
    return x;
}

StackedAEParams unpack_sae(const Eigen::VectorXd& x, const ShapeNetArch& a) {
    StackedAEParams p = StackedAEParams::init_random(a, 0);
    Eigen::Index off = 0;
    const auto take = [&](Eigen::MatrixXd& m) {
        m = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, m.rows(), m.cols());
        off += m.size();
    };
    take(p.W4);
    p.b4 = x.segment(off, p.b4.size());
    off += p.b4.size();
    take(p.W5);
    p.b5 = x.segment(off, p.b5.size());
    off += p.b5.size();
    take(p.W6);
    p.b6 = x.segment(off, p.b6.size());
    off += p.b6.size();
    return p;
}

// Eq. 7 objective recomputed through the public forward pass.
double sae_cost(const StackedAEParams& p, const Eigen::MatrixXd& X, const Eigen::MatrixXd& L,
                double lambda) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < X.cols(); ++i)
        cost += (sae_forward(p, X.col(i)) - L.col(i)).squaredNorm();
    cost /= 2.0 * static_cast<double>(X.cols());
    cost += 0.5 * lambda * (p.W4.squaredNorm() + p.W5.squaredNorm() + p.W6.squaredNorm());
    return cost;
}

} // namespace

TEST_CASE("shape net: production dimensions 4096 -> 100 -> 100 -> 4096") {
    ShapeNetArch a;
    a.validate();
    CHECK(a.side() == 64);
    StackedAEParams p = StackedAEParams::init_random(a, 1);
    CHECK(p.W4.rows() == 100);
    CHECK(p.W4.cols() == 4096);
    CHECK(p.W5.rows() == 100);
    CHECK(p.W5.cols() == 100);
    CHECK(p.W6.rows() == 4096);
    CHECK(p.W6.cols() == 100);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(4096, 0.3);
    CHECK(sae_forward(p, x).size() == 4096);
}

TEST_CASE("shape net: zero parameters give y_s = 0.5") {
    StackedAEParams p = StackedAEParams::init_random(small_arch(), 2);
    p.W4.setZero();
    p.b4.setZero();
    p.W5.setZero();
    p.b5.setZero();
    p.W6.setZero();
    p.b6.setZero();
    const Eigen::VectorXd y = sae_forward(p, Eigen::VectorXd::Random(16));
    CHECK((y.array() == 0.5).all());
}

TEST_CASE("shape net: forward matches matrix-chain oracle") {
    ShapeNetArch a = small_arch(9, 4, 3);
    StackedAEParams p = StackedAEParams::init_random(a, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd x(9);
    for (int i = 0; i < 9; ++i) x[i] = dist(rng);

    const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    Eigen::VectorXd h1(4), h2(3), y(9);
    for (int j = 0; j < 4; ++j) {
        double z = p.b4[j];
        for (int i = 0; i < 9; ++i) z += p.W4(j, i) * x[i];
        h1[j] = sig(z);
    }
    for (int j = 0; j < 3; ++j) {
        double z = p.b5[j];
        for (int i = 0; i < 4; ++i) z += p.W5(j, i) * h1[i];
        h2[j] = sig(z);
    }
    for (int j = 0; j < 9; ++j) {
        double z = p.b6[j];
        for (int i = 0; i < 3; ++i) z += p.W6(j, i) * h2[i];
        y[j] = sig(z);
    }
    CHECK((sae_forward(p, x) - y).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(sae_forward(p, Eigen::VectorXd::Zero(10)), DimensionError);
}

TEST_CASE("layerwise_pretrain: stage shapes, determinism, sparsity pull") {
    // 6x6 patches as inputs, hidden sizes 12/5.
    ShapeNetArch a = small_arch(36, 12, 5);
    std::mt19937_64 rng(7);
    std::vector<Image> imgs = {testutil::random_image(48, 48, rng)};
    const Eigen::MatrixXd inputs = sample_patches(imgs, 400, 6, 71);

    SparsityConfig cfg;
    cfg.rho = 0.1;
    cfg.beta = 3.0;
    cfg.lambda = 3e-3;
    cfg.control.max_iters = 250;
    cfg.control.step = 1.0;

    StackedAEParams p = StackedAEParams::init_random(a, 8);
    const Eigen::MatrixXd w6_before = p.W6;
    layerwise_pretrain(p, inputs, cfg, 99);
    CHECK(p.W4.rows() == 12);
    CHECK(p.W5.rows() == 5);
    CHECK(p.W5.cols() == 12);  // stage 2 consumes the 12 hidden unit outputs
    CHECK((p.W6 - w6_before).cwiseAbs().maxCoeff() == 0.0);

    StackedAEParams q = StackedAEParams::init_random(a, 8);
    layerwise_pretrain(q, inputs, cfg, 99);
    CHECK((p.W4 - q.W4).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.W5 - q.W5).cwiseAbs().maxCoeff() == 0.0);

    // Sparsity pressure holds the stage-1 mean activations near rho.
    AEParams enc;
    enc.W2 = p.W4;
    enc.b2 = p.b4;
    enc.W3 = Eigen::MatrixXd::Zero(36, 12);
    enc.b3 = Eigen::VectorXd::Zero(36);
    const Eigen::VectorXd rho_hat = mean_hidden_activation(enc, inputs);
    int in_band = 0;
    for (Eigen::Index j = 0; j < rho_hat.size(); ++j)
        if (rho_hat[j] >= 0.05 && rho_hat[j] <= 0.2) ++in_band;
    CHECK(in_band >= static_cast<int>(0.9 * rho_hat.size()));
}

TEST_CASE("train_output_layer: freeze contract, descent, finite-difference gradient") {
    ShapeNetArch a = small_arch();
    StackedAEParams p = StackedAEParams::init_random(a, 11);
    const Eigen::MatrixXd X = random_unit_batch(16, 6, 12);
    Eigen::MatrixXd L(16, 6);
    std::mt19937_64 rng(13);
    std::bernoulli_distribution coin(0.3);
    for (int c = 0; c < 6; ++c)
        for (int r = 0; r < 16; ++r) L(r, c) = coin(rng) ? 1.0 : 0.0;

    const Eigen::MatrixXd w4_before = p.W4, w5_before = p.W5;
    TrainControl ctl;
    ctl.max_iters = 25;
    ctl.step = 1.0;
    TrainingCurve curve;
    const DescentResult res = train_output_layer(p, X, L, 1e-4, ctl, &curve);
    CHECK(res.final_cost < res.initial_cost);
    CHECK((p.W4 - w4_before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.W5 - w5_before).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1] + 1e-12);

    // Gradient of the Eq. 6 objective via a single unit step.
    StackedAEParams q = StackedAEParams::init_random(a, 14);
    TrainControl one;
    one.max_iters = 1;
    one.line_search = false;
    one.step = 1.0;
    StackedAEParams probe = q;
    train_output_layer(probe, X, L, 1e-4, one);
    Eigen::VectorXd analytic(q.W6.size() + q.b6.size());
    analytic.segment(0, q.W6.size()) =
        Eigen::Map<const Eigen::VectorXd>(q.W6.data(), q.W6.size()) -
        Eigen::Map<const Eigen::VectorXd>(probe.W6.data(), probe.W6.size());
    analytic.segment(q.W6.size(), q.b6.size()) = q.b6 - probe.b6;

    const auto cost_at = [&](const Eigen::VectorXd& v) {
        StackedAEParams t = q;
        t.W6 = Eigen::Map<const Eigen::MatrixXd>(v.data(), 16, 4);
        t.b6 = v.segment(t.W6.size(), 16);
        double cost = 0.0;
        for (int i = 0; i < 6; ++i) cost += (sae_forward(t, X.col(i)) - L.col(i)).squaredNorm();
        return cost / 12.0 + 0.5e-4 * t.W6.squaredNorm();
    };
    Eigen::VectorXd x0(q.W6.size() + q.b6.size());
    x0.segment(0, q.W6.size()) = Eigen::Map<const Eigen::VectorXd>(q.W6.data(), q.W6.size());
    x0.segment(q.W6.size(), q.b6.size()) = q.b6;
    const Eigen::VectorXd fd = testutil::fd_gradient(cost_at, x0, 1e-5);
    CHECK(testutil::gradient_rel_error(analytic, fd) <= 1e-6);
}

TEST_CASE("finetune_sae: full gradient matches finite differences on 16->4->4->16") {
    ShapeNetArch a = small_arch(16, 4, 4);
    StackedAEParams p = StackedAEParams::init_random(a, 21);
    const Eigen::MatrixXd X = random_unit_batch(16, 5, 22);
    Eigen::MatrixXd L = random_unit_batch(16, 5, 23);
    const double lambda = 1e-4;

    StackedAEParams probe = p;
    TrainControl one;
    one.max_iters = 1;
    one.line_search = false;
    one.step = 1.0;
    finetune_sae(probe, X, L, lambda, one);
    const Eigen::VectorXd analytic = pack_sae(p) - pack_sae(probe);

    const auto cost_at = [&](const Eigen::VectorXd& v) {
        return sae_cost(unpack_sae(v, a), X, L, lambda);
    };
    const Eigen::VectorXd fd = testutil::fd_gradient(cost_at, pack_sae(p), 1e-5);
    CHECK(testutil::gradient_rel_error(analytic, fd) <= 1e-5);
}

TEST_CASE("finetune_sae: cost decreases from the pretrained point") {
    ShapeNetArch a = small_arch(16, 5, 4);
    StackedAEParams p = StackedAEParams::init_random(a, 31);
    const Eigen::MatrixXd X = random_unit_batch(16, 10, 32);
    Eigen::MatrixXd L(16, 10);
    std::mt19937_64 rng(33);
    std::bernoulli_distribution coin(0.25);
    for (int c = 0; c < 10; ++c)
        for (int r = 0; r < 16; ++r) L(r, c) = coin(rng) ? 1.0 : 0.0;

    TrainControl ctl;
    ctl.max_iters = 20;
    ctl.step = 1.0;
    train_output_layer(p, X, L, 1e-4, ctl);
    const double eq7_at_start = sae_cost(p, X, L, 1e-4);
    const DescentResult res = finetune_sae(p, X, L, 1e-4, ctl);
    CHECK(res.initial_cost == doctest::Approx(eq7_at_start).epsilon(1e-12));
    CHECK(res.final_cost <= eq7_at_start);
}

TEST_CASE("threshold_mask: raising the threshold never grows the mask") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd y(64);
    for (int i = 0; i < 64; ++i) y[i] = dist(rng);
    long prev = threshold_mask(y, 8, 0.2).count_foreground();
    for (double thr : {0.35, 0.5, 0.65, 0.8}) {
        const long cur = threshold_mask(y, 8, thr).count_foreground();
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("infer_shape: resizes 100x100 inputs, pure, fails on empty output") {
    ShapeNetArch a;
    StackedAEParams p = StackedAEParams::init_random(a, 51);
    p.W6.setZero();
    p.b6.setConstant(-2.0);  // every output below threshold
    std::mt19937_64 rng(52);
    const Image sub = testutil::random_image(100, 100, rng);
    CHECK_THROWS_AS(infer_shape(p, sub), ShapeInferenceError);

    // A ring pattern in b6 must survive the resize path and produce a filled disk.
    p.b6.setConstant(-2.0);
    const double cx = 31.5, cy = 31.5, radius = 12.0;
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            const double d = std::hypot(r - cy, c - cx);
            if (std::abs(d - radius) <= 1.0) p.b6[r * 64 + c] = 2.0;
        }
    ShapeInference inf1 = infer_shape(p, sub);
    ShapeInference inf2 = infer_shape(p, sub);
    CHECK(inf1.ring.data == inf2.ring.data);      // purity
    CHECK(inf1.filled.data == inf2.filled.data);
    CHECK(inf1.filled.count_foreground() > inf1.ring.count_foreground());
    // The filled region covers the disk interior.
    CHECK(inf1.filled.at(32, 32) == 1);
    CHECK(inf1.filled.at(1, 1) == 0);
}

TEST_CASE("fallback_disk_mask: centered disk of the stated radius") {
    BinaryMask disk = fallback_disk_mask(64, 12.0);
    CHECK(disk.at(31, 31) == 1);
    CHECK(disk.at(31, 31 - 11) == 1);
    CHECK(disk.at(0, 0) == 0);
    Point c = centroid(disk);
    CHECK(c.x == doctest::Approx(31.5).epsilon(0.01));
    CHECK(c.y == doctest::Approx(31.5).epsilon(0.01));
}
