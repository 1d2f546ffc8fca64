#include <doctest.h>

#include <cmath>

#include "sem/data.hpp"
#include "sem/ssl.hpp"
#include "support/gradcheck.hpp"

using namespace sem;
using sem::testing::random_matrix;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
    Matrix m(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
    Index r = 0;
    for (const auto& row : values) {
        Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

Scalar byol_value(const Matrix& q, const Matrix& z) {
    Tape t;
    return byol_loss(t.leaf(q), t.constant(z)).item();
}

RowVector vec(std::initializer_list<double> v) { return rows({v}); }

struct Toy {
    EncoderSpec enc;
    SemConfig sem{4, 3, 0.5};
    HeadSpec head;
    TrainConfig train;

    explicit Toy(bool batch_norm = true) {
        enc.input_dim = 6;
        enc.hidden = {10};
        enc.batch_norm = batch_norm;
        head.projection_dim = 5;
        head.predictor_hidden = 8;
        train.batch_size = 8;
        train.seed = 11;
        train.augment = AugmentParams::identity();
    }
};

Matrix forward_value(const Branch& b, const Matrix& x, const SemConfig& sem) {
    Branch copy = b;
    Tape t;
    ParamBinder binder(t, false);
    return branch_forward(copy, binder, t.constant(x), sem, true).value();
}

DatasetHandle clusters(int classes, std::uint64_t seed, Index dim = 6) {
    ClusterParams p;
    p.n_classes = classes;
    p.samples_per_class = 40;
    p.dim = dim;
    p.seed = seed;
    return synth_clusters(p);
}

Scalar mean_of(const std::vector<Scalar>& v, std::size_t from, std::size_t to) {
    Scalar s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v[i];
    return s / static_cast<Scalar>(to - from);
}

}  // namespace

TEST_CASE("byol_loss reference values") {
    const Matrix z = rows({{1, 2, 3}, {-1, 0.5, 2}});
    CHECK(std::abs(byol_value(z, z)) < 1e-5);
    CHECK(byol_value(rows({{1, 0}, {0, 3}}), rows({{0, 2}, {-1, 0}})) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(byol_value(-z, z) == doctest::Approx(4.0).epsilon(1e-5));
    CHECK_THROWS_AS(byol_value(rows({{0, 0}}), rows({{1, 0}})), DegenerateInputError);

    Tape t;
    CHECK_THROWS_AS(byol_loss(t.leaf(z), t.leaf(z)), ContractError);
}

TEST_CASE("byol_loss stays in range and sends gradient only to the online side") {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const Matrix q = random_matrix(rng, 4, 7);
        const Matrix z = random_matrix(rng, 4, 7);
        Tape t;
        Var qv = t.leaf(q);
        Var zv = t.constant(z);
        Var loss = byol_loss(qv, zv);
        CHECK(loss.item() >= 0.0);
        CHECK(loss.item() <= 4.0);
        t.backward(loss);
        CHECK(qv.grad() != nullptr);
        CHECK(zv.grad() == nullptr);
    }
}

TEST_CASE("nce_loss reference values") {
    const RowVector a = vec({1, 0, 0});
    const RowVector p = vec({0.6, 0.8, 0});
    const RowVector same = vec({0.6, -0.8, 0});
    CHECK(nce_loss(a, p, {same}, 0.3) == doctest::Approx(std::log(2.0)).epsilon(1e-5));
    for (int K : {1, 3, 7}) {
        const std::vector<RowVector> negs(static_cast<std::size_t>(K), same);
        CHECK(nce_loss(a, p, negs, 0.7) == doctest::Approx(std::log(K + 1.0)).epsilon(1e-5));
    }
    CHECK(std::abs(nce_loss(a, a, {-a}, 1.0) - 0.126928) < 1e-5);
    // Literal form without the positive term in the denominator.
    CHECK(std::abs(nce_loss(a, p, {same}, 0.3, false)) < 1e-12);
    CHECK_THROWS_AS(nce_loss(a, p, {}, 1.0), ParameterError);
    CHECK_THROWS_AS(nce_loss(a, p, {same}, 0.0), ParameterError);
    CHECK_THROWS_AS(nce_loss(a, vec({0, 0, 0}), {same}, 1.0), DegenerateInputError);

    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        std::vector<RowVector> negs;
        for (int k = 0; k < 5; ++k) negs.push_back(random_matrix(rng, 1, 4));
        const Scalar v = nce_loss(random_matrix(rng, 1, 4), random_matrix(rng, 1, 4), negs, 0.2);
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
}

TEST_CASE("nce_batch_loss matches per-row nce_loss") {
    Rng rng(3);
    const Matrix A = random_matrix(rng, 3, 4);
    const Matrix P = random_matrix(rng, 3, 4);
    const Matrix N = random_matrix(rng, 5, 4);
    std::vector<RowVector> negs;
    for (Index k = 0; k < N.rows(); ++k) negs.push_back(N.row(k));
    for (bool include : {true, false}) {
        Tape t;
        const Scalar batch = nce_batch_loss(t.constant(A), t.constant(P), t.constant(N), 0.4, include).item();
        Scalar expected = 0.0;
        for (Index r = 0; r < 3; ++r) expected += nce_loss(A.row(r), P.row(r), negs, 0.4, include) / 3.0;
        CHECK(batch == doctest::Approx(expected).epsilon(1e-12));
    }
    // In-batch negatives drop the matching row.
    Tape t;
    const Scalar inb = nce_batch_loss(t.constant(A), t.constant(P), t.constant(P), 0.4, true, true).item();
    Scalar expected = 0.0;
    for (Index r = 0; r < 3; ++r) {
        std::vector<RowVector> others;
        for (Index k = 0; k < 3; ++k)
            if (k != r) others.push_back(P.row(k));
        expected += nce_loss(A.row(r), P.row(r), others, 0.4) / 3.0;
    }
    CHECK(inb == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ema_update") {
    Matrix target = Matrix::Constant(1, 1, 2.0);
    Matrix online = Matrix::Constant(1, 1, 4.0);
    ema_update({&target}, {&online}, 0.5);
    CHECK(target(0, 0) == 3.0);

    Toy toy;
    ByolState s = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    Rng rng(1);
    for (Matrix* p : s.online_parameters()) *p = random_matrix(rng, p->rows(), p->cols());
    const Branch before = s.target;
    s.ema_rate = 1.0;
    ema_update(s);
    const auto tp = s.target.parameters();
    const auto bp = before.parameters();
    for (std::size_t i = 0; i < tp.size(); ++i) CHECK(*tp[i] == *bp[i]);
    s.ema_rate = 0.0;
    ema_update(s);
    const auto op = s.online.parameters();
    for (std::size_t i = 0; i < tp.size(); ++i) CHECK(*tp[i] == *op[i]);
}

TEST_CASE("cosine_lr") {
    CHECK(cosine_lr(0, 100, 0.3) == 0.3);
    CHECK(std::abs(cosine_lr(100, 100, 0.3)) < 1e-15);
    CHECK(cosine_lr(50, 100, 0.3) == doctest::Approx(0.15).epsilon(1e-12));
    for (Index s = 1; s <= 100; ++s) CHECK(cosine_lr(s, 100, 0.3) <= cosine_lr(s - 1, 100, 0.3));
    CHECK_THROWS_AS(cosine_lr(101, 100, 0.3), ParameterError);
    CHECK_THROWS_AS(cosine_lr(-1, 100, 0.3), ParameterError);
}

TEST_CASE("augment") {
    Image img;
    img.channels = 3;
    img.height = 5;
    img.width = 7;
    Rng fill(4);
    img.pixels = Eigen::VectorXd(3 * 5 * 7);
    for (Index i = 0; i < img.pixels.size(); ++i) img.pixels(i) = fill.uniform();

    Rng rng(1);
    CHECK(augment(img, AugmentParams::identity(), rng).pixels == img.pixels);

    AugmentParams flip = AugmentParams::identity();
    flip.flip_prob = 1.0;
    const Image once = augment(img, flip, rng);
    for (Index c = 0; c < 3; ++c)
        for (Index y = 0; y < 5; ++y)
            for (Index x = 0; x < 7; ++x) CHECK(once.at(c, y, x) == img.at(c, y, 6 - x));
    CHECK(augment(once, flip, rng).pixels == img.pixels);

    AugmentParams full;
    Rng r1(77);
    Rng r2 = r1;
    const Image a = augment(img, full, r1);
    const Image b = augment(img, full, r2);
    CHECK(a.pixels == b.pixels);
    CHECK((a.pixels.array() >= 0.0).all());
    CHECK((a.pixels.array() <= 1.0).all());

    AugmentParams too_big = AugmentParams::identity();
    too_big.crop_max_scale = 1.5;
    CHECK_THROWS_AS(augment(img, too_big, rng), ParameterError);

    Rng v1(5);
    Rng v2 = v1;
    const RowVector x = random_matrix(v1, 1, 9);
    (void)random_matrix(v2, 1, 9);
    CHECK(augment_vector(x, full, v1) == augment_vector(x, full, v2));
    CHECK(augment_vector(x, AugmentParams::identity(), v1) == x);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.batch_size = 1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.batch_size = 4;
    cfg.base_lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.base_lr = 0.1;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("byol step with zero learning rate and frozen target is an identity") {
    Toy toy;
    ByolState s = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    s.ema_rate = 1.0;
    Rng rng(6);
    const Matrix v1 = random_matrix(rng, 8, 6);
    const Matrix v2 = random_matrix(rng, 8, 6);
    const ByolState before = s;
    const Scalar initial = byol_eval_loss(s, v1, v2);
    CHECK(byol_step(s, v1, v2, 0.0, 0.0) == initial);
    const auto now = s.online_parameters();
    ByolState copy = before;
    const auto was = copy.online_parameters();
    for (std::size_t i = 0; i < now.size(); ++i) CHECK(*now[i] == *was[i]);
    const auto tn = s.target.parameters();
    const auto tw = copy.target.parameters();
    for (std::size_t i = 0; i < tn.size(); ++i) CHECK(*tn[i] == *tw[i]);
}

TEST_CASE("identity predictor on identical views gives zero initial loss") {
    Toy toy;
    toy.head.identity_predictor = true;
    toy.head.predictor_hidden = 2 * toy.head.projection_dim;
    ByolState s = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    const DatasetHandle data = clusters(3, 1);
    toy.train.steps = 1;
    const TrainResult r = train_byol(s, data, toy.train);
    REQUIRE(r.losses.size() == 1);
    CHECK(std::abs(r.losses[0]) < 1e-12);
}

TEST_CASE("byol training reduces loss and never touches target gradients") {
    Toy toy;
    toy.train.seed = 7;
    toy.train.steps = 200;
    toy.train.base_lr = 0.05;
    toy.train.augment = AugmentParams{};
    ByolState s = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    const TrainResult r = train_byol(s, clusters(3, 7), toy.train);
    REQUIRE(r.losses.size() == 200);
    for (Scalar l : r.losses) {
        CHECK(std::isfinite(l));
        CHECK(l >= 0.0);
        CHECK(l <= 4.0);
    }
    CHECK(mean_of(r.losses, 180, 200) < mean_of(r.losses, 0, 20));
    CHECK(s.step == 200);
}

TEST_CASE("nce training reduces loss") {
    Toy toy;
    toy.train.seed = 7;
    toy.train.steps = 200;
    toy.train.base_lr = 0.05;
    toy.train.augment = AugmentParams{};
    NceState s = make_nce_state(toy.enc, toy.sem, toy.head, toy.train, 64, 0.2);
    const TrainResult r = train_nce(s, clusters(3, 7), toy.train);
    REQUIRE(r.losses.size() == 200);
    for (Scalar l : r.losses) CHECK(l >= 0.0);
    CHECK(mean_of(r.losses, 180, 200) < mean_of(r.losses, 0, 20));
    CHECK(s.queue.size() == 64);
}

TEST_CASE("training is deterministic") {
    Toy toy;
    toy.train.steps = 30;
    toy.train.augment = AugmentParams{};
    const DatasetHandle data = clusters(3, 2);
    ByolState a = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    ByolState b = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    CHECK(train_byol(a, data, toy.train).losses == train_byol(b, data, toy.train).losses);
    CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("queue seeded with the positive gives ln(K + 1)") {
    Toy toy(false);
    NceState s = make_nce_state(toy.enc, toy.sem, toy.head, toy.train, 16, 0.5);
    Rng rng(12);
    const Matrix x = random_matrix(rng, 1, 6);
    const RowVector key = forward_value(s.momentum, x, s.sem);
    for (std::size_t K : {1u, 4u, 16u}) {
        NceState c = s;
        c.queue.assign(K, key);
        CHECK(nce_step(c, x, x, 0.0, 0.0) == doctest::Approx(std::log(K + 1.0)).epsilon(1e-9));
    }
}

TEST_CASE("queue capacity one reduces to a two-way nce_loss") {
    Toy toy(false);
    NceState s = make_nce_state(toy.enc, toy.sem, toy.head, toy.train, 1, 0.3);
    Rng rng(13);
    nce_step(s, random_matrix(rng, 4, 6), random_matrix(rng, 4, 6), 0.01, 0.0);
    REQUIRE(s.queue.size() == 1);
    const RowVector neg = s.queue.front();
    const Matrix v1 = random_matrix(rng, 4, 6);
    const Matrix v2 = random_matrix(rng, 4, 6);
    const Matrix anchors = forward_value(s.online, v1, s.sem);
    const Matrix keys = forward_value(s.momentum, v2, s.sem);
    Scalar expected = 0.0;
    for (Index r = 0; r < 4; ++r) expected += nce_loss(anchors.row(r), keys.row(r), {neg}, 0.3) / 4.0;
    CHECK(nce_step(s, v1, v2, 0.01, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("queue holds the most recent keys in FIFO order") {
    Toy toy(false);
    NceState s = make_nce_state(toy.enc, toy.sem, toy.head, toy.train, 10, 0.3);
    Rng rng(14);
    std::vector<RowVector> history;
    for (int k = 1; k <= 5; ++k) {
        const Matrix v1 = random_matrix(rng, 4, 6);
        const Matrix v2 = random_matrix(rng, 4, 6);
        const Matrix keys = forward_value(s.momentum, v2, s.sem);
        for (Index r = 0; r < keys.rows(); ++r) history.push_back(keys.row(r));
        nce_step(s, v1, v2, 0.05, 1e-4);
        const std::size_t expected = std::min<std::size_t>(static_cast<std::size_t>(4 * k), 10);
        REQUIRE(s.queue.size() == expected);
        for (std::size_t i = 0; i < expected; ++i) {
            CHECK(s.queue[i] == history[history.size() - expected + i]);
        }
    }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Toy toy;
    toy.train.steps = 10;
    toy.train.augment = AugmentParams{};
    const DatasetHandle data = clusters(3, 3);

    ByolState b = make_byol_state(toy.enc, toy.sem, SemConfig{4, 3, 0.8}, toy.head, toy.train);
    train_byol(b, data, toy.train);
    ByolState b2 = byol_from_json(nlohmann::json::parse(to_json(b).dump()));
    CHECK(to_json(b2).dump() == to_json(b).dump());
    CHECK(train_byol(b, data, toy.train).losses == train_byol(b2, data, toy.train).losses);

    NceState n = make_nce_state(toy.enc, toy.sem, toy.head, toy.train, 20, 0.2);
    train_nce(n, data, toy.train);
    NceState n2 = nce_from_json(nlohmann::json::parse(to_json(n).dump()));
    CHECK(n2.queue == n.queue);
    CHECK(to_json(n2).dump() == to_json(n).dump());
    CHECK(train_nce(n, data, toy.train).losses == train_nce(n2, data, toy.train).losses);

    nlohmann::json bad = to_json(b);
    bad["version"] = 99;
    CHECK_THROWS_AS(byol_from_json(bad), FormatError);
}

TEST_CASE("divergence raises a training failure carrying the step") {
    Toy toy;
    toy.train.steps = 50;
    toy.train.base_lr = 1e200;
    toy.train.cosine_decay = false;
    ByolState s = make_byol_state(toy.enc, toy.sem, toy.sem, toy.head, toy.train);
    try {
        train_byol(s, clusters(3, 4), toy.train);
        FAIL("expected divergence");
    } catch (const TrainingFailure& e) {
        CHECK(e.step() < 50);
    }
}
