#include "sem/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sem {

// ---- augmentation ----------------------------------------------------------

AugmentParams AugmentParams::identity() {
    AugmentParams p;
    p.crop_min_scale = 1.0;
    p.crop_max_scale = 1.0;
    p.flip_prob = 0.0;
    p.brightness = 0.0;
    p.contrast = 0.0;
    p.noise_std = 0.0;
    p.feature_drop = 0.0;
    p.scale_jitter = 0.0;
    return p;
}

void AugmentParams::validate() const {
    if (!(crop_min_scale > 0.0) || crop_max_scale > 1.0 || crop_min_scale > crop_max_scale) {
        throw ParameterError("crop scales must satisfy 0 < min <= max <= 1 (crop cannot exceed the image)");
    }
    if (flip_prob < 0.0 || flip_prob > 1.0 || feature_drop < 0.0 || feature_drop >= 1.0) {
        throw ParameterError("probabilities must lie in [0, 1]");
    }
    if (brightness < 0.0 || contrast < 0.0 || noise_std < 0.0 || scale_jitter < 0.0) {
        throw ParameterError("jitter magnitudes must be nonnegative");
    }
}

Image augment(const Image& image, const AugmentParams& params, Rng& rng) {
    params.validate();
    const Index h = image.height;
    const Index w = image.width;
    if (image.pixels.size() != image.channels * h * w) throw DimensionError("image size mismatch");
    if ((image.pixels.array() < 0.0).any() || (image.pixels.array() > 1.0).any()) {
        throw ParameterError("image values must lie in [0, 1]");
    }

    Image out = image;
    const Scalar area = rng.uniform(params.crop_min_scale, params.crop_max_scale);
    const Index ch = std::clamp<Index>(std::llround(h * std::sqrt(area)), 1, h);
    const Index cw = std::clamp<Index>(std::llround(w * std::sqrt(area)), 1, w);
    const Index y0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(h - ch + 1)));
    const Index x0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(w - cw + 1)));
    if (ch != h || cw != w) {
        // Bilinear resize of the crop back to h x w.
        for (Index c = 0; c < image.channels; ++c) {
            for (Index y = 0; y < h; ++y) {
                const Scalar sy = std::clamp((y + 0.5) * ch / h - 0.5, 0.0, ch - 1.0);
                const Index ya = static_cast<Index>(std::floor(sy));
                const Index yb = std::min(ya + 1, ch - 1);
                const Scalar fy = sy - ya;
                for (Index x = 0; x < w; ++x) {
                    const Scalar sx = std::clamp((x + 0.5) * cw / w - 0.5, 0.0, cw - 1.0);
                    const Index xa = static_cast<Index>(std::floor(sx));
                    const Index xb = std::min(xa + 1, cw - 1);
                    const Scalar fx = sx - xa;
                    const Scalar top = (1 - fx) * image.at(c, y0 + ya, x0 + xa) + fx * image.at(c, y0 + ya, x0 + xb);
                    const Scalar bot = (1 - fx) * image.at(c, y0 + yb, x0 + xa) + fx * image.at(c, y0 + yb, x0 + xb);
                    out.at(c, y, x) = (1 - fy) * top + fy * bot;
                }
            }
        }
    }
    if (rng.bernoulli(params.flip_prob)) {
        Image flipped = out;
        for (Index c = 0; c < out.channels; ++c)
            for (Index y = 0; y < h; ++y)
                for (Index x = 0; x < w; ++x) flipped.at(c, y, x) = out.at(c, y, w - 1 - x);
        out = std::move(flipped);
    }
    if (params.brightness > 0.0) {
        out.pixels.array() += rng.uniform(-params.brightness, params.brightness);
    }
    if (params.contrast > 0.0) {
        const Scalar factor = rng.uniform(1.0 - params.contrast, 1.0 + params.contrast);
        const Scalar m = out.pixels.mean();
        out.pixels = ((out.pixels.array() - m) * factor + m).matrix();
    }
    if (params.noise_std > 0.0) {
        for (Index i = 0; i < out.pixels.size(); ++i) out.pixels(i) += params.noise_std * rng.normal();
    }
    out.pixels = out.pixels.cwiseMax(0.0).cwiseMin(1.0);
    return out;
}

RowVector augment_vector(const RowVector& x, const AugmentParams& params, Rng& rng) {
    params.validate();
    RowVector out = x;
    for (Index j = 0; j < out.size(); ++j) {
        if (params.scale_jitter > 0.0) out(j) *= 1.0 + rng.uniform(-params.scale_jitter, params.scale_jitter);
        if (params.noise_std > 0.0) out(j) += params.noise_std * rng.normal();
        if (params.feature_drop > 0.0 && rng.bernoulli(params.feature_drop)) out(j) = 0.0;
    }
    return out;
}

Matrix augment_batch(const Matrix& batch, const std::optional<ImageShape>& shape,
                     const AugmentParams& params, Rng& rng) {
    Matrix out(batch.rows(), batch.cols());
    for (Index r = 0; r < batch.rows(); ++r) {
        if (shape) {
            Image img{shape->channels, shape->height, shape->width, batch.row(r).transpose()};
            out.row(r) = augment(img, params, rng).pixels.transpose();
        } else {
            out.row(r) = augment_vector(batch.row(r), params, rng);
        }
    }
    return out;
}

// ---- configuration ---------------------------------------------------------

void TrainConfig::validate() const {
    if (batch_size < 2) throw ParameterError("batch size must be at least 2");
    if (epochs < 1 && steps < 1) throw ParameterError("epochs must be at least 1");
    if (!(base_lr > 0.0)) throw ParameterError("learning rate must be positive");
    if (weight_decay < 0.0) throw ParameterError("weight decay must be nonnegative");
    if (ema_rate < 0.0 || ema_rate > 1.0) throw ParameterError("EMA rate must lie in [0, 1]");
    augment.validate();
}

Index TrainConfig::total_steps(Index dataset_size) const {
    if (steps > 0) return steps;
    return std::max<Index>(1, epochs * (dataset_size / batch_size));
}

// ---- networks --------------------------------------------------------------

std::vector<Matrix*> Branch::parameters() {
    auto ps = encoder.parameters();
    auto pp = projector.parameters();
    ps.insert(ps.end(), pp.begin(), pp.end());
    return ps;
}

std::vector<const Matrix*> Branch::parameters() const {
    auto ps = const_cast<Branch*>(this)->parameters();
    return {ps.begin(), ps.end()};
}

std::vector<BatchNormState*> Branch::norm_states() {
    auto ns = encoder.norm_states();
    auto np = projector.norm_states();
    ns.insert(ns.end(), np.begin(), np.end());
    return ns;
}

std::vector<Matrix*> ByolState::online_parameters() {
    auto ps = online.parameters();
    auto pp = predictor.parameters();
    ps.insert(ps.end(), pp.begin(), pp.end());
    return ps;
}

Branch make_branch(const EncoderSpec& enc, const SemConfig& sem, const HeadSpec& head, Rng& init_rng) {
    sem.validate();
    Branch b;
    b.encoder = Mlp(enc.input_dim, enc.hidden, sem.dim(), enc.batch_norm, init_rng);
    b.projector = Mlp(sem.dim(), head.projector_hidden, head.projection_dim, false, init_rng);
    return b;
}

namespace {

Mlp make_predictor(const HeadSpec& head, Rng& rng) {
    Mlp p(head.projection_dim, {head.predictor_hidden}, head.projection_dim, false, rng);
    if (head.identity_predictor) {
        const Index d = head.projection_dim;
        if (head.predictor_hidden != 2 * d) {
            throw ParameterError("identity predictor needs predictor_hidden = 2 * projection_dim");
        }
        Matrix w1(d, 2 * d);
        w1 << Matrix::Identity(d, d), -Matrix::Identity(d, d);
        Matrix w2(2 * d, d);
        w2 << Matrix::Identity(d, d), -Matrix::Identity(d, d);
        p.weight(0) = w1;
        p.weight(1) = w2;
        p.bias(0).setZero();
        p.bias(1).setZero();
    }
    return p;
}

std::vector<Index> sample_batch(Rng& rng, Index n, Index b) {
    if (b > n) throw ParameterError("batch size exceeds dataset size");
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < b; ++i) {
        const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(b);
    return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

void sgd_update(const std::vector<Matrix*>& params, const ParamBinder& binder, Scalar lr,
                Scalar weight_decay) {
    for (Matrix* p : params) {
        const Matrix* g = binder.grad_of(*p);
        if (g != nullptr) {
            *p -= lr * (*g + weight_decay * *p);
        } else if (weight_decay != 0.0) {
            *p -= lr * weight_decay * *p;
        }
    }
}

Matrix stack_rows(const std::deque<RowVector>& rows) {
    Matrix out(static_cast<Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
    Index r = 0;
    for (const RowVector& v : rows) out.row(r++) = v;
    return out;
}

}  // namespace

ByolState make_byol_state(const EncoderSpec& enc, const SemConfig& online_sem,
                          const SemConfig& target_sem, const HeadSpec& head, const TrainConfig& train) {
    if (online_sem.dim() != target_sem.dim()) {
        throw ParameterError("online and target SEM shapes must agree");
    }
    target_sem.validate();
    Rng init = Rng::stream(train.seed, "init");
    ByolState s;
    s.online = make_branch(enc, online_sem, head, init);
    s.predictor = make_predictor(head, init);
    s.target = s.online;
    s.ema_rate = train.ema_rate;
    s.online_sem = online_sem;
    s.target_sem = target_sem;
    s.batch_rng = Rng::stream(train.seed, "data");
    s.augment_rng = Rng::stream(train.seed, "augment");
    return s;
}

NceState make_nce_state(const EncoderSpec& enc, const SemConfig& sem, const HeadSpec& head,
                        const TrainConfig& train, std::size_t queue_capacity, Scalar temperature) {
    if (queue_capacity < 1) throw ParameterError("queue capacity must be at least 1");
    if (!(temperature > 0.0)) throw ParameterError("NCE temperature must be positive");
    Rng init = Rng::stream(train.seed, "init");
    NceState s;
    s.online = make_branch(enc, sem, head, init);
    s.momentum = s.online;
    s.ema_rate = train.ema_rate;
    s.queue_capacity = queue_capacity;
    s.temperature = temperature;
    s.sem = sem;
    s.batch_rng = Rng::stream(train.seed, "data");
    s.augment_rng = Rng::stream(train.seed, "augment");
    return s;
}

Var branch_forward(Branch& branch, ParamBinder& binder, const Var& x, const SemConfig& sem,
                   bool training) {
    Var z = branch.encoder.forward(binder, x, training);
    return branch.projector.forward(binder, sem_forward(z, sem), training);
}

// ---- losses ----------------------------------------------------------------

Var byol_loss(const Var& q_online, const Var& z_target) {
    if (z_target.requires_grad()) throw ContractError("byol_loss target must be stop-gradient");
    if (q_online.rows() != z_target.rows() || q_online.cols() != z_target.cols()) {
        throw DimensionError("byol_loss: shape mismatch");
    }
    Var cos = cosine_similarity_rows(q_online, z_target);
    Tape& t = *q_online.tape();
    Var two = t.constant(Matrix::Constant(1, 1, 2.0));
    return two - scale(mean(cos), 2.0);
}

Var nce_batch_loss(const Var& anchors, const Var& positives, const Var& negatives, Scalar t,
                   bool include_positive, bool exclude_diagonal) {
    if (!(t > 0.0)) throw ParameterError("NCE temperature must be positive");
    if (negatives.rows() < 1) throw ParameterError("NCE needs at least one negative");
    if (anchors.rows() != positives.rows() || anchors.cols() != positives.cols() ||
        negatives.cols() != anchors.cols()) {
        throw DimensionError("nce_batch_loss: shape mismatch");
    }
    Var a = l2_normalize_rows(anchors);
    Var pos = scale(row_dot(a, l2_normalize_rows(positives)), 1.0 / t);
    Var neg = scale(matmul(a, transpose(l2_normalize_rows(negatives))), 1.0 / t);
    Tape& tape = *anchors.tape();
    if (exclude_diagonal) {
        if (negatives.rows() != anchors.rows() || anchors.rows() < 2) {
            throw ParameterError("in-batch negatives need a square batch of at least 2");
        }
        // exp(-1e6) is exactly 0 in double, so masked entries drop out of the sum.
        Matrix mask = Matrix::Zero(anchors.rows(), anchors.rows());
        mask.diagonal().setConstant(-1e6);
        neg = neg + tape.constant(mask);
    }
    Var lse = include_positive ? logsumexp_rows(concat_cols(pos, neg)) : logsumexp_rows(neg);
    return mean(lse - pos);
}

Scalar nce_loss(const RowVector& anchor, const RowVector& positive,
                const std::vector<RowVector>& negatives, Scalar t, bool include_positive) {
    if (negatives.empty()) throw ParameterError("NCE needs at least one negative");
    Tape tape;
    Matrix neg(static_cast<Index>(negatives.size()), anchor.size());
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        if (negatives[i].size() != anchor.size()) throw DimensionError("negative has wrong width");
        neg.row(static_cast<Index>(i)) = negatives[i];
    }
    return nce_batch_loss(tape.constant(anchor), tape.constant(positive), tape.constant(neg), t,
                          include_positive)
        .item();
}

// ---- EMA / schedule --------------------------------------------------------

void ema_update(std::vector<Matrix*> target, std::vector<const Matrix*> online, Scalar alpha) {
    if (target.size() != online.size()) throw DimensionError("EMA parameter lists differ");
    if (alpha < 0.0 || alpha > 1.0) throw ParameterError("EMA rate must lie in [0, 1]");
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i]->rows() != online[i]->rows() || target[i]->cols() != online[i]->cols()) {
            throw DimensionError("EMA parameter shapes differ");
        }
        if (alpha == 1.0) continue;
        if (alpha == 0.0) {
            *target[i] = *online[i];
        } else {
            *target[i] = alpha * *target[i] + (1.0 - alpha) * *online[i];
        }
    }
}

void ema_update(ByolState& state) {
    const Branch& online = state.online;
    ema_update(state.target.parameters(), online.parameters(), state.ema_rate);
}

void ema_update(NceState& state) {
    const Branch& online = state.online;
    ema_update(state.momentum.parameters(), online.parameters(), state.ema_rate);
}

Scalar cosine_lr(Index step, Index total_steps, Scalar base_lr) {
    if (step < 0 || step > total_steps) throw ParameterError("cosine_lr step outside [0, total]");
    if (total_steps == 0) return base_lr;
    if (step == total_steps) return 0.0;
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<Scalar>(step) / static_cast<Scalar>(total_steps)));
}

// ---- training --------------------------------------------------------------

namespace {

Var byol_objective(ByolState& s, Tape& tape, ParamBinder& online, ParamBinder& target,
                   const Matrix& view1, const Matrix& view2) {
    Var x1 = tape.constant(view1);
    Var x2 = tape.constant(view2);
    Var q1 = s.predictor.forward(online, branch_forward(s.online, online, x1, s.online_sem, true), true);
    Var q2 = s.predictor.forward(online, branch_forward(s.online, online, x2, s.online_sem, true), true);
    Var t1 = branch_forward(s.target, target, x1, s.target_sem, true);
    Var t2 = branch_forward(s.target, target, x2, s.target_sem, true);
    return scale(byol_loss(q1, t2) + byol_loss(q2, t1), 0.5);
}

}  // namespace

Scalar byol_step(ByolState& state, const Matrix& view1, const Matrix& view2, Scalar lr,
                 Scalar weight_decay) {
    Tape tape;
    ParamBinder online(tape, true);
    ParamBinder target(tape, false);
    Var loss = byol_objective(state, tape, online, target, view1, view2);
    tape.backward(loss);
    for (const Var& v : target.bound()) {
        if (v.grad() != nullptr) throw ContractError("gradient reached the target network");
    }
    sgd_update(state.online_parameters(), online, lr, weight_decay);
    ema_update(state);
    ++state.step;
    return loss.item();
}

Scalar byol_eval_loss(const ByolState& state, const Matrix& view1, const Matrix& view2) {
    ByolState copy = state;
    Tape tape;
    ParamBinder online(tape, false);
    ParamBinder target(tape, false);
    return byol_objective(copy, tape, online, target, view1, view2).item();
}

Scalar nce_step(NceState& state, const Matrix& view1, const Matrix& view2, Scalar lr,
                Scalar weight_decay) {
    Tape tape;
    ParamBinder online(tape, true);
    ParamBinder momentum(tape, false);
    Var anchors = branch_forward(state.online, online, tape.constant(view1), state.sem, true);
    Var keys = branch_forward(state.momentum, momentum, tape.constant(view2), state.sem, true);
    const bool in_batch = state.queue.empty();
    Var negatives = in_batch ? keys : tape.constant(stack_rows(state.queue));
    Var loss = nce_batch_loss(anchors, keys, negatives, state.temperature, state.include_positive, in_batch);
    tape.backward(loss);
    sgd_update(state.online.parameters(), online, lr, weight_decay);
    ema_update(state);
    for (Index r = 0; r < keys.rows(); ++r) {
        state.queue.push_back(keys.value().row(r));
        if (state.queue.size() > state.queue_capacity) state.queue.pop_front();
    }
    ++state.step;
    return loss.item();
}

namespace {

template <class State, class Step>
TrainResult run_training(State& state, const DatasetHandle& data, const TrainConfig& cfg, Step step) {
    cfg.validate();
    data.validate();
    if (data.size() == 0) throw EmptyInputError("training dataset is empty");
    if (cfg.batch_size > data.size()) throw ParameterError("batch size exceeds dataset size");
    const Index total = cfg.total_steps(data.size());
    TrainResult result;
    result.losses.reserve(static_cast<std::size_t>(total));
    for (Index s = 0; s < total; ++s) {
        const Scalar lr = cfg.cosine_decay ? cosine_lr(s, total, cfg.base_lr) : cfg.base_lr;
        const Matrix batch = gather_rows(data.features, sample_batch(state.batch_rng, data.size(), cfg.batch_size));
        const Matrix v1 = augment_batch(batch, data.image_shape, cfg.augment, state.augment_rng);
        const Matrix v2 = augment_batch(batch, data.image_shape, cfg.augment, state.augment_rng);
        Scalar loss;
        try {
            loss = step(state, v1, v2, lr, cfg.weight_decay);
        } catch (const NumericError& e) {
            throw TrainingFailure(static_cast<std::size_t>(s), e.what());
        }
        if (!std::isfinite(loss)) throw TrainingFailure(static_cast<std::size_t>(s), "non-finite loss");
        result.losses.push_back(loss);
    }
    return result;
}

}  // namespace

TrainResult train_byol(ByolState& state, const DatasetHandle& data, const TrainConfig& cfg) {
    return run_training(state, data, cfg, [](ByolState& s, const Matrix& a, const Matrix& b, Scalar lr, Scalar wd) {
        return byol_step(s, a, b, lr, wd);
    });
}

TrainResult train_nce(NceState& state, const DatasetHandle& data, const TrainConfig& cfg) {
    return run_training(state, data, cfg, [](NceState& s, const Matrix& a, const Matrix& b, Scalar lr, Scalar wd) {
        return nce_step(s, a, b, lr, wd);
    });
}

// ---- checkpoints -----------------------------------------------------------

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const Index r = j.at("rows").get<Index>();
    const Index c = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != r * c) throw FormatError("matrix data length mismatch");
    return Eigen::Map<const Matrix>(data.data(), r, c);
}

nlohmann::json mlp_to_json(const Mlp& m) {
    nlohmann::json params = nlohmann::json::array();
    for (const Matrix* p : m.parameters()) params.push_back(matrix_to_json(*p));
    std::vector<Index> dims{m.input_dim()};
    for (std::size_t i = 0; i < m.depth(); ++i) dims.push_back(m.weight(i).cols());
    nlohmann::json norms = nlohmann::json::array();
    for (const BatchNormState* n : m.norm_states()) {
        norms.push_back({{"running_mean", matrix_to_json(n->running_mean)},
                         {"running_var", matrix_to_json(n->running_var)},
                         {"momentum", n->momentum},
                         {"eps", n->eps}});
    }
    return {{"dims", dims}, {"batch_norm", m.has_batch_norm()}, {"params", params}, {"norms", norms}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    const auto dims = j.at("dims").get<std::vector<Index>>();
    if (dims.size() < 2) throw FormatError("MLP needs at least two dims");
    std::vector<Index> hidden(dims.begin() + 1, dims.end() - 1);
    Rng unused(0);
    Mlp m(dims.front(), hidden, dims.back(), j.at("batch_norm").get<bool>(), unused);
    auto ps = m.parameters();
    const auto& params = j.at("params");
    if (params.size() != ps.size()) throw FormatError("MLP parameter count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Matrix v = matrix_from_json(params[i]);
        if (v.rows() != ps[i]->rows() || v.cols() != ps[i]->cols()) throw FormatError("MLP parameter shape mismatch");
        *ps[i] = std::move(v);
    }
    auto ns = m.norm_states();
    const auto& norms = j.at("norms");
    if (norms.size() != ns.size()) throw FormatError("MLP norm count mismatch");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        ns[i]->running_mean = matrix_from_json(norms[i].at("running_mean"));
        ns[i]->running_var = matrix_from_json(norms[i].at("running_var"));
        ns[i]->momentum = norms[i].at("momentum").get<double>();
        ns[i]->eps = norms[i].at("eps").get<double>();
    }
    return m;
}

namespace {

nlohmann::json branch_to_json(const Branch& b) {
    return {{"encoder", mlp_to_json(b.encoder)}, {"projector", mlp_to_json(b.projector)}};
}

Branch branch_from_json(const nlohmann::json& j) {
    return {mlp_from_json(j.at("encoder")), mlp_from_json(j.at("projector"))};
}

nlohmann::json sem_to_json(const SemConfig& c) { return {{"L", c.L}, {"V", c.V}, {"tau", c.tau}}; }

SemConfig sem_from_json(const nlohmann::json& j) {
    SemConfig c{j.at("L").get<Index>(), j.at("V").get<Index>(), j.at("tau").get<double>()};
    c.validate();
    return c;
}

constexpr int kCheckpointVersion = 1;

void check_header(const nlohmann::json& j, const char* method) {
    if (j.value("format", "") != "sem-checkpoint") throw FormatError("not a checkpoint file");
    if (j.value("version", 0) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    if (j.value("method", "") != method) throw FormatError(std::string("checkpoint is not a ") + method + " run");
}

}  // namespace

nlohmann::json to_json(const ByolState& s) {
    return {{"format", "sem-checkpoint"},
            {"version", kCheckpointVersion},
            {"method", "byol"},
            {"online", branch_to_json(s.online)},
            {"predictor", mlp_to_json(s.predictor)},
            {"target", branch_to_json(s.target)},
            {"ema_rate", s.ema_rate},
            {"online_sem", sem_to_json(s.online_sem)},
            {"target_sem", sem_to_json(s.target_sem)},
            {"step", s.step},
            {"batch_rng", s.batch_rng.state()},
            {"augment_rng", s.augment_rng.state()}};
}

ByolState byol_from_json(const nlohmann::json& j) {
    check_header(j, "byol");
    ByolState s;
    s.online = branch_from_json(j.at("online"));
    s.predictor = mlp_from_json(j.at("predictor"));
    s.target = branch_from_json(j.at("target"));
    s.ema_rate = j.at("ema_rate").get<double>();
    s.online_sem = sem_from_json(j.at("online_sem"));
    s.target_sem = sem_from_json(j.at("target_sem"));
    s.step = j.at("step").get<std::size_t>();
    s.batch_rng.set_state(j.at("batch_rng").get<std::string>());
    s.augment_rng.set_state(j.at("augment_rng").get<std::string>());
    return s;
}

nlohmann::json to_json(const NceState& s) {
    nlohmann::json queue = nlohmann::json::array();
    for (const RowVector& v : s.queue) queue.push_back(matrix_to_json(v));
    return {{"format", "sem-checkpoint"},
            {"version", kCheckpointVersion},
            {"method", "nce"},
            {"online", branch_to_json(s.online)},
            {"momentum", branch_to_json(s.momentum)},
            {"ema_rate", s.ema_rate},
            {"queue", queue},
            {"queue_capacity", s.queue_capacity},
            {"temperature", s.temperature},
            {"include_positive", s.include_positive},
            {"sem", sem_to_json(s.sem)},
            {"step", s.step},
            {"batch_rng", s.batch_rng.state()},
            {"augment_rng", s.augment_rng.state()}};
}

NceState nce_from_json(const nlohmann::json& j) {
    check_header(j, "nce");
    NceState s;
    s.online = branch_from_json(j.at("online"));
    s.momentum = branch_from_json(j.at("momentum"));
    s.ema_rate = j.at("ema_rate").get<double>();
    for (const auto& v : j.at("queue")) s.queue.push_back(matrix_from_json(v));
    s.queue_capacity = j.at("queue_capacity").get<std::size_t>();
    s.temperature = j.at("temperature").get<double>();
    s.include_positive = j.at("include_positive").get<bool>();
    s.sem = sem_from_json(j.at("sem"));
    s.step = j.at("step").get<std::size_t>();
    s.batch_rng.set_state(j.at("batch_rng").get<std::string>());
    s.augment_rng.set_state(j.at("augment_rng").get<std::string>());
    return s;
}

}  // namespace sem
