#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sem/data.hpp"
#include "sem/nn.hpp"
#include "sem/rng.hpp"
#include "sem/sem.hpp"

namespace sem {

/// Encoder f: input -> hidden (Linear, BatchNorm, ReLU)* -> L*V logits.
struct EncoderSpec {
    Index input_dim = 32;
    std::vector<Index> hidden{128};
    bool batch_norm = true;
};

struct HeadSpec {
    Index projection_dim = 64;
    std::vector<Index> projector_hidden{};  // empty: single linear projector
    Index predictor_hidden = 128;
    /// Initialise the predictor so that it computes the identity map
    /// (hidden = [I; -I], output = [I, -I]). Needs predictor_hidden = 2 * projection_dim.
    bool identity_predictor = false;
};

struct AugmentParams {
    // Images: random resized crop (area fraction), flip, colour jitter.
    Scalar crop_min_scale = 0.6;
    Scalar crop_max_scale = 1.0;
    Scalar flip_prob = 0.5;
    Scalar brightness = 0.2;
    Scalar contrast = 0.2;
    // Images and vectors.
    Scalar noise_std = 0.1;
    // Vectors only: per-feature dropout and multiplicative jitter.
    Scalar feature_drop = 0.1;
    Scalar scale_jitter = 0.1;

    static AugmentParams identity();
    void validate() const;
};

struct Image {
    Index channels = 0;
    Index height = 0;
    Index width = 0;
    Eigen::VectorXd pixels;  // channel-major, values in [0, 1]

    Scalar& at(Index c, Index y, Index x) { return pixels((c * height + y) * width + x); }
    Scalar at(Index c, Index y, Index x) const { return pixels((c * height + y) * width + x); }
};

/// Random resized crop, horizontal flip, brightness/contrast jitter and
/// Gaussian pixel noise; output clamped to [0, 1].
Image augment(const Image& image, const AugmentParams& params, Rng& rng);
/// Feature-vector analogue: Gaussian noise, multiplicative jitter, dropout.
RowVector augment_vector(const RowVector& x, const AugmentParams& params, Rng& rng);
/// Augments every row of a batch, as images when a shape is known.
Matrix augment_batch(const Matrix& batch, const std::optional<ImageShape>& shape,
                     const AugmentParams& params, Rng& rng);

struct TrainConfig {
    Scalar base_lr = 0.05;
    Scalar weight_decay = 1e-4;
    int epochs = 1;
    Index steps = 0;  // overrides epochs when positive
    Index batch_size = 64;
    bool cosine_decay = true;
    std::uint64_t seed = 0;
    Scalar ema_rate = 0.99;
    AugmentParams augment;

    void validate() const;
    Index total_steps(Index dataset_size) const;
};

/// Encoder followed by projector; SEM sits between them.
struct Branch {
    Mlp encoder;
    Mlp projector;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::vector<BatchNormState*> norm_states();
};

struct ByolState {
    Branch online;
    Mlp predictor;
    Branch target;
    Scalar ema_rate = 0.99;
    SemConfig online_sem;
    SemConfig target_sem;
    std::size_t step = 0;
    Rng batch_rng;
    Rng augment_rng;

    std::vector<Matrix*> online_parameters();
};

struct NceState {
    Branch online;
    Branch momentum;
    Scalar ema_rate = 0.99;
    std::deque<RowVector> queue;  // oldest first
    std::size_t queue_capacity = 256;
    Scalar temperature = 0.2;
    bool include_positive = true;
    SemConfig sem;
    std::size_t step = 0;
    Rng batch_rng;
    Rng augment_rng;
};

/// Builds online and target networks; the target starts as an exact copy.
Branch make_branch(const EncoderSpec& enc, const SemConfig& sem, const HeadSpec& head, Rng& init_rng);
ByolState make_byol_state(const EncoderSpec& enc, const SemConfig& online_sem,
                          const SemConfig& target_sem, const HeadSpec& head, const TrainConfig& train);
NceState make_nce_state(const EncoderSpec& enc, const SemConfig& sem, const HeadSpec& head,
                        const TrainConfig& train, std::size_t queue_capacity, Scalar temperature);

/// encoder -> SEM -> projector.
Var branch_forward(Branch& branch, ParamBinder& binder, const Var& x, const SemConfig& sem,
                   bool training);

/// Mean over rows of 2 - 2 cos(q_i, z_i). z_target must not require grad.
Var byol_loss(const Var& q_online, const Var& z_target);

/// InfoNCE for a batch: row i of `anchors` is scored against row i of
/// `positives` and every row of `negatives` (K x d). With
/// include_positive = false the positive term is left out of the
/// denominator. When `exclude_diagonal` is set, negatives must have B rows and
/// row i is not used as a negative for anchor i.
Var nce_batch_loss(const Var& anchors, const Var& positives, const Var& negatives, Scalar t,
                   bool include_positive = true, bool exclude_diagonal = false);

/// Single-anchor InfoNCE on plain vectors.
Scalar nce_loss(const RowVector& anchor, const RowVector& positive,
                const std::vector<RowVector>& negatives, Scalar t, bool include_positive = true);

/// xi <- alpha * xi + (1 - alpha) * theta over matching parameter lists.
void ema_update(std::vector<Matrix*> target, std::vector<const Matrix*> online, Scalar alpha);
void ema_update(ByolState& state);
void ema_update(NceState& state);

/// base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
Scalar cosine_lr(Index step, Index total_steps, Scalar base_lr);

struct TrainResult {
    std::vector<Scalar> losses;
};

/// One BYOL step on a batch of two views; returns the symmetrised loss
/// (mean of both view orderings).
Scalar byol_step(ByolState& state, const Matrix& view1, const Matrix& view2, Scalar lr,
                 Scalar weight_decay);
/// Loss of the current state without updating anything.
Scalar byol_eval_loss(const ByolState& state, const Matrix& view1, const Matrix& view2);

/// One MoCo-style step: anchors from the online branch, keys from the
/// momentum branch. Negatives are the queue contents, or the other keys of
/// the batch while the queue is still empty. Keys are enqueued afterwards.
Scalar nce_step(NceState& state, const Matrix& view1, const Matrix& view2, Scalar lr,
                Scalar weight_decay);

TrainResult train_byol(ByolState& state, const DatasetHandle& data, const TrainConfig& cfg);
TrainResult train_nce(NceState& state, const DatasetHandle& data, const TrainConfig& cfg);

// Checkpoints: JSON with every parameter tensor, batch-norm statistics,
// EMA rate, queue, rng states and step counter. Doubles round-trip exactly.
nlohmann::json to_json(const ByolState& state);
nlohmann::json to_json(const NceState& state);
ByolState byol_from_json(const nlohmann::json& j);
NceState nce_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json mlp_to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace sem
