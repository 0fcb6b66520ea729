#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "salseq/autograd.hpp"
#include "salseq/losses.hpp"
#include "salseq/metastack.hpp"
#include "salseq/salmap.hpp"

namespace salseq {

struct ToyConfig {
    std::array<int, 5> encoder_stages = {8, 16, 24, 32, 40};
    int decoder_channels = 8;
    int x_channels = 16;
    int hidden_channels = 8;
    int timesteps = 3;
    StackMode mode = StackMode::NonIncremental;
    std::uint64_t seed = 0;
};

struct BaseOut {
    ag::Var x;                     // intermediate representation
    std::array<ag::Var, 4> s;      // S1..S4, range-normalized 1-channel maps
};

struct RolloutOut {
    std::vector<ag::Var> aux;      // o_1.. (T-1 maps incremental, T non-incremental)
    std::array<ag::Var, 4> s;
};

/// Toy-scale differentiable reference of the multi-decoder base network
/// plus the two recursive supervision variants. Five encoder taps, one
/// decoder per tap, projection to X and four per-loss output maps.
class RecNet {
public:
    explicit RecNet(const ToyConfig& cfg);

    void set_training(bool on) { training_ = on; }
    bool training() const { return training_; }
    const ToyConfig& config() const { return cfg_; }

    /// Encoder + decoders + projection P. Image spatial dims must be
    /// divisible by 32 (five downsamples).
    BaseOut base_forward(const ag::Tensor& image);

    ag::Var rb_step(ag::Var x, ag::Var state);
    ag::Var hsab_step(ag::Var h, ag::Var k_prev);
    ag::Var asb(ag::Var h);

    /// h_t = RB(X, h_{t-1}) from zeros; aux maps o_1..o_{T-1}; h_T -> P_R.
    RolloutOut rollout_incremental(ag::Var x);
    /// h_t = RB(X, k_{t-1}); k_t = HSAB(h_t, k_{t-1}); aux o_1..o_T;
    /// k_T -> P_R.
    RolloutOut rollout_nonincremental(ag::Var x);
    RolloutOut rollout(ag::Var x);  // dispatches on cfg.mode

    struct NamedParam {
        std::string name;
        ag::Var var;
    };
    std::vector<NamedParam>& parameters() { return params_; }
    std::size_t parameter_count() const;

    void sgd_step(double lr);

    void save_weights(const std::string& path) const;
    void load_weights(const std::string& path);

    /// Normalization running statistics, in a fixed order; persisted
    /// alongside the trainable parameters.
    std::vector<std::pair<std::string, ag::Tensor*>> norm_buffers();

private:
    struct Conv {
        ag::Var w, b;
    };
    struct Norm {
        ag::Var gamma, beta;
        ag::Tensor running_mean, running_var;
    };

    Conv make_conv(const std::string& name, int in_c, int out_c);
    Norm make_norm(const std::string& name, int c);
    ag::Var apply_norm(Norm& n, ag::Var x);
    ag::Var conv_bn_relu(Conv& c, Norm& n, ag::Var x);

    ToyConfig cfg_;
    bool training_ = false;
    std::vector<NamedParam> params_;
    std::mt19937_64* init_rng_ = nullptr;  // only valid during construction

    std::array<Conv, 5> enc_conv_;
    std::array<Norm, 5> enc_norm_;
    // decoder i owns i upsample blocks (plus one entry block at i = 0)
    std::array<std::vector<Conv>, 5> dec_conv_;
    std::array<std::vector<Norm>, 5> dec_norm_;
    Conv p_conv_;
    Norm p_norm_;
    Conv p_head_;
    std::array<Conv, 3> rb_conv_;
    std::array<Norm, 3> rb_norm_;
    std::array<Conv, 3> hsab_conv_;
    std::array<Norm, 3> hsab_norm_;
    Conv asb_conv_;
    Conv pr_conv_;
    Norm pr_norm_;
    Conv pr_head_;
};

struct ToySample {
    DenseMap gt_gauss;
    FixationMap gt_pts;
    std::vector<FixationMap> metadata;  // m_t stack aligned with cfg.mode
};

struct ToyBatch {
    ag::Tensor images;  // (B, 3, H, W)
    std::vector<ToySample> samples;
};

struct TrainStep {
    int step = 0;
    double kl = 0, cc = 0, sim = 0, nss = 0, aux = 0, sal = 0, total = 0;
};

struct TrainTrace {
    std::vector<TrainStep> steps;
    std::string to_csv() const;
};

/// Deterministic synthetic blob dataset for descent checks.
ToyBatch make_toy_batch(const ToyConfig& cfg, int batch, int side, std::uint64_t seed);

/// Plain gradient descent on l_sal + aux_weight * l_aux. Throws on
/// non-finite loss, naming the step.
TrainTrace train_toy(RecNet& net, const ToyBatch& batch, int steps, double lr,
                     const LossWeights& weights);

/// Per-batch objective; exposed for gradient checking.
struct BatchLoss {
    ag::Var total, sal, aux;
    double kl, cc, sim, nss;
};
BatchLoss batch_objective(RecNet& net, const ToyBatch& batch, const LossWeights& weights);

}  // namespace salseq
