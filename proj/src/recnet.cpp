#include "salseq/recnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace salseq {

using ag::Shape;
using ag::Tensor;
using ag::Var;

namespace {

constexpr char kWeightsMagic[8] = {'S', 'A', 'L', 'S', 'E', 'Q', 'W', 'T'};
constexpr std::uint32_t kWeightsVersion = 1;
constexpr double kBnMomentum = 0.1;

double unit_uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Tensor init_uniform(Shape s, double bound, std::mt19937_64& rng) {
    Tensor t(s);
    for (auto& v : t.data) v = (2.0 * unit_uniform(rng) - 1.0) * bound;
    return t;
}

}  // namespace

RecNet::Conv RecNet::make_conv(const std::string& name, int in_c, int out_c) {
    double bound = 1.0 / std::sqrt(static_cast<double>(in_c) * 9.0);
    Conv c;
    c.w = ag::leaf(init_uniform(Shape{out_c, in_c, 3, 3}, bound, *init_rng_));
    c.b = ag::leaf(init_uniform(Shape{1, out_c, 1, 1}, bound, *init_rng_));
    params_.push_back({name + ".w", c.w});
    params_.push_back({name + ".b", c.b});
    return c;
}

RecNet::Norm RecNet::make_norm(const std::string& name, int ch) {
    Norm n;
    n.gamma = ag::leaf(Tensor(Shape{1, ch, 1, 1}, 1.0));
    n.beta = ag::leaf(Tensor(Shape{1, ch, 1, 1}, 0.0));
    n.running_mean = Tensor(Shape{1, ch, 1, 1}, 0.0);
    n.running_var = Tensor(Shape{1, ch, 1, 1}, 1.0);
    params_.push_back({name + ".gamma", n.gamma});
    params_.push_back({name + ".beta", n.beta});
    return n;
}

Var RecNet::apply_norm(Norm& n, Var x) {
    if (!training_)
        return ag::batchnorm_infer(x, n.gamma, n.beta, n.running_mean, n.running_var);
    // update running statistics from the current batch
    const Shape& s = x->value.shape;
    const double m = static_cast<double>(s.n) * s.h * s.w;
    for (int c = 0; c < s.c; ++c) {
        double mu = 0.0;
        for (int b = 0; b < s.n; ++b)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx) mu += x->value.at(b, c, y, xx);
        mu /= m;
        double var = 0.0;
        for (int b = 0; b < s.n; ++b)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx) {
                    double d = x->value.at(b, c, y, xx) - mu;
                    var += d * d;
                }
        var /= m;
        n.running_mean.data[c] = (1 - kBnMomentum) * n.running_mean.data[c] + kBnMomentum * mu;
        n.running_var.data[c] = (1 - kBnMomentum) * n.running_var.data[c] + kBnMomentum * var;
    }
    return ag::batchnorm_train(x, n.gamma, n.beta);
}

Var RecNet::conv_bn_relu(Conv& c, Norm& n, Var x) {
    return ag::relu(apply_norm(n, ag::conv2d(x, c.w, c.b)));
}

RecNet::RecNet(const ToyConfig& cfg) : cfg_(cfg) {
    std::mt19937_64 rng(cfg.seed);
    init_rng_ = &rng;

    int in_c = 3;
    for (int i = 0; i < 5; ++i) {
        enc_conv_[i] = make_conv("enc" + std::to_string(i), in_c, cfg.encoder_stages[i]);
        enc_norm_[i] = make_norm("enc" + std::to_string(i) + ".bn", cfg.encoder_stages[i]);
        in_c = cfg.encoder_stages[i];
    }
    for (int i = 0; i < 5; ++i) {
        int blocks = std::max(1, i);
        int block_in = cfg.encoder_stages[i];
        for (int b = 0; b < blocks; ++b) {
            std::string nm = "dec" + std::to_string(i) + ".up" + std::to_string(b);
            dec_conv_[i].push_back(make_conv(nm, block_in, cfg.decoder_channels));
            dec_norm_[i].push_back(make_norm(nm + ".bn", cfg.decoder_channels));
            block_in = cfg.decoder_channels;
        }
    }
    p_conv_ = make_conv("p", 5 * cfg.decoder_channels, cfg.x_channels);
    p_norm_ = make_norm("p.bn", cfg.x_channels);
    p_head_ = make_conv("p.head", cfg.x_channels, 4);
    for (int i = 0; i < 3; ++i) {
        int rb_in = i == 0 ? cfg.x_channels + cfg.hidden_channels : cfg.hidden_channels;
        rb_conv_[i] = make_conv("rb" + std::to_string(i), rb_in, cfg.hidden_channels);
        rb_norm_[i] = make_norm("rb" + std::to_string(i) + ".bn", cfg.hidden_channels);
        int hs_in = i == 0 ? 2 * cfg.hidden_channels : cfg.hidden_channels;
        hsab_conv_[i] = make_conv("hsab" + std::to_string(i), hs_in, cfg.hidden_channels);
        hsab_norm_[i] = make_norm("hsab" + std::to_string(i) + ".bn", cfg.hidden_channels);
    }
    asb_conv_ = make_conv("asb", cfg.hidden_channels, 1);
    pr_conv_ = make_conv("pr", cfg.hidden_channels, cfg.x_channels);
    pr_norm_ = make_norm("pr.bn", cfg.x_channels);
    pr_head_ = make_conv("pr.head", cfg.x_channels, 4);

    init_rng_ = nullptr;
}

namespace {

// per-sample range normalization of a (N,1,H,W) head output
std::array<Var, 4> split_heads(Var head) {
    std::array<Var, 4> out;
    int batch = head->value.shape.n;
    for (int j = 0; j < 4; ++j) {
        Var channel = ag::slice_channels(head, j, 1);
        if (batch == 1) {
            out[j] = ag::range_norm01(channel);
        } else {
            std::vector<Var> per_sample;
            per_sample.reserve(batch);
            for (int b = 0; b < batch; ++b)
                per_sample.push_back(ag::range_norm01(ag::slice_batch(channel, b)));
            out[j] = ag::concat_batch(per_sample);
        }
    }
    return out;
}

}  // namespace

BaseOut RecNet::base_forward(const Tensor& image) {
    const Shape& s = image.shape;
    if (s.h % 32 != 0 || s.w % 32 != 0)
        throw ValidationError("base_forward: spatial dims " + s.str() +
                              " not divisible by 2^5");
    Var x = ag::constant(image);
    std::array<Var, 5> taps;
    for (int i = 0; i < 5; ++i) {
        x = conv_bn_relu(enc_conv_[i], enc_norm_[i], x);
        taps[i] = x;
        if (i < 4) x = ag::avgpool2(x);
    }
    std::vector<Var> decoded;
    for (int i = 0; i < 5; ++i) {
        Var d = taps[i];
        if (i == 0) {
            d = conv_bn_relu(dec_conv_[0][0], dec_norm_[0][0], d);
        } else {
            for (int b = 0; b < i; ++b) {
                d = ag::upsample_bilinear2(d);
                d = conv_bn_relu(dec_conv_[i][b], dec_norm_[i][b], d);
            }
        }
        decoded.push_back(d);
    }
    Var concat = ag::concat_channels(decoded);
    Var proj = conv_bn_relu(p_conv_, p_norm_, concat);
    Var head = ag::conv2d(proj, p_head_.w, p_head_.b);
    return {proj, split_heads(head)};
}

Var RecNet::rb_step(Var x, Var state) {
    Var h = ag::concat_channels({x, state});
    for (int i = 0; i < 3; ++i) h = conv_bn_relu(rb_conv_[i], rb_norm_[i], h);
    return h;
}

Var RecNet::hsab_step(Var h, Var k_prev) {
    Var k = ag::concat_channels({h, k_prev});
    for (int i = 0; i < 3; ++i) k = conv_bn_relu(hsab_conv_[i], hsab_norm_[i], k);
    return k;
}

Var RecNet::asb(Var h) { return ag::conv2d(h, asb_conv_.w, asb_conv_.b); }

namespace {
ag::Var zeros_like_state(const Var& x, int channels) {
    const Shape& s = x->value.shape;
    return ag::constant(Tensor(Shape{s.n, channels, s.h, s.w}));
}
}  // namespace

RolloutOut RecNet::rollout_incremental(Var x) {
    const int T = cfg_.timesteps;
    if (T < 2) throw ValidationError("rollout_incremental: needs T >= 2");
    RolloutOut out;
    Var h = zeros_like_state(x, cfg_.hidden_channels);
    for (int t = 1; t <= T; ++t) {
        h = rb_step(x, h);
        if (t < T) out.aux.push_back(asb(h));  // o_T carries the full-duration info
    }
    Var proj = conv_bn_relu(pr_conv_, pr_norm_, h);
    out.s = split_heads(ag::conv2d(proj, pr_head_.w, pr_head_.b));
    return out;
}

RolloutOut RecNet::rollout_nonincremental(Var x) {
    const int T = cfg_.timesteps;
    if (T < 1) throw ValidationError("rollout_nonincremental: needs T >= 1");
    RolloutOut out;
    Var k = zeros_like_state(x, cfg_.hidden_channels);
    Var h;
    for (int t = 1; t <= T; ++t) {
        h = rb_step(x, k);
        k = hsab_step(h, k);
        out.aux.push_back(asb(h));
    }
    Var proj = conv_bn_relu(pr_conv_, pr_norm_, k);
    out.s = split_heads(ag::conv2d(proj, pr_head_.w, pr_head_.b));
    return out;
}

RolloutOut RecNet::rollout(Var x) {
    return cfg_.mode == StackMode::Incremental ? rollout_incremental(x)
                                               : rollout_nonincremental(x);
}

std::size_t RecNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var->value.data.size();
    return n;
}

void RecNet::sgd_step(double lr) {
    for (auto& p : params_) {
        auto& v = p.var->value.data;
        const auto& g = p.var->grad.data;
        if (g.size() != v.size()) continue;  // never reached in backward pass
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    }
}

std::vector<std::pair<std::string, Tensor*>> RecNet::norm_buffers() {
    std::vector<std::pair<std::string, Tensor*>> out;
    auto push = [&](const std::string& name, Norm& n) {
        out.emplace_back(name + ".running_mean", &n.running_mean);
        out.emplace_back(name + ".running_var", &n.running_var);
    };
    for (int i = 0; i < 5; ++i) push("enc" + std::to_string(i) + ".bn", enc_norm_[i]);
    for (int i = 0; i < 5; ++i)
        for (std::size_t b = 0; b < dec_norm_[i].size(); ++b)
            push("dec" + std::to_string(i) + ".up" + std::to_string(b) + ".bn", dec_norm_[i][b]);
    push("p.bn", p_norm_);
    for (int i = 0; i < 3; ++i) {
        push("rb" + std::to_string(i) + ".bn", rb_norm_[i]);
        push("hsab" + std::to_string(i) + ".bn", hsab_norm_[i]);
    }
    push("pr.bn", pr_norm_);
    return out;
}

void RecNet::save_weights(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out.write(kWeightsMagic, 8);
    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_tensor = [&](const std::string& name, const Tensor& t) {
        put_u32(static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Shape& s = t.shape;
        put_u32(4);
        for (int d : {s.n, s.c, s.h, s.w}) put_u32(static_cast<std::uint32_t>(d));
        for (double v : t.data) {
            float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(bits);
        }
    };
    auto buffers = const_cast<RecNet*>(this)->norm_buffers();
    put_u32(kWeightsVersion);
    put_u32(static_cast<std::uint32_t>(params_.size() + buffers.size()));
    for (const auto& p : params_) put_tensor(p.name, p.var->value);
    for (const auto& [name, t] : buffers) put_tensor(name, *t);
}

void RecNet::load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kWeightsMagic, 8) != 0)
        throw ParseError(path + ": not a weights file");
    auto get_u32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw ParseError(path + ": truncated weights file");
        return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    };
    auto get_tensor = [&](const std::string& expected_name, Tensor& t) {
        std::uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != expected_name)
            throw ParseError(path + ": tensor name mismatch at '" + name + "'");
        std::uint32_t rank = get_u32();
        if (rank != 4) throw ParseError(path + ": unexpected tensor rank");
        Shape s{static_cast<int>(get_u32()), static_cast<int>(get_u32()),
                static_cast<int>(get_u32()), static_cast<int>(get_u32())};
        if (!(s == t.shape)) throw ParseError(path + ": shape mismatch at '" + name + "'");
        for (auto& v : t.data) {
            std::uint32_t bits = get_u32();
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        }
    };
    if (get_u32() != kWeightsVersion) throw ParseError(path + ": unsupported version");
    auto buffers = norm_buffers();
    std::uint32_t count = get_u32();
    if (count != params_.size() + buffers.size())
        throw ParseError(path + ": tensor count mismatch (file " + std::to_string(count) +
                         ", model " + std::to_string(params_.size() + buffers.size()) + ")");
    for (auto& p : params_) get_tensor(p.name, p.var->value);
    for (auto& [name, t] : buffers) get_tensor(name, *t);
}

std::string TrainTrace::to_csv() const {
    std::ostringstream os;
    os << "step,l_kl,l_cc,l_sim,l_nss,l_aux,total\n";
    os.precision(17);
    for (const auto& s : steps) {
        os << s.step << "," << s.kl << "," << s.cc << "," << s.sim << "," << s.nss << ","
           << s.aux << "," << s.total << "\n";
    }
    return os.str();
}

ToyBatch make_toy_batch(const ToyConfig& cfg, int batch, int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ToyBatch out;
    out.images = Tensor(Shape{batch, 3, side, side});
    const int n_clusters = 3;
    const int points_per_cluster = 6;
    for (int b = 0; b < batch; ++b) {
        FixationMap pts(side, side);
        std::vector<std::pair<double, double>> centers;
        for (int cl = 0; cl < n_clusters; ++cl) {
            double cx = 4 + unit_uniform(rng) * (side - 8);
            double cy = 4 + unit_uniform(rng) * (side - 8);
            centers.emplace_back(cx, cy);
            for (int p = 0; p < points_per_cluster; ++p) {
                int px = std::clamp(static_cast<int>(cx + (unit_uniform(rng) - 0.5) * 6), 0,
                                    side - 1);
                int py = std::clamp(static_cast<int>(cy + (unit_uniform(rng) - 0.5) * 6), 0,
                                    side - 1);
                pts.set(px, py);
            }
        }
        // image: smooth bumps at the blob centers plus light noise
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    double v = 0.05 * unit_uniform(rng);
                    for (auto [cx, cy] : centers) {
                        double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                        v += std::exp(-d2 / (2.0 * 9.0)) * (0.4 + 0.2 * c);
                    }
                    out.images.at(b, c, y, x) = v;
                }
            }
        }
        ToySample sample;
        sample.gt_pts = pts;
        sample.gt_gauss = blur_fixations(pts, 8.0);

        // non-incremental split: points round-robin over the timesteps
        int meta_T = cfg.timesteps;
        std::vector<FixationMap> nonincr(static_cast<std::size_t>(meta_T),
                                         FixationMap(side, side));
        int t = 0;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                if (pts.at(x, y)) {
                    nonincr[static_cast<std::size_t>(t % meta_T)].set(x, y);
                    ++t;
                }
        if (cfg.mode == StackMode::Incremental) {
            MetaStack st;
            st.mode = StackMode::NonIncremental;
            st.maps = std::move(nonincr);
            sample.metadata = to_incremental(st).maps;  // T-1 maps, matches aux count
        } else {
            sample.metadata = std::move(nonincr);
        }
        out.samples.push_back(std::move(sample));
    }
    return out;
}

BatchLoss batch_objective(RecNet& net, const ToyBatch& batch, const LossWeights& weights) {
    const int B = static_cast<int>(batch.samples.size());
    BaseOut base = net.base_forward(batch.images);
    RolloutOut roll = net.rollout(base.x);

    Var sal = ag::constant(Tensor(Shape{1, 1, 1, 1}));
    Var aux = ag::constant(Tensor(Shape{1, 1, 1, 1}));
    double kl_acc = 0, cc_acc = 0, sim_acc = 0, nss_acc = 0;
    for (int b = 0; b < B; ++b) {
        const ToySample& sm = batch.samples[b];
        std::array<Var, 4> s;
        for (int j = 0; j < 4; ++j)
            s[j] = B == 1 ? roll.s[j] : ag::slice_batch(roll.s[j], b);
        Var kl_t = losses::kl_loss(s[0], sm.gt_gauss);
        Var cc_t = losses::cc_loss(s[1], sm.gt_gauss);
        Var sim_t = losses::sim_loss(s[2], sm.gt_gauss);
        Var nss_t = losses::nss_loss(s[3], sm.gt_pts);
        kl_acc += ag::scalar(kl_t);
        cc_acc += ag::scalar(cc_t);
        sim_acc += ag::scalar(sim_t);
        nss_acc += ag::scalar(nss_t);
        Var sample_sal = ag::add(
            ag::add(ag::mul_scalar(kl_t, weights.alpha), ag::mul_scalar(cc_t, weights.beta)),
            ag::add(ag::mul_scalar(sim_t, weights.gamma), ag::mul_scalar(nss_t, weights.delta)));
        sal = ag::add(sal, sample_sal);

        std::vector<Var> o;
        o.reserve(roll.aux.size());
        for (const auto& ot : roll.aux)
            o.push_back(B == 1 ? ot : ag::slice_batch(ot, b));
        aux = ag::add(aux, losses::aux_loss(o, sm.metadata));
    }
    sal = ag::mul_scalar(sal, 1.0 / B);
    aux = ag::mul_scalar(aux, 1.0 / B);
    Var total = ag::add(sal, ag::mul_scalar(aux, weights.aux_weight));
    return {total, sal, aux, kl_acc / B, cc_acc / B, sim_acc / B, nss_acc / B};
}

TrainTrace train_toy(RecNet& net, const ToyBatch& batch, int steps, double lr,
                     const LossWeights& weights) {
    if (steps < 1) throw ValidationError("train_toy: steps must be >= 1");
    if (lr < 0.0) throw ValidationError("train_toy: negative learning rate");
    TrainTrace trace;
    net.set_training(true);
    for (int step = 1; step <= steps; ++step) {
        BatchLoss obj = batch_objective(net, batch, weights);
        double total = ag::scalar(obj.total);
        if (!std::isfinite(total))
            throw ValidationError("train_toy: non-finite loss at step " + std::to_string(step));
        trace.steps.push_back({step, obj.kl, obj.cc, obj.sim, obj.nss, ag::scalar(obj.aux),
                               ag::scalar(obj.sal), total});
        ag::backward(obj.total);
        net.sgd_step(lr);
    }
    net.set_training(false);
    return trace;
}

}  // namespace salseq
