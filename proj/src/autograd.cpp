#include "salseq/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace salseq::ag {

std::string Shape::str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
}

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_op) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->parents = std::move(parents);
    for (const auto& p : node->parents) {
        if (p->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    if (node->requires_grad) node->backward_op = std::move(backward_op);
    return node;
}

bool is_scalar(const Var& v) { return v->value.shape.size() == 1; }

// accumulate g into target grad, sum-reducing if target is scalar-shaped
void accumulate(Node& target, const Tensor& g) {
    if (!target.requires_grad) return;
    if (target.value.shape.size() == 1 && g.shape.size() != 1) {
        double s = 0.0;
        for (double v : g.data) s += v;
        target.grad.data[0] += s;
    } else {
        for (std::size_t i = 0; i < g.data.size(); ++i) target.grad.data[i] += g.data[i];
    }
}

// generic elementwise binary op with scalar broadcast
template <typename FwdFn, typename BwdFn>
Var binary(Var a, Var b, const char* name, FwdFn fwd, BwdFn bwd) {
    bool a_scalar = is_scalar(a), b_scalar = is_scalar(b);
    require(a->value.shape == b->value.shape || a_scalar || b_scalar,
            std::string(name) + ": shape mismatch " + a->value.shape.str() + " vs " +
                b->value.shape.str());
    Shape out_shape = a_scalar ? b->value.shape : a->value.shape;
    Tensor out(out_shape);
    std::size_t n = out.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        double av = a->value.data[a_scalar ? 0 : i];
        double bv = b->value.data[b_scalar ? 0 : i];
        out.data[i] = fwd(av, bv);
    }
    return make_node(std::move(out), {a, b}, [=](Node& self) {
        Tensor ga(self.value.shape), gb(self.value.shape);
        std::size_t m = self.value.data.size();
        for (std::size_t i = 0; i < m; ++i) {
            double av = a->value.data[a_scalar ? 0 : i];
            double bv = b->value.data[b_scalar ? 0 : i];
            auto [da, db] = bwd(av, bv);
            ga.data[i] = da * self.grad.data[i];
            gb.data[i] = db * self.grad.data[i];
        }
        accumulate(*a, ga);
        accumulate(*b, gb);
    });
}

template <typename FwdFn, typename BwdFn>
Var unary(Var a, const char* /*name*/, FwdFn fwd, BwdFn bwd) {
    Tensor out(a->value.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fwd(a->value.data[i]);
    return make_node(std::move(out), {a}, [=](Node& self) {
        Tensor ga(a->value.shape);
        for (std::size_t i = 0; i < ga.data.size(); ++i)
            ga.data[i] = bwd(a->value.data[i], self.value.data[i]) * self.grad.data[i];
        accumulate(*a, ga);
    });
}

}  // namespace

Var leaf(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    node->requires_grad = true;
    return node;
}

Var constant(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    return node;
}

void backward(const Var& root) {
    require(root->value.shape.size() == 1, "backward: root must be scalar");
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    // iterative post-order DFS
    std::vector<std::pair<Var, std::size_t>> stack{{root, 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Var next = node->parents[idx++];
            if (next->requires_grad && seen.insert(next.get()).second)
                stack.emplace_back(next, 0);
        } else {
            order.push_back(node.get());
            stack.pop_back();
        }
    }
    for (Node* n : order) n->zero_grad();
    root->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_op) (*it)->backward_op(**it);
    }
}

double scalar(const Var& v) {
    require(v->value.shape.size() == 1, "scalar: node is not scalar");
    return v->value.data[0];
}

Var add(Var a, Var b) {
    return binary(a, b, "add", [](double x, double y) { return x + y; },
                  [](double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(Var a, Var b) {
    return binary(a, b, "sub", [](double x, double y) { return x - y; },
                  [](double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(Var a, Var b) {
    return binary(a, b, "mul", [](double x, double y) { return x * y; },
                  [](double x, double y) { return std::pair{y, x}; });
}

Var div(Var a, Var b) {
    return binary(a, b, "div", [](double x, double y) { return x / y; },
                  [](double x, double y) { return std::pair{1.0 / y, -x / (y * y)}; });
}

Var emin(Var a, Var b) {
    return binary(a, b, "emin", [](double x, double y) { return std::min(x, y); },
                  [](double x, double y) {
                      return x <= y ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
                  });
}

Var add_scalar(Var a, double s) {
    return unary(a, "add_scalar", [s](double x) { return x + s; },
                 [](double, double) { return 1.0; });
}

Var mul_scalar(Var a, double s) {
    return unary(a, "mul_scalar", [s](double x) { return x * s; },
                 [s](double, double) { return s; });
}

Var relu(Var a) {
    return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var vlog(Var a) {
    return unary(a, "log", [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
}

Var vsqrt(Var a) {
    return unary(a, "sqrt", [](double x) { return std::sqrt(x); },
                 [](double, double y) { return 0.5 / y; });
}

Var neg(Var a) { return mul_scalar(a, -1.0); }

Var sum(Var a) {
    Tensor out(Shape{1, 1, 1, 1});
    for (double v : a->value.data) out.data[0] += v;
    return make_node(std::move(out), {a}, [=](Node& self) {
        Tensor ga(a->value.shape, self.grad.data[0]);
        accumulate(*a, ga);
    });
}

Var mean(Var a) {
    return mul_scalar(sum(a), 1.0 / static_cast<double>(a->value.shape.size()));
}

namespace {
Var reduce_extreme(Var a, bool take_max) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < a->value.data.size(); ++i) {
        if (take_max ? a->value.data[i] > a->value.data[arg]
                     : a->value.data[i] < a->value.data[arg])
            arg = i;
    }
    Tensor out(Shape{1, 1, 1, 1});
    out.data[0] = a->value.data[arg];
    return make_node(std::move(out), {a}, [=](Node& self) {
        Tensor ga(a->value.shape);
        ga.data[arg] = self.grad.data[0];
        accumulate(*a, ga);
    });
}
}  // namespace

Var reduce_min(Var a) { return reduce_extreme(a, false); }
Var reduce_max(Var a) { return reduce_extreme(a, true); }

Var concat_channels(const std::vector<Var>& xs) {
    require(!xs.empty(), "concat_channels: empty input");
    Shape s0 = xs[0]->value.shape;
    int total_c = 0;
    for (const auto& x : xs) {
        const Shape& s = x->value.shape;
        require(s.n == s0.n && s.h == s0.h && s.w == s0.w,
                "concat_channels: incompatible shapes");
        total_c += s.c;
    }
    Tensor out(Shape{s0.n, total_c, s0.h, s0.w});
    int c_off = 0;
    for (const auto& x : xs) {
        const Shape& s = x->value.shape;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h; ++y)
                    for (int xx = 0; xx < s.w; ++xx)
                        out.at(n, c_off + c, y, xx) = x->value.at(n, c, y, xx);
        c_off += s.c;
    }
    std::vector<Var> parents(xs.begin(), xs.end());
    return make_node(std::move(out), parents, [xs](Node& self) {
        int off = 0;
        for (const auto& x : xs) {
            const Shape& s = x->value.shape;
            if (x->requires_grad) {
                Tensor gx(s);
                for (int n = 0; n < s.n; ++n)
                    for (int c = 0; c < s.c; ++c)
                        for (int y = 0; y < s.h; ++y)
                            for (int xx = 0; xx < s.w; ++xx)
                                gx.at(n, c, y, xx) = self.grad.at(n, off + c, y, xx);
                accumulate(*x, gx);
            }
            off += s.c;
        }
    });
}

Var concat_batch(const std::vector<Var>& xs) {
    require(!xs.empty(), "concat_batch: empty input");
    Shape s0 = xs[0]->value.shape;
    int total_n = 0;
    for (const auto& x : xs) {
        const Shape& s = x->value.shape;
        require(s.c == s0.c && s.h == s0.h && s.w == s0.w, "concat_batch: incompatible shapes");
        total_n += s.n;
    }
    Tensor out(Shape{total_n, s0.c, s0.h, s0.w});
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x->value.data.begin(), x->value.data.end(), out.data.begin() + off);
        off += x->value.data.size();
    }
    std::vector<Var> parents(xs.begin(), xs.end());
    return make_node(std::move(out), parents, [xs](Node& self) {
        std::size_t o = 0;
        for (const auto& x : xs) {
            std::size_t len = x->value.data.size();
            if (x->requires_grad) {
                Tensor gx(x->value.shape);
                std::copy(self.grad.data.begin() + o, self.grad.data.begin() + o + len,
                          gx.data.begin());
                accumulate(*x, gx);
            }
            o += len;
        }
    });
}

Var slice_channels(Var a, int start, int count) {
    const Shape& s = a->value.shape;
    require(start >= 0 && count >= 1 && start + count <= s.c, "slice_channels: out of range");
    Tensor out(Shape{s.n, count, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < count; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    out.at(n, c, y, x) = a->value.at(n, start + c, y, x);
    return make_node(std::move(out), {a}, [=](Node& self) {
        Tensor ga(s);
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < count; ++c)
                for (int y = 0; y < s.h; ++y)
                    for (int x = 0; x < s.w; ++x)
                        ga.at(n, start + c, y, x) = self.grad.at(n, c, y, x);
        accumulate(*a, ga);
    });
}

Var slice_batch(Var a, int n_idx) {
    const Shape& s = a->value.shape;
    require(n_idx >= 0 && n_idx < s.n, "slice_batch: index out of range");
    Tensor out(Shape{1, s.c, s.h, s.w});
    for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) out.at(0, c, y, x) = a->value.at(n_idx, c, y, x);
    return make_node(std::move(out), {a}, [=](Node& self) {
        Tensor ga(s);
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x)
                    ga.at(n_idx, c, y, x) = self.grad.at(0, c, y, x);
        accumulate(*a, ga);
    });
}

Var conv2d(Var x, Var w, Var bias) {
    const Shape& xs = x->value.shape;
    const Shape& ws = w->value.shape;
    require(ws.h == 3 && ws.w == 3, "conv2d: kernel must be 3x3");
    require(ws.c == xs.c, "conv2d: channel mismatch " + xs.str() + " vs " + ws.str());
    require(bias->value.shape == Shape{1, ws.n, 1, 1}, "conv2d: bias shape mismatch");
    const int N = xs.n, Ci = xs.c, H = xs.h, W = xs.w, Co = ws.n;

    // shift-and-accumulate over the nine taps: the inner loops run over
    // contiguous rows, which the optimizer vectorizes
    Tensor out(Shape{N, Co, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Co; ++co) {
            double* op = out.data.data() + (static_cast<std::size_t>(n) * Co + co) * plane;
            double b = bias->value.data[co];
            for (std::size_t i = 0; i < plane; ++i) op[i] = b;
            for (int ci = 0; ci < Ci; ++ci) {
                const double* xp =
                    x->value.data.data() + (static_cast<std::size_t>(n) * Ci + ci) * plane;
                for (int ky = -1; ky <= 1; ++ky) {
                    for (int kx = -1; kx <= 1; ++kx) {
                        double wv = w->value.at(co, ci, ky + 1, kx + 1);
                        int y0 = std::max(0, -ky), y1 = H - std::max(0, ky);
                        int x0 = std::max(0, -kx), x1 = W - std::max(0, kx);
                        for (int y = y0; y < y1; ++y) {
                            double* orow = op + static_cast<std::size_t>(y) * W;
                            const double* xrow =
                                xp + static_cast<std::size_t>(y + ky) * W + kx;
                            for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * xrow[xx];
                        }
                    }
                }
            }
        }
    }
    return make_node(std::move(out), {x, w, bias}, [=](Node& self) {
        Tensor gx(xs), gw(ws), gb(bias->value.shape);
        const std::size_t pl = static_cast<std::size_t>(H) * W;
        for (int n = 0; n < N; ++n) {
            for (int co = 0; co < Co; ++co) {
                const double* gp =
                    self.grad.data.data() + (static_cast<std::size_t>(n) * Co + co) * pl;
                double bsum = 0.0;
                for (std::size_t i = 0; i < pl; ++i) bsum += gp[i];
                gb.data[co] += bsum;
                for (int ci = 0; ci < Ci; ++ci) {
                    const double* xp =
                        x->value.data.data() + (static_cast<std::size_t>(n) * Ci + ci) * pl;
                    double* gxp = gx.data.data() + (static_cast<std::size_t>(n) * Ci + ci) * pl;
                    for (int ky = -1; ky <= 1; ++ky) {
                        for (int kx = -1; kx <= 1; ++kx) {
                            double wv = w->value.at(co, ci, ky + 1, kx + 1);
                            double wsum = 0.0;
                            int y0 = std::max(0, -ky), y1 = H - std::max(0, ky);
                            int x0 = std::max(0, -kx), x1 = W - std::max(0, kx);
                            for (int y = y0; y < y1; ++y) {
                                const double* grow = gp + static_cast<std::size_t>(y) * W;
                                const double* xrow =
                                    xp + static_cast<std::size_t>(y + ky) * W + kx;
                                double* gxrow =
                                    gxp + static_cast<std::size_t>(y + ky) * W + kx;
                                for (int xx = x0; xx < x1; ++xx) {
                                    wsum += grow[xx] * xrow[xx];
                                    gxrow[xx] += grow[xx] * wv;
                                }
                            }
                            gw.at(co, ci, ky + 1, kx + 1) += wsum;
                        }
                    }
                }
            }
        }
        accumulate(*x, gx);
        accumulate(*w, gw);
        accumulate(*bias, gb);
    });
}

Var avgpool2(Var x) {
    const Shape& s = x->value.shape;
    require(s.h % 2 == 0 && s.w % 2 == 0, "avgpool2: odd spatial dims");
    Tensor out(Shape{s.n, s.c, s.h / 2, s.w / 2});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h / 2; ++y)
                for (int xx = 0; xx < s.w / 2; ++xx)
                    out.at(n, c, y, xx) =
                        0.25 * (x->value.at(n, c, 2 * y, 2 * xx) +
                                x->value.at(n, c, 2 * y, 2 * xx + 1) +
                                x->value.at(n, c, 2 * y + 1, 2 * xx) +
                                x->value.at(n, c, 2 * y + 1, 2 * xx + 1));
    return make_node(std::move(out), {x}, [=](Node& self) {
        Tensor gx(s);
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h / 2; ++y)
                    for (int xx = 0; xx < s.w / 2; ++xx) {
                        double g = 0.25 * self.grad.at(n, c, y, xx);
                        gx.at(n, c, 2 * y, 2 * xx) += g;
                        gx.at(n, c, 2 * y, 2 * xx + 1) += g;
                        gx.at(n, c, 2 * y + 1, 2 * xx) += g;
                        gx.at(n, c, 2 * y + 1, 2 * xx + 1) += g;
                    }
        accumulate(*x, gx);
    });
}

Var upsample_bilinear2(Var x) {
    const Shape& s = x->value.shape;
    const int Ho = s.h * 2, Wo = s.w * 2;
    // half-pixel-centered source coordinates, clamped at the edges
    auto src = [](int o, int limit, int& i0, int& i1, double& f) {
        double sc = (o + 0.5) / 2.0 - 0.5;
        if (sc < 0.0) sc = 0.0;
        if (sc > limit - 1) sc = limit - 1;
        i0 = static_cast<int>(std::floor(sc));
        i1 = std::min(i0 + 1, limit - 1);
        f = sc - i0;
    };
    Tensor out(Shape{s.n, s.c, Ho, Wo});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < Ho; ++y) {
                int y0, y1;
                double fy;
                src(y, s.h, y0, y1, fy);
                for (int xx = 0; xx < Wo; ++xx) {
                    int x0, x1;
                    double fx;
                    src(xx, s.w, x0, x1, fx);
                    out.at(n, c, y, xx) =
                        (1 - fy) * ((1 - fx) * x->value.at(n, c, y0, x0) +
                                    fx * x->value.at(n, c, y0, x1)) +
                        fy * ((1 - fx) * x->value.at(n, c, y1, x0) +
                              fx * x->value.at(n, c, y1, x1));
                }
            }
    return make_node(std::move(out), {x}, [=](Node& self) {
        Tensor gx(s);
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < Ho; ++y) {
                    int y0, y1;
                    double fy;
                    src(y, s.h, y0, y1, fy);
                    for (int xx = 0; xx < Wo; ++xx) {
                        int x0, x1;
                        double fx;
                        src(xx, s.w, x0, x1, fx);
                        double g = self.grad.at(n, c, y, xx);
                        gx.at(n, c, y0, x0) += g * (1 - fy) * (1 - fx);
                        gx.at(n, c, y0, x1) += g * (1 - fy) * fx;
                        gx.at(n, c, y1, x0) += g * fy * (1 - fx);
                        gx.at(n, c, y1, x1) += g * fy * fx;
                    }
                }
        accumulate(*x, gx);
    });
}

Var batchnorm_train(Var x, Var gamma, Var beta, double eps) {
    const Shape& s = x->value.shape;
    require(gamma->value.shape == Shape{1, s.c, 1, 1} &&
                beta->value.shape == Shape{1, s.c, 1, 1},
            "batchnorm: parameter shape mismatch");
    const int C = s.c;
    const double m = static_cast<double>(s.n) * s.h * s.w;
    std::vector<double> mu(C, 0.0), var(C, 0.0);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx) mu[c] += x->value.at(n, c, y, xx);
    for (int c = 0; c < C; ++c) mu[c] /= m;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx) {
                    double d = x->value.at(n, c, y, xx) - mu[c];
                    var[c] += d * d;
                }
    for (int c = 0; c < C; ++c) var[c] /= m;

    Tensor out(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(var[c] + eps);
            double g = gamma->value.data[c], b = beta->value.data[c];
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx)
                    out.at(n, c, y, xx) = g * (x->value.at(n, c, y, xx) - mu[c]) * inv + b;
        }
    return make_node(std::move(out), {x, gamma, beta}, [=](Node& self) {
        Tensor gx(s), gg(gamma->value.shape), gb(beta->value.shape);
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(var[c] + eps);
            double sum_g = 0.0, sum_gxhat = 0.0;
            for (int n = 0; n < s.n; ++n)
                for (int y = 0; y < s.h; ++y)
                    for (int xx = 0; xx < s.w; ++xx) {
                        double go = self.grad.at(n, c, y, xx);
                        double xhat = (x->value.at(n, c, y, xx) - mu[c]) * inv;
                        sum_g += go;
                        sum_gxhat += go * xhat;
                    }
            gg.data[c] = sum_gxhat;
            gb.data[c] = sum_g;
            double gscale = gamma->value.data[c] * inv;
            for (int n = 0; n < s.n; ++n)
                for (int y = 0; y < s.h; ++y)
                    for (int xx = 0; xx < s.w; ++xx) {
                        double go = self.grad.at(n, c, y, xx);
                        double xhat = (x->value.at(n, c, y, xx) - mu[c]) * inv;
                        gx.at(n, c, y, xx) =
                            gscale * (go - sum_g / m - xhat * sum_gxhat / m);
                    }
        }
        accumulate(*x, gx);
        accumulate(*gamma, gg);
        accumulate(*beta, gb);
    });
}

Var batchnorm_infer(Var x, Var gamma, Var beta, const Tensor& running_mean,
                    const Tensor& running_var, double eps) {
    const Shape& s = x->value.shape;
    require(gamma->value.shape == Shape{1, s.c, 1, 1}, "batchnorm: parameter shape mismatch");
    Tensor out(s);
    const int C = s.c;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(running_var.data[c] + eps);
            double g = gamma->value.data[c], b = beta->value.data[c];
            double mu = running_mean.data[c];
            for (int y = 0; y < s.h; ++y)
                for (int xx = 0; xx < s.w; ++xx)
                    out.at(n, c, y, xx) = g * (x->value.at(n, c, y, xx) - mu) * inv + b;
        }
    Tensor rm = running_mean, rv = running_var;
    return make_node(std::move(out), {x, gamma, beta}, [=](Node& self) {
        Tensor gx(s), gg(gamma->value.shape), gb(beta->value.shape);
        for (int c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(rv.data[c] + eps);
            for (int n = 0; n < s.n; ++n)
                for (int y = 0; y < s.h; ++y)
                    for (int xx = 0; xx < s.w; ++xx) {
                        double go = self.grad.at(n, c, y, xx);
                        double xhat = (x->value.at(n, c, y, xx) - rm.data[c]) * inv;
                        gx.at(n, c, y, xx) = go * gamma->value.data[c] * inv;
                        gg.data[c] += go * xhat;
                        gb.data[c] += go;
                    }
        }
        accumulate(*x, gx);
        accumulate(*gamma, gg);
        accumulate(*beta, gb);
    });
}

Var range_norm01(Var x, double eps) {
    Var mn = reduce_min(x);
    Var span = add_scalar(sub(reduce_max(x), mn), eps);
    return div(sub(x, mn), span);
}

}  // namespace salseq::ag
