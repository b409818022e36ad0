#include "octave/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "octave/error.hpp"

namespace octave::ad {

namespace {

thread_local bool g_grad_enabled = true;

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

std::shared_ptr<Node> make_node(Tensor val, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    if (g_grad_enabled) {
        for (const auto& p : parents)
            if (p->requires_grad) {
                n->requires_grad = true;
                break;
            }
        if (n->requires_grad) {
            n->parents = std::move(parents);
            n->backward = std::move(backward);
        }
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.val().same_shape(b.val()))
        throw domain_error(std::string(op) + ": shape mismatch " + shape_str(a.val().shape()) +
                           " vs " + shape_str(b.val().shape()));
}

// col is {Ci*kh*kw, Ho*Wo} row-major for one sample.
void im2col(const double* x, int64_t ci, int64_t h, int64_t w, int64_t kh, int64_t kw,
            int stride, int pad, int64_t ho, int64_t wo, double* col) {
    int64_t m = ho * wo;
    for (int64_t c = 0; c < ci; ++c) {
        for (int64_t r = 0; r < kh; ++r) {
            for (int64_t s = 0; s < kw; ++s) {
                double* row = col + ((c * kh + r) * kw + s) * m;
                for (int64_t oh = 0; oh < ho; ++oh) {
                    int64_t ih = oh * stride - pad + r;
                    if (ih < 0 || ih >= h) {
                        std::fill(row + oh * wo, row + (oh + 1) * wo, 0.0);
                        continue;
                    }
                    const double* xr = x + (c * h + ih) * w;
                    for (int64_t ow = 0; ow < wo; ++ow) {
                        int64_t iw = ow * stride - pad + s;
                        row[oh * wo + ow] = (iw < 0 || iw >= w) ? 0.0 : xr[iw];
                    }
                }
            }
        }
    }
}

void col2im_accum(const double* col, int64_t ci, int64_t h, int64_t w, int64_t kh, int64_t kw,
                  int stride, int pad, int64_t ho, int64_t wo, double* dx) {
    int64_t m = ho * wo;
    for (int64_t c = 0; c < ci; ++c) {
        for (int64_t r = 0; r < kh; ++r) {
            for (int64_t s = 0; s < kw; ++s) {
                const double* row = col + ((c * kh + r) * kw + s) * m;
                for (int64_t oh = 0; oh < ho; ++oh) {
                    int64_t ih = oh * stride - pad + r;
                    if (ih < 0 || ih >= h) continue;
                    double* xr = dx + (c * h + ih) * w;
                    for (int64_t ow = 0; ow < wo; ++ow) {
                        int64_t iw = ow * stride - pad + s;
                        if (iw >= 0 && iw < w) xr[iw] += row[oh * wo + ow];
                    }
                }
            }
        }
    }
}

}  // namespace

Var Var::constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    return Var(n);
}

Var Var::param(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->requires_grad = true;
    return Var(n);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& root) {
    if (!root.defined() || root.val().numel() != 1)
        throw domain_error("backward: root must be a defined scalar");
    if (!root.node->requires_grad) return;

    // Iterative DFS post-order over grad-requiring subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.node.get(), 0);
    visited.insert(root.node.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node->ensure_grad().fill(0.0);
    root.node->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.numel() != 0) n->backward(*n);
    }
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a.val();
    const auto& bv = b.val().vec();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += bv[static_cast<size_t>(i)];
    auto an = a.node, bn = b.node;
    return Var(make_node(std::move(out), {an, bn}, [an, bn](Node& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
    }));
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a.val();
    const auto& bv = b.val().vec();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] -= bv[static_cast<size_t>(i)];
    auto an = a.node, bn = b.node;
    return Var(make_node(std::move(out), {an, bn}, [an, bn](Node& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
        }
    }));
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a.val();
    const auto& bv = b.val().vec();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= bv[static_cast<size_t>(i)];
    auto an = a.node, bn = b.node;
    return Var(make_node(std::move(out), {an, bn}, [an, bn](Node& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * bn->val[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * an->val[i];
        }
    }));
}

Var scale(const Var& a, double s) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an, s](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * s;
    }));
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += s;
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }));
}

Var relu(const Var& a) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] = 0.0;
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i)
            if (an->val[i] > 0.0) g[i] += self.grad[i];
    }));
}

Var leaky_relu(const Var& a, double slope) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i)
        if (out[i] < 0.0) out[i] *= slope;
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an, slope](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i)
            g[i] += self.grad[i] * (an->val[i] > 0.0 ? 1.0 : slope);
    }));
}

Var log_eps(const Var& a, double eps) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i] + eps);
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an, eps](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] / (an->val[i] + eps);
    }));
}

Var square(const Var& a) {
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= out[i];
    auto an = a.node;
    return Var(make_node(std::move(out), {an}, [an](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += 2.0 * an->val[i] * self.grad[i];
    }));
}

Var hadamard_const(const Var& a, const Tensor& m) {
    if (!a.val().same_shape(m)) throw domain_error("hadamard_const: shape mismatch");
    Tensor out = a.val();
    for (int64_t i = 0; i < out.numel(); ++i) out[i] *= m[i];
    auto an = a.node;
    Tensor mc = m;
    return Var(make_node(std::move(out), {an}, [an, mc = std::move(mc)](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * mc[i];
    }));
}

Var sum(const Var& a) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.val().numel(); ++i) acc += a.val()[i];
    auto an = a.node;
    return Var(make_node(Tensor({1}, {acc}), {an}, [an](Node& self) {
        auto& g = an->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[0];
    }));
}

Var mean(const Var& a) {
    int64_t n = a.val().numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += a.val()[i];
    auto an = a.node;
    return Var(make_node(Tensor({1}, {acc / static_cast<double>(n)}), {an}, [an, n](Node& self) {
        auto& g = an->ensure_grad();
        double s = self.grad[0] / static_cast<double>(n);
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += s;
    }));
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    const auto& xs = x.val().shape();
    const auto& ws = w.val().shape();
    if (xs.size() != 4 || ws.size() != 4) throw domain_error("conv2d: expects 4D tensors");
    int64_t n = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
    int64_t co = ws[0], kh = ws[2], kw = ws[3];
    if (ws[1] != ci)
        throw domain_error("conv2d: input channels " + std::to_string(ci) +
                           " do not match kernel " + std::to_string(ws[1]));
    if (b.val().numel() != co) throw domain_error("conv2d: bias size mismatch");
    int64_t ho = (h + 2 * pad - kh) / stride + 1;
    int64_t wo = (wd + 2 * pad - kw) / stride + 1;
    int64_t k = ci * kh * kw, m = ho * wo;

    Tensor out({n, co, ho, wo});
    std::vector<double> col(static_cast<size_t>(k * m));
    MapCM wm(w.val().data(), co, k);
    for (int64_t i = 0; i < n; ++i) {
        im2col(x.val().data() + i * ci * h * wd, ci, h, wd, kh, kw, stride, pad, ho, wo,
               col.data());
        MapCM cm(col.data(), k, m);
        MapM ym(out.data() + i * co * m, co, m);
        ym.noalias() = wm * cm;
        for (int64_t c = 0; c < co; ++c) ym.row(c).array() += b.val()[c];
    }

    auto xn = x.node, wn = w.node, bn = b.node;
    return Var(make_node(std::move(out), {xn, wn, bn},
                         [xn, wn, bn, stride, pad, n, ci, h, wd, co, kh, kw, ho, wo, k,
                          m](Node& self) {
        std::vector<double> col(static_cast<size_t>(k * m));
        std::vector<double> dcol(static_cast<size_t>(k * m));
        MapCM wm(wn->val.data(), co, k);
        Tensor* dw = wn->requires_grad ? &wn->ensure_grad() : nullptr;
        Tensor* dxall = xn->requires_grad ? &xn->ensure_grad() : nullptr;
        Tensor* db = bn->requires_grad ? &bn->ensure_grad() : nullptr;
        for (int64_t i = 0; i < n; ++i) {
            MapCM gy(self.grad.data() + i * co * m, co, m);
            if (db)
                for (int64_t c = 0; c < co; ++c) (*db)[c] += gy.row(c).sum();
            if (dw) {
                im2col(xn->val.data() + i * ci * h * wd, ci, h, wd, kh, kw, stride, pad, ho,
                       wo, col.data());
                MapCM cm(col.data(), k, m);
                MapM dwm(dw->data(), co, k);
                dwm.noalias() += gy * cm.transpose();
            }
            if (dxall) {
                MapM dcm(dcol.data(), k, m);
                dcm.noalias() = wm.transpose() * gy;
                col2im_accum(dcol.data(), ci, h, wd, kh, kw, stride, pad, ho, wo,
                             dxall->data() + i * ci * h * wd);
            }
        }
    }));
}

Var maxpool2(const Var& x) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4 || xs[2] % 2 != 0 || xs[3] % 2 != 0)
        throw domain_error("maxpool2: expects 4D tensor with even spatial dims");
    int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    int64_t ho = h / 2, wo = w / 2;
    Tensor out({n, c, ho, wo});
    std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
    int64_t oi = 0;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* plane = x.val().data() + (i * c + ch) * h * w;
            for (int64_t oh = 0; oh < ho; ++oh)
                for (int64_t ow = 0; ow < wo; ++ow, ++oi) {
                    int64_t base = (oh * 2) * w + ow * 2;
                    int64_t best = base;
                    double bv = plane[base];
                    // fixed scan order keeps tie-breaking deterministic
                    for (int64_t dr = 0; dr < 2; ++dr)
                        for (int64_t dc = 0; dc < 2; ++dc) {
                            int64_t idx = base + dr * w + dc;
                            if (plane[idx] > bv) {
                                bv = plane[idx];
                                best = idx;
                            }
                        }
                    out[oi] = bv;
                    argmax[static_cast<size_t>(oi)] = (i * c + ch) * h * w + best;
                }
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, argmax = std::move(argmax)](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < self.grad.numel(); ++i)
            g[argmax[static_cast<size_t>(i)]] += self.grad[i];
    }));
}

Var upsample_nearest2(const Var& x) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4) throw domain_error("upsample_nearest2: expects 4D tensor");
    int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    Tensor out({n, c, h * 2, w * 2});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* in = x.val().data() + (i * c + ch) * h * w;
            double* op = out.data() + (i * c + ch) * 4 * h * w;
            for (int64_t r = 0; r < 2 * h; ++r)
                for (int64_t cc = 0; cc < 2 * w; ++cc)
                    op[r * 2 * w + cc] = in[(r / 2) * w + cc / 2];
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, h, w](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch) {
                double* gp = g.data() + (i * c + ch) * h * w;
                const double* sp = self.grad.data() + (i * c + ch) * 4 * h * w;
                for (int64_t r = 0; r < 2 * h; ++r)
                    for (int64_t cc = 0; cc < 2 * w; ++cc)
                        gp[(r / 2) * w + cc / 2] += sp[r * 2 * w + cc];
            }
    }));
}

Var upsample_bilinear(const Var& x, int64_t out_h, int64_t out_w) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4) throw domain_error("upsample_bilinear: expects 4D tensor");
    int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    // precompute interpolation stencils (half-pixel convention)
    struct Stencil {
        int64_t i0, i1;
        double w0, w1;
    };
    auto make_axis = [](int64_t in, int64_t out) {
        std::vector<Stencil> st(static_cast<size_t>(out));
        double scale = static_cast<double>(in) / static_cast<double>(out);
        for (int64_t o = 0; o < out; ++o) {
            double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
            if (src < 0.0) src = 0.0;
            if (src > static_cast<double>(in - 1)) src = static_cast<double>(in - 1);
            int64_t i0 = static_cast<int64_t>(src);
            if (i0 > in - 2) i0 = in >= 2 ? in - 2 : 0;
            double f = src - static_cast<double>(i0);
            int64_t i1 = (in >= 2) ? i0 + 1 : i0;
            st[static_cast<size_t>(o)] = {i0, i1, 1.0 - f, f};
        }
        return st;
    };
    auto rows = make_axis(h, out_h);
    auto cols = make_axis(w, out_w);

    Tensor out({n, c, out_h, out_w});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double* in = x.val().data() + (i * c + ch) * h * w;
            double* op = out.data() + (i * c + ch) * out_h * out_w;
            for (int64_t r = 0; r < out_h; ++r) {
                const auto& sr = rows[static_cast<size_t>(r)];
                for (int64_t cc = 0; cc < out_w; ++cc) {
                    const auto& sc = cols[static_cast<size_t>(cc)];
                    op[r * out_w + cc] = sr.w0 * (sc.w0 * in[sr.i0 * w + sc.i0] +
                                                  sc.w1 * in[sr.i0 * w + sc.i1]) +
                                         sr.w1 * (sc.w0 * in[sr.i1 * w + sc.i0] +
                                                  sc.w1 * in[sr.i1 * w + sc.i1]);
                }
            }
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn},
                         [xn, n, c, h, w, out_h, out_w, rows = std::move(rows),
                          cols = std::move(cols)](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch) {
                double* gp = g.data() + (i * c + ch) * h * w;
                const double* sp = self.grad.data() + (i * c + ch) * out_h * out_w;
                for (int64_t r = 0; r < out_h; ++r) {
                    const auto& sr = rows[static_cast<size_t>(r)];
                    for (int64_t cc = 0; cc < out_w; ++cc) {
                        const auto& sc = cols[static_cast<size_t>(cc)];
                        double gv = sp[r * out_w + cc];
                        gp[sr.i0 * w + sc.i0] += sr.w0 * sc.w0 * gv;
                        gp[sr.i0 * w + sc.i1] += sr.w0 * sc.w1 * gv;
                        gp[sr.i1 * w + sc.i0] += sr.w1 * sc.w0 * gv;
                        gp[sr.i1 * w + sc.i1] += sr.w1 * sc.w1 * gv;
                    }
                }
            }
    }));
}

Var concat_ch(const Var& a, const Var& b) {
    const auto& as = a.val().shape();
    const auto& bs = b.val().shape();
    if (as.size() != 4 || bs.size() != 4 || as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3])
        throw domain_error("concat_ch: incompatible shapes " + shape_str(as) + " vs " +
                           shape_str(bs));
    int64_t n = as[0], ca = as[1], cb = bs[1], hw = as[2] * as[3];
    Tensor out({n, ca + cb, as[2], as[3]});
    for (int64_t i = 0; i < n; ++i) {
        std::memcpy(out.data() + i * (ca + cb) * hw, a.val().data() + i * ca * hw,
                    sizeof(double) * static_cast<size_t>(ca * hw));
        std::memcpy(out.data() + (i * (ca + cb) + ca) * hw, b.val().data() + i * cb * hw,
                    sizeof(double) * static_cast<size_t>(cb * hw));
    }
    auto an = a.node, bn = b.node;
    return Var(make_node(std::move(out), {an, bn}, [an, bn, n, ca, cb, hw](Node& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < ca * hw; ++j)
                    g[i * ca * hw + j] += self.grad[i * (ca + cb) * hw + j];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < cb * hw; ++j)
                    g[i * cb * hw + j] += self.grad[(i * (ca + cb) + ca) * hw + j];
        }
    }));
}

Var softmax_ch(const Var& x) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4) throw domain_error("softmax_ch: expects 4D tensor");
    int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    int64_t hw = h * w;
    Tensor out(xs);
    for (int64_t i = 0; i < n; ++i) {
        const double* in = x.val().data() + i * c * hw;
        double* op = out.data() + i * c * hw;
        for (int64_t p = 0; p < hw; ++p) {
            double mx = in[p];
            for (int64_t ch = 1; ch < c; ++ch) mx = std::max(mx, in[ch * hw + p]);
            double z = 0.0;
            for (int64_t ch = 0; ch < c; ++ch) {
                double e = std::exp(in[ch * hw + p] - mx);
                op[ch * hw + p] = e;
                z += e;
            }
            for (int64_t ch = 0; ch < c; ++ch) op[ch * hw + p] /= z;
        }
    }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, hw](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i) {
            const double* y = self.val.data() + i * c * hw;
            const double* gy = self.grad.data() + i * c * hw;
            double* gx = g.data() + i * c * hw;
            for (int64_t p = 0; p < hw; ++p) {
                double dot = 0.0;
                for (int64_t ch = 0; ch < c; ++ch) dot += gy[ch * hw + p] * y[ch * hw + p];
                for (int64_t ch = 0; ch < c; ++ch)
                    gx[ch * hw + p] += y[ch * hw + p] * (gy[ch * hw + p] - dot);
            }
        }
    }));
}

Var channel_slice(const Var& x, int64_t c0, int64_t c1) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4 || c0 < 0 || c1 > xs[1] || c0 >= c1)
        throw domain_error("channel_slice: bad range");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3], cs = c1 - c0;
    Tensor out({n, cs, xs[2], xs[3]});
    for (int64_t i = 0; i < n; ++i)
        std::memcpy(out.data() + i * cs * hw, x.val().data() + (i * c + c0) * hw,
                    sizeof(double) * static_cast<size_t>(cs * hw));
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, c0, cs, hw](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < cs * hw; ++j)
                g[(i * c + c0) * hw + j] += self.grad[i * cs * hw + j];
    }));
}

Var channel_mean(const Var& x, int64_t c0, int64_t c1) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4 || c0 < 0 || c1 > xs[1] || c0 >= c1)
        throw domain_error("channel_mean: bad range");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3], cs = c1 - c0;
    Tensor out({n, 1, xs[2], xs[3]});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t p = 0; p < hw; ++p) {
            double acc = 0.0;
            for (int64_t ch = c0; ch < c1; ++ch) acc += x.val()[(i * c + ch) * hw + p];
            out[i * hw + p] = acc / static_cast<double>(cs);
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, c0, c1, cs, hw](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t p = 0; p < hw; ++p) {
                double gv = self.grad[i * hw + p] / static_cast<double>(cs);
                for (int64_t ch = c0; ch < c1; ++ch) g[(i * c + ch) * hw + p] += gv;
            }
    }));
}

Var channel_sum(const Var& x) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4) throw domain_error("channel_sum: expects 4D tensor");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
    Tensor out({n, 1, xs[2], xs[3]});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t p = 0; p < hw; ++p) {
            double acc = 0.0;
            for (int64_t ch = 0; ch < c; ++ch) acc += x.val()[(i * c + ch) * hw + p];
            out[i * hw + p] = acc;
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, hw](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t p = 0; p < hw; ++p)
                for (int64_t ch = 0; ch < c; ++ch)
                    g[(i * c + ch) * hw + p] += self.grad[i * hw + p];
    }));
}

Var mul_bcast_ch(const Var& x, const Var& m) {
    const auto& xs = x.val().shape();
    const auto& ms = m.val().shape();
    if (xs.size() != 4 || ms.size() != 4 || ms[1] != 1 || xs[0] != ms[0] || xs[2] != ms[2] ||
        xs[3] != ms[3])
        throw domain_error("mul_bcast_ch: incompatible shapes");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
    Tensor out(xs);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t p = 0; p < hw; ++p)
                out[(i * c + ch) * hw + p] = x.val()[(i * c + ch) * hw + p] * m.val()[i * hw + p];
    auto xn = x.node, mn = m.node;
    return Var(make_node(std::move(out), {xn, mn}, [xn, mn, n, c, hw](Node& self) {
        if (xn->requires_grad) {
            auto& g = xn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t p = 0; p < hw; ++p)
                        g[(i * c + ch) * hw + p] +=
                            self.grad[(i * c + ch) * hw + p] * mn->val[i * hw + p];
        }
        if (mn->requires_grad) {
            auto& g = mn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t p = 0; p < hw; ++p)
                        g[i * hw + p] +=
                            self.grad[(i * c + ch) * hw + p] * xn->val[(i * c + ch) * hw + p];
        }
    }));
}

Var div_bcast_ch(const Var& x, const Var& s) {
    const auto& xs = x.val().shape();
    const auto& ss = s.val().shape();
    if (xs.size() != 4 || ss.size() != 4 || ss[1] != 1 || xs[0] != ss[0] || xs[2] != ss[2] ||
        xs[3] != ss[3])
        throw domain_error("div_bcast_ch: incompatible shapes");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
    Tensor out(xs);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t p = 0; p < hw; ++p)
                out[(i * c + ch) * hw + p] = x.val()[(i * c + ch) * hw + p] / s.val()[i * hw + p];
    auto xn = x.node, sn = s.node;
    return Var(make_node(std::move(out), {xn, sn}, [xn, sn, n, c, hw](Node& self) {
        if (xn->requires_grad) {
            auto& g = xn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t ch = 0; ch < c; ++ch)
                    for (int64_t p = 0; p < hw; ++p)
                        g[(i * c + ch) * hw + p] +=
                            self.grad[(i * c + ch) * hw + p] / sn->val[i * hw + p];
        }
        if (sn->requires_grad) {
            auto& g = sn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t p = 0; p < hw; ++p) {
                    double d = sn->val[i * hw + p];
                    double acc = 0.0;
                    for (int64_t ch = 0; ch < c; ++ch)
                        acc += self.grad[(i * c + ch) * hw + p] * xn->val[(i * c + ch) * hw + p];
                    g[i * hw + p] -= acc / (d * d);
                }
        }
    }));
}

Var global_avg_pool(const Var& x) {
    const auto& xs = x.val().shape();
    if (xs.size() != 4) throw domain_error("global_avg_pool: expects 4D tensor");
    int64_t n = xs[0], c = xs[1], hw = xs[2] * xs[3];
    Tensor out({n, c});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            const double* p = x.val().data() + (i * c + ch) * hw;
            for (int64_t j = 0; j < hw; ++j) acc += p[j];
            out[i * c + ch] = acc / static_cast<double>(hw);
        }
    auto xn = x.node;
    return Var(make_node(std::move(out), {xn}, [xn, n, c, hw](Node& self) {
        auto& g = xn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
            for (int64_t ch = 0; ch < c; ++ch) {
                double gv = self.grad[i * c + ch] / static_cast<double>(hw);
                double* p = g.data() + (i * c + ch) * hw;
                for (int64_t j = 0; j < hw; ++j) p[j] += gv;
            }
    }));
}

Var linear(const Var& x, const Var& w, const Var& b) {
    const auto& xs = x.val().shape();
    const auto& ws = w.val().shape();
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0])
        throw domain_error("linear: incompatible shapes");
    int64_t n = xs[0], k = xs[1], m = ws[1];
    if (b.val().numel() != m) throw domain_error("linear: bias size mismatch");
    Tensor out({n, m});
    MapCM xm(x.val().data(), n, k), wm(w.val().data(), k, m);
    MapM ym(out.data(), n, m);
    ym.noalias() = xm * wm;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < m; ++j) out[i * m + j] += b.val()[j];
    auto xn = x.node, wn = w.node, bn = b.node;
    return Var(make_node(std::move(out), {xn, wn, bn}, [xn, wn, bn, n, k, m](Node& self) {
        MapCM gy(self.grad.data(), n, m);
        if (xn->requires_grad) {
            MapM gx(xn->ensure_grad().data(), n, k);
            MapCM wm(wn->val.data(), k, m);
            gx.noalias() += gy * wm.transpose();
        }
        if (wn->requires_grad) {
            MapM gw(wn->ensure_grad().data(), k, m);
            MapCM xm(xn->val.data(), n, k);
            gw.noalias() += xm.transpose() * gy;
        }
        if (bn->requires_grad) {
            auto& gb = bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j < m; ++j) gb[j] += self.grad[i * m + j];
        }
    }));
}

}  // namespace octave::ad
