#include "dehydrator/memorizer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

namespace dehydrator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Capacities
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<CapacityRow, 6> kCapacityTable = {{
    {"C1", 32, 1, 128, 18},
    {"C2", 64, 2, 256, 70},
    {"C3", 128, 4, 512, 271},
    {"C4", 192, 6, 768, 600},
    {"C5", 256, 8, 1024, 1070},
    {"C6", 384, 12, 1536, 2380},
}};

}  // namespace

const CapacityRow& capacity_row(Capacity c) {
    return kCapacityTable[static_cast<std::size_t>(c)];
}

bool parse_capacity(const std::string& label, Capacity& out) {
    for (std::size_t i = 0; i < kCapacityTable.size(); ++i) {
        if (label == kCapacityTable[i].label) {
            out = static_cast<Capacity>(i);
            return true;
        }
    }
    return false;
}

ModelConfig ModelConfig::for_capacity(Capacity c, int context_len, std::uint64_t seed) {
    const CapacityRow& row = capacity_row(c);
    ModelConfig cfg;
    cfg.capacity = c;
    cfg.embed_dim = row.embed_dim;
    cfg.n_heads = row.n_heads;
    cfg.ff_dim = row.ff_dim;
    cfg.context_len = context_len;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

ModelConfig ModelConfig::custom(int embed_dim, int n_heads, int ff_dim, int context_len,
                                std::uint64_t seed) {
    ModelConfig cfg;
    cfg.embed_dim = embed_dim;
    cfg.n_heads = n_heads;
    cfg.ff_dim = ff_dim;
    cfg.context_len = context_len;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

void ModelConfig::validate() const {
    if (embed_dim <= 0 || n_heads <= 0 || ff_dim <= 0 || context_len <= 0) {
        raise(ErrorCode::InvalidConfig, "dimensions must be positive");
    }
    if (embed_dim % n_heads != 0) {
        raise(ErrorCode::InvalidConfig,
              "embed_dim " + std::to_string(embed_dim) + " not divisible by n_heads " +
                  std::to_string(n_heads));
    }
    if (vocab_size != vocab::kSize) {
        raise(ErrorCode::InvalidConfig, "vocab_size must be " + std::to_string(vocab::kSize));
    }
    if (capacity) {
        const CapacityRow& row = capacity_row(*capacity);
        if (embed_dim != row.embed_dim || n_heads != row.n_heads || ff_dim != row.ff_dim) {
            raise(ErrorCode::InvalidConfig,
                  std::string("dimensions do not match capacity ") + row.label);
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

namespace {

struct AttnOffsets {
    std::size_t ln_g, ln_b, wq, bq, wk, bk, wv, bv, wo, bo;
};

struct Layout {
    std::size_t tok_emb{};
    std::size_t pos_emb{};
    AttnOffsets attn[2];
    std::size_t ln3_g{}, ln3_b{};
    std::size_t w1{}, b1{}, w2{}, b2{};
    std::size_t total{};

    static Layout compute(const ModelConfig& cfg) {
        const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
        const std::size_t f = static_cast<std::size_t>(cfg.ff_dim);
        const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
        const std::size_t L = static_cast<std::size_t>(cfg.context_len);
        Layout lay;
        std::size_t at = 0;
        auto take = [&](std::size_t n) {
            const std::size_t offset = at;
            at += n;
            return offset;
        };
        lay.tok_emb = take(v * d);
        lay.pos_emb = take(L * d);
        for (auto& a : lay.attn) {
            a.ln_g = take(d);
            a.ln_b = take(d);
            a.wq = take(d * d);
            a.bq = take(d);
            a.wk = take(d * d);
            a.bk = take(d);
            a.wv = take(d * d);
            a.bv = take(d);
            a.wo = take(d * d);
            a.bo = take(d);
        }
        lay.ln3_g = take(d);
        lay.ln3_b = take(d);
        lay.w1 = take(f * d);
        lay.b1 = take(f);
        lay.w2 = take(d * f);
        lay.b2 = take(d);
        lay.total = at;
        return lay;
    }
};

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

// Box-Muller over explicit mt19937_64 draws; std::normal_distribution is not
// pinned across standard libraries.
template <typename F>
void fill_normal(std::vector<F>& data, std::size_t begin, std::size_t count,
                 std::mt19937_64& rng, double std_dev) {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < count; ++i) {
        const double u1 =
            (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
        const double u2 =
            (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
        data[begin + i] = static_cast<F>(z * std_dev);
    }
}

template <typename F>
F gelu(F x) {
    return static_cast<F>(0.5) * x *
           (static_cast<F>(1) + std::erf(x * static_cast<F>(0.70710678118654752440)));
}

template <typename F>
F gelu_grad(F x) {
    const F phi = static_cast<F>(0.5) *
                  (static_cast<F>(1) + std::erf(x * static_cast<F>(0.70710678118654752440)));
    const F pdf = static_cast<F>(0.3989422804014326779) *
                  std::exp(static_cast<F>(-0.5) * x * x);
    return phi + x * pdf;
}

// y[0..out) = W[out x in] * x + b
template <typename F>
void matvec(const F* w, const F* b, const F* x, F* y, std::size_t out, std::size_t in) {
    for (std::size_t o = 0; o < out; ++o) {
        F acc = b ? b[o] : F(0);
        const F* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// Accumulates dW += dy (outer) x, db += dy, dx = W^T dy.
template <typename F>
void matvec_backward(const F* w, const F* x, const F* dy, F* dw, F* db, F* dx, std::size_t out,
                     std::size_t in) {
    if (dx) std::fill(dx, dx + in, F(0));
    for (std::size_t o = 0; o < out; ++o) {
        const F g = dy[o];
        if (db) db[o] += g;
        const F* row = w + o * in;
        F* drow = dw + o * in;
        for (std::size_t i = 0; i < in; ++i) {
            drow[i] += g * x[i];
            if (dx) dx[i] += row[i] * g;
        }
    }
}

template <typename F>
struct Workspace {
    std::size_t T{0};
    // Embedding stage
    std::vector<F> x0;
    // Per attention sublayer
    struct AttnActs {
        std::vector<F> xhat, rstd, a, q, k, v, probs, ctx, x_out;
    } attn[2];
    // Feedforward stage
    std::vector<F> xhat3, rstd3, c, pre, hidden, x3;
    std::vector<F> logits;
    // Backward scratch
    std::vector<F> d_cur, d_tmp, d_vec, d_q, d_k, d_v, d_a, d_pre, d_hidden, d_c;

    void resize(const ModelConfig& cfg, std::size_t t) {
        T = t;
        const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
        const std::size_t f = static_cast<std::size_t>(cfg.ff_dim);
        const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
        const std::size_t h = static_cast<std::size_t>(cfg.n_heads);
        x0.assign(t * d, F(0));
        for (auto& s : attn) {
            s.xhat.assign(t * d, F(0));
            s.rstd.assign(t, F(0));
            s.a.assign(t * d, F(0));
            s.q.assign(t * d, F(0));
            s.k.assign(t * d, F(0));
            s.v.assign(t * d, F(0));
            s.probs.assign(h * t * t, F(0));
            s.ctx.assign(t * d, F(0));
            s.x_out.assign(t * d, F(0));
        }
        xhat3.assign(t * d, F(0));
        rstd3.assign(t, F(0));
        c.assign(t * d, F(0));
        pre.assign(t * f, F(0));
        hidden.assign(t * f, F(0));
        x3.assign(t * d, F(0));
        logits.assign(t * v, F(0));
        d_cur.assign(t * d, F(0));
        d_tmp.assign(t * d, F(0));
        d_vec.assign(d, F(0));
        d_q.assign(t * d, F(0));
        d_k.assign(t * d, F(0));
        d_v.assign(t * d, F(0));
        d_a.assign(t * d, F(0));
        d_pre.assign(f, F(0));
        d_hidden.assign(f, F(0));
        d_c.assign(t * d, F(0));
    }
};

template <typename F>
void layer_norm_forward(const F* x, const F* g, const F* b, F* xhat, F* rstd, F* out,
                        std::size_t d) {
    F mean = F(0);
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<F>(d);
    F var = F(0);
    for (std::size_t i = 0; i < d; ++i) {
        const F dx = x[i] - mean;
        var += dx * dx;
    }
    var /= static_cast<F>(d);
    const F r = F(1) / std::sqrt(var + static_cast<F>(kLnEps));
    *rstd = r;
    for (std::size_t i = 0; i < d; ++i) {
        xhat[i] = (x[i] - mean) * r;
        out[i] = g[i] * xhat[i] + b[i];
    }
}

// dout is the gradient at the LN output; adds the input gradient into dx_accum
// and parameter gradients into dg/db.
template <typename F>
void layer_norm_backward(const F* dout, const F* xhat, F rstd, const F* g, F* dg, F* db,
                         F* dx_accum, std::size_t d) {
    F mean_dxhat = F(0);
    F mean_dxhat_xhat = F(0);
    for (std::size_t i = 0; i < d; ++i) {
        const F dxhat = dout[i] * g[i];
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * xhat[i];
        dg[i] += dout[i] * xhat[i];
        db[i] += dout[i];
    }
    mean_dxhat /= static_cast<F>(d);
    mean_dxhat_xhat /= static_cast<F>(d);
    for (std::size_t i = 0; i < d; ++i) {
        const F dxhat = dout[i] * g[i];
        dx_accum[i] += rstd * (dxhat - mean_dxhat - xhat[i] * mean_dxhat_xhat);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

std::size_t ModelConfig::param_count() const { return Layout::compute(*this).total; }

template <typename F>
ModelT<F>::ModelT(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const Layout lay = Layout::compute(cfg_);
    params_.assign(lay.total, F(0));
    std::mt19937_64 rng(cfg_.seed);
    const std::size_t d = static_cast<std::size_t>(cfg_.embed_dim);
    const std::size_t f = static_cast<std::size_t>(cfg_.ff_dim);
    const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
    const std::size_t L = static_cast<std::size_t>(cfg_.context_len);

    fill_normal(params_, lay.tok_emb, v * d, rng, kInitStd);
    fill_normal(params_, lay.pos_emb, L * d, rng, kInitStd);
    for (const auto& a : lay.attn) {
        std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(a.ln_g), d, F(1));
        fill_normal(params_, a.wq, d * d, rng, kInitStd);
        fill_normal(params_, a.wk, d * d, rng, kInitStd);
        fill_normal(params_, a.wv, d * d, rng, kInitStd);
        fill_normal(params_, a.wo, d * d, rng, kInitStd);
    }
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(lay.ln3_g), d, F(1));
    fill_normal(params_, lay.w1, f * d, rng, kInitStd);
    fill_normal(params_, lay.w2, d * f, rng, kInitStd);
}

namespace {

// Runs the network over ids[0..T), filling the workspace with every
// activation the backward pass needs.
template <typename F>
void forward_window(const ModelConfig& cfg, const std::vector<F>& params, const TokenId* ids,
                    std::size_t T, Workspace<F>& ws) {
    const Layout lay = Layout::compute(cfg);
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t f = static_cast<std::size_t>(cfg.ff_dim);
    const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
    const std::size_t H = static_cast<std::size_t>(cfg.n_heads);
    const std::size_t dh = d / H;
    const F scale = static_cast<F>(1.0 / std::sqrt(static_cast<double>(dh)));
    const F* P = params.data();

    ws.resize(cfg, T);
    for (std::size_t t = 0; t < T; ++t) {
        const TokenId id = ids[t];
        if (id >= v) raise(ErrorCode::UnknownSymbol, "token id " + std::to_string(id));
        const F* tok = P + lay.tok_emb + static_cast<std::size_t>(id) * d;
        const F* pos = P + lay.pos_emb + t * d;
        F* x = ws.x0.data() + t * d;
        for (std::size_t i = 0; i < d; ++i) x[i] = tok[i] + pos[i];
    }

    const F* x_in = ws.x0.data();
    for (int s = 0; s < 2; ++s) {
        const AttnOffsets& ao = lay.attn[s];
        auto& acts = ws.attn[s];
        for (std::size_t t = 0; t < T; ++t) {
            layer_norm_forward(x_in + t * d, P + ao.ln_g, P + ao.ln_b, acts.xhat.data() + t * d,
                               acts.rstd.data() + t, acts.a.data() + t * d, d);
            matvec(P + ao.wq, P + ao.bq, acts.a.data() + t * d, acts.q.data() + t * d, d, d);
            matvec(P + ao.wk, P + ao.bk, acts.a.data() + t * d, acts.k.data() + t * d, d, d);
            matvec(P + ao.wv, P + ao.bv, acts.a.data() + t * d, acts.v.data() + t * d, d, d);
        }
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t off = h * dh;
            F* probs = acts.probs.data() + h * T * T;
            for (std::size_t t = 0; t < T; ++t) {
                F* row = probs + t * T;
                F max_score = std::numeric_limits<F>::lowest();
                for (std::size_t u = 0; u <= t; ++u) {
                    const F* qv = acts.q.data() + t * d + off;
                    const F* kv = acts.k.data() + u * d + off;
                    F acc = F(0);
                    for (std::size_t i = 0; i < dh; ++i) acc += qv[i] * kv[i];
                    row[u] = acc * scale;
                    max_score = std::max(max_score, row[u]);
                }
                F denom = F(0);
                for (std::size_t u = 0; u <= t; ++u) {
                    row[u] = std::exp(row[u] - max_score);
                    denom += row[u];
                }
                const F inv = F(1) / denom;
                for (std::size_t u = 0; u <= t; ++u) row[u] *= inv;
                F* ctx = acts.ctx.data() + t * d + off;
                std::fill(ctx, ctx + dh, F(0));
                for (std::size_t u = 0; u <= t; ++u) {
                    const F w = row[u];
                    const F* vv = acts.v.data() + u * d + off;
                    for (std::size_t i = 0; i < dh; ++i) ctx[i] += w * vv[i];
                }
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            F* out = acts.x_out.data() + t * d;
            matvec(P + ao.wo, P + ao.bo, acts.ctx.data() + t * d, out, d, d);
            const F* prev = x_in + t * d;
            for (std::size_t i = 0; i < d; ++i) out[i] += prev[i];
        }
        x_in = acts.x_out.data();
    }

    for (std::size_t t = 0; t < T; ++t) {
        layer_norm_forward(x_in + t * d, P + lay.ln3_g, P + lay.ln3_b, ws.xhat3.data() + t * d,
                           ws.rstd3.data() + t, ws.c.data() + t * d, d);
        matvec(P + lay.w1, P + lay.b1, ws.c.data() + t * d, ws.pre.data() + t * f, f, d);
        for (std::size_t i = 0; i < f; ++i) {
            ws.hidden[t * f + i] = gelu(ws.pre[t * f + i]);
        }
        F* x3 = ws.x3.data() + t * d;
        matvec(P + lay.w2, P + lay.b2, ws.hidden.data() + t * f, x3, d, f);
        const F* prev = x_in + t * d;
        for (std::size_t i = 0; i < d; ++i) x3[i] += prev[i];
    }

    // Logits through the tied embedding.
    for (std::size_t t = 0; t < T; ++t) {
        const F* x3 = ws.x3.data() + t * d;
        F* z = ws.logits.data() + t * v;
        for (std::size_t w = 0; w < v; ++w) {
            const F* emb = P + lay.tok_emb + w * d;
            F acc = F(0);
            for (std::size_t i = 0; i < d; ++i) acc += emb[i] * x3[i];
            z[w] = acc;
        }
    }
}

// Consumes ws.logits as the logit gradients and accumulates raw parameter
// gradients. ids are the window inputs (same as the forward call).
template <typename F>
void backward_window(const ModelConfig& cfg, const std::vector<F>& params, const TokenId* ids,
                     std::size_t T, Workspace<F>& ws, std::vector<F>& grad) {
    const Layout lay = Layout::compute(cfg);
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t f = static_cast<std::size_t>(cfg.ff_dim);
    const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
    const std::size_t H = static_cast<std::size_t>(cfg.n_heads);
    const std::size_t dh = d / H;
    const F scale = static_cast<F>(1.0 / std::sqrt(static_cast<double>(dh)));
    const F* P = params.data();
    F* G = grad.data();

    // Tied output projection: d_x3 and d_tok_emb.
    std::fill(ws.d_cur.begin(), ws.d_cur.end(), F(0));
    for (std::size_t t = 0; t < T; ++t) {
        const F* dz = ws.logits.data() + t * v;
        const F* x3 = ws.x3.data() + t * d;
        F* dx3 = ws.d_cur.data() + t * d;
        for (std::size_t w = 0; w < v; ++w) {
            const F g = dz[w];
            if (g == F(0)) continue;
            const F* emb = P + lay.tok_emb + w * d;
            F* demb = G + lay.tok_emb + w * d;
            for (std::size_t i = 0; i < d; ++i) {
                dx3[i] += emb[i] * g;
                demb[i] += x3[i] * g;
            }
        }
    }

    // Feedforward sublayer. Residual: x3 = x2 + W2 gelu(W1 LN3(x2) + b1) + b2.
    std::fill(ws.d_c.begin(), ws.d_c.end(), F(0));
    for (std::size_t t = 0; t < T; ++t) {
        const F* dy = ws.d_cur.data() + t * d;
        matvec_backward(P + lay.w2, ws.hidden.data() + t * f, dy, G + lay.w2, G + lay.b2,
                        ws.d_hidden.data(), d, f);
        for (std::size_t i = 0; i < f; ++i) {
            ws.d_pre[i] = ws.d_hidden[i] * gelu_grad(ws.pre[t * f + i]);
        }
        matvec_backward(P + lay.w1, ws.c.data() + t * d, ws.d_pre.data(), G + lay.w1, G + lay.b1,
                        ws.d_c.data() + t * d, f, d);
    }
    // d_cur holds dx3, which carries to x2 through the residual; the LN3 path
    // adds on top of it.
    for (std::size_t t = 0; t < T; ++t) {
        layer_norm_backward(ws.d_c.data() + t * d, ws.xhat3.data() + t * d, ws.rstd3[t],
                            P + lay.ln3_g, G + lay.ln3_g, G + lay.ln3_b,
                            ws.d_cur.data() + t * d, d);
    }

    // Attention sublayers in reverse.
    for (int s = 1; s >= 0; --s) {
        const AttnOffsets& ao = lay.attn[s];
        auto& acts = ws.attn[s];

        std::fill(ws.d_q.begin(), ws.d_q.end(), F(0));
        std::fill(ws.d_k.begin(), ws.d_k.end(), F(0));
        std::fill(ws.d_v.begin(), ws.d_v.end(), F(0));
        std::fill(ws.d_a.begin(), ws.d_a.end(), F(0));
        std::fill(ws.d_tmp.begin(), ws.d_tmp.end(), F(0));

        // d_cur holds the gradient at the sublayer output (residual carries
        // through unchanged; the attention path adds to it).
        for (std::size_t t = 0; t < T; ++t) {
            const F* dout = ws.d_cur.data() + t * d;
            matvec_backward(P + ao.wo, acts.ctx.data() + t * d, dout, G + ao.wo, G + ao.bo,
                            ws.d_tmp.data() + t * d, d, d);  // d_tmp = dctx
        }
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t off = h * dh;
            const F* probs = acts.probs.data() + h * T * T;
            for (std::size_t t = 0; t < T; ++t) {
                const F* dctx = ws.d_tmp.data() + t * d + off;
                const F* row = probs + t * T;
                // First pass: dv and the softmax row dot needed below.
                F sum_wd = F(0);
                for (std::size_t u = 0; u <= t; ++u) {
                    const F* vv = acts.v.data() + u * d + off;
                    F dw = F(0);
                    for (std::size_t i = 0; i < dh; ++i) dw += dctx[i] * vv[i];
                    F* dv = ws.d_v.data() + u * d + off;
                    const F w = row[u];
                    for (std::size_t i = 0; i < dh; ++i) dv[i] += w * dctx[i];
                    sum_wd += w * dw;
                }
                // Second pass with dscore = w * (dw - sum_wd).
                for (std::size_t u = 0; u <= t; ++u) {
                    const F* vv = acts.v.data() + u * d + off;
                    F dw = F(0);
                    for (std::size_t i = 0; i < dh; ++i) dw += dctx[i] * vv[i];
                    const F dscore = row[u] * (dw - sum_wd) * scale;
                    const F* qv = acts.q.data() + t * d + off;
                    const F* kv = acts.k.data() + u * d + off;
                    F* dq = ws.d_q.data() + t * d + off;
                    F* dk = ws.d_k.data() + u * d + off;
                    for (std::size_t i = 0; i < dh; ++i) {
                        dq[i] += dscore * kv[i];
                        dk[i] += dscore * qv[i];
                    }
                }
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            matvec_backward(P + ao.wq, acts.a.data() + t * d, ws.d_q.data() + t * d, G + ao.wq,
                            G + ao.bq, ws.d_vec.data(), d, d);
            F* da = ws.d_a.data() + t * d;
            for (std::size_t i = 0; i < d; ++i) da[i] += ws.d_vec[i];
            matvec_backward(P + ao.wk, acts.a.data() + t * d, ws.d_k.data() + t * d, G + ao.wk,
                            G + ao.bk, ws.d_vec.data(), d, d);
            for (std::size_t i = 0; i < d; ++i) da[i] += ws.d_vec[i];
            matvec_backward(P + ao.wv, acts.a.data() + t * d, ws.d_v.data() + t * d, G + ao.wv,
                            G + ao.bv, ws.d_vec.data(), d, d);
            for (std::size_t i = 0; i < d; ++i) da[i] += ws.d_vec[i];
        }
        for (std::size_t t = 0; t < T; ++t) {
            layer_norm_backward(ws.d_a.data() + t * d, acts.xhat.data() + t * d, acts.rstd[t],
                                P + ao.ln_g, G + ao.ln_g, G + ao.ln_b, ws.d_cur.data() + t * d,
                                d);
        }
    }

    // Embedding gradients.
    for (std::size_t t = 0; t < T; ++t) {
        const F* dx = ws.d_cur.data() + t * d;
        F* demb = G + lay.tok_emb + static_cast<std::size_t>(ids[t]) * d;
        F* dpos = G + lay.pos_emb + t * d;
        for (std::size_t i = 0; i < d; ++i) {
            demb[i] += dx[i];
            dpos[i] += dx[i];
        }
    }
}

template <typename F>
Workspace<F>& thread_workspace() {
    thread_local Workspace<F> ws;
    return ws;
}

}  // namespace

template <typename F>
std::vector<F> ModelT<F>::forward(const std::vector<TokenId>& ids) const {
    if (ids.empty()) raise(ErrorCode::InvalidArgument, "forward on empty sequence");
    if (ids.size() > static_cast<std::size_t>(cfg_.context_len)) {
        raise(ErrorCode::ContextOverflow,
              std::to_string(ids.size()) + " tokens > context " +
                  std::to_string(cfg_.context_len));
    }
    Workspace<F>& ws = thread_workspace<F>();
    forward_window(cfg_, params_, ids.data(), ids.size(), ws);
    return ws.logits;
}

template <typename F>
std::pair<double, std::size_t> ModelT<F>::loss_and_grad(const TokenId* window,
                                                        std::size_t window_len,
                                                        std::vector<F>* grad) const {
    if (window_len < 2) raise(ErrorCode::InvalidArgument, "window too short");
    const std::size_t T = window_len - 1;
    if (T > static_cast<std::size_t>(cfg_.context_len)) {
        raise(ErrorCode::ContextOverflow, "window exceeds context");
    }
    Workspace<F>& ws = thread_workspace<F>();
    forward_window(cfg_, params_, window, T, ws);

    const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
    double loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t t = 0; t < T; ++t) {
        const TokenId target = window[t + 1];
        F* z = ws.logits.data() + t * v;
        if (target == vocab::kPad) {
            std::fill(z, z + v, F(0));  // masked position contributes nothing
            continue;
        }
        F max_z = z[0];
        for (std::size_t w = 1; w < v; ++w) max_z = std::max(max_z, z[w]);
        double denom = 0.0;
        for (std::size_t w = 0; w < v; ++w) denom += std::exp(static_cast<double>(z[w] - max_z));
        const double log_denom = std::log(denom);
        loss += log_denom - static_cast<double>(z[target] - max_z);
        ++counted;
        if (grad) {
            for (std::size_t w = 0; w < v; ++w) {
                const double p = std::exp(static_cast<double>(z[w] - max_z)) / denom;
                z[w] = static_cast<F>(p) - (w == target ? F(1) : F(0));
            }
        }
    }
    if (grad) {
        backward_window(cfg_, params_, window, T, ws, *grad);
    }
    return {loss, counted};
}

template <typename F>
GenerateResult ModelT<F>::generate(const std::vector<TokenId>& head, std::size_t max_len,
                                   TokenId terminator) const {
    const std::size_t ctx_cap = static_cast<std::size_t>(cfg_.context_len);
    if (head.size() >= ctx_cap) {
        raise(ErrorCode::ContextOverflow, "query head does not fit the model context");
    }
    GenerateResult result;
    result.ids = head;

    std::vector<TokenId> context;
    context.reserve(ctx_cap);
    context.push_back(vocab::kBos);
    context.insert(context.end(), head.begin(), head.end());

    Workspace<F>& ws = thread_workspace<F>();
    const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
    while (result.ids.size() < max_len) {
        forward_window(cfg_, params_, context.data(), context.size(), ws);
        const F* z = ws.logits.data() + (context.size() - 1) * v;
        TokenId best = 0;
        for (std::size_t w = 1; w < v; ++w) {
            if (z[w] > z[best]) best = static_cast<TokenId>(w);
        }
        result.ids.push_back(best);
        if (best == terminator) return result;
        if (context.size() == ctx_cap) {
            context.erase(context.begin());
        }
        context.push_back(best);
    }
    result.truncated = true;
    return result;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Explicit Fisher-Yates; std::shuffle is not pinned across implementations.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace

TrainReport train(Model& model, const SegmentedCorpus& corpus, const TrainOptions& options) {
    if (corpus.segment_count() == 0) {
        raise(ErrorCode::InvalidArgument, "cannot train on an empty corpus");
    }
    if (static_cast<int>(corpus.L) != model.config().context_len) {
        raise(ErrorCode::InvalidConfig,
              "model context " + std::to_string(model.config().context_len) +
                  " != segment length " + std::to_string(corpus.L));
    }
    if (options.max_epochs <= 0 || options.batch_size == 0 || options.threads <= 0) {
        raise(ErrorCode::InvalidArgument, "bad training options");
    }

    const auto start = std::chrono::steady_clock::now();
    const std::size_t window = static_cast<std::size_t>(corpus.L) + 1;
    const std::size_t n_segments = corpus.segment_count();
    const std::size_t n_params = model.params().size();

    std::vector<std::size_t> order(n_segments);
    for (std::size_t i = 0; i < n_segments; ++i) order[i] = i;

    std::vector<float> m1(n_params, 0.0f), m2(n_params, 0.0f);
    const int threads = std::max(1, options.threads);
    std::vector<std::vector<float>> grads(static_cast<std::size_t>(threads));
    for (auto& g : grads) g.assign(n_params, 0.0f);

    TrainReport report;
    std::uint64_t adam_t = 0;

    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        std::mt19937_64 rng(model.config().seed * 0x9e3779b97f4a7c15ull +
                            static_cast<std::uint64_t>(epoch) + 1);
        shuffle_indices(order, rng);

        double epoch_loss = 0.0;
        std::size_t epoch_counted = 0;

        for (std::size_t begin = 0; begin < n_segments; begin += options.batch_size) {
            const std::size_t end = std::min(begin + options.batch_size, n_segments);
            const std::size_t batch_n = end - begin;

            double batch_loss = 0.0;
            std::size_t batch_counted = 0;

            auto run_chunk = [&](std::size_t lo, std::size_t hi, std::vector<float>& grad,
                                 double& loss_out, std::size_t& counted_out) {
                double loss = 0.0;
                std::size_t counted = 0;
                for (std::size_t i = lo; i < hi; ++i) {
                    const TokenId* seg = corpus.segment(order[begin + i]);
                    auto [l, c] = model.loss_and_grad(seg, window, &grad);
                    loss += l;
                    counted += c;
                }
                loss_out = loss;
                counted_out = counted;
            };

            if (threads == 1 || batch_n < 2) {
                std::fill(grads[0].begin(), grads[0].end(), 0.0f);
                run_chunk(0, batch_n, grads[0], batch_loss, batch_counted);
            } else {
                const std::size_t per = (batch_n + threads - 1) / static_cast<std::size_t>(threads);
                std::vector<std::thread> pool;
                std::vector<double> losses(static_cast<std::size_t>(threads), 0.0);
                std::vector<std::size_t> counts(static_cast<std::size_t>(threads), 0);
                for (int t = 0; t < threads; ++t) {
                    const std::size_t lo = std::min(static_cast<std::size_t>(t) * per, batch_n);
                    const std::size_t hi = std::min(lo + per, batch_n);
                    std::fill(grads[static_cast<std::size_t>(t)].begin(),
                              grads[static_cast<std::size_t>(t)].end(), 0.0f);
                    pool.emplace_back(run_chunk, lo, hi,
                                      std::ref(grads[static_cast<std::size_t>(t)]),
                                      std::ref(losses[static_cast<std::size_t>(t)]),
                                      std::ref(counts[static_cast<std::size_t>(t)]));
                }
                for (auto& th : pool) th.join();
                // Reduce in thread order so the summation order is fixed.
                for (int t = 1; t < threads; ++t) {
                    const auto& src = grads[static_cast<std::size_t>(t)];
                    auto& dst = grads[0];
                    for (std::size_t i = 0; i < n_params; ++i) dst[i] += src[i];
                }
                for (int t = 0; t < threads; ++t) {
                    batch_loss += losses[static_cast<std::size_t>(t)];
                    batch_counted += counts[static_cast<std::size_t>(t)];
                }
            }

            if (!std::isfinite(batch_loss)) {
                raise(ErrorCode::NonFiniteLoss,
                      "epoch " + std::to_string(epoch + 1) + ", batch at segment " +
                          std::to_string(begin) + ": loss " + std::to_string(batch_loss));
            }
            if (batch_counted == 0) continue;

            const float inv = 1.0f / static_cast<float>(batch_counted);
            ++adam_t;
            const float b1 = static_cast<float>(options.beta1);
            const float b2 = static_cast<float>(options.beta2);
            const float corr1 =
                1.0f - std::pow(b1, static_cast<float>(adam_t));
            const float corr2 =
                1.0f - std::pow(b2, static_cast<float>(adam_t));
            const float lr = static_cast<float>(options.learning_rate);
            const float eps = static_cast<float>(options.epsilon);
            auto& params = model.params();
            const auto& g0 = grads[0];
            for (std::size_t i = 0; i < n_params; ++i) {
                const float g = g0[i] * inv;
                m1[i] = b1 * m1[i] + (1.0f - b1) * g;
                m2[i] = b2 * m2[i] + (1.0f - b2) * g * g;
                const float mhat = m1[i] / corr1;
                const float vhat = m2[i] / corr2;
                params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }

            epoch_loss += batch_loss;
            epoch_counted += batch_counted;
        }

        const double mean_loss =
            epoch_counted == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_counted);
        report.epoch_losses.push_back(mean_loss);
        report.epochs_run = epoch + 1;
        if (report.epoch_losses.size() >= 2) {
            const double prev = report.epoch_losses[report.epoch_losses.size() - 2];
            if (prev - mean_loss < options.early_stop_delta) {
                report.early_stopped = true;
                break;
            }
        }
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

GradCheckResult grad_check(double h, std::uint64_t seed) {
    const ModelConfig cfg = ModelConfig::custom(8, 1, 16, 6, seed);
    ModelT<double> model(cfg);

    // Two synthetic windows of grammar tokens; no pad targets, so every
    // position counts.
    std::mt19937_64 rng(seed ^ 0xabcdef);
    const std::size_t window = static_cast<std::size_t>(cfg.context_len) + 1;
    std::vector<TokenId> batch(2 * window);
    for (auto& id : batch) id = static_cast<TokenId>(rng() % 17);

    std::vector<double> analytic(model.params().size(), 0.0);
    for (int w = 0; w < 2; ++w) {
        model.loss_and_grad(batch.data() + w * window, window, &analytic);
    }

    auto loss_at = [&]() {
        double total = 0.0;
        for (int w = 0; w < 2; ++w) {
            total += model.loss_and_grad(batch.data() + w * window, window, nullptr).first;
        }
        return total;
    };

    double gmax = 0.0;
    for (double g : analytic) gmax = std::max(gmax, std::abs(g));
    const double floor = 1e-3 * std::max(1e-6, gmax);

    GradCheckResult result;
    auto& params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double plus = loss_at();
        params[i] = saved - h;
        const double minus = loss_at();
        params[i] = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double dev = std::abs(analytic[i] - numeric);
        result.l1_deviation += dev;
        const double rel = dev / std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'D', 'H', 'Y', 'C', 'K', 'P', 'T', '1'};

json config_to_json(const ModelConfig& cfg) {
    json doc;
    doc["capacity"] = cfg.capacity ? json(capacity_row(*cfg.capacity).label) : json(nullptr);
    doc["embed_dim"] = cfg.embed_dim;
    doc["n_heads"] = cfg.n_heads;
    doc["ff_dim"] = cfg.ff_dim;
    doc["context_len"] = cfg.context_len;
    doc["vocab_size"] = cfg.vocab_size;
    doc["seed"] = cfg.seed;
    return doc;
}

ModelConfig config_from_json(const json& doc) {
    ModelConfig cfg;
    if (doc.contains("capacity") && doc["capacity"].is_string()) {
        Capacity c;
        if (!parse_capacity(doc["capacity"].get<std::string>(), c)) {
            raise(ErrorCode::CorruptArtifact, "unknown capacity in checkpoint");
        }
        cfg.capacity = c;
    }
    cfg.embed_dim = doc.at("embed_dim").get<int>();
    cfg.n_heads = doc.at("n_heads").get<int>();
    cfg.ff_dim = doc.at("ff_dim").get<int>();
    cfg.context_len = doc.at("context_len").get<int>();
    cfg.vocab_size = doc.at("vocab_size").get<int>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path);
    out.write(kCkptMagic, sizeof(kCkptMagic));
    const std::string header = config_to_json(model.config()).dump();
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.params().size() * sizeof(float)));
    if (!out) raise(ErrorCode::IoError, "write failed for " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot read " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
        raise(ErrorCode::VersionMismatch, "bad checkpoint magic in " + path);
    }
    std::uint32_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len == 0 || header_len > (1u << 20)) {
        raise(ErrorCode::CorruptArtifact, "bad checkpoint header length");
    }
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) raise(ErrorCode::CorruptArtifact, "truncated checkpoint header");
    json doc = json::parse(header, nullptr, false);
    if (doc.is_discarded()) raise(ErrorCode::CorruptArtifact, "checkpoint header is not JSON");

    Model model(config_from_json(doc));
    in.read(reinterpret_cast<char*>(model.params().data()),
            static_cast<std::streamsize>(model.params().size() * sizeof(float)));
    if (!in || in.gcount() !=
                   static_cast<std::streamsize>(model.params().size() * sizeof(float))) {
        raise(ErrorCode::CorruptArtifact, "truncated checkpoint tensor data");
    }
    char excess;
    if (in.read(&excess, 1)) {
        raise(ErrorCode::CorruptArtifact, "trailing bytes in checkpoint");
    }
    return model;
}

template class ModelT<float>;
template class ModelT<double>;

}  // namespace dehydrator
