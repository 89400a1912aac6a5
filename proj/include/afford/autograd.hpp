#pragma once

// Reverse-mode autodiff on 2D tensors, templated on the scalar type:
// float for training throughput, double for finite-difference checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace afford::ag {

inline unsigned long long mix64(unsigned long long x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic normal sampler (Box-Muller over splitmix64); identical
/// streams on every platform, which keeps seeded runs bit-reproducible.
class InitRng {
public:
    explicit InitRng(unsigned long long seed) : state_(mix64(seed ^ 0x9e2full)) {}
    double uniform() {
        state_ = mix64(state_);
        double u = (state_ >> 11) * 0x1.0p-53;
        return u <= 0.0 ? 0x1.0p-53 : u;
    }
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    unsigned long long state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

template <class T>
struct Tensor2 {
    int rows = 0, cols = 0;
    std::vector<T> v;

    Tensor2() = default;
    Tensor2(int r, int c, T fill = T(0)) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    std::size_t size() const { return v.size(); }
    T* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const T* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
    T& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    T at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// ---------------------------------------------------------------------------
// gemm kernels. Loop orders keep the innermost stride contiguous; OpenMP
// splits rows of the output (or of the accumulated operand for _tn) so no
// two threads write the same cacheline and results stay deterministic.

template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n) {
    // c[m,n] += a[m,k] * b[k,n]
#ifdef AFFORD_USE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<long long>(m) * k * n > 262144)
#endif
    for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<std::size_t>(i) * n;
        const T* ai = a + static_cast<std::size_t>(i) * k;
        for (int l = 0; l < k; ++l) {
            const T av = ai[l];
            const T* bl = b + static_cast<std::size_t>(l) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
        }
    }
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n) {
    // c[m,n] += a[m,k] * b[n,k]^T. Four output columns at a time so the dot
    // reductions run as independent chains (and simd-reduce cleanly).
#ifdef AFFORD_USE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<long long>(m) * k * n > 262144)
#endif
    for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<std::size_t>(i) * k;
        T* ci = c + static_cast<std::size_t>(i) * n;
        int j = 0;
        for (; j + 4 <= n; j += 4) {
            const T* b0 = b + static_cast<std::size_t>(j) * k;
            const T* b1 = b0 + k;
            const T* b2 = b1 + k;
            const T* b3 = b2 + k;
            T acc0 = T(0), acc1 = T(0), acc2 = T(0), acc3 = T(0);
#ifdef AFFORD_USE_OPENMP
#pragma omp simd reduction(+ : acc0, acc1, acc2, acc3)
#endif
            for (int l = 0; l < k; ++l) {
                const T av = ai[l];
                acc0 += av * b0[l];
                acc1 += av * b1[l];
                acc2 += av * b2[l];
                acc3 += av * b3[l];
            }
            ci[j] += acc0;
            ci[j + 1] += acc1;
            ci[j + 2] += acc2;
            ci[j + 3] += acc3;
        }
        for (; j < n; ++j) {
            const T* bj = b + static_cast<std::size_t>(j) * k;
            T acc = T(0);
#ifdef AFFORD_USE_OPENMP
#pragma omp simd reduction(+ : acc)
#endif
            for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
            ci[j] += acc;
        }
    }
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n) {
    // c[k,n] += a[m,k]^T * b[m,n]
#ifdef AFFORD_USE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<long long>(m) * k * n > 262144)
#endif
    for (int l = 0; l < k; ++l) {
        T* cl = c + static_cast<std::size_t>(l) * n;
        for (int i = 0; i < m; ++i) {
            const T av = a[static_cast<std::size_t>(i) * k + l];
            if (av == T(0)) continue;
            const T* bi = b + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) cl[j] += av * bi[j];
        }
    }
}

// ---------------------------------------------------------------------------

template <class T>
struct Param {
    std::string name;
    Tensor2<T> value;
    Tensor2<T> grad;
    Tensor2<T> adam_m, adam_v;  // lazily sized by the optimizer
};

enum class Init { Zero, One, Normal02 };

template <class T>
class ParamStore {
public:
    int add(const std::string& name, int rows, int cols, Init init, InitRng& rng) {
        Param<T> p;
        p.name = name;
        p.value = Tensor2<T>(rows, cols);
        p.grad = Tensor2<T>(rows, cols);
        switch (init) {
            case Init::Zero: break;
            case Init::One:
                for (auto& x : p.value.v) x = T(1);
                break;
            case Init::Normal02:
                for (auto& x : p.value.v) x = static_cast<T>(rng.normal() * 0.02);
                break;
        }
        params_.push_back(std::move(p));
        return static_cast<int>(params_.size()) - 1;
    }

    Param<T>& at(int i) { return params_[i]; }
    const Param<T>& at(int i) const { return params_[i]; }
    int count() const { return static_cast<int>(params_.size()); }

    void zero_grad() {
        for (auto& p : params_) std::fill(p.grad.v.begin(), p.grad.v.end(), T(0));
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }

private:
    std::vector<Param<T>> params_;
};

struct Var {
    int idx = -1;
    int rows = 0, cols = 0;
    bool valid() const { return idx >= 0; }
};

template <class T>
class Tape {
public:
    explicit Tape(ParamStore<T>* store) : store_(store) {}

    const Tensor2<T>& value(Var v) const { return nodes_[v.idx].val; }
    Tensor2<T>& grad(Var v) { return nodes_[v.idx].grad; }

    Var input(Tensor2<T> t) {
        return push(std::move(t), {}, nullptr);
    }

    Var param(int param_index) {
        Param<T>& p = store_->at(param_index);
        Var out = push(p.value, {}, nullptr);  // copy in; grads flow back to the store
        ParamStore<T>* store = store_;
        nodes_[out.idx].back = [store, param_index](Tape& tape, int self) {
            Param<T>& pp = store->at(param_index);
            const Tensor2<T>& g = tape.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i) pp.grad.v[i] += g.v[i];
        };
        return out;
    }

    Var matmul(Var a, Var b) {
        check(a.cols == b.rows, "matmul: inner dims");
        Tensor2<T> out(a.rows, b.cols);
        gemm_nn(val(a).v.data(), val(b).v.data(), out.v.data(), a.rows, a.cols, b.cols);
        Var o = push(std::move(out), {a, b}, nullptr);
        nodes_[o.idx].back = [a, b](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            gemm_nt(g.v.data(), t.val(b).v.data(), t.gref(a).v.data(), a.rows, b.cols, a.cols);
            gemm_tn(t.val(a).v.data(), g.v.data(), t.gref(b).v.data(), a.rows, a.cols, b.cols);
        };
        return o;
    }

    /// a[m,k] * b[n,k]^T -> [m,n]
    Var matmul_nt(Var a, Var b) {
        check(a.cols == b.cols, "matmul_nt: inner dims");
        Tensor2<T> out(a.rows, b.rows);
        gemm_nt(val(a).v.data(), val(b).v.data(), out.v.data(), a.rows, a.cols, b.rows);
        Var o = push(std::move(out), {a, b}, nullptr);
        nodes_[o.idx].back = [a, b](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;  // [m,n]
            gemm_nn(g.v.data(), t.val(b).v.data(), t.gref(a).v.data(), a.rows, b.rows, a.cols);
            gemm_tn(g.v.data(), t.val(a).v.data(), t.gref(b).v.data(), a.rows, b.rows, b.cols);
        };
        return o;
    }

    Var add(Var a, Var b) {
        check(a.rows == b.rows && a.cols == b.cols, "add: shape");
        Tensor2<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += val(b).v[i];
        Var o = push(std::move(out), {a, b}, nullptr);
        nodes_[o.idx].back = [a, b](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(a).v[i] += g.v[i];
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(b).v[i] += g.v[i];
        };
        return o;
    }

    /// x[n,d] + row[1,d] broadcast over rows
    Var add_row(Var x, Var row) {
        check(row.rows == 1 && row.cols == x.cols, "add_row: shape");
        Tensor2<T> out = val(x);
        for (int r = 0; r < x.rows; ++r) {
            T* o = out.row(r);
            const T* b = val(row).v.data();
            for (int c = 0; c < x.cols; ++c) o[c] += b[c];
        }
        Var o = push(std::move(out), {x, row}, nullptr);
        nodes_[o.idx].back = [x, row](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(x).v[i] += g.v[i];
            T* gr = t.gref(row).v.data();
            for (int r = 0; r < g.rows; ++r) {
                const T* grow = g.row(r);
                for (int c = 0; c < g.cols; ++c) gr[c] += grow[c];
            }
        };
        return o;
    }

    Var mul(Var a, Var b) {
        check(a.rows == b.rows && a.cols == b.cols, "mul: shape");
        Tensor2<T> out = val(a);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= val(b).v[i];
        Var o = push(std::move(out), {a, b}, nullptr);
        nodes_[o.idx].back = [a, b](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(a).v[i] += g.v[i] * t.val(b).v[i];
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(b).v[i] += g.v[i] * t.val(a).v[i];
        };
        return o;
    }

    Var scale(Var a, double s) {
        Tensor2<T> out = val(a);
        for (auto& x : out.v) x = static_cast<T>(x * s);
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a, s](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i)
                t.gref(a).v[i] += static_cast<T>(g.v[i] * s);
        };
        return o;
    }

    // tanh-form gelu; the backward differentiates the same approximation
    static T gelu_fwd(T x) {
        const T u = T(0.7978845608028654) * (x + T(0.044715) * x * x * x);
        return T(0.5) * x * (T(1) + std::tanh(u));
    }
    static T gelu_bwd(T x) {
        const T u = T(0.7978845608028654) * (x + T(0.044715) * x * x * x);
        const T th = std::tanh(u);
        const T du = T(0.7978845608028654) * (T(1) + T(3) * T(0.044715) * x * x);
        return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
    }

    Var gelu(Var a) {
        Tensor2<T> out = val(a);
        for (auto& x : out.v) x = gelu_fwd(x);
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            const Tensor2<T>& x = t.val(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                t.gref(a).v[i] += g.v[i] * gelu_bwd(x.v[i]);
        };
        return o;
    }

    Var sigmoid(Var a) {
        Tensor2<T> out = val(a);
        for (auto& x : out.v) x = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            const Tensor2<T>& y = t.nodes_[self].val;
            for (std::size_t i = 0; i < g.size(); ++i)
                t.gref(a).v[i] += g.v[i] * y.v[i] * (T(1) - y.v[i]);
        };
        return o;
    }

    /// Row-wise layernorm with gain/bias rows.
    Var layernorm(Var x, Var gain, Var bias, double eps = 1e-5) {
        check(gain.rows == 1 && gain.cols == x.cols, "layernorm: gain shape");
        check(bias.rows == 1 && bias.cols == x.cols, "layernorm: bias shape");
        const int n = x.rows, d = x.cols;
        Tensor2<T> out(n, d);
        Tensor2<T> xhat(n, d), inv_sigma(n, 1);
        for (int r = 0; r < n; ++r) {
            const T* xr = val(x).row(r);
            double mu = 0.0;
            for (int c = 0; c < d; ++c) mu += xr[c];
            mu /= d;
            double var = 0.0;
            for (int c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
            var /= d;
            const double inv = 1.0 / std::sqrt(var + eps);
            inv_sigma.at(r, 0) = static_cast<T>(inv);
            T* xh = xhat.row(r);
            T* o = out.row(r);
            for (int c = 0; c < d; ++c) {
                xh[c] = static_cast<T>((xr[c] - mu) * inv);
                o[c] = xh[c] * val(gain).v[c] + val(bias).v[c];
            }
        }
        Var o = push(std::move(out), {x, gain, bias}, nullptr);
        nodes_[o.idx].back = [x, gain, bias, xh = std::move(xhat),
                              is = std::move(inv_sigma)](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            const int n = x.rows, d = x.cols;
            for (int r = 0; r < n; ++r) {
                const T* grow = g.row(r);
                const T* xhr = xh.row(r);
                T* gx = t.gref(x).row(r);
                T* gg = t.gref(gain).v.data();
                T* gb = t.gref(bias).v.data();
                double sum_gy = 0.0, sum_gyx = 0.0;
                for (int c = 0; c < d; ++c) {
                    const double gy = static_cast<double>(grow[c]) * t.val(gain).v[c];
                    sum_gy += gy;
                    sum_gyx += gy * xhr[c];
                    gg[c] += grow[c] * xhr[c];
                    gb[c] += grow[c];
                }
                const double inv = is.at(r, 0);
                for (int c = 0; c < d; ++c) {
                    const double gy = static_cast<double>(grow[c]) * t.val(gain).v[c];
                    gx[c] += static_cast<T>((gy - sum_gy / d - xhr[c] * sum_gyx / d) * inv);
                }
            }
        };
        return o;
    }

    /// Row softmax; when causal, entry (i, j) with j > i + offset is masked.
    Var softmax_rows(Var a, bool causal, int offset = 0) {
        const int n = a.rows, m = a.cols;
        Tensor2<T> out(n, m);
        for (int r = 0; r < n; ++r) {
            const T* xr = val(a).row(r);
            T* o = out.row(r);
            const int limit = causal ? std::min(m - 1, r + offset) : m - 1;
            check(limit >= 0, "softmax_rows: fully masked row");
            T mx = xr[0];
            for (int c = 1; c <= limit; ++c) mx = std::max(mx, xr[c]);
            T z = T(0);
            for (int c = 0; c <= limit; ++c) {
                o[c] = std::exp(xr[c] - mx);
                z += o[c];
            }
            const T inv = T(1) / z;
            for (int c = 0; c <= limit; ++c) o[c] *= inv;
            for (int c = limit + 1; c < m; ++c) o[c] = T(0);
        }
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            const Tensor2<T>& y = t.nodes_[self].val;
            for (int r = 0; r < g.rows; ++r) {
                const T* grow = g.row(r);
                const T* yrow = y.row(r);
                T* ga = t.gref(a).row(r);
                double dot = 0.0;
                for (int c = 0; c < g.cols; ++c) dot += static_cast<double>(grow[c]) * yrow[c];
                for (int c = 0; c < g.cols; ++c)
                    ga[c] += static_cast<T>((static_cast<double>(grow[c]) - dot) * yrow[c]);
            }
        };
        return o;
    }

    /// Gather rows of an embedding table parameter node.
    Var embedding(const std::vector<int>& ids, Var table) {
        Tensor2<T> out(static_cast<int>(ids.size()), table.cols);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            check(ids[r] >= 0 && ids[r] < table.rows, "embedding: id out of range");
            const T* src = val(table).row(ids[r]);
            std::copy(src, src + table.cols, out.row(static_cast<int>(r)));
        }
        Var o = push(std::move(out), {table}, nullptr);
        nodes_[o.idx].back = [ids, table](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t r = 0; r < ids.size(); ++r) {
                T* dst = t.gref(table).row(ids[r]);
                const T* src = g.row(static_cast<int>(r));
                for (int c = 0; c < table.cols; ++c) dst[c] += src[c];
            }
        };
        return o;
    }

    Var concat_rows(const std::vector<Var>& parts) {
        check(!parts.empty(), "concat_rows: empty");
        const int cols = parts[0].cols;
        int rows = 0;
        for (const auto& p : parts) {
            check(p.cols == cols, "concat_rows: col mismatch");
            rows += p.rows;
        }
        Tensor2<T> out(rows, cols);
        int at = 0;
        for (const auto& p : parts) {
            std::copy(val(p).v.begin(), val(p).v.end(), out.row(at));
            at += p.rows;
        }
        Var o = push(std::move(out), parts, nullptr);
        nodes_[o.idx].back = [parts](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            int at = 0;
            for (const auto& p : parts) {
                T* dst = t.gref(p).v.data();
                const T* src = g.row(at);
                for (std::size_t i = 0; i < t.gref(p).size(); ++i) dst[i] += src[i];
                at += p.rows;
            }
        };
        return o;
    }

    Var concat_cols(const std::vector<Var>& parts) {
        check(!parts.empty(), "concat_cols: empty");
        const int rows = parts[0].rows;
        int cols = 0;
        for (const auto& p : parts) {
            check(p.rows == rows, "concat_cols: row mismatch");
            cols += p.cols;
        }
        Tensor2<T> out(rows, cols);
        int at = 0;
        for (const auto& p : parts) {
            for (int r = 0; r < rows; ++r)
                std::copy(val(p).row(r), val(p).row(r) + p.cols, out.row(r) + at);
            at += p.cols;
        }
        Var o = push(std::move(out), parts, nullptr);
        nodes_[o.idx].back = [parts](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            int at = 0;
            for (const auto& p : parts) {
                for (int r = 0; r < g.rows; ++r) {
                    T* dst = t.gref(p).row(r);
                    const T* src = g.row(r) + at;
                    for (int c = 0; c < p.cols; ++c) dst[c] += src[c];
                }
                at += p.cols;
            }
        };
        return o;
    }

    Var slice_rows(Var a, int r0, int r1) {
        check(0 <= r0 && r0 < r1 && r1 <= a.rows, "slice_rows: range");
        Tensor2<T> out(r1 - r0, a.cols);
        std::copy(val(a).row(r0), val(a).row(r0) + out.size(), out.v.data());
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a, r0](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            T* dst = t.gref(a).row(r0);
            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.v[i];
        };
        return o;
    }

    Var slice_cols(Var a, int c0, int c1) {
        check(0 <= c0 && c0 < c1 && c1 <= a.cols, "slice_cols: range");
        Tensor2<T> out(a.rows, c1 - c0);
        for (int r = 0; r < a.rows; ++r)
            std::copy(val(a).row(r) + c0, val(a).row(r) + c1, out.row(r));
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a, c0](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (int r = 0; r < g.rows; ++r) {
                T* dst = t.gref(a).row(r) + c0;
                const T* src = g.row(r);
                for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
            }
        };
        return o;
    }

    /// Reorders rows by a permutation; output row r = input row perm[r].
    Var gather_rows(Var a, std::vector<int> perm) {
        Tensor2<T> out(static_cast<int>(perm.size()), a.cols);
        for (std::size_t r = 0; r < perm.size(); ++r) {
            check(perm[r] >= 0 && perm[r] < a.rows, "gather_rows: index");
            std::copy(val(a).row(perm[r]), val(a).row(perm[r]) + a.cols,
                      out.row(static_cast<int>(r)));
        }
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a, perm = std::move(perm)](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t r = 0; r < perm.size(); ++r) {
                T* dst = t.gref(a).row(perm[r]);
                const T* src = g.row(static_cast<int>(r));
                for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
            }
        };
        return o;
    }

    /// Same buffer, new shape (row-major order preserved).
    Var reshape(Var a, int rows, int cols) {
        check(static_cast<long long>(rows) * cols == static_cast<long long>(a.rows) * a.cols,
              "reshape: size");
        Tensor2<T> out(rows, cols);
        out.v = val(a).v;
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a](Tape& t, int self) {
            const Tensor2<T>& g = t.nodes_[self].grad;
            for (std::size_t i = 0; i < g.size(); ++i) t.gref(a).v[i] += g.v[i];
        };
        return o;
    }

    Var mean_all(Var a) {
        Tensor2<T> out(1, 1);
        double acc = 0.0;
        for (const auto& x : val(a).v) acc += x;
        out.v[0] = static_cast<T>(acc / val(a).size());
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a](Tape& t, int self) {
            const T g = t.nodes_[self].grad.v[0];
            const T inv = static_cast<T>(1.0 / t.val(a).size());
            for (auto& x : t.gref(a).v) x += g * inv;
        };
        return o;
    }

    /// y = a + s * b for scalar nodes (loss combination).
    Var axpy_scalar(Var a, Var b, double s) {
        check(a.rows == 1 && a.cols == 1 && b.rows == 1 && b.cols == 1, "axpy_scalar: scalars");
        Tensor2<T> out(1, 1);
        out.v[0] = val(a).v[0] + static_cast<T>(s) * val(b).v[0];
        Var o = push(std::move(out), {a, b}, nullptr);
        nodes_[o.idx].back = [a, b, s](Tape& t, int self) {
            const T g = t.nodes_[self].grad.v[0];
            t.gref(a).v[0] += g;
            t.gref(b).v[0] += static_cast<T>(g * s);
        };
        return o;
    }

    /// Custom scalar-output op: forward value plus caller-supplied gradient
    /// w.r.t. the single input (computed at forward time).
    Var custom_scalar(Var a, double value, std::vector<T> grad_wrt_a) {
        check(grad_wrt_a.size() == val(a).size(), "custom_scalar: grad size");
        Tensor2<T> out(1, 1);
        out.v[0] = static_cast<T>(value);
        Var o = push(std::move(out), {a}, nullptr);
        nodes_[o.idx].back = [a, g0 = std::move(grad_wrt_a)](Tape& t, int self) {
            const T g = t.nodes_[self].grad.v[0];
            for (std::size_t i = 0; i < g0.size(); ++i) t.gref(a).v[i] += g * g0[i];
        };
        return o;
    }

    void backward(Var loss) {
        check(loss.rows == 1 && loss.cols == 1, "backward: loss must be scalar");
        for (auto& n : nodes_)
            if (n.grad.size() != n.val.size()) n.grad = Tensor2<T>(n.val.rows, n.val.cols);
        nodes_[loss.idx].grad.v[0] = T(1);
        for (int i = loss.idx; i >= 0; --i)
            if (nodes_[i].back) nodes_[i].back(*this, i);
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor2<T> val;
        Tensor2<T> grad;
        std::function<void(Tape&, int)> back;
    };

    static void check(bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("autograd: ") + msg);
    }

    const Tensor2<T>& val(Var v) const { return nodes_[v.idx].val; }
    Tensor2<T>& gref(Var v) { return nodes_[v.idx].grad; }

    Var push(Tensor2<T> t, const std::vector<Var>&, std::function<void(Tape&, int)> back) {
        Node n;
        n.val = std::move(t);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        Var v;
        v.idx = static_cast<int>(nodes_.size()) - 1;
        v.rows = nodes_.back().val.rows;
        v.cols = nodes_.back().val.cols;
        return v;
    }

    ParamStore<T>* store_;
    std::vector<Node> nodes_;
};

}  // namespace afford::ag
