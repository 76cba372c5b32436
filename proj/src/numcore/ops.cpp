#include "tabppo/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tabppo::num {
namespace {

Tape& tape_of(Var a) {
    if (!a.tape) throw UsageError("Var is not attached to a tape");
    return *a.tape;
}

Tape& tape_of(Var a, Var b) {
    if (a.tape != b.tape || !a.tape) throw UsageError("operands recorded on different tapes");
    return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

std::size_t last_dim(const Tensor& t) {
    if (t.rank() == 0) throw DimensionError("tensor has no axes");
    return t.shape().back();
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[p * m + i];
            if (av == 0.0) continue;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename Forward, typename Derivative>
Var unary(Var x, Forward f, Derivative df) {
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, df](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        const Tensor& xv2 = tp.value(xi);
        const Tensor& yv = tp.value(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv2[i], yv[i]);
    });
}

}  // namespace

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("add", a.value(), b.value());
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
        for (auto in : {ai, bi}) {
            if (!tp.needs_grad(in)) continue;
            const Tensor& g = tp.grad(self);
            Tensor& gi = tp.grad(in);
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("sub", a.value(), b.value());
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.needs_grad(ai)) {
            Tensor& ga = tp.grad(ai);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.needs_grad(bi)) {
            Tensor& gb = tp.grad(bi);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("mul", a.value(), b.value());
    Tensor out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.needs_grad(ai)) {
            const Tensor& bv2 = tp.value(bi);
            Tensor& ga = tp.grad(ai);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
        }
        if (tp.needs_grad(bi)) {
            const Tensor& av2 = tp.value(ai);
            Tensor& gb = tp.grad(bi);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
        }
    });
}

Var scale(Var a, double factor) {
    return unary(a, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
    return unary(a, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Var add_bias(Var x, Var bias) {
    Tape& t = tape_of(x, bias);
    const auto& xv = x.value();
    const auto& bv = bias.value();
    const std::size_t n = last_dim(xv);
    if (bv.rank() != 1 || bv.size() != n) {
        throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match " +
                             shape_string(xv.shape()));
    }
    Tensor out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
    const auto xi = x.id, bi = bias.id;
    return t.record(std::move(out), {xi, bi}, [xi, bi, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        if (tp.needs_grad(xi)) {
            Tensor& gx = tp.grad(xi);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (tp.needs_grad(bi)) {
            Tensor& gb = tp.grad(bi);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
        }
    });
}

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [ai, bi, m, k, n](Tape& tp, std::size_t self) {
        const double* g = tp.grad(self).data().data();
        if (tp.needs_grad(ai)) {
            gemm_nt(g, tp.value(bi).data().data(), tp.grad(ai).data().data(), m, n, k);
        }
        if (tp.needs_grad(bi)) {
            gemm_tn(tp.value(ai).data().data(), g, tp.grad(bi).data().data(), k, m, n);
        }
    });
}

Var batched_matmul(Var a, Var b, bool transpose_b) {
    Tape& t = tape_of(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    const bool ok_rank = av.rank() == 3 && bv.rank() == 3 && av.dim(0) == bv.dim(0);
    const bool ok_inner = ok_rank && av.dim(2) == (transpose_b ? bv.dim(2) : bv.dim(1));
    if (!ok_inner) {
        throw DimensionError("batched_matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    const std::size_t groups = av.dim(0), m = av.dim(1), k = av.dim(2);
    const std::size_t n = transpose_b ? bv.dim(1) : bv.dim(2);
    Tensor out({groups, m, n});
    for (std::size_t gi = 0; gi < groups; ++gi) {
        const double* ap = av.data().data() + gi * m * k;
        const double* bp = bv.data().data() + gi * k * n;
        double* cp = out.data().data() + gi * m * n;
        if (transpose_b) {
            gemm_nt(ap, bp, cp, m, k, n);
        } else {
            gemm_nn(ap, bp, cp, m, k, n);
        }
    }
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [=](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const bool need_a = tp.needs_grad(ai), need_b = tp.needs_grad(bi);
        for (std::size_t gi = 0; gi < groups; ++gi) {
            const double* gp = g.data().data() + gi * m * n;
            const double* ap = tp.value(ai).data().data() + gi * m * k;
            const double* bp = tp.value(bi).data().data() + gi * k * n;
            if (need_a) {
                double* gap = tp.grad(ai).data().data() + gi * m * k;
                if (transpose_b) {
                    gemm_nn(gp, bp, gap, m, n, k);  // dA = dC * B, B is [n,k]
                } else {
                    gemm_nt(gp, bp, gap, m, n, k);  // dA = dC * B^T, B is [k,n]
                }
            }
            if (need_b) {
                double* gbp = tp.grad(bi).data().data() + gi * k * n;
                if (transpose_b) {
                    gemm_tn(gp, ap, gbp, n, m, k);  // dB[n,k] = dC^T * A
                } else {
                    gemm_tn(ap, gp, gbp, k, m, n);  // dB[k,n] = A^T * dC
                }
            }
        }
    });
}

Var relu(Var x) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
    return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var square(Var x) {
    return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var clamp(Var x, double lo, double hi) {
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var minimum(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("minimum", a.value(), b.value());
    const auto& av = a.value();
    const auto& bv = b.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
    const auto ai = a.id, bi = b.id;
    return t.record(std::move(out), {ai, bi}, [ai, bi](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& av2 = tp.value(ai);
        const Tensor& bv2 = tp.value(bi);
        // ties route the gradient to the first operand
        if (tp.needs_grad(ai)) {
            Tensor& ga = tp.grad(ai);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (av2[i] <= bv2[i]) ga[i] += g[i];
        }
        if (tp.needs_grad(bi)) {
            Tensor& gb = tp.grad(bi);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (av2[i] > bv2[i]) gb[i] += g[i];
        }
    });
}

std::vector<double> softmax_values(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("softmax of an empty vector");
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v)) throw NumericalError("softmax: non-finite logit");
        mx = std::max(mx, v);
    }
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

Var softmax(Var x) {
    Tape& t = tape_of(x);
    const auto& xv = x.value();
    const std::size_t n = last_dim(xv);
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < xv.size() / n; ++r) {
        auto row = softmax_values(xv.data().subspan(r * n, n));
        std::copy(row.begin(), row.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * n));
    }
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, n](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t r = 0; r < y.size() / n; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
        }
    });
}

Var log_softmax(Var x) {
    Tape& t = tape_of(x);
    const auto& xv = x.value();
    const std::size_t n = last_dim(xv);
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < xv.size() / n; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(xv[r * n + j])) throw NumericalError("log_softmax: non-finite logit");
            mx = std::max(mx, xv[r * n + j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += std::exp(xv[r * n + j] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] - lse;
    }
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, n](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t r = 0; r < y.size() / n; ++r) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
            for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
        }
    });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    Tape& t = tape_of(x, gain);
    tape_of(x, bias);
    const auto& xv = x.value();
    const std::size_t n = last_dim(xv);
    if (gain.value().shape() != Shape{n} || bias.value().shape() != Shape{n}) {
        throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(n) + "], got " +
                             shape_string(gain.value().shape()) + " and " + shape_string(bias.value().shape()));
    }
    const std::size_t rows = xv.size() / n;
    Tensor normalized(xv.shape());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += xv[r * n + j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (xv[r * n + j] - mu) * (xv[r * n + j] - mu);
        var /= static_cast<double>(n);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) normalized[r * n + j] = (xv[r * n + j] - mu) * inv_std[r];
    }
    const auto& gv = gain.value();
    const auto& bv = bias.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = normalized[i] * gv[i % n] + bv[i % n];

    const auto xi = x.id, gi = gain.id, bi = bias.id;
    return t.record(std::move(out), {xi, gi, bi},
                    [xi, gi, bi, n, rows, normalized = std::move(normalized),
                     inv_std = std::move(inv_std)](Tape& tp, std::size_t self) {
                        const Tensor& g = tp.grad(self);
                        const Tensor& gv2 = tp.value(gi);
                        if (tp.needs_grad(gi)) {
                            Tensor& gg = tp.grad(gi);
                            for (std::size_t i = 0; i < g.size(); ++i) gg[i % n] += g[i] * normalized[i];
                        }
                        if (tp.needs_grad(bi)) {
                            Tensor& gb = tp.grad(bi);
                            for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
                        }
                        if (!tp.needs_grad(xi)) return;
                        Tensor& gx = tp.grad(xi);
                        const double inv_n = 1.0 / static_cast<double>(n);
                        for (std::size_t r = 0; r < rows; ++r) {
                            double mean_d = 0.0, mean_dx = 0.0;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double d = g[r * n + j] * gv2[j];
                                mean_d += d;
                                mean_dx += d * normalized[r * n + j];
                            }
                            mean_d *= inv_n;
                            mean_dx *= inv_n;
                            for (std::size_t j = 0; j < n; ++j) {
                                const double d = g[r * n + j] * gv2[j];
                                gx[r * n + j] += inv_std[r] * (d - mean_d - normalized[r * n + j] * mean_dx);
                            }
                        }
                    });
}

Var sum(Var x) {
    Tape& t = tape_of(x);
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    const auto xi = x.id;
    return t.record(Tensor::scalar(total), {xi}, [xi](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const double g = tp.grad(self)[0];
        for (auto& v : tp.grad(xi).data()) v += g;
    });
}

Var mean(Var x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw DimensionError("mean of an empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var mean_axis1(Var x) {
    Tape& t = tape_of(x);
    const auto& xv = x.value();
    if (xv.rank() != 3) throw DimensionError("mean_axis1 expects rank 3, got " + shape_string(xv.shape()));
    const std::size_t a = xv.dim(0), b = xv.dim(1), c = xv.dim(2);
    Tensor out({a, c});
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t k = 0; k < c; ++k) out[i * c + k] += xv[(i * b + j) * c + k] * inv_b;
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, a, b, c, inv_b](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < b; ++j)
                for (std::size_t k = 0; k < c; ++k) gx[(i * b + j) * c + k] += g[i * c + k] * inv_b;
    });
}

Var gather_rows(Var table, std::vector<std::size_t> indices) {
    Tape& t = tape_of(table);
    const auto& tv = table.value();
    if (tv.rank() != 2) throw DimensionError("gather_rows expects a 2-D table, got " + shape_string(tv.shape()));
    const std::size_t rows = tv.dim(0), d = tv.dim(1);
    Tensor out({indices.size(), d});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows) {
            throw std::out_of_range("gather_rows: index " + std::to_string(indices[i]) + " >= " +
                                    std::to_string(rows));
        }
        std::copy_n(tv.data().begin() + static_cast<std::ptrdiff_t>(indices[i] * d), d,
                    out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    const auto ti = table.id;
    return t.record(std::move(out), {ti}, [ti, d, indices = std::move(indices)](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(ti)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gt = tp.grad(ti);
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (std::size_t k = 0; k < d; ++k) gt[indices[i] * d + k] += g[i * d + k];
    });
}

Var pick(Var x, std::vector<std::size_t> indices) {
    Tape& t = tape_of(x);
    const auto& xv = x.value();
    if (xv.rank() != 2 || xv.dim(0) != indices.size()) {
        throw DimensionError("pick: " + std::to_string(indices.size()) + " indices for " + shape_string(xv.shape()));
    }
    const std::size_t c = xv.dim(1);
    Tensor out({indices.size()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= c) throw std::out_of_range("pick: column index out of range");
        out[i] = xv[i * c + indices[i]];
    }
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, c, indices = std::move(indices)](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t i = 0; i < indices.size(); ++i) gx[i * c + indices[i]] += g[i];
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_cols of zero tensors");
    Tape& t = tape_of(parts[0]);
    const std::size_t rows = parts[0].value().dim(0);
    std::vector<std::size_t> ids, widths, offsets;
    std::size_t total = 0;
    for (const auto& p : parts) {
        tape_of(parts[0], p);
        const auto& pv = p.value();
        if (pv.rank() != 2 || pv.dim(0) != rows) {
            throw DimensionError("concat_cols: " + shape_string(pv.shape()) + " vs " +
                                 shape_string(parts[0].value().shape()));
        }
        ids.push_back(p.id);
        widths.push_back(pv.dim(1));
        offsets.push_back(total);
        total += pv.dim(1);
    }
    Tensor out({rows, total});
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& pv = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < widths[k]; ++j) out[r * total + offsets[k] + j] = pv[r * widths[k] + j];
    }
    return t.record(std::move(out), ids, [ids, widths, offsets, rows, total](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (!tp.needs_grad(ids[k])) continue;
            Tensor& gp = tp.grad(ids[k]);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < widths[k]; ++j) gp[r * widths[k] + j] += g[r * total + offsets[k] + j];
        }
    });
}

Var reshape(Var x, Shape shape) {
    Tape& t = tape_of(x);
    Tensor out = x.value().reshaped(std::move(shape));
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

Var swap_axes12(Var x) {
    Tape& t = tape_of(x);
    const auto& xv = x.value();
    if (xv.rank() != 4) throw DimensionError("swap_axes12 expects rank 4, got " + shape_string(xv.shape()));
    const std::size_t a = xv.dim(0), b = xv.dim(1), c = xv.dim(2), d = xv.dim(3);
    Tensor out({a, c, b, d});
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            for (std::size_t k = 0; k < c; ++k)
                std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(((i * b + j) * c + k) * d), d,
                            out.data().begin() + static_cast<std::ptrdiff_t>(((i * c + k) * b + j) * d));
    const auto xi = x.id;
    return t.record(std::move(out), {xi}, [xi, a, b, c, d](Tape& tp, std::size_t self) {
        if (!tp.needs_grad(xi)) return;
        const Tensor& g = tp.grad(self);
        Tensor& gx = tp.grad(xi);
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < b; ++j)
                for (std::size_t k = 0; k < c; ++k)
                    for (std::size_t l = 0; l < d; ++l)
                        gx[((i * b + j) * c + k) * d + l] += g[((i * c + k) * b + j) * d + l];
    });
}

}  // namespace tabppo::num
