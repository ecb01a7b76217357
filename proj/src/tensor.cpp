#include "disco/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace disco {

namespace {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (const int e : shape) {
        if (e <= 0) throw std::invalid_argument("tensor shape extents must be positive");
        n *= static_cast<size_t>(e);
    }
    return n;
}

[[noreturn]] void shape_error(const char* op) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor Tensor::make(std::vector<int> shape, std::vector<double> data, bool requires_grad,
                    bool tracked) {
    const size_t n = shape_numel(shape);
    if (data.size() != n) throw std::invalid_argument("tensor data length does not match shape");
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    t.impl_->tracked = tracked || requires_grad;
    if (t.impl_->tracked) t.impl_->grad.assign(n, 0.0);
    return t;
}

Tensor make_op_output(std::vector<int> shape, bool tracked) {
    Tensor t;
    t.impl_ = std::make_shared<Tensor::Impl>();
    const size_t count = shape_numel(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(count, 0.0);
    t.impl_->tracked = tracked;
    if (tracked) t.impl_->grad.assign(count, 0.0);
    return t;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const size_t n = shape_numel(shape);
    return make(std::move(shape), std::vector<double>(n, 0.0), requires_grad, requires_grad);
}

Tensor Tensor::constant(std::vector<int> shape, std::vector<double> data) {
    return make(std::move(shape), std::move(data), false, false);
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::param(std::vector<int> shape, std::vector<double> data) {
    return make(std::move(shape), std::move(data), true, true);
}

Tensor Tensor::xavier(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& v : data) v = rng.uniform(-limit, limit);
    return param({rows, cols}, std::move(data));
}

int Tensor::rows() const {
    if (rank() != 2) throw std::logic_error("rows(): tensor is not rank-2");
    return impl_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw std::logic_error("cols(): tensor is not rank-2");
    return impl_->shape[1];
}

std::vector<double>& Tensor::grad() {
    if (!tracked()) throw std::logic_error("grad(): tensor has no gradient buffer");
    return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!tracked()) throw std::logic_error("grad(): tensor has no gradient buffer");
    return impl_->grad;
}

std::vector<double>& Tensor::grad_mut() const {
    if (!tracked()) throw std::logic_error("grad_mut(): tensor has no gradient buffer");
    return impl_->grad;
}

double Tensor::value() const {
    if (!is_scalar()) throw std::logic_error("value(): tensor is not scalar");
    return impl_->data[0];
}

void Tensor::zero_grad() {
    if (tracked()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return constant(impl_->shape, impl_->data); }

void Tensor::check_finite(const char* what) const {
    for (const double v : impl_->data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("non-finite value in ") + what);
        }
    }
}

void Graph::backward(const Tensor& loss) {
    if (consumed_) throw std::logic_error("backward on a stale graph (already consumed)");
    if (!loss.is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
    if (!loss.tracked()) throw std::invalid_argument("backward: loss does not require gradients");
    consumed_ = true;
    loss.grad_mut()[0] = 1.0;
    for (size_t i = tape_.size(); i-- > 0;) {
        tape_[i]();
    }
}

// ---- ops -------------------------------------------------------------------

namespace {

Tensor binary_elementwise(Graph& g, const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double), double (*dfa)(double, double),
                          double (*dfb)(double, double)) {
    if (a.shape() != b.shape()) shape_error(name);
    const bool tracked = a.tracked() || b.tracked();
    Tensor out = make_op_output(a.shape(), tracked);
    const size_t n = a.size();
    for (size_t i = 0; i < n; ++i) out.data()[i] = fwd(a.data()[i], b.data()[i]);
    out.check_finite(name);
    if (tracked) {
        g.record([a, b, out, dfa, dfb]() {
            const size_t n = out.size();
            if (a.tracked()) {
                for (size_t i = 0; i < n; ++i)
                    a.grad_mut()[i] +=
                        out.grad()[i] * dfa(a.data()[i], b.data()[i]);
            }
            if (b.tracked()) {
                for (size_t i = 0; i < n; ++i)
                    b.grad_mut()[i] +=
                        out.grad()[i] * dfb(a.data()[i], b.data()[i]);
            }
        });
    }
    return out;
}

}  // namespace

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    // Normalize to (m,k)x(k,n); rank-1 operands add an implicit unit dim.
    int m = 0, k = 0, n = 0;
    bool a_vec = false, b_vec = false;
    if (a.rank() == 2) {
        m = a.shape()[0];
        k = a.shape()[1];
    } else if (a.rank() == 1) {
        m = 1;
        k = a.shape()[0];
        a_vec = true;
    } else {
        shape_error("matmul");
    }
    if (b.rank() == 2) {
        if (b.shape()[0] != k) shape_error("matmul");
        n = b.shape()[1];
    } else if (b.rank() == 1) {
        if (b.shape()[0] != k) shape_error("matmul");
        n = 1;
        b_vec = true;
    } else {
        shape_error("matmul");
    }
    if (a_vec && b_vec) throw std::invalid_argument("matmul: use dot() for two vectors");

    std::vector<int> out_shape;
    if (a_vec) {
        out_shape = {n};
    } else if (b_vec) {
        out_shape = {m};
    } else {
        out_shape = {m, n};
    }
    const bool tracked = a.tracked() || b.tracked();
    Tensor out = make_op_output(std::move(out_shape), tracked);

    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* od = out.data().data();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = ad[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            const double* brow = bd + static_cast<size_t>(p) * n;
            double* orow = od + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    out.check_finite("matmul");

    if (tracked) {
        g.record([a, b, out, m, k, n]() {
            const double* ad = a.data().data();
            const double* bd = b.data().data();
            const double* og = out.grad().data();
            if (a.tracked()) {
                // dA = dOut * B^T
                double* ag = a.grad_mut().data();
                for (int i = 0; i < m; ++i) {
                    for (int j = 0; j < n; ++j) {
                        const double gv = og[static_cast<size_t>(i) * n + j];
                        if (gv == 0.0) continue;
                        const double* brow = bd + j;
                        double* arow = ag + static_cast<size_t>(i) * k;
                        for (int p = 0; p < k; ++p)
                            arow[p] += gv * brow[static_cast<size_t>(p) * n];
                    }
                }
            }
            if (b.tracked()) {
                // dB = A^T * dOut
                double* bg = b.grad_mut().data();
                for (int i = 0; i < m; ++i) {
                    for (int p = 0; p < k; ++p) {
                        const double av = ad[static_cast<size_t>(i) * k + p];
                        if (av == 0.0) continue;
                        const double* grow = og + static_cast<size_t>(i) * n;
                        double* brow = bg + static_cast<size_t>(p) * n;
                        for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor dot(Graph& g, const Tensor& a, const Tensor& b) {
    if (a.rank() != 1 || b.rank() != 1 || a.size() != b.size()) shape_error("dot");
    const bool tracked = a.tracked() || b.tracked();
    Tensor out = make_op_output({1}, tracked);
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    out.data()[0] = acc;
    out.check_finite("dot");
    if (tracked) {
        g.record([a, b, out]() {
            const double gv = out.grad()[0];
            if (a.tracked())
                for (size_t i = 0; i < a.size(); ++i)
                    a.grad_mut()[i] += gv * b.data()[i];
            if (b.tracked())
                for (size_t i = 0; i < b.size(); ++i)
                    b.grad_mut()[i] += gv * a.data()[i];
        });
    }
    return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        g, a, b, "add", [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        g, a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        g, a, b, "mul", [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(Graph& g, const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        g, a, b, "div", [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor add_rows(Graph& g, const Tensor& m, const Tensor& row) {
    if (m.rank() != 2 || row.rank() != 1 || m.cols() != row.shape()[0]) shape_error("add_rows");
    const int rows = m.rows(), cols = m.cols();
    const bool tracked = m.tracked() || row.tracked();
    Tensor out = make_op_output({rows, cols}, tracked);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out.data()[static_cast<size_t>(i) * cols + j] =
                m.data()[static_cast<size_t>(i) * cols + j] + row.data()[j];
    out.check_finite("add_rows");
    if (tracked) {
        g.record([m, row, out, rows, cols]() {
            if (m.tracked()) {
                for (size_t i = 0; i < out.size(); ++i)
                    m.grad_mut()[i] += out.grad()[i];
            }
            if (row.tracked()) {
                for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < cols; ++j)
                        row.grad_mut()[j] +=
                            out.grad()[static_cast<size_t>(i) * cols + j];
            }
        });
    }
    return out;
}

Tensor add_scalar(Graph& g, const Tensor& a, const Tensor& s) {
    if (!s.is_scalar()) throw std::invalid_argument("add_scalar: s must be scalar");
    const bool tracked = a.tracked() || s.tracked();
    Tensor out = make_op_output(a.shape(), tracked);
    const double sv = s.data()[0];
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + sv;
    out.check_finite("add_scalar");
    if (tracked) {
        g.record([a, s, out]() {
            if (a.tracked())
                for (size_t i = 0; i < a.size(); ++i) a.grad_mut()[i] += out.grad()[i];
            if (s.tracked()) {
                double acc = 0.0;
                for (size_t i = 0; i < out.size(); ++i) acc += out.grad()[i];
                s.grad_mut()[0] += acc;
            }
        });
    }
    return out;
}

Tensor neg(Graph& g, const Tensor& a) { return scale(g, a, -1.0); }

Tensor scale(Graph& g, const Tensor& a, double c) {
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * c;
    out.check_finite("scale");
    if (a.tracked()) {
        g.record([a, out, c]() {
            for (size_t i = 0; i < a.size(); ++i)
                a.grad_mut()[i] += out.grad()[i] * c;
        });
    }
    return out;
}

Tensor relu(Graph& g, const Tensor& a) {
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    out.check_finite("relu");
    if (a.tracked()) {
        g.record([a, out]() {
            for (size_t i = 0; i < a.size(); ++i)
                if (a.data()[i] > 0.0) a.grad_mut()[i] += out.grad()[i];
        });
    }
    return out;
}

Tensor sigmoid(Graph& g, const Tensor& a) {
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) {
        const double x = a.data()[i];
        out.data()[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                 : std::exp(x) / (1.0 + std::exp(x));
    }
    out.check_finite("sigmoid");
    if (a.tracked()) {
        g.record([a, out]() {
            for (size_t i = 0; i < a.size(); ++i) {
                const double s = out.data()[i];
                a.grad_mut()[i] += out.grad()[i] * s * (1.0 - s);
            }
        });
    }
    return out;
}

Tensor exp(Graph& g, const Tensor& a) {
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = std::exp(a.data()[i]);
    out.check_finite("exp");
    if (a.tracked()) {
        g.record([a, out]() {
            for (size_t i = 0; i < a.size(); ++i)
                a.grad_mut()[i] += out.grad()[i] * out.data()[i];
        });
    }
    return out;
}

Tensor log(Graph& g, const Tensor& a) {
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] <= 0.0) throw std::domain_error("log: non-positive argument");
        out.data()[i] = std::log(a.data()[i]);
    }
    out.check_finite("log");
    if (a.tracked()) {
        g.record([a, out]() {
            for (size_t i = 0; i < a.size(); ++i)
                a.grad_mut()[i] += out.grad()[i] / a.data()[i];
        });
    }
    return out;
}

Tensor clip(Graph& g, const Tensor& a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clip: lo > hi");
    Tensor out = make_op_output(a.shape(), a.tracked());
    for (size_t i = 0; i < a.size(); ++i) {
        const double x = a.data()[i];
        out.data()[i] = x < lo ? lo : (x > hi ? hi : x);
    }
    out.check_finite("clip");
    if (a.tracked()) {
        g.record([a, out, lo, hi]() {
            for (size_t i = 0; i < a.size(); ++i) {
                const double x = a.data()[i];
                if (x >= lo && x <= hi) a.grad_mut()[i] += out.grad()[i];
            }
        });
    }
    return out;
}

Tensor softmax_row(Graph& g, const Tensor& logits, const std::vector<uint8_t>* mask) {
    if (logits.rank() != 1) shape_error("softmax_row");
    const size_t n = logits.size();
    if (mask && mask->size() != n)
        throw std::invalid_argument("softmax_row: mask length mismatch");

    double max_logit = -std::numeric_limits<double>::infinity();
    size_t live = 0;
    for (size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) continue;
        const double x = logits.data()[i];
        if (!std::isfinite(x)) throw std::runtime_error("softmax_row: non-finite logit");
        ++live;
        if (x > max_logit) max_logit = x;
    }
    if (live == 0) throw std::invalid_argument("softmax_row: empty attention support");

    Tensor out = make_op_output(logits.shape(), logits.tracked());
    double denom = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (mask && !(*mask)[i]) {
            out.data()[i] = 0.0;
            continue;
        }
        const double e = std::exp(logits.data()[i] - max_logit);
        out.data()[i] = e;
        denom += e;
    }
    for (size_t i = 0; i < n; ++i) out.data()[i] /= denom;
    out.check_finite("softmax_row");

    if (logits.tracked()) {
        std::vector<uint8_t> mask_copy = mask ? *mask : std::vector<uint8_t>();
        g.record([logits, out, mask_copy]() {
            const size_t n = out.size();
            double weighted = 0.0;
            for (size_t i = 0; i < n; ++i) weighted += out.data()[i] * out.grad()[i];
            for (size_t i = 0; i < n; ++i) {
                if (!mask_copy.empty() && !mask_copy[i]) continue;
                logits.grad_mut()[i] +=
                    out.data()[i] * (out.grad()[i] - weighted);
            }
        });
    }
    return out;
}

Tensor concat(Graph& g, std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no parts");
    size_t total = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
        if (p.rank() != 1) shape_error("concat");
        total += p.size();
        tracked = tracked || p.tracked();
    }
    Tensor out = make_op_output({static_cast<int>(total)}, tracked);
    size_t off = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data().begin(), p.data().end(), out.data().begin() + off);
        off += p.size();
    }
    out.check_finite("concat");
    if (tracked) {
        std::vector<Tensor> held(parts.begin(), parts.end());
        g.record([held, out]() {
            size_t off = 0;
            for (const Tensor& p : held) {
                if (p.tracked()) {
                    for (size_t i = 0; i < p.size(); ++i)
                        p.grad_mut()[i] += out.grad()[off + i];
                }
                off += p.size();
            }
        });
    }
    return out;
}

Tensor tile_rows(Graph& g, const Tensor& v, int m) {
    if (v.rank() != 1) shape_error("tile_rows");
    if (m <= 0) throw std::invalid_argument("tile_rows: row count must be positive");
    const int n = v.shape()[0];
    Tensor out = make_op_output({m, n}, v.tracked());
    for (int i = 0; i < m; ++i)
        std::copy(v.data().begin(), v.data().end(), out.data().begin() + static_cast<size_t>(i) * n);
    if (v.tracked()) {
        g.record([v, out, m, n]() {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    v.grad_mut()[j] += out.grad()[static_cast<size_t>(i) * n + j];
        });
    }
    return out;
}

Tensor concat_cols(Graph& g, std::span<const Tensor> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    const int rows = parts.front().rank() == 2 ? parts.front().rows() : -1;
    if (rows < 0) shape_error("concat_cols");
    int total = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
        if (p.rank() != 2 || p.rows() != rows) shape_error("concat_cols");
        total += p.cols();
        tracked = tracked || p.tracked();
    }
    Tensor out = make_op_output({rows, total}, tracked);
    int off = 0;
    for (const Tensor& p : parts) {
        const int w = p.cols();
        for (int i = 0; i < rows; ++i)
            std::copy(p.data().begin() + static_cast<size_t>(i) * w,
                      p.data().begin() + static_cast<size_t>(i + 1) * w,
                      out.data().begin() + static_cast<size_t>(i) * total + off);
        off += w;
    }
    out.check_finite("concat_cols");
    if (tracked) {
        std::vector<Tensor> held(parts.begin(), parts.end());
        g.record([held, out, rows, total]() {
            int off = 0;
            for (const Tensor& p : held) {
                const int w = p.cols();
                if (p.tracked()) {
                    for (int i = 0; i < rows; ++i)
                        for (int j = 0; j < w; ++j)
                            p.grad_mut()[static_cast<size_t>(i) * w + j] +=
                                out.grad()[static_cast<size_t>(i) * total + off + j];
                }
                off += w;
            }
        });
    }
    return out;
}

std::vector<Tensor> chunk(Graph& g, const Tensor& v, int pieces) {
    if (v.rank() != 1) shape_error("chunk");
    if (pieces <= 0 || v.shape()[0] % pieces != 0)
        throw std::invalid_argument("chunk: length not divisible by piece count");
    const int len = v.shape()[0] / pieces;
    std::vector<Tensor> out;
    out.reserve(pieces);
    for (int p = 0; p < pieces; ++p) {
        Tensor piece = make_op_output({len}, v.tracked());
        for (int i = 0; i < len; ++i)
            piece.data()[i] = v.data()[static_cast<size_t>(p) * len + i];
        if (v.tracked()) {
            const int off = p * len;
            g.record([v, piece, off, len]() {
                for (int i = 0; i < len; ++i)
                    v.grad_mut()[off + i] += piece.grad()[i];
            });
        }
        out.push_back(std::move(piece));
    }
    return out;
}

std::vector<Tensor> chunk_cols(Graph& g, const Tensor& m, int pieces) {
    if (m.rank() != 2) shape_error("chunk_cols");
    if (pieces <= 0 || m.cols() % pieces != 0)
        throw std::invalid_argument("chunk_cols: columns not divisible by piece count");
    const int rows = m.rows(), cols = m.cols(), w = m.cols() / pieces;
    std::vector<Tensor> out;
    out.reserve(pieces);
    for (int p = 0; p < pieces; ++p) {
        Tensor piece = make_op_output({rows, w}, m.tracked());
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < w; ++j)
                piece.data()[static_cast<size_t>(i) * w + j] =
                    m.data()[static_cast<size_t>(i) * cols + p * w + j];
        if (m.tracked()) {
            const int off = p * w;
            g.record([m, piece, rows, cols, w, off]() {
                for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < w; ++j)
                        m.grad_mut()[static_cast<size_t>(i) * cols + off + j] +=
                            piece.grad()[static_cast<size_t>(i) * w + j];
            });
        }
        out.push_back(std::move(piece));
    }
    return out;
}

Tensor stack_rows(Graph& g, std::span<const Tensor> rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
    const int n = rows.front().rank() == 1 ? rows.front().shape()[0] : -1;
    if (n < 0) shape_error("stack_rows");
    bool tracked = false;
    for (const Tensor& r : rows) {
        if (r.rank() != 1 || r.shape()[0] != n) shape_error("stack_rows");
        tracked = tracked || r.tracked();
    }
    const int m = static_cast<int>(rows.size());
    Tensor out = make_op_output({m, n}, tracked);
    for (int i = 0; i < m; ++i)
        std::copy(rows[i].data().begin(), rows[i].data().end(),
                  out.data().begin() + static_cast<size_t>(i) * n);
    out.check_finite("stack_rows");
    if (tracked) {
        std::vector<Tensor> held(rows.begin(), rows.end());
        g.record([held, out, n]() {
            for (size_t i = 0; i < held.size(); ++i) {
                if (!held[i].tracked()) continue;
                for (int j = 0; j < n; ++j)
                    held[i].grad_mut()[j] += out.grad()[i * n + j];
            }
        });
    }
    return out;
}

Tensor slice_row(Graph& g, const Tensor& m, int row) {
    if (m.rank() != 2) shape_error("slice_row");
    if (row < 0 || row >= m.rows()) throw std::out_of_range("slice_row: row out of range");
    const int cols = m.cols();
    Tensor out = make_op_output({cols}, m.tracked());
    for (int j = 0; j < cols; ++j) out.data()[j] = m.data()[static_cast<size_t>(row) * cols + j];
    if (m.tracked()) {
        g.record([m, out, row, cols]() {
            for (int j = 0; j < cols; ++j)
                m.grad_mut()[static_cast<size_t>(row) * cols + j] +=
                    out.grad()[j];
        });
    }
    return out;
}

Tensor gather_rows(Graph& g, const Tensor& table, const std::vector<int>& idx) {
    if (table.rank() != 2) shape_error("gather_rows");
    const int cols = table.cols();
    for (const int i : idx)
        if (i < -1 || i >= table.rows())
            throw std::out_of_range("gather_rows: index out of range");
    Tensor out = make_op_output({static_cast<int>(idx.size()), cols}, table.tracked());
    for (size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0) continue;  // -1: zero row
        std::copy(table.data().begin() + static_cast<size_t>(idx[r]) * cols,
                  table.data().begin() + static_cast<size_t>(idx[r] + 1) * cols,
                  out.data().begin() + r * cols);
    }
    out.check_finite("gather_rows");
    if (table.tracked()) {
        g.record([table, out, idx, cols]() {
            for (size_t r = 0; r < idx.size(); ++r) {
                if (idx[r] < 0) continue;
                for (int j = 0; j < cols; ++j)
                    table.grad_mut()[static_cast<size_t>(idx[r]) * cols + j] +=
                        out.grad()[r * cols + j];
            }
        });
    }
    return out;
}

Tensor row_sum(Graph& g, const Tensor& m) {
    if (m.rank() != 2) shape_error("row_sum");
    const int rows = m.rows(), cols = m.cols();
    Tensor out = make_op_output({rows}, m.tracked());
    for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += m.data()[static_cast<size_t>(i) * cols + j];
        out.data()[i] = acc;
    }
    out.check_finite("row_sum");
    if (m.tracked()) {
        g.record([m, out, rows, cols]() {
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                    m.grad_mut()[static_cast<size_t>(i) * cols + j] +=
                        out.grad()[i];
        });
    }
    return out;
}

Tensor sum_all(Graph& g, const Tensor& a) {
    Tensor out = make_op_output({1}, a.tracked());
    double acc = 0.0;
    for (const double v : a.data()) acc += v;
    out.data()[0] = acc;
    out.check_finite("sum_all");
    if (a.tracked()) {
        g.record([a, out]() {
            const double gv = out.grad()[0];
            for (size_t i = 0; i < a.size(); ++i) a.grad_mut()[i] += gv;
        });
    }
    return out;
}

Tensor mean_all(Graph& g, const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    Tensor out = make_op_output({1}, a.tracked());
    double acc = 0.0;
    for (const double v : a.data()) acc += v;
    out.data()[0] = acc * inv;
    out.check_finite("mean_all");
    if (a.tracked()) {
        g.record([a, out, inv]() {
            const double gv = out.grad()[0] * inv;
            for (size_t i = 0; i < a.size(); ++i) a.grad_mut()[i] += gv;
        });
    }
    return out;
}

Tensor average(Graph& g, std::span<const Tensor> ts) {
    if (ts.empty()) throw std::invalid_argument("average: no inputs");
    const std::vector<int> shape = ts.front().shape();
    bool tracked = false;
    for (const Tensor& t : ts) {
        if (t.shape() != shape) shape_error("average");
        tracked = tracked || t.tracked();
    }
    const double inv = 1.0 / static_cast<double>(ts.size());
    Tensor out = make_op_output(shape, tracked);
    for (const Tensor& t : ts)
        for (size_t i = 0; i < t.size(); ++i) out.data()[i] += t.data()[i] * inv;
    out.check_finite("average");
    if (tracked) {
        std::vector<Tensor> held(ts.begin(), ts.end());
        g.record([held, out, inv]() {
            for (const Tensor& t : held) {
                if (!t.tracked()) continue;
                for (size_t i = 0; i < t.size(); ++i)
                    t.grad_mut()[i] += out.grad()[i] * inv;
            }
        });
    }
    return out;
}

}  // namespace disco
