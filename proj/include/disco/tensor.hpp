#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "disco/rng.hpp"

namespace disco {

// Dense row-major tensor of 64-bit floats participating in a reverse-mode
// differentiation graph. Copying a Tensor shares storage (handle semantics).
//
// Three roles, distinguished by flags:
//   - parameters:    requires_grad() && tracked()   (leaves the optimizer owns)
//   - intermediates: tracked() only                 (grad buffers for backprop)
//   - constants:     neither                        (inputs, no tape records)
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor constant(std::vector<int> shape, std::vector<double> data);
    static Tensor scalar(double v);
    // Trainable leaf with the given initial values.
    static Tensor param(std::vector<int> shape, std::vector<double> data);
    // Trainable matrix, Xavier-uniform init.
    static Tensor xavier(int rows, int cols, Rng& rng);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    size_t size() const { return impl_->data.size(); }
    bool is_scalar() const { return size() == 1; }
    int rows() const;
    int cols() const;

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    // Handles share storage, so backward closures holding const copies may
    // still accumulate into the gradient buffer.
    std::vector<double>& grad_mut() const;

    bool tracked() const { return impl_ && impl_->tracked; }
    bool requires_grad() const { return impl_ && impl_->requires_grad; }

    double value() const;  // scalar tensors only
    double at(int i) const { return impl_->data[static_cast<size_t>(i)]; }
    double at(int r, int c) const { return impl_->data[static_cast<size_t>(r) * cols() + c]; }

    void zero_grad();
    // Untracked deep copy of the current values.
    Tensor detach() const;

    // Identity of the underlying storage (used to key optimizer state).
    const void* id() const { return impl_.get(); }

    void check_finite(const char* what) const;

private:
    struct Impl {
        std::vector<int> shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
        bool tracked = false;
    };
    std::shared_ptr<Impl> impl_;

    static Tensor make(std::vector<int> shape, std::vector<double> data, bool requires_grad,
                       bool tracked);
    friend Tensor make_op_output(std::vector<int> shape, bool tracked);
};

// Dynamic tape rebuilt each forward pass. Ops append one backward closure per
// node in creation order, which is a valid topological order; backward()
// replays them once in reverse.
class Graph {
public:
    void record(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

    // Seeds d(loss)/d(loss) = 1 and propagates through the tape. The loss must
    // be a tracked scalar. A second backward on the same tape is an error.
    void backward(const Tensor& loss);

    void reset() {
        tape_.clear();
        consumed_ = false;
    }

    size_t node_count() const { return tape_.size(); }
    bool consumed() const { return consumed_; }

private:
    std::vector<std::function<void()>> tape_;
    bool consumed_ = false;
};

// ---- differentiable operations -------------------------------------------
// Every op validates shapes, writes a finite-checked output, and (when any
// input is tracked) records its backward closure on the graph.

// (m,k)x(k,n)->(m,n); (k)x(k,n)->(n); (m,k)x(k)->(m); (k)x(k) is dot().
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
Tensor dot(Graph& g, const Tensor& a, const Tensor& b);
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
// M (m,n) + row vector (n), broadcast over rows.
Tensor add_rows(Graph& g, const Tensor& m, const Tensor& row);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
// a + s broadcast over every element; s is a scalar tensor.
Tensor add_scalar(Graph& g, const Tensor& a, const Tensor& s);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor div(Graph& g, const Tensor& a, const Tensor& b);
Tensor neg(Graph& g, const Tensor& a);
Tensor scale(Graph& g, const Tensor& a, double c);
Tensor relu(Graph& g, const Tensor& a);
Tensor sigmoid(Graph& g, const Tensor& a);
Tensor exp(Graph& g, const Tensor& a);
Tensor log(Graph& g, const Tensor& a);
// Clamp to [lo, hi]; gradient passes through the interior, zero at the rails.
Tensor clip(Graph& g, const Tensor& a, double lo, double hi);

// Numerically stabilized masked softmax over a length-n vector. mask[i] != 0
// marks a live position; masked positions get probability exactly 0. All
// positions masked is an error ("empty attention support").
Tensor softmax_row(Graph& g, const Tensor& logits, const std::vector<uint8_t>* mask = nullptr);

Tensor concat(Graph& g, std::span<const Tensor> parts);
// Repeat a length-n vector as m identical rows -> (m, n).
Tensor tile_rows(Graph& g, const Tensor& v, int m);
// Concatenate matrices with equal row counts along columns.
Tensor concat_cols(Graph& g, std::span<const Tensor> parts);
std::vector<Tensor> chunk(Graph& g, const Tensor& v, int pieces);
// Split an (m,n) matrix into `pieces` column blocks of n/pieces columns each.
std::vector<Tensor> chunk_cols(Graph& g, const Tensor& m, int pieces);
Tensor stack_rows(Graph& g, std::span<const Tensor> rows);
Tensor slice_row(Graph& g, const Tensor& m, int row);
// Row gather; index -1 yields a zero row (used for masked history slots).
Tensor gather_rows(Graph& g, const Tensor& table, const std::vector<int>& idx);
Tensor row_sum(Graph& g, const Tensor& m);
Tensor mean_all(Graph& g, const Tensor& a);
Tensor sum_all(Graph& g, const Tensor& a);
// Elementwise mean of equal-shape tensors.
Tensor average(Graph& g, std::span<const Tensor> ts);

}  // namespace disco
