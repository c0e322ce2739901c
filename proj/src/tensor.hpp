#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace domq {

// Dense row-major matrix of 64-bit reals. Scalars are 1x1, row vectors
// 1xN. Everything the model touches fits in rank 2.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  static Tensor row(std::vector<double> x) {
    Tensor t;
    t.rows = 1;
    t.cols = static_cast<int>(x.size());
    t.v = std::move(x);
    return t;
  }

  std::size_t size() const { return v.size(); }
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  double item() const { return v.at(0); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  bool operator==(const Tensor&) const = default;
};

// Named learnable tensor. Gradients accumulate across backward calls
// until zero_grad.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, int r, int c)
      : name(std::move(n)), value(r, c), grad(r, c) {}
  void zero_grad() { grad.zero(); }
};

class Tape;

// Handle to a node on a tape.
class Val {
 public:
  Val() = default;
  int rows() const;
  int cols() const;
  const Tensor& tensor() const;
  double item() const { return tensor().item(); }
  bool valid() const { return tape_ != nullptr; }

  // plumbing for the op implementations
  int id() const { return id_; }
  Tape* tape_ptr() const { return tape_; }

 private:
  friend class Tape;
  Val(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records forward ops and their backward rules; one backward pass per
// recording. Reusable: backward() clears the recording, reset() discards
// one without differentiating.
class Tape {
 public:
  struct Node {
    Tensor own;
    const Tensor* ext = nullptr;  // leaf bound to external storage
    Parameter* bound = nullptr;   // leaf bound to a parameter
    Tensor grad;                  // sized lazily during backward
    std::function<void(Tape&)> back;
    bool needs_grad = false;
    const Tensor& val() const { return ext ? *ext : own; }
  };

  // leaves
  Val constant(Tensor t);
  Val constant_view(const Tensor* t);  // caller keeps *t alive
  Val use(Parameter& p);               // memoized per tape

  // Differentiates a scalar node, accumulates into Parameter::grad of
  // every trainable parameter used, then clears the recording.
  void backward(Val loss);
  void reset();

  std::size_t node_count() const { return nodes_.size(); }

  // --- internal plumbing shared by the op implementations ---
  const Tensor& val(int id) const { return nodes_[id].val(); }
  Tensor& grad_buf(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool has_grad(int id) const { return !nodes_[id].grad.v.empty(); }
  Val make(Tensor value, bool needs_grad, std::function<void(Tape&)> back);

 private:
  friend class Val;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- forward ops (each records its backward rule) ----

// matrix product a*b
Val matmul(Val a, Val b);
// a * b^T; the layout used by linear layers with [out x in] weights
Val matmul_nt(Val a, Val b);

// elementwise a+b / a-b; b may also be a 1xC row (broadcast over rows)
// or a 1x1 scalar
Val add(Val a, Val b);
Val sub(Val a, Val b);
// elementwise a*b; b may also be an Rx1 column (broadcast over cols) or
// a 1x1 scalar
Val mul(Val a, Val b);
Val scale(Val a, double c);

Val relu(Val a);
Val sigmoid(Val a);
Val tanh_op(Val a);

Val concat_cols(const std::vector<Val>& parts);
Val concat_rows(const std::vector<Val>& parts);
Val slice_rows(Val a, int r0, int r1);

Val softmax_rows(Val a);
// column-wise max over all rows -> 1xC; ties route gradient to the
// lowest row index
Val maxpool_rows(Val a);
// row-wise max over columns -> Rx1
Val rowmax(Val a);
Val rowsum(Val a);
Val sum_all(Val a);
Val mean_all(Val a);

// cos(a_i, b_j) for every row pair -> RxG; rows with (near-)zero norm
// produce 0 and pass no gradient
Val cosine_rows(Val a, Val b);
// convenience for two single rows
Val cosine(Val a, Val b);

// (a-b)^2 elementwise
Val squared_error(Val a, Val b);

// y[dst] += x[src] over a directed edge list (rows)
Val edge_sum(Val x, const std::vector<std::pair<int, int>>& dst_src, int out_rows);

// ---- segmented ops over row-partitioned batches ----
// offsets has S+1 entries; segment s owns rows [offsets[s], offsets[s+1])

Val segment_maxpool(Val a, std::vector<int> offsets);
Val segment_sum(Val a, std::vector<int> offsets);
// expand SxC to rowsxC by repeating each segment's row
Val segment_broadcast(Val a, std::vector<int> offsets);
// softmax over each segment of an Rx1 column
Val segment_softmax(Val a, std::vector<int> offsets);

// rows of `table` selected by idx; idx[i] == -1 takes row i of *fallback
// instead (frozen, no gradient). Row 0 of the table never receives
// gradient (reserved padding row).
Val embed(Tape& tape, Parameter& table, const std::vector<int>& idx,
          const Tensor* fallback = nullptr);

// GRU vertex update h' = (1-z) h + z tanh(...) built from primitive ops
struct GruParams {
  Parameter wz, uz, bz;  // update gate
  Parameter wr, ur, br;  // reset gate
  Parameter wh, uh, bh;  // candidate
  GruParams() = default;
  GruParams(const std::string& prefix, int dim);
  std::vector<Parameter*> params();
};
Val gru_cell(Val h, Val m, GruParams& p);

}  // namespace domq
