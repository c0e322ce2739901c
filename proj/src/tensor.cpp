#include "tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace domq {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;

CMap cmap(const Tensor& t) { return CMap(t.v.data(), t.rows, t.cols); }
Map mmap(Tensor& t) { return Map(t.v.data(), t.rows, t.cols); }

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows) + "x" +
                      std::to_string(a.cols) + " vs " + std::to_string(b.rows) +
                      "x" + std::to_string(b.cols));
}

Tape& tp(Val v) {
  if (!v.valid()) throw Error(ErrorCode::invalid_argument, "uninitialized Val");
  return *v.tape_ptr();
}

}  // namespace

int Val::rows() const { return tensor().rows; }
int Val::cols() const { return tensor().cols; }
const Tensor& Val::tensor() const { return tape_->val(id_); }

Val Tape::constant(Tensor t) {
  nodes_.push_back(Node{std::move(t), nullptr, nullptr, {}, nullptr, false});
  return Val(this, static_cast<int>(nodes_.size()) - 1);
}

Val Tape::constant_view(const Tensor* t) {
  nodes_.push_back(Node{{}, t, nullptr, {}, nullptr, false});
  return Val(this, static_cast<int>(nodes_.size()) - 1);
}

Val Tape::use(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Val(this, it->second);
  nodes_.push_back(Node{{}, &p.value, &p, {}, nullptr, p.trainable});
  int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Val(this, id);
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.v.empty()) n.grad = Tensor(n.val().rows, n.val().cols);
  return n.grad;
}

Val Tape::make(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), nullptr, nullptr, {}, std::move(back), needs_grad});
  return Val(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Val loss) {
  if (loss.tape_ptr() != this) throw Error(ErrorCode::invalid_argument, "loss from another tape");
  const Tensor& lv = val(loss.id());
  if (lv.rows != 1 || lv.cols != 1)
    throw Error(ErrorCode::not_scalar, "backward requires a scalar loss");
  if (!nodes_[loss.id()].needs_grad)
    throw Error(ErrorCode::invalid_argument, "loss does not depend on any trainable parameter");
  grad_buf(loss.id()).v[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.back || !n.needs_grad || n.grad.v.empty()) continue;
    n.back(*this);
  }
  for (auto& [p, id] : param_nodes_) {
    Node& n = nodes_[id];
    if (n.grad.v.empty() || !n.bound || !n.bound->trainable) continue;
    Parameter* par = n.bound;
    if (par->grad.v.empty()) par->grad = Tensor(par->value.rows, par->value.cols);
    for (std::size_t k = 0; k < n.grad.v.size(); ++k) par->grad.v[k] += n.grad.v[k];
  }
  reset();
}

void Tape::reset() {
  nodes_.clear();
  param_nodes_.clear();
}

// ---------------------------------------------------------------- matmul

Val matmul(Val a, Val b) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  if (A.cols != B.rows) shape_fail("matmul", A, B);
  Tensor out(A.rows, B.cols);
  mmap(out).noalias() = cmap(A) * cmap(B);
  bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
  int ia = a.id(), ib = b.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ia, ib, io](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    if (t.needs_grad(ia)) mmap(t.grad_buf(ia)).noalias() += cmap(g) * cmap(t.val(ib)).transpose();
    if (t.needs_grad(ib)) mmap(t.grad_buf(ib)).noalias() += cmap(t.val(ia)).transpose() * cmap(g);
  });
}

Val matmul_nt(Val a, Val b) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  if (A.cols != B.cols) shape_fail("matmul_nt", A, B);
  Tensor out(A.rows, B.rows);
  mmap(out).noalias() = cmap(A) * cmap(B).transpose();
  bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
  int ia = a.id(), ib = b.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ia, ib, io](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    if (t.needs_grad(ia)) mmap(t.grad_buf(ia)).noalias() += cmap(g) * cmap(t.val(ib));
    if (t.needs_grad(ib)) mmap(t.grad_buf(ib)).noalias() += cmap(g).transpose() * cmap(t.val(ia));
  });
}

// ------------------------------------------------------------ elementwise

namespace {

enum class BCast { none, row, col, scalar };

BCast classify(const Tensor& a, const Tensor& b, const char* op, bool allow_col) {
  if (a.same_shape(b)) return BCast::none;
  if (b.rows == 1 && b.cols == 1) return BCast::scalar;
  if (b.rows == 1 && b.cols == a.cols) return BCast::row;
  if (allow_col && b.cols == 1 && b.rows == a.rows) return BCast::col;
  shape_fail(op, a, b);
}

double bval(const Tensor& b, BCast m, int r, int c) {
  switch (m) {
    case BCast::none: return b.at(r, c);
    case BCast::row: return b.at(0, c);
    case BCast::col: return b.at(r, 0);
    case BCast::scalar: return b.v[0];
  }
  return 0;
}

void baccum(Tensor& gb, BCast m, int r, int c, double g) {
  switch (m) {
    case BCast::none: gb.at(r, c) += g; break;
    case BCast::row: gb.at(0, c) += g; break;
    case BCast::col: gb.at(r, 0) += g; break;
    case BCast::scalar: gb.v[0] += g; break;
  }
}

Val addsub(Val a, Val b, double sign, const char* name) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  BCast m = classify(A, B, name, false);
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c) + sign * bval(B, m, r, c);
  bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
  int ia = a.id(), ib = b.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ia, ib, io, m, sign](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    if (t.needs_grad(ia)) {
      Tensor& ga = t.grad_buf(ia);
      for (std::size_t k = 0; k < g.v.size(); ++k) ga.v[k] += g.v[k];
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad_buf(ib);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) baccum(gb, m, r, c, sign * g.at(r, c));
    }
  });
}

}  // namespace

Val add(Val a, Val b) { return addsub(a, b, 1.0, "add"); }
Val sub(Val a, Val b) { return addsub(a, b, -1.0, "sub"); }

Val mul(Val a, Val b) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  BCast m = classify(A, B, "mul", true);
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c) * bval(B, m, r, c);
  bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
  int ia = a.id(), ib = b.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ia, ib, io, m](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    const Tensor& A = t.val(ia);
    const Tensor& B = t.val(ib);
    if (t.needs_grad(ia)) {
      Tensor& ga = t.grad_buf(ia);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(r, c) += g.at(r, c) * bval(B, m, r, c);
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad_buf(ib);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) baccum(gb, m, r, c, g.at(r, c) * A.at(r, c));
    }
  });
}

Val scale(Val a, double c) {
  Tape& t = tp(a);
  Tensor out = a.tensor();
  for (double& x : out.v) x *= c;
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, c](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (std::size_t k = 0; k < g.v.size(); ++k) ga.v[k] += c * g.v[k];
  });
}

namespace {

template <typename F, typename DF>
Val unary(Val a, F f, DF df_from_y, const char*) {
  Tape& t = tp(a);
  Tensor out = a.tensor();
  for (double& x : out.v) x = f(x);
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, df_from_y](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.grad_buf(ia);
    for (std::size_t k = 0; k < g.v.size(); ++k) ga.v[k] += g.v[k] * df_from_y(y.v[k]);
  });
}

}  // namespace

Val relu(Val a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double y) { return y > 0 ? 1.0 : 0.0; }, "relu");
}

Val sigmoid(Val a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double y) { return y * (1.0 - y); }, "sigmoid");
}

Val tanh_op(Val a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double y) { return 1.0 - y * y; }, "tanh");
}

// ----------------------------------------------------------- concat/slice

Val concat_cols(const std::vector<Val>& parts) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "concat_cols: no inputs");
  Tape& t = tp(parts[0]);
  int rows = parts[0].rows();
  int cols = 0;
  bool ng = false;
  for (const Val& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].tensor(), p.tensor());
    cols += p.cols();
    ng = ng || t.needs_grad(p.id());
  }
  Tensor out(rows, cols);
  int off = 0;
  std::vector<int> ids, offs;
  for (const Val& p : parts) {
    const Tensor& x = p.tensor();
    for (int r = 0; r < rows; ++r)
      std::copy_n(&x.v[static_cast<std::size_t>(r) * x.cols], x.cols,
                  &out.v[static_cast<std::size_t>(r) * cols + off]);
    ids.push_back(p.id());
    offs.push_back(off);
    off += x.cols;
  }
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ids, offs, io](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.needs_grad(ids[i])) continue;
      Tensor& gp = t.grad_buf(ids[i]);
      for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < gp.cols; ++c) gp.at(r, c) += g.at(r, offs[i] + c);
    }
  });
}

Val concat_rows(const std::vector<Val>& parts) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "concat_rows: no inputs");
  Tape& t = tp(parts[0]);
  int cols = parts[0].cols();
  int rows = 0;
  bool ng = false;
  for (const Val& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].tensor(), p.tensor());
    rows += p.rows();
    ng = ng || t.needs_grad(p.id());
  }
  Tensor out(rows, cols);
  int off = 0;
  std::vector<int> ids, offs;
  for (const Val& p : parts) {
    const Tensor& x = p.tensor();
    std::copy(x.v.begin(), x.v.end(), out.v.begin() + static_cast<std::size_t>(off) * cols);
    ids.push_back(p.id());
    offs.push_back(off);
    off += x.rows;
  }
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ids, offs, io](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!t.needs_grad(ids[i])) continue;
      Tensor& gp = t.grad_buf(ids[i]);
      for (int r = 0; r < gp.rows; ++r)
        for (int c = 0; c < g.cols; ++c) gp.at(r, c) += g.at(offs[i] + r, c);
    }
  });
}

Val slice_rows(Val a, int r0, int r1) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  if (r0 < 0 || r1 > A.rows || r0 >= r1)
    throw Error(ErrorCode::invalid_argument, "slice_rows: bad range");
  Tensor out(r1 - r0, A.cols);
  std::copy(A.v.begin() + static_cast<std::size_t>(r0) * A.cols,
            A.v.begin() + static_cast<std::size_t>(r1) * A.cols, out.v.begin());
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, r0](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) ga.at(r0 + r, c) += g.at(r, c);
  });
}

// -------------------------------------------------------------- reductions

Val softmax_rows(Val a) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  Tensor out(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    double mx = A.at(r, 0);
    for (int c = 1; c < A.cols; ++c) mx = std::max(mx, A.at(r, c));
    double s = 0;
    for (int c = 0; c < A.cols; ++c) {
      double e = std::exp(A.at(r, c) - mx);
      out.at(r, c) = e;
      s += e;
    }
    for (int c = 0; c < A.cols; ++c) out.at(r, c) /= s;
  }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.grad_buf(ia);
    for (int r = 0; r < g.rows; ++r) {
      double dot = 0;
      for (int c = 0; c < g.cols; ++c) dot += g.at(r, c) * y.at(r, c);
      for (int c = 0; c < g.cols; ++c) ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
    }
  });
}

Val maxpool_rows(Val a) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  if (A.rows < 1) throw Error(ErrorCode::empty_page, "maxpool_rows: no rows");
  Tensor out(1, A.cols);
  std::vector<int> arg(A.cols, 0);
  for (int c = 0; c < A.cols; ++c) {
    double best = A.at(0, c);
    for (int r = 1; r < A.rows; ++r)
      if (A.at(r, c) > best) {
        best = A.at(r, c);
        arg[c] = r;
      }
    out.at(0, c) = best;
  }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, arg](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int c = 0; c < g.cols; ++c) ga.at(arg[c], c) += g.at(0, c);
  });
}

Val rowmax(Val a) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  if (A.cols < 1) throw ShapeMismatch("rowmax: no columns");
  Tensor out(A.rows, 1);
  std::vector<int> arg(A.rows, 0);
  for (int r = 0; r < A.rows; ++r) {
    double best = A.at(r, 0);
    for (int c = 1; c < A.cols; ++c)
      if (A.at(r, c) > best) {
        best = A.at(r, c);
        arg[r] = c;
      }
    out.at(r, 0) = best;
  }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, arg](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int r = 0; r < g.rows; ++r) ga.at(r, arg[r]) += g.at(r, 0);
  });
}

Val rowsum(Val a) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  Tensor out(A.rows, 1);
  for (int r = 0; r < A.rows; ++r) {
    double s = 0;
    for (int c = 0; c < A.cols; ++c) s += A.at(r, c);
    out.at(r, 0) = s;
  }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int r = 0; r < ga.rows; ++r)
      for (int c = 0; c < ga.cols; ++c) ga.at(r, c) += g.at(r, 0);
  });
}

namespace {

Val full_reduce(Val a, bool mean) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  double s = 0;
  for (double x : A.v) s += x;
  double denom = mean ? static_cast<double>(A.size()) : 1.0;
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(Tensor::scalar(s / denom), t.needs_grad(ia), [ia, io, denom](Tape& t) {
    if (!t.needs_grad(ia)) return;
    double g = t.grad_buf(io).v[0] / denom;
    Tensor& ga = t.grad_buf(ia);
    for (double& x : ga.v) x += g;
  });
}

}  // namespace

Val sum_all(Val a) { return full_reduce(a, false); }
Val mean_all(Val a) { return full_reduce(a, true); }

// ----------------------------------------------------------------- cosine

Val cosine_rows(Val a, Val b) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  if (A.cols != B.cols) shape_fail("cosine_rows", A, B);
  Tensor out(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    double na = 0;
    for (int c = 0; c < A.cols; ++c) na += A.at(i, c) * A.at(i, c);
    for (int j = 0; j < B.rows; ++j) {
      double nb = 0, d = 0;
      for (int c = 0; c < A.cols; ++c) {
        nb += B.at(j, c) * B.at(j, c);
        d += A.at(i, c) * B.at(j, c);
      }
      out.at(i, j) = (na == 0.0 || nb == 0.0) ? 0.0 : d / std::sqrt(na * nb);
    }
  }
  bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
  int ia = a.id(), ib = b.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), ng, [ia, ib, io](Tape& t) {
    const Tensor& g = t.grad_buf(io);
    const Tensor& A = t.val(ia);
    const Tensor& B = t.val(ib);
    const Tensor& y = t.val(io);
    bool ga_on = t.needs_grad(ia), gb_on = t.needs_grad(ib);
    for (int i = 0; i < A.rows; ++i) {
      double na2 = 0;
      for (int c = 0; c < A.cols; ++c) na2 += A.at(i, c) * A.at(i, c);
      if (na2 == 0.0) continue;
      double na = std::sqrt(na2);
      for (int j = 0; j < B.rows; ++j) {
        double gij = g.at(i, j);
        if (gij == 0.0) continue;
        double nb2 = 0;
        for (int c = 0; c < B.cols; ++c) nb2 += B.at(j, c) * B.at(j, c);
        if (nb2 == 0.0) continue;
        double nb = std::sqrt(nb2);
        double cij = y.at(i, j);
        if (ga_on) {
          Tensor& ga = t.grad_buf(ia);
          for (int c = 0; c < A.cols; ++c)
            ga.at(i, c) += gij * (B.at(j, c) / (na * nb) - cij * A.at(i, c) / na2);
        }
        if (gb_on) {
          Tensor& gb = t.grad_buf(ib);
          for (int c = 0; c < B.cols; ++c)
            gb.at(j, c) += gij * (A.at(i, c) / (na * nb) - cij * B.at(j, c) / nb2);
        }
      }
    }
  });
}

Val cosine(Val a, Val b) {
  if (a.rows() != 1 || b.rows() != 1) throw ShapeMismatch("cosine: expects two rows");
  return cosine_rows(a, b);
}

Val squared_error(Val a, Val b) {
  Val d = sub(a, b);
  return mul(d, d);
}

// --------------------------------------------------------------- edge sum

Val edge_sum(Val x, const std::vector<std::pair<int, int>>& dst_src, int out_rows) {
  Tape& t = tp(x);
  const Tensor& X = x.tensor();
  Tensor out(out_rows, X.cols);
  for (const auto& [d, s] : dst_src)
    for (int c = 0; c < X.cols; ++c) out.at(d, c) += X.at(s, c);
  int ix = x.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ix), [ix, io, dst_src](Tape& t) {
    if (!t.needs_grad(ix)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& gx = t.grad_buf(ix);
    for (const auto& [d, s] : dst_src)
      for (int c = 0; c < g.cols; ++c) gx.at(s, c) += g.at(d, c);
  });
}

// ----------------------------------------------------------- segment ops

namespace {

void check_offsets(const std::vector<int>& off, int rows, const char* op) {
  if (off.size() < 2 || off.front() != 0 || off.back() != rows)
    throw Error(ErrorCode::invalid_argument, std::string(op) + ": bad segment offsets");
  for (std::size_t s = 0; s + 1 < off.size(); ++s)
    if (off[s + 1] <= off[s])
      throw Error(ErrorCode::empty_page, std::string(op) + ": empty segment");
}

}  // namespace

Val segment_maxpool(Val a, std::vector<int> offsets) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  check_offsets(offsets, A.rows, "segment_maxpool");
  int S = static_cast<int>(offsets.size()) - 1;
  Tensor out(S, A.cols);
  std::vector<int> arg(static_cast<std::size_t>(S) * A.cols);
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < A.cols; ++c) {
      int best_r = offsets[s];
      double best = A.at(best_r, c);
      for (int r = offsets[s] + 1; r < offsets[s + 1]; ++r)
        if (A.at(r, c) > best) {
          best = A.at(r, c);
          best_r = r;
        }
      out.at(s, c) = best;
      arg[static_cast<std::size_t>(s) * A.cols + c] = best_r;
    }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, arg](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int s = 0; s < g.rows; ++s)
      for (int c = 0; c < g.cols; ++c)
        ga.at(arg[static_cast<std::size_t>(s) * g.cols + c], c) += g.at(s, c);
  });
}

Val segment_sum(Val a, std::vector<int> offsets) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  check_offsets(offsets, A.rows, "segment_sum");
  int S = static_cast<int>(offsets.size()) - 1;
  Tensor out(S, A.cols);
  for (int s = 0; s < S; ++s)
    for (int r = offsets[s]; r < offsets[s + 1]; ++r)
      for (int c = 0; c < A.cols; ++c) out.at(s, c) += A.at(r, c);
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, offsets](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int s = 0; s < g.rows; ++s)
      for (int r = offsets[s]; r < offsets[s + 1]; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(r, c) += g.at(s, c);
  });
}

Val segment_broadcast(Val a, std::vector<int> offsets) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  if (static_cast<int>(offsets.size()) - 1 != A.rows)
    throw Error(ErrorCode::invalid_argument, "segment_broadcast: offsets/rows mismatch");
  Tensor out(offsets.back(), A.cols);
  for (int s = 0; s < A.rows; ++s)
    for (int r = offsets[s]; r < offsets[s + 1]; ++r)
      for (int c = 0; c < A.cols; ++c) out.at(r, c) = A.at(s, c);
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, offsets](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& ga = t.grad_buf(ia);
    for (int s = 0; s < ga.rows; ++s)
      for (int r = offsets[s]; r < offsets[s + 1]; ++r)
        for (int c = 0; c < g.cols; ++c) ga.at(s, c) += g.at(r, c);
  });
}

Val segment_softmax(Val a, std::vector<int> offsets) {
  Tape& t = tp(a);
  const Tensor& A = a.tensor();
  if (A.cols != 1) throw ShapeMismatch("segment_softmax: expects a column");
  check_offsets(offsets, A.rows, "segment_softmax");
  Tensor out(A.rows, 1);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    double mx = A.at(offsets[s], 0);
    for (int r = offsets[s] + 1; r < offsets[s + 1]; ++r) mx = std::max(mx, A.at(r, 0));
    double sum = 0;
    for (int r = offsets[s]; r < offsets[s + 1]; ++r) {
      out.at(r, 0) = std::exp(A.at(r, 0) - mx);
      sum += out.at(r, 0);
    }
    for (int r = offsets[s]; r < offsets[s + 1]; ++r) out.at(r, 0) /= sum;
  }
  int ia = a.id();
  int io = static_cast<int>(t.node_count());
  return t.make(std::move(out), t.needs_grad(ia), [ia, io, offsets](Tape& t) {
    if (!t.needs_grad(ia)) return;
    const Tensor& g = t.grad_buf(io);
    const Tensor& y = t.val(io);
    Tensor& ga = t.grad_buf(ia);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double dot = 0;
      for (int r = offsets[s]; r < offsets[s + 1]; ++r) dot += g.at(r, 0) * y.at(r, 0);
      for (int r = offsets[s]; r < offsets[s + 1]; ++r)
        ga.at(r, 0) += y.at(r, 0) * (g.at(r, 0) - dot);
    }
  });
}

// ------------------------------------------------------------------ embed

Val embed(Tape& tape, Parameter& table, const std::vector<int>& idx, const Tensor* fallback) {
  Val tnode = tape.use(table);
  const Tensor& T = table.value;
  int m = static_cast<int>(idx.size());
  Tensor out(m, T.cols);
  for (int i = 0; i < m; ++i) {
    if (idx[i] < 0) {
      if (!fallback) throw Error(ErrorCode::invalid_argument, "embed: missing fallback rows");
      for (int c = 0; c < T.cols; ++c) out.at(i, c) = fallback->at(i, c);
    } else {
      if (idx[i] >= T.rows) throw Error(ErrorCode::index_out_of_range, "embed: index out of range");
      for (int c = 0; c < T.cols; ++c) out.at(i, c) = T.at(idx[i], c);
    }
  }
  int it = tnode.id();
  int io = static_cast<int>(tape.node_count());
  return tape.make(std::move(out), tape.needs_grad(it), [it, io, idx](Tape& t) {
    if (!t.needs_grad(it)) return;
    const Tensor& g = t.grad_buf(io);
    Tensor& gt = t.grad_buf(it);
    for (int i = 0; i < g.rows; ++i) {
      if (idx[i] <= 0) continue;  // padding row stays frozen; fallback rows carry no grad
      for (int c = 0; c < g.cols; ++c) gt.at(idx[i], c) += g.at(i, c);
    }
  });
}

// -------------------------------------------------------------------- GRU

GruParams::GruParams(const std::string& prefix, int dim)
    : wz(prefix + ".wz", dim, dim),
      uz(prefix + ".uz", dim, dim),
      bz(prefix + ".bz", 1, dim),
      wr(prefix + ".wr", dim, dim),
      ur(prefix + ".ur", dim, dim),
      br(prefix + ".br", 1, dim),
      wh(prefix + ".wh", dim, dim),
      uh(prefix + ".uh", dim, dim),
      bh(prefix + ".bh", 1, dim) {}

std::vector<Parameter*> GruParams::params() {
  return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh};
}

Val gru_cell(Val h, Val m, GruParams& p) {
  Tape& t = tp(h);
  if (h.cols() != m.cols() || h.rows() != m.rows())
    throw ShapeMismatch("gru_cell: state/message shape mismatch");
  auto gate = [&](Parameter& w, Parameter& u, Parameter& b) {
    return add(add(matmul_nt(m, t.use(w)), matmul_nt(h, t.use(u))), t.use(b));
  };
  Val z = sigmoid(gate(p.wz, p.uz, p.bz));
  Val r = sigmoid(gate(p.wr, p.ur, p.br));
  Val cand = tanh_op(
      add(add(matmul_nt(m, t.use(p.wh)), matmul_nt(mul(r, h), t.use(p.uh))), t.use(p.bh)));
  // (1-z) h + z cand
  return add(h, mul(z, sub(cand, h)));
}

}  // namespace domq
