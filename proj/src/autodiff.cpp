#include "mbrlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mbrlab {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Iterates rows of a rank-1 (one row) or rank-2 tensor.
struct RowView {
  std::size_t rows, cols;
  explicit RowView(const Tensor& t) {
    if (t.rank() == 1) {
      rows = 1;
      cols = t.shape[0];
    } else {
      rows = t.shape[0];
      cols = t.shape[1];
    }
  }
};

}  // namespace

const Tensor& Value::tensor() const { return graph_->node(*this).value; }

Tensor Value::grad() const {
  const Tensor& g = graph_->node(*this).grad;
  if (g.empty()) return Tensor::zeros(tensor().shape);
  return g;
}

double Value::item() const {
  const Tensor& t = tensor();
  if (!t.is_scalar()) throw std::invalid_argument("Value::item: not a scalar");
  return t.data[0];
}

void Graph::check_same_graph(Value v) const {
  if (v.graph_ != this) {
    throw std::invalid_argument("Graph: value belongs to another graph");
  }
}

Value Graph::emit(Node n) {
  if (!n.value.all_finite()) {
    throw std::runtime_error("Graph: non-finite result in op");
  }
  nodes_.push_back(std::move(n));
  return Value(this, nodes_.size() - 1);
}

Value Graph::input(Tensor t, bool requires_grad) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(t);
  n.requires_grad = requires_grad;
  return emit(std::move(n));
}

Value Graph::add(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a.id_, b.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return emit(std::move(n));
}

Value Graph::mul(Value a, Value b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (!ta.same_shape(tb)) {
    throw std::invalid_argument("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
  Node n;
  n.op = Op::kMul;
  n.inputs = {a.id_, b.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return emit(std::move(n));
}

Value Graph::matmul(Value a, Value b, bool transpose_b) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (ta.rank() != 2 || tb.rank() != 2) {
    throw std::invalid_argument("matmul: operands must be rank 2");
  }
  std::size_t m = ta.shape[0], k = ta.shape[1];
  std::size_t bk = transpose_b ? tb.shape[1] : tb.shape[0];
  std::size_t nn = transpose_b ? tb.shape[0] : tb.shape[1];
  if (k != bk) {
    throw std::invalid_argument("matmul: inner dims differ " + ta.shape_str() + " vs " + tb.shape_str());
  }
  Tensor out = Tensor::zeros({m, nn});
  if (!transpose_b) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        double av = ta.at(i, p);
        if (av == 0.0) continue;
        for (std::size_t j = 0; j < nn; ++j) out.at(i, j) += av * tb.at(p, j);
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < nn; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += ta.at(i, p) * tb.at(j, p);
        out.at(i, j) = acc;
      }
    }
  }
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.id_, b.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.transpose_b = transpose_b;
  return emit(std::move(n));
}

Value Graph::gather_rows(Value a, std::vector<std::size_t> idx) {
  check_same_graph(a);
  const Tensor& ta = node(a).value;
  if (ta.rank() != 2) throw std::invalid_argument("gather_rows: operand must be rank 2");
  for (std::size_t i : idx) {
    if (i >= ta.shape[0]) throw std::invalid_argument("gather_rows: row index out of range");
  }
  std::size_t cols = ta.shape[1];
  Tensor out = Tensor::zeros({idx.size(), cols});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = ta.at(idx[r], c);
  }
  Node n;
  n.op = Op::kGatherRows;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  n.indices = std::move(idx);
  return emit(std::move(n));
}

Value Graph::sum(Value a) {
  check_same_graph(a);
  const Tensor& ta = node(a).value;
  double acc = 0.0;
  for (double v : ta.data) acc += v;
  Node n;
  n.op = Op::kSum;
  n.inputs = {a.id_};
  n.value = Tensor::scalar(acc);
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::mean(Value a) {
  check_same_graph(a);
  const Tensor& ta = node(a).value;
  if (ta.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double acc = 0.0;
  for (double v : ta.data) acc += v;
  Node n;
  n.op = Op::kMean;
  n.inputs = {a.id_};
  n.value = Tensor::scalar(acc / static_cast<double>(ta.numel()));
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::softmax(Value a) {
  check_same_graph(a);
  const Tensor& ta = node(a).value;
  RowView rv(ta);
  Tensor out = ta;
  for (std::size_t r = 0; r < rv.rows; ++r) {
    double* row = &out.data[r * rv.cols];
    double mx = row[0];
    for (std::size_t c = 1; c < rv.cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < rv.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (std::size_t c = 0; c < rv.cols; ++c) row[c] /= z;
  }
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::log_softmax(Value a) {
  check_same_graph(a);
  const Tensor& ta = node(a).value;
  RowView rv(ta);
  Tensor out = ta;
  for (std::size_t r = 0; r < rv.rows; ++r) {
    double* row = &out.data[r * rv.cols];
    double mx = row[0];
    for (std::size_t c = 1; c < rv.cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < rv.cols; ++c) z += std::exp(row[c] - mx);
    double lse = mx + std::log(z);
    for (std::size_t c = 0; c < rv.cols; ++c) row[c] -= lse;
  }
  Node n;
  n.op = Op::kLogSoftmax;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::sigmoid(Value a) {
  check_same_graph(a);
  Tensor out = node(a).value;
  for (double& v : out.data) v = stable_sigmoid(v);
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::log_sigmoid(Value a) {
  check_same_graph(a);
  Tensor out = node(a).value;
  for (double& v : out.data) v = stable_log_sigmoid(v);
  Node n;
  n.op = Op::kLogSigmoid;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return emit(std::move(n));
}

Value Graph::scale(Value a, double factor) {
  check_same_graph(a);
  Tensor out = node(a).value;
  for (double& v : out.data) v *= factor;
  Node n;
  n.op = Op::kScale;
  n.inputs = {a.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  n.factor = factor;
  return emit(std::move(n));
}

Value Graph::concat(Value a, Value b, int axis) {
  check_same_graph(a);
  check_same_graph(b);
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  Tensor out;
  if (ta.rank() == 1 && tb.rank() == 1) {
    if (axis != 0) throw std::invalid_argument("concat: rank-1 concat requires axis 0");
    std::vector<double> d = ta.data;
    d.insert(d.end(), tb.data.begin(), tb.data.end());
    out = Tensor::vector1d(std::move(d));
  } else if (ta.rank() == 2 && tb.rank() == 2) {
    if (axis == 0) {
      if (ta.shape[1] != tb.shape[1]) throw std::invalid_argument("concat: column mismatch");
      std::vector<double> d = ta.data;
      d.insert(d.end(), tb.data.begin(), tb.data.end());
      out = Tensor({ta.shape[0] + tb.shape[0], ta.shape[1]}, std::move(d));
    } else if (axis == 1) {
      if (ta.shape[0] != tb.shape[0]) throw std::invalid_argument("concat: row mismatch");
      out = Tensor::zeros({ta.shape[0], ta.shape[1] + tb.shape[1]});
      for (std::size_t r = 0; r < ta.shape[0]; ++r) {
        for (std::size_t c = 0; c < ta.shape[1]; ++c) out.at(r, c) = ta.at(r, c);
        for (std::size_t c = 0; c < tb.shape[1]; ++c) out.at(r, ta.shape[1] + c) = tb.at(r, c);
      }
    } else {
      throw std::invalid_argument("concat: axis must be 0 or 1");
    }
  } else {
    throw std::invalid_argument("concat: rank mismatch");
  }
  Node n;
  n.op = Op::kConcat;
  n.inputs = {a.id_, b.id_};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.axis = axis;
  return emit(std::move(n));
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

void Graph::backward(Value root) {
  check_same_graph(root);
  if (!node(root).value.is_scalar()) {
    throw std::invalid_argument("backward: root must be scalar");
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!node(root).requires_grad) return;  // nothing reaches a parameter
  grad_buffer(root.id_).data[0] = 1.0;
  for (std::size_t id = root.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    backward_node(id);
  }
}

void Graph::backward_node(std::size_t id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  auto wants = [&](std::size_t in) { return nodes_[in].requires_grad; };
  switch (n.op) {
    case Op::kInput:
      break;
    case Op::kAdd: {
      for (int s = 0; s < 2; ++s) {
        std::size_t in = n.inputs[s];
        if (!wants(in)) continue;
        Tensor& gi = grad_buffer(in);
        for (std::size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& a = nodes_[n.inputs[0]].value;
      const Tensor& b = nodes_[n.inputs[1]].value;
      if (wants(n.inputs[0])) {
        Tensor& gi = grad_buffer(n.inputs[0]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i] * b.data[i];
      }
      if (wants(n.inputs[1])) {
        Tensor& gi = grad_buffer(n.inputs[1]);
        for (std::size_t i = 0; i < g.data.size(); ++i) gi.data[i] += g.data[i] * a.data[i];
      }
      break;
    }
    case Op::kMatMul: {
      const Tensor& a = nodes_[n.inputs[0]].value;
      const Tensor& b = nodes_[n.inputs[1]].value;
      std::size_t m = a.shape[0], k = a.shape[1], nn = n.value.shape[1];
      if (!n.transpose_b) {
        // c = a.b : da += g.b^T ; db += a^T.g
        if (wants(n.inputs[0])) {
          Tensor& da = grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < nn; ++j) acc += g.at(i, j) * b.at(p, j);
              da.at(i, p) += acc;
            }
        }
        if (wants(n.inputs[1])) {
          Tensor& db = grad_buffer(n.inputs[1]);
          for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < nn; ++j) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i) acc += a.at(i, p) * g.at(i, j);
              db.at(p, j) += acc;
            }
        }
      } else {
        // c = a.b^T : da += g.b ; db += g^T.a
        if (wants(n.inputs[0])) {
          Tensor& da = grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < nn; ++j) acc += g.at(i, j) * b.at(j, p);
              da.at(i, p) += acc;
            }
        }
        if (wants(n.inputs[1])) {
          Tensor& db = grad_buffer(n.inputs[1]);
          for (std::size_t j = 0; j < nn; ++j)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t i = 0; i < m; ++i) acc += g.at(i, j) * a.at(i, p);
              db.at(j, p) += acc;
            }
        }
      }
      break;
    }
    case Op::kGatherRows: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      std::size_t cols = gi.shape[1];
      for (std::size_t r = 0; r < n.indices.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) gi.at(n.indices[r], c) += g.at(r, c);
      break;
    }
    case Op::kSum: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      for (double& v : gi.data) v += g.data[0];
      break;
    }
    case Op::kMean: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      double s = g.data[0] / static_cast<double>(gi.data.size());
      for (double& v : gi.data) v += s;
      break;
    }
    case Op::kSoftmax: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      RowView rv(n.value);
      for (std::size_t r = 0; r < rv.rows; ++r) {
        const double* s = &n.value.data[r * rv.cols];
        const double* gr = &g.data[r * rv.cols];
        double dot = 0.0;
        for (std::size_t c = 0; c < rv.cols; ++c) dot += gr[c] * s[c];
        double* out = &gi.data[r * rv.cols];
        for (std::size_t c = 0; c < rv.cols; ++c) out[c] += s[c] * (gr[c] - dot);
      }
      break;
    }
    case Op::kLogSoftmax: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      RowView rv(n.value);
      for (std::size_t r = 0; r < rv.rows; ++r) {
        const double* y = &n.value.data[r * rv.cols];
        const double* gr = &g.data[r * rv.cols];
        double gsum = 0.0;
        for (std::size_t c = 0; c < rv.cols; ++c) gsum += gr[c];
        double* out = &gi.data[r * rv.cols];
        for (std::size_t c = 0; c < rv.cols; ++c) out[c] += gr[c] - std::exp(y[c]) * gsum;
      }
      break;
    }
    case Op::kSigmoid: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        double s = n.value.data[i];
        gi.data[i] += g.data[i] * s * (1.0 - s);
      }
      break;
    }
    case Op::kLogSigmoid: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      const Tensor& x = nodes_[n.inputs[0]].value;
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        gi.data[i] += g.data[i] * stable_sigmoid(-x.data[i]);
      }
      break;
    }
    case Op::kScale: {
      if (!wants(n.inputs[0])) break;
      Tensor& gi = grad_buffer(n.inputs[0]);
      for (std::size_t i = 0; i < g.data.size(); ++i) gi.data[i] += n.factor * g.data[i];
      break;
    }
    case Op::kConcat: {
      const Tensor& a = nodes_[n.inputs[0]].value;
      const Tensor& b = nodes_[n.inputs[1]].value;
      if (n.value.rank() == 1 || n.axis == 0) {
        std::size_t na = a.data.size();
        if (wants(n.inputs[0])) {
          Tensor& gi = grad_buffer(n.inputs[0]);
          for (std::size_t i = 0; i < na; ++i) gi.data[i] += g.data[i];
        }
        if (wants(n.inputs[1])) {
          Tensor& gi = grad_buffer(n.inputs[1]);
          for (std::size_t i = 0; i < b.data.size(); ++i) gi.data[i] += g.data[na + i];
        }
      } else {
        std::size_t ca = a.shape[1], cb = b.shape[1];
        if (wants(n.inputs[0])) {
          Tensor& gi = grad_buffer(n.inputs[0]);
          for (std::size_t r = 0; r < a.shape[0]; ++r)
            for (std::size_t c = 0; c < ca; ++c) gi.at(r, c) += g.at(r, c);
        }
        if (wants(n.inputs[1])) {
          Tensor& gi = grad_buffer(n.inputs[1]);
          for (std::size_t r = 0; r < b.shape[0]; ++r)
            for (std::size_t c = 0; c < cb; ++c) gi.at(r, c) += g.at(r, ca + c);
        }
      }
      break;
    }
  }
}

}  // namespace mbrlab
