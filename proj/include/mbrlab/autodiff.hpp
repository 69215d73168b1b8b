#pragma once

#include <cstddef>
#include <vector>

#include "mbrlab/tensor.hpp"

namespace mbrlab {

class Graph;

// Lightweight handle into a Graph. Valid only as long as the graph lives.
class Value {
 public:
  Value() = default;
  const Tensor& tensor() const;
  // Gradient of the last backward() root w.r.t. this node. Zero tensor if the
  // node did not participate.
  Tensor grad() const;
  double item() const;

 private:
  friend class Graph;
  Value(Graph* g, std::size_t id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape-style reverse-mode autodiff over rank-1/2 tensors. Nodes are appended
// in topological order; backward walks the tape in reverse. Single-threaded
// per graph.
class Graph {
 public:
  Value input(Tensor t, bool requires_grad = false);

  Value add(Value a, Value b);
  Value mul(Value a, Value b);  // elementwise, same shape
  Value matmul(Value a, Value b, bool transpose_b = false);
  Value gather_rows(Value a, std::vector<std::size_t> idx);
  Value sum(Value a);   // scalar
  Value mean(Value a);  // scalar
  Value softmax(Value a);      // over last axis, row-wise for rank 2
  Value log_softmax(Value a);  // over last axis, row-wise for rank 2
  Value sigmoid(Value a);
  Value log_sigmoid(Value a);
  Value scale(Value a, double factor);
  Value concat(Value a, Value b, int axis);

  // Accumulates d(root)/d(leaf) into every requires_grad node. Root must be
  // scalar. Clears gradients from any previous backward first.
  void backward(Value root);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Value;

  enum class Op {
    kInput,
    kAdd,
    kMul,
    kMatMul,
    kGatherRows,
    kSum,
    kMean,
    kSoftmax,
    kLogSoftmax,
    kSigmoid,
    kLogSigmoid,
    kScale,
    kConcat,
  };

  struct Node {
    Op op;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;  // empty until backward touches it
    bool requires_grad = false;
    double factor = 0.0;                // kScale
    std::vector<std::size_t> indices;   // kGatherRows
    int axis = 0;                       // kConcat
    bool transpose_b = false;           // kMatMul
  };

  Value emit(Node n);
  Node& node(Value v) { return nodes_[v.id_]; }
  const Node& node(Value v) const { return nodes_[v.id_]; }
  Tensor& grad_buffer(std::size_t id);
  void check_same_graph(Value v) const;
  void backward_node(std::size_t id);

  std::vector<Node> nodes_;
};

}  // namespace mbrlab
