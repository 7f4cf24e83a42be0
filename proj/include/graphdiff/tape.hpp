#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "graphdiff/rng.hpp"

namespace graphdiff {

// Handle into a Tape. Cheap to copy; valid only for the tape that made it.
struct Var {
  int id = -1;
};

// A named trainable array. Lives outside any tape; forward passes copy the
// value onto a tape leaf and training harvests the leaf gradient back into
// grad. adam_m / adam_v belong to the optimizer.
struct Parameter {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::vector<double> value, grad, adam_m, adam_v;

  Parameter() = default;
  Parameter(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), value(r * c, 0.0), grad(r * c, 0.0) {}
  std::size_t size() const { return rows * cols; }
};

// Reverse-mode tape over dense float64 tensors. Every tensor is a rows x cols
// matrix (scalars are 1x1, vectors 1xd). Ops evaluate eagerly and record a
// pullback; backward() runs the pullbacks once, newest to oldest.
//
// Reductions (mean/std/min/max) collapse the row axis: an R x C input stands
// for a set of R vectors and reduces to 1 x C. std uses the population (/N)
// convention with 1e-8 added inside the square root so its gradient is
// defined at zero variance. min/max break ties toward the lowest row index.
class Tape {
 public:
  Var leaf(std::size_t rows, std::size_t cols, const std::vector<double>& values);
  Var leaf(const Parameter& p) { return leaf(p.rows, p.cols, p.value); }
  Var scalar(double v) { return leaf(1, 1, {v}); }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var matmul(Var a, Var b);
  Var concat_cols(Var a, Var b);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var exp(Var x);
  Var log(Var x);          // rejects nonpositive entries
  Var log_floored(Var x);  // log(max(x, 1e-12)); zero slope where floored
  Var softmax_rows(Var x);
  Var scale(Var x, double c);
  Var broadcast_add(Var m, Var row);  // R x C plus 1 x C
  Var broadcast_mul(Var m, Var row);
  Var reduce_mean(Var x);
  Var reduce_std(Var x);
  Var reduce_min(Var x);
  Var reduce_max(Var x);
  Var sum_all(Var x);  // scalar
  Var gather_rows(Var x, std::vector<std::size_t> rows);

  // Keeps each element with probability 1-rate, scaling survivors by
  // 1/(1-rate). enabled=false (or rate 0) passes through without consuming
  // randomness.
  Var dropout(Var x, double rate, Rng& rng, bool enabled);

  // -log softmax(logits)[target] for a 1 x C logits row, fused for stability.
  Var softmax_ce(Var logits, int target);

  // Sum of -log(max(p[r, target[r]], 1e-12)) over rows. Terms are accumulated
  // in value-sorted order, so the result is bit-identical under any row
  // permutation of (probs, targets).
  Var ce_from_probs(Var probs, const std::vector<int>& targets);

  // Adds scalar terms in the given order.
  Var sum_terms(const std::vector<Var>& terms);

  // Seeds d(loss)/d(loss) = 1 and runs all pullbacks. loss must be 1x1.
  // Calling twice without reset() is an error.
  void backward(Var loss);

  void reset();

  const std::vector<double>& value(Var v) const { return node(v).value; }
  const std::vector<double>& grad(Var v) const { return node(v).grad; }
  double scalar_value(Var v) const;
  std::size_t rows(Var v) const { return node(v).rows; }
  std::size_t cols(Var v) const { return node(v).cols; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t rows = 0, cols = 0;
    std::vector<double> value, grad;
    std::function<void(Tape&)> back;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var make(std::size_t rows, std::size_t cols);
  static void check_same_shape(const Node& a, const Node& b, const char* op);

  // deque: references to nodes stay valid while new ops append.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Max over sampled parameter coordinates of
//   |analytic - central_difference| / (|analytic| + |central_difference| + 1e-8).
// loss_value re-evaluates the loss at the current parameter values;
// compute_grads must fill each parameter's grad (overwriting, not adding).
// samples_per_tensor limits coordinates checked per parameter (0 = all),
// spread evenly across the tensor.
double grad_check(const std::function<double()>& loss_value,
                  const std::function<void()>& compute_grads,
                  std::vector<Parameter*> params, double h,
                  int samples_per_tensor = 0);

}  // namespace graphdiff
