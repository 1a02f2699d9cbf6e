#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gammahull::sdp {

// One upper-triangle entry of F_var in a block. var 0 is the constant F0;
// variables are 1..m as in the SDPA convention. block/row/col are 0-based.
struct Entry {
  int var = 0;
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// maximize c.y  subject to  F0 + sum_i y_i F_i >= 0 (block diagonal),
// optionally lower <= y <= upper.
struct SdpProblem {
  int num_vars = 0;
  Eigen::VectorXd objective;
  // Positive: dense symmetric block. Negative: diagonal block of size |dim|.
  std::vector<int> block_dims;
  std::vector<Entry> entries;
  std::optional<Box> box;

  int block_size(int b) const { return std::abs(block_dims.at(b)); }
  bool is_diagonal(int b) const { return block_dims.at(b) < 0; }
  int num_blocks() const { return static_cast<int>(block_dims.size()); }

  int total_dense_dim() const {
    int t = 0;
    for (int d : block_dims)
      if (d > 0) t += d;
    return t;
  }

  void add(int var, int block, int row, int col, double value) {
    if (row > col) std::swap(row, col);
    entries.push_back({var, block, row, col, value});
  }

  void validate() const {
    if (num_vars < 0) throw std::invalid_argument("SdpProblem: negative variable count");
    if (objective.size() != num_vars) throw std::invalid_argument("SdpProblem: objective length differs from num_vars");
    if (!objective.allFinite()) throw std::invalid_argument("SdpProblem: non-finite objective");
    for (int d : block_dims)
      if (d == 0) throw std::invalid_argument("SdpProblem: zero block size");
    for (const auto& e : entries) {
      if (e.var < 0 || e.var > num_vars) throw std::invalid_argument("SdpProblem: entry variable out of range");
      if (e.block < 0 || e.block >= num_blocks()) throw std::invalid_argument("SdpProblem: entry block out of range");
      const int k = block_size(e.block);
      if (e.row < 0 || e.col < 0 || e.row >= k || e.col >= k || e.row > e.col)
        throw std::invalid_argument("SdpProblem: entry index out of range or below diagonal");
      if (is_diagonal(e.block) && e.row != e.col)
        throw std::invalid_argument("SdpProblem: off-diagonal entry in a diagonal block");
      if (!std::isfinite(e.value)) throw std::invalid_argument("SdpProblem: non-finite entry");
    }
    if (box) {
      if (box->lower.size() != num_vars || box->upper.size() != num_vars)
        throw std::invalid_argument("SdpProblem: box length differs from num_vars");
      if (!box->lower.allFinite() || !box->upper.allFinite())
        throw std::invalid_argument("SdpProblem: box bounds must be finite");
      if ((box->lower.array() > box->upper.array()).any())
        throw std::invalid_argument("SdpProblem: empty box");
    }
  }
};

enum class Status { optimal, infeasible_certified, unbounded, indeterminate };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible_certified: return "infeasible_certified";
    case Status::unbounded: return "unbounded";
    case Status::indeterminate: return "indeterminate";
  }
  return "unknown";
}

// Block matrices: dense blocks are k x k; diagonal blocks store their diagonal
// as a k x 1 column. Box rows, when present, form one trailing diagonal block.
using BlockMatrix = std::vector<Eigen::MatrixXd>;

struct SdpSolution {
  Status status = Status::indeterminate;
  Eigen::VectorXd y;
  BlockMatrix primal_matrix;  // S = F0 + sum y_i F_i (slack)
  BlockMatrix dual_matrix;    // X with <F_i, X> = -c_i
  double objective_value = 0.0;  // c.y
  double dual_objective = 0.0;   // <F0, X>
  double max_constraint_residual = 0.0;
  double duality_gap = 0.0;
  Eigen::VectorXd dual_residual;  // -c_i - <F_i, X>
  int iterations = 0;
  std::optional<BlockMatrix> farkas;  // X >= 0, <F_i,X> = 0, <F0,X> = -1
  std::string message;
};

}  // namespace gammahull::sdp
