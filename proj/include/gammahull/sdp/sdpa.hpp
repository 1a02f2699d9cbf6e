#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gammahull/sdp/problem.hpp"

namespace gammahull::sdp {

// SDPA sparse format. SDPA's primal reads
//   minimize sum c'_i x_i  s.t.  sum x_i F'_i - F'_0 >= 0,
// so we write c' = -c and F'_0 = -F0 with x = y. A box is written as one
// trailing diagonal block, announced by a comment line so that import can
// restore it; other readers see an ordinary LP block.

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline bool is_comment(const std::string& line) {
  for (char ch : line) {
    if (ch == ' ' || ch == '\t') continue;
    return ch == '"' || ch == '*';
  }
  return true;  // blank
}

inline std::string strip_punct(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
  return s;
}

}  // namespace detail

inline void write_sdpa(const SdpProblem& prob, std::ostream& os) {
  prob.validate();
  const int m = prob.num_vars;
  std::vector<int> dims = prob.block_dims;
  const int box_block = prob.box ? static_cast<int>(dims.size()) : -1;
  if (prob.box && m > 0) {
    dims.push_back(-2 * m);
    os << "* gammahull-box " << box_block + 1 << "\n";
  }
  os << m << "\n" << dims.size() << "\n";
  for (std::size_t b = 0; b < dims.size(); ++b) os << (b ? " " : "") << dims[b];
  os << "\n";
  for (int i = 0; i < m; ++i) os << (i ? " " : "") << detail::fmt(prob.objective(i) == 0.0 ? 0.0 : -prob.objective(i));
  os << "\n";
  for (const auto& e : prob.entries) {
    const double v = e.var == 0 ? -e.value : e.value;
    os << e.var << " " << e.block + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << detail::fmt(v) << "\n";
  }
  if (prob.box && m > 0) {
    for (int i = 0; i < m; ++i) {
      const int r = 2 * i + 1;
      os << 0 << " " << box_block + 1 << " " << r << " " << r << " " << detail::fmt(prob.box->lower(i)) << "\n";
      os << i + 1 << " " << box_block + 1 << " " << r << " " << r << " 1\n";
      os << 0 << " " << box_block + 1 << " " << r + 1 << " " << r + 1 << " " << detail::fmt(-prob.box->upper(i)) << "\n";
      os << i + 1 << " " << box_block + 1 << " " << r + 1 << " " << r + 1 << " -1\n";
    }
  }
}

inline void export_sdpa(const SdpProblem& prob, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_sdpa: cannot open " + path);
  write_sdpa(prob, os);
  if (!os) throw std::runtime_error("export_sdpa: write failed for " + path);
}

inline SdpProblem read_sdpa(std::istream& is) {
  std::string line;
  int box_block = -1;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    if (detail::is_comment(line)) {
      std::istringstream cs(line);
      std::string star, tag;
      int b;
      if (cs >> star >> tag >> b && star == "*" && tag == "gammahull-box") box_block = b - 1;
      if (body.empty()) continue;
      continue;
    }
    body.push_back(detail::strip_punct(line));
  }
  std::istringstream ss([&] {
    std::string all;
    for (auto& l : body) all += l + "\n";
    return all;
  }());
  SdpProblem prob;
  int nblocks = 0;
  if (!(ss >> prob.num_vars >> nblocks) || prob.num_vars < 0 || nblocks < 0)
    throw std::runtime_error("read_sdpa: malformed header");
  std::vector<int> dims(nblocks);
  for (auto& d : dims)
    if (!(ss >> d) || d == 0) throw std::runtime_error("read_sdpa: malformed block sizes");
  prob.objective.resize(prob.num_vars);
  for (int i = 0; i < prob.num_vars; ++i) {
    double v;
    if (!(ss >> v)) throw std::runtime_error("read_sdpa: malformed objective");
    prob.objective(i) = -v;
  }
  std::vector<Entry> box_entries;
  int var, blk, r, c;
  double v;
  while (ss >> var >> blk >> r >> c >> v) {
    if (var < 0 || var > prob.num_vars || blk < 1 || blk > nblocks)
      throw std::runtime_error("read_sdpa: entry index out of range");
    if (r > c) std::swap(r, c);
    const int k = std::abs(dims[blk - 1]);
    if (r < 1 || c > k) throw std::runtime_error("read_sdpa: entry position out of range");
    Entry e{var, blk - 1, r - 1, c - 1, var == 0 ? -v : v};
    if (blk - 1 == box_block) box_entries.push_back(e);
    else prob.entries.push_back(e);
  }
  if (!ss.eof()) throw std::runtime_error("read_sdpa: trailing garbage in entry list");
  if (box_block >= 0) {
    if (box_block != nblocks - 1 || dims[box_block] != -2 * prob.num_vars)
      throw std::runtime_error("read_sdpa: inconsistent box block");
    dims.pop_back();
    Box box{Eigen::VectorXd::Zero(prob.num_vars), Eigen::VectorXd::Zero(prob.num_vars)};
    for (const auto& e : box_entries) {
      if (e.var != 0) continue;
      const int i = e.row / 2;
      // stored constant is -F0 on import, i.e. our F0 row value.
      if (e.row % 2 == 0) box.lower(i) = -e.value;
      else box.upper(i) = e.value;
    }
    prob.box = std::move(box);
  }
  prob.block_dims = std::move(dims);
  prob.validate();
  return prob;
}

inline SdpProblem import_sdpa(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("import_sdpa: cannot open " + path);
  return read_sdpa(is);
}

// Solution file in the CSDP layout: first line y, then "1 b i j v" for the
// slack S and "2 b i j v" for the dual matrix X (upper triangles, 1-based).
// Block numbering follows the exported file, including a box block.
struct RawSolution {
  Eigen::VectorXd y;
  BlockMatrix S;
  BlockMatrix X;
};

inline std::vector<int> exported_dims(const SdpProblem& prob) {
  std::vector<int> dims = prob.block_dims;
  if (prob.box && prob.num_vars > 0) dims.push_back(-2 * prob.num_vars);
  return dims;
}

inline void write_solution(const std::vector<int>& dims, const RawSolution& s, std::ostream& os) {
  for (Eigen::Index i = 0; i < s.y.size(); ++i) os << (i ? " " : "") << detail::fmt(s.y(i));
  os << "\n";
  auto dump = [&](int tag, const BlockMatrix& M) {
    for (std::size_t b = 0; b < M.size(); ++b) {
      const bool diag = dims[b] < 0;
      const int k = std::abs(dims[b]);
      for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
          if (diag && i != j) continue;
          const double v = diag ? M[b](i, 0) : M[b](i, j);
          if (v != 0.0) os << tag << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << detail::fmt(v) << "\n";
        }
    }
  };
  dump(1, s.S);
  dump(2, s.X);
}

inline RawSolution read_solution(const std::vector<int>& dims, int m, std::istream& is) {
  RawSolution s;
  std::string line;
  while (std::getline(is, line) && detail::is_comment(line)) {
  }
  {
    std::istringstream ls(detail::strip_punct(line));
    s.y.resize(m);
    for (int i = 0; i < m; ++i)
      if (!(ls >> s.y(i))) throw std::runtime_error("read_solution: malformed y line");
  }
  for (int tag = 0; tag < 2; ++tag) {
    BlockMatrix& M = tag ? s.X : s.S;
    for (int d : dims) M.push_back(d < 0 ? Eigen::MatrixXd::Zero(-d, 1) : Eigen::MatrixXd::Zero(d, d));
  }
  int tag, b, i, j;
  double v;
  while (is >> tag >> b >> i >> j >> v) {
    if ((tag != 1 && tag != 2) || b < 1 || b > static_cast<int>(dims.size()))
      throw std::runtime_error("read_solution: malformed entry");
    const int k = std::abs(dims[b - 1]);
    if (i < 1 || j < 1 || i > k || j > k) throw std::runtime_error("read_solution: entry out of range");
    BlockMatrix& M = tag == 1 ? s.S : s.X;
    if (dims[b - 1] < 0) {
      M[b - 1](i - 1, 0) = v;
    } else {
      M[b - 1](i - 1, j - 1) = v;
      M[b - 1](j - 1, i - 1) = v;
    }
  }
  if (!is.eof()) throw std::runtime_error("read_solution: trailing garbage");
  return s;
}

}  // namespace gammahull::sdp
