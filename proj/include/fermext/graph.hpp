// Interaction graphs, coupling weight matrices and vertex covers.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fermext {

struct InteractionGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;   // canonical (min, max), sorted
  std::vector<std::vector<int>> neighbors;  // E_i

  int edge_count() const { return int(edges.size()); }
  int degree(int i) const { return int(neighbors.at(i).size()); }

  bool is_regular() const {
    if (n == 0) return false;
    const int c = degree(0);
    for (int i = 1; i < n; ++i)
      if (degree(i) != c) return false;
    return c > 0;
  }
};

inline InteractionGraph from_edge_list(int n,
                                       const std::vector<std::pair<int, int>>& raw) {
  if (n < 1) throw std::invalid_argument("graph: vertex count must be positive");
  std::set<std::pair<int, int>> canon;
  for (const auto& [a, b] : raw) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw std::invalid_argument("graph: edge (" + std::to_string(a) + "," +
                                  std::to_string(b) + ") out of range");
    if (a == b)
      throw std::invalid_argument("graph: self-loop at vertex " + std::to_string(a));
    canon.insert({std::min(a, b), std::max(a, b)});
  }
  InteractionGraph g;
  g.n = n;
  g.edges.assign(canon.begin(), canon.end());
  g.neighbors.assign(n, {});
  for (const auto& [a, b] : g.edges) {
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  std::size_t handshake = 0;
  for (const auto& nb : g.neighbors) handshake += nb.size();
  if (handshake != 2 * g.edges.size())
    throw std::logic_error("graph: handshake identity violated");
  return g;
}

inline InteractionGraph star_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.push_back({0, i});
  return from_edge_list(n, e);
}

inline InteractionGraph ring_graph(int n) {
  if (n < 3) throw std::invalid_argument("ring: need at least 3 vertices");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.push_back({i, (i + 1) % n});
  return from_edge_list(n, e);
}

inline InteractionGraph complete_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return from_edge_list(n, e);
}

inline InteractionGraph complete_bipartite_graph(int a, int b) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) e.push_back({i, a + j});
  return from_edge_list(a + b, e);
}

// D-dimensional hypercubic lattice with L sites per direction. Periodic
// boundaries give a 2D-regular graph; L = 2 collapses the doubled edge.
inline InteractionGraph lattice_graph(int dims, int length, bool periodic = true) {
  if (dims < 1 || length < 2) throw std::invalid_argument("lattice: need D >= 1, L >= 2");
  int n = 1;
  for (int k = 0; k < dims; ++k) n *= length;
  std::vector<std::pair<int, int>> e;
  std::vector<int> coord(dims, 0);
  for (int i = 0; i < n; ++i) {
    int rem = i;
    for (int k = 0; k < dims; ++k) {
      coord[k] = rem % length;
      rem /= length;
    }
    int stride = 1;
    for (int k = 0; k < dims; ++k) {
      if (coord[k] + 1 < length)
        e.push_back({i, i + stride});
      else if (periodic && length > 2)
        e.push_back({i, i - (length - 1) * stride});
      stride *= length;
    }
  }
  return from_edge_list(n, e);
}

// ---------------------------------------------------------------------------
// Weighted couplings: G symmetric, entries summing to one, with
// pi_j = sum_i G_ij and A_ij = G_ij / pi_j.
// ---------------------------------------------------------------------------

struct WeightMatrix {
  Eigen::MatrixXd G;
  Eigen::VectorXd pi;
  Eigen::MatrixXd A;
  double tr_A_squared = 0.0;
  double pi_norm2_sq = 0.0;
};

inline WeightMatrix weight_matrix_from(const Eigen::MatrixXd& G) {
  const auto n = G.rows();
  if (G.cols() != n) throw std::invalid_argument("weights: matrix must be square");
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("weights: matrix must be symmetric");
  if (G.minCoeff() < 0.0) throw std::invalid_argument("weights: entries must be nonnegative");
  if (std::abs(G.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("weights: entries must sum to 1");
  WeightMatrix w;
  w.G = G;
  w.pi = G.colwise().sum();
  w.A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (w.pi(j) > 0.0) w.A.col(j) = G.col(j) / w.pi(j);
  }
  w.tr_A_squared = (w.A * w.A).trace();
  w.pi_norm2_sq = w.pi.squaredNorm();
  return w;
}

// G_ij = 1/(2|E|) on edges: pi_j = |E_j|/(2|E|), tr(A^2) = sum_E 1/(|E_i||E_j|).
inline WeightMatrix uniform_weight_matrix(const InteractionGraph& g) {
  if (g.edge_count() < 1) throw std::invalid_argument("weights: graph has no edges");
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(g.n, g.n);
  const double w = 1.0 / (2.0 * g.edge_count());
  for (const auto& [a, b] : g.edges) {
    G(a, b) = w;
    G(b, a) = w;
  }
  return weight_matrix_from(G);
}

// ---------------------------------------------------------------------------
// Vertex covers.
// ---------------------------------------------------------------------------

enum class CoverMode { Exact, Greedy };

inline bool is_vertex_cover(const InteractionGraph& g, const std::vector<int>& cover) {
  std::vector<char> in(g.n, 0);
  for (int v : cover) {
    if (v < 0 || v >= g.n) return false;
    in[v] = 1;
  }
  for (const auto& [a, b] : g.edges)
    if (!in[a] && !in[b]) return false;
  return true;
}

namespace detail {

inline void cover_branch(const InteractionGraph& g, std::vector<char>& in, int chosen,
                         std::vector<int>& best) {
  if (chosen >= int(best.size()) && !best.empty()) return;
  const std::pair<int, int>* open = nullptr;
  for (const auto& e : g.edges)
    if (!in[e.first] && !in[e.second]) {
      open = &e;
      break;
    }
  if (!open) {
    std::vector<int> cover;
    for (int v = 0; v < g.n; ++v)
      if (in[v]) cover.push_back(v);
    if (best.empty() || cover.size() < best.size()) best = cover;
    return;
  }
  if (!best.empty() && chosen + 1 >= int(best.size())) return;
  for (int v : {open->first, open->second}) {
    in[v] = 1;
    cover_branch(g, in, chosen + 1, best);
    in[v] = 0;
  }
}

}  // namespace detail

inline std::vector<int> vertex_cover(const InteractionGraph& g,
                                     CoverMode mode = CoverMode::Exact) {
  if (g.edge_count() == 0) return {};
  if (mode == CoverMode::Exact && g.n <= 24) {
    std::vector<char> in(g.n, 0);
    std::vector<int> best;
    detail::cover_branch(g, in, 0, best);
    return best;
  }
  // Max-degree greedy; only coverage is promised, not minimality.
  std::vector<int> cover;
  std::vector<char> in(g.n, 0);
  std::vector<std::pair<int, int>> open = g.edges;
  while (!open.empty()) {
    std::vector<int> deg(g.n, 0);
    for (const auto& [a, b] : open) {
      ++deg[a];
      ++deg[b];
    }
    const int v = int(std::max_element(deg.begin(), deg.end()) - deg.begin());
    in[v] = 1;
    cover.push_back(v);
    std::erase_if(open, [&](const auto& e) { return in[e.first] || in[e.second]; });
  }
  std::sort(cover.begin(), cover.end());
  return cover;
}

}  // namespace fermext
