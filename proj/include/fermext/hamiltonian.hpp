// Two-local fermionic Hamiltonians, exact ground states, coordinate-descent
// optimization over totally even mode-product states, and energy-density
// certificates against the two-local composite bound.
//
// Edge terms are kept as exact monomial sums on a relabeled two-site system;
// the global Hamiltonian is assembled by order-preserving relabeling, which
// keeps Jordan-Wigner strings consistent for arbitrary site pairs.

#pragma once

#include "fermext/bounds.hpp"
#include "fermext/fock.hpp"
#include "fermext/graph.hpp"
#include "fermext/report.hpp"
#include "fermext/rng.hpp"
#include "fermext/state.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fermext {

struct EdgeTerm {
  int i = 0;  // ascending site pair
  int j = 1;
  MonomialSum local_op;  // on the two-site system {2, p}, site i -> 0, j -> 1
  Matrix h2;             // dense local representation
};

struct TwoLocalHamiltonian {
  SystemShape shape;
  InteractionGraph graph;
  std::vector<EdgeTerm> terms;  // normalized so that max ||h2|| <= 1
  double scale = 1.0;           // multiply normalized energies by this
  std::vector<std::pair<int, MonomialSum>> isolated_onsite;  // sites with no edges
  std::vector<std::string> notes;
};

namespace detail {

inline SystemShape pair_shape(int p) { return SystemShape{2, p}; }

// Rescale so the largest edge-term operator norm is one; zero Hamiltonians
// keep scale 0 and stay as they are.
inline void normalize_terms(TwoLocalHamiltonian& h) {
  double max_norm = 0.0;
  for (const auto& t : h.terms) max_norm = std::max(max_norm, operator_norm(t.h2));
  h.scale = max_norm;
  if (max_norm <= 1e-15) {
    h.scale = 0.0;
    return;
  }
  const cplx inv(1.0 / max_norm, 0);
  for (auto& t : h.terms) {
    t.local_op = t.local_op * inv;
    t.h2 *= inv.real();
  }
}

}  // namespace detail

inline Matrix assemble_global(const TwoLocalHamiltonian& h) {
  MonomialSum global(h.shape);
  for (const auto& t : h.terms)
    global += t.local_op.relabel_sites(h.shape, {t.i, t.j});
  for (const auto& [site, op] : h.isolated_onsite)
    global += op.relabel_sites(h.shape, {site});
  return global.to_dense();
}

// ---------------------------------------------------------------------------
// Model builders.
// ---------------------------------------------------------------------------

// Spinless model on a hypercubic lattice: per unordered edge one hopping pair
// t (f_i^dag f_j + f_j^dag f_i) and one density-density coupling U n_i n_j.
inline TwoLocalHamiltonian build_hubbard_spinless(int dims, int length, double t,
                                                  double u, bool periodic = true) {
  InteractionGraph g = lattice_graph(dims, length, periodic);
  TwoLocalHamiltonian h;
  h.shape = SystemShape::make(g.n, 1);
  h.graph = g;
  const SystemShape local = detail::pair_shape(1);
  for (const auto& [a, b] : g.edges) {
    MonomialSum op(local);
    op += cplx(t, 0) * (MonomialSum::creator(local, 0) * MonomialSum::annihilator(local, 1));
    op += cplx(t, 0) * (MonomialSum::creator(local, 1) * MonomialSum::annihilator(local, 0));
    op += cplx(u, 0) * (MonomialSum::number_op(local, 0) * MonomialSum::number_op(local, 1));
    h.terms.push_back({a, b, op, op.to_dense()});
  }
  detail::normalize_terms(h);
  h.notes.push_back("scale equals max(|t|,|U|)");
  return h;
}

// Spinful model: per-species hopping on the lattice edges plus on-site
// U n_up n_down, the on-site part split evenly over the incident edges.
// The on-site interaction makes the |E|-normalized density scale degenerate
// in high dimension; certificates carry that caveat.
inline TwoLocalHamiltonian build_hubbard_spinful(int dims, int length, double t,
                                                 double u, bool periodic = true) {
  InteractionGraph g = lattice_graph(dims, length, periodic);
  TwoLocalHamiltonian h;
  h.shape = SystemShape::make(g.n, 2);
  h.graph = g;
  const SystemShape local = detail::pair_shape(2);
  // Local modes: site 0 -> {0 = up, 1 = down}, site 1 -> {2 = up, 3 = down}.
  for (const auto& [a, b] : g.edges) {
    MonomialSum op(local);
    for (int spin = 0; spin < 2; ++spin) {
      op += cplx(t, 0) *
            (MonomialSum::creator(local, spin) * MonomialSum::annihilator(local, 2 + spin));
      op += cplx(t, 0) *
            (MonomialSum::creator(local, 2 + spin) * MonomialSum::annihilator(local, spin));
    }
    op += cplx(u / g.degree(a), 0) *
          (MonomialSum::number_op(local, 0) * MonomialSum::number_op(local, 1));
    op += cplx(u / g.degree(b), 0) *
          (MonomialSum::number_op(local, 2) * MonomialSum::number_op(local, 3));
    h.terms.push_back({a, b, op, op.to_dense()});
  }
  detail::normalize_terms(h);
  h.notes.push_back("on-site interaction split evenly over incident edges");
  h.notes.push_back("|E|-normalized densities vanish with growing coordination");
  return h;
}

// Quadratic-plus-density Hamiltonian sum_{m,m'} [ t_{m,m'} f_m^dag f_{m'} +
// v_{m,m'} n_m n_{m'} ] over global modes m = site*p + orbital. Same-site
// contributions are split evenly over the incident edges; sites without any
// edge keep them as recorded on-site remainders.
inline TwoLocalHamiltonian build_qc_hamiltonian(const Matrix& t, const Eigen::MatrixXd& v,
                                                int sites, int p) {
  const int modes = sites * p;
  if (t.rows() != modes || t.cols() != modes || v.rows() != modes || v.cols() != modes)
    throw std::invalid_argument("qc: coefficient matrices must be (sites*p) square");
  if (!is_hermitian(t)) throw std::invalid_argument("qc: hopping matrix must be Hermitian");
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("qc: density matrix must be symmetric");

  TwoLocalHamiltonian h;
  h.shape = SystemShape::make(sites, p);
  std::vector<std::pair<int, int>> edges;
  for (int m = 0; m < modes; ++m)
    for (int m2 = 0; m2 < modes; ++m2) {
      const int si = m / p, sj = m2 / p;
      if (si != sj && (std::abs(t(m, m2)) > 1e-15 || std::abs(v(m, m2)) > 1e-15))
        edges.push_back({si, sj});
    }
  h.graph = from_edge_list(sites, edges);

  const SystemShape local = detail::pair_shape(p);
  const SystemShape single{1, p};
  auto local_mode = [&](int m, int slot) { return slot * p + (m % p); };

  // Off-site couplings grouped by edge.
  for (const auto& [a, b] : h.graph.edges) {
    MonomialSum op(local);
    for (int m = a * p; m < (a + 1) * p; ++m)
      for (int m2 = b * p; m2 < (b + 1) * p; ++m2) {
        if (std::abs(t(m, m2)) > 1e-15)
          op += t(m, m2) * (MonomialSum::creator(local, local_mode(m, 0)) *
                            MonomialSum::annihilator(local, local_mode(m2, 1)));
        if (std::abs(t(m2, m)) > 1e-15)
          op += t(m2, m) * (MonomialSum::creator(local, local_mode(m2, 1)) *
                            MonomialSum::annihilator(local, local_mode(m, 0)));
        const double vv = v(m, m2) + v(m2, m);
        if (std::abs(vv) > 1e-15)
          op += cplx(vv, 0) * (MonomialSum::number_op(local, local_mode(m, 0)) *
                               MonomialSum::number_op(local, local_mode(m2, 1)));
      }
    h.terms.push_back({a, b, op, Matrix()});
  }

  // Same-site contributions.
  for (int site = 0; site < sites; ++site) {
    MonomialSum onsite(single);
    bool any = false;
    for (int m = site * p; m < (site + 1) * p; ++m)
      for (int m2 = site * p; m2 < (site + 1) * p; ++m2) {
        if (std::abs(t(m, m2)) > 1e-15) {
          onsite += t(m, m2) * (MonomialSum::creator(single, m % p) *
                                MonomialSum::annihilator(single, m2 % p));
          any = true;
        }
        if (std::abs(v(m, m2)) > 1e-15) {
          onsite += cplx(v(m, m2), 0) * (MonomialSum::number_op(single, m % p) *
                                         MonomialSum::number_op(single, m2 % p));
          any = true;
        }
      }
    if (!any) continue;
    const int deg = h.graph.degree(site);
    if (deg == 0) {
      h.isolated_onsite.push_back({site, onsite});
      h.notes.push_back("site " + std::to_string(site) +
                        " carries an on-site term but no edges");
      continue;
    }
    const MonomialSum share = onsite * cplx(1.0 / deg, 0);
    for (auto& term : h.terms) {
      if (term.i == site)
        term.local_op += share.relabel_sites(local, {0});
      else if (term.j == site)
        term.local_op += share.relabel_sites(local, {1});
    }
  }
  for (auto& term : h.terms) term.h2 = term.local_op.to_dense();
  detail::normalize_terms(h);
  h.notes.push_back("same-site terms split evenly over incident edges");
  return h;
}

// ---------------------------------------------------------------------------
// Exact ground states.
// ---------------------------------------------------------------------------

struct GroundState {
  double energy = 0.0;  // normalized units
  DensityState state;
  int degeneracy = 1;
};

inline GroundState ground_state(const TwoLocalHamiltonian& h) {
  const Matrix global = assemble_global(h);
  if (!is_hermitian(global)) throw std::invalid_argument("ground_state: Hamiltonian not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(global);
  const auto& vals = es.eigenvalues();
  const double e0 = vals(0);
  int degeneracy = 0;
  for (Eigen::Index idx = 0; idx < vals.size(); ++idx)
    if (vals(idx) <= e0 + 1e-9) ++degeneracy;
  const Vector ground = es.eigenvectors().col(0);
  return {e0, DensityState{h.shape, ground * ground.adjoint()}, degeneracy};
}

// ---------------------------------------------------------------------------
// Mode-product states and their optimization.
// ---------------------------------------------------------------------------

struct ModeProductState {
  SystemShape shape;
  std::vector<Matrix> locals;  // one density matrix per site, totally even
};

// Even locals make the fermionic product unambiguous: the global matrix is
// the plain tensor product in site-major order.
inline DensityState product_state_global(const ModeProductState& prod) {
  Matrix acc = Matrix::Ones(1, 1);
  for (auto it = prod.locals.rbegin(); it != prod.locals.rend(); ++it) {
    Matrix next(acc.rows() * it->rows(), acc.cols() * it->cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r)
      for (Eigen::Index c = 0; c < acc.cols(); ++c)
        next.block(r * it->rows(), c * it->cols(), it->rows(), it->cols()) = acc(r, c) * (*it);
    acc = std::move(next);
  }
  return {prod.shape, std::move(acc)};
}

namespace detail {

inline Matrix local_parity_diag(int p) {
  const int dloc = 1 << p;
  Matrix par = Matrix::Zero(dloc, dloc);
  for (int s = 0; s < dloc; ++s)
    par(s, s) = (std::popcount(unsigned(s)) & 1) ? cplx(-1, 0) : cplx(1, 0);
  return par;
}

// tr over the second (first) site of h2 (1 x sigma) ((sigma x 1)).
inline Matrix partial_against_second(const Matrix& h2, const Matrix& sigma, int p) {
  const int dloc = 1 << p;
  Matrix out = Matrix::Zero(dloc, dloc);
  for (int r0 = 0; r0 < dloc; ++r0)
    for (int c0 = 0; c0 < dloc; ++c0) {
      cplx acc(0, 0);
      for (int r1 = 0; r1 < dloc; ++r1)
        for (int c1 = 0; c1 < dloc; ++c1)
          acc += h2(r0 + (r1 << p), c0 + (c1 << p)) * sigma(c1, r1);
      out(r0, c0) = acc;
    }
  return out;
}

inline Matrix partial_against_first(const Matrix& h2, const Matrix& sigma, int p) {
  const int dloc = 1 << p;
  Matrix out = Matrix::Zero(dloc, dloc);
  for (int r1 = 0; r1 < dloc; ++r1)
    for (int c1 = 0; c1 < dloc; ++c1) {
      cplx acc(0, 0);
      for (int r0 = 0; r0 < dloc; ++r0)
        for (int c0 = 0; c0 < dloc; ++c0)
          acc += h2(r0 + (r1 << p), c0 + (c1 << p)) * sigma(c0, r0);
      out(r1, c1) = acc;
    }
  return out;
}

inline cplx pair_energy(const Matrix& h2, const Matrix& sig_i, const Matrix& sig_j, int p) {
  const int dloc = 1 << p;
  cplx acc(0, 0);
  for (int r0 = 0; r0 < dloc; ++r0)
    for (int c0 = 0; c0 < dloc; ++c0)
      for (int r1 = 0; r1 < dloc; ++r1)
        for (int c1 = 0; c1 < dloc; ++c1)
          acc += h2(r0 + (r1 << p), c0 + (c1 << p)) * sig_i(c0, r0) * sig_j(c1, r1);
  return acc;
}

// Ground projector of a parity-commuting local operator, solved inside the
// occupation-parity blocks so the result always commutes with the parity.
inline Matrix even_ground_projector(const Matrix& h_even, int p) {
  const int dloc = 1 << p;
  std::vector<int> even_idx, odd_idx;
  for (int s = 0; s < dloc; ++s)
    (std::popcount(unsigned(s)) & 1 ? odd_idx : even_idx).push_back(s);

  double best_val = std::numeric_limits<double>::infinity();
  Vector best_vec;
  for (const auto* block : {&even_idx, &odd_idx}) {
    const int bs = int(block->size());
    if (bs == 0) continue;
    Matrix sub(bs, bs);
    for (int r = 0; r < bs; ++r)
      for (int c = 0; c < bs; ++c) sub(r, c) = h_even((*block)[r], (*block)[c]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
    if (es.eigenvalues()(0) < best_val) {
      best_val = es.eigenvalues()(0);
      best_vec = Vector::Zero(dloc);
      for (int r = 0; r < bs; ++r) best_vec((*block)[r]) = es.eigenvectors()(r, 0);
    }
  }
  return best_vec * best_vec.adjoint();
}

inline Matrix random_even_local(int p, Rng& rng) {
  const int dloc = 1 << p;
  Matrix g(dloc, dloc);
  for (int c = 0; c < dloc; ++c)
    for (int r = 0; r < dloc; ++r) g(r, c) = cplx(rng.gaussian(), rng.gaussian());
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  const Matrix par = local_parity_diag(p);
  rho = 0.5 * (rho + par * rho * par);
  return rho;
}

}  // namespace detail

inline double product_energy_edges(const TwoLocalHamiltonian& h, const ModeProductState& prod) {
  double e = 0.0;
  const int p = h.shape.modes_per_site;
  for (const auto& t : h.terms)
    e += detail::pair_energy(t.h2, prod.locals[t.i], prod.locals[t.j], p).real();
  return e;
}

inline double product_energy_global(const TwoLocalHamiltonian& h, const ModeProductState& prod) {
  return (assemble_global(h) * product_state_global(prod).mat).trace().real();
}

struct ProductOptions {
  int restarts = 16;
  double tol = 1e-10;
  int max_iters = 500;
  std::uint64_t seed = 1;
};

struct ProductResult {
  ModeProductState state;
  double energy = 0.0;
  bool converged = true;
  int sweeps = 0;
  double max_increase = 0.0;  // worst per-update energy increase seen
};

// Cyclic coordinate descent: each site update minimizes the parity-even
// effective local operator exactly, so the energy never increases.
inline ProductResult optimize_product_state(const TwoLocalHamiltonian& h,
                                            const ProductOptions& opts = {}) {
  const int p = h.shape.modes_per_site;
  const int n = h.shape.sites;
  const int dloc = 1 << p;
  const Matrix par = detail::local_parity_diag(p);

  ProductResult best;
  best.energy = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < opts.restarts; ++restart) {
    std::vector<Matrix> locals(n);
    if (restart == 0) {
      for (auto& l : locals) {
        l = Matrix::Zero(dloc, dloc);
        l(0, 0) = 1.0;
      }
    } else if (restart == 1) {
      for (auto& l : locals) {
        l = Matrix::Zero(dloc, dloc);
        l(dloc - 1, dloc - 1) = 1.0;
      }
    } else {
      Rng rng(opts.seed, std::uint64_t(restart));
      for (auto& l : locals) l = detail::random_even_local(p, rng);
    }

    ModeProductState prod{h.shape, locals};
    double energy = product_energy_edges(h, prod);
    bool converged = false;
    int sweep = 0;
    double max_increase = 0.0;
    for (; sweep < opts.max_iters; ++sweep) {
      const double sweep_start = energy;
      for (int site = 0; site < n; ++site) {
        Matrix h_eff = Matrix::Zero(dloc, dloc);
        for (const auto& t : h.terms) {
          if (t.i == site)
            h_eff += detail::partial_against_second(t.h2, prod.locals[t.j], p);
          else if (t.j == site)
            h_eff += detail::partial_against_first(t.h2, prod.locals[t.i], p);
        }
        h_eff = 0.5 * (h_eff + h_eff.adjoint());      // guard roundoff
        h_eff = 0.5 * (h_eff + par * h_eff * par);    // parity symmetrization
        prod.locals[site] = detail::even_ground_projector(h_eff, p);
        const double updated = product_energy_edges(h, prod);
        max_increase = std::max(max_increase, updated - energy);
        energy = updated;
      }
      if (std::abs(sweep_start - energy) < opts.tol) {
        converged = true;
        ++sweep;
        break;
      }
    }
    if (energy < best.energy) {
      best.state = std::move(prod);
      best.energy = energy;
      best.converged = converged;
      best.sweeps = sweep;
      best.max_increase = max_increase;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Certificates.
// ---------------------------------------------------------------------------

inline CertificateReport certificate(const TwoLocalHamiltonian& h,
                                     const ProductOptions& opts = {},
                                     CoverMode cover_mode = CoverMode::Exact) {
  if (h.graph.edge_count() < 1) throw std::invalid_argument("certificate: empty edge set");
  if (!h.isolated_onsite.empty())
    throw std::invalid_argument("certificate: on-site remainders outside the edge set");
  const int p = h.shape.modes_per_site;
  const auto cover = vertex_cover(h.graph, cover_mode);

  const GroundState gs = ground_state(h);
  const ProductResult prod = optimize_product_state(h, opts);

  CertificateReport rep;
  rep.edge_count = h.graph.edge_count();
  rep.ground_energy = gs.energy;
  rep.product_energy = prod.energy;
  rep.delta = (prod.energy - gs.energy) / h.graph.edge_count();
  rep.bound = cor12_bound(p, h.graph, cover);
  rep.monogamy_term = thm11_bound(p, h.graph, cover, 0.0);
  rep.scale = h.scale;
  rep.ground_degeneracy = gs.degeneracy;
  rep.converged = prod.converged;
  rep.cover = cover;
  rep.pass = rep.delta <= rep.bound + kPassSlack;
  rep.notes = h.notes;
  rep.notes.push_back("cover term carries no /4; it is four times the edge-average variant");
  rep.notes.push_back("product minimum is an upper bound from coordinate descent");
  return rep;
}

}  // namespace fermext
