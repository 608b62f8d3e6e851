// Sampling without replacement, classical (conditional) mutual information,
// the decoupling selection, informationally complete measurements and the
// constructive separable approximation built from measure-and-condition.

#pragma once

#include "fermext/bounds.hpp"
#include "fermext/fock.hpp"
#include "fermext/graph.hpp"
#include "fermext/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fermext {

inline constexpr double kProbFloor = 1e-14;

// ---------------------------------------------------------------------------
// Probability mass functions.
// ---------------------------------------------------------------------------

struct Pmf {
  std::vector<double> p;

  int size() const { return int(p.size()); }
  int support_size() const {
    int s = 0;
    for (double v : p)
      if (v > 0.0) ++s;
    return s;
  }

  static Pmf make(std::vector<double> probs) {
    double sum = 0.0;
    for (double v : probs) {
      if (v < 0.0) throw std::invalid_argument("pmf: negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("pmf: probabilities must sum to 1");
    return Pmf{std::move(probs)};
  }
  static Pmf uniform(int n) {
    return Pmf{std::vector<double>(n, 1.0 / n)};
  }
  static Pmf point_mass(int n, int i) {
    std::vector<double> v(n, 0.0);
    v.at(i) = 1.0;
    return Pmf{std::move(v)};
  }
  // Uniform over a subset of [n].
  static Pmf uniform_on(int n, const std::vector<int>& support) {
    std::vector<double> v(n, 0.0);
    for (int i : support) v.at(i) = 1.0 / support.size();
    return Pmf{std::move(v)};
  }
};

// Law of k ordered draws without replacement:
// mu(i1)...mu(ik) / ((1-mu(i1)) (1-mu(i1)-mu(i2)) ... ), zero on repeats.
inline double swor_pmf(const Pmf& mu, const std::vector<int>& tuple) {
  const int k = int(tuple.size());
  if (k > mu.support_size())
    throw std::invalid_argument("swor_pmf: tuple longer than the support");
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (tuple[a] == tuple[b]) return 0.0;
  double value = 1.0;
  double removed = 0.0;
  for (int a = 0; a < k; ++a) {
    const double pa = mu.p.at(tuple[a]);
    if (a > 0) {
      const double denom = 1.0 - removed;
      if (denom <= 1e-15) throw std::runtime_error("swor_pmf: denominator underflow");
      value /= denom;
    }
    value *= pa;
    removed += pa;
  }
  return value;
}

// Distinct-tuple product law mu(i1)...mu(im) / Z_m. This is NOT the law of
// sequential draws without replacement; it is kept only as a falsification
// target for the marginal-consistency identity and never enters the pipeline.
inline double distinct_product_pmf(const Pmf& mu, const std::vector<int>& tuple) {
  const int m = int(tuple.size());
  if (m > mu.support_size())
    throw std::invalid_argument("distinct_product_pmf: tuple longer than the support");
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      if (tuple[a] == tuple[b]) return 0.0;
  const int n = mu.size();
  // Z_m by recursion over ordered distinct tuples.
  std::vector<int> idx;
  double z = 0.0;
  auto rec = [&](auto&& self, double acc, std::uint64_t used, int depth) -> void {
    if (depth == m) {
      z += acc;
      return;
    }
    for (int i = 0; i < n; ++i)
      if (!(used >> i & 1) && mu.p[i] > 0.0)
        self(self, acc * mu.p[i], used | (std::uint64_t{1} << i), depth + 1);
  };
  rec(rec, 1.0, 0, 0);
  double num = 1.0;
  for (int a = 0; a < m; ++a) num *= mu.p.at(tuple[a]);
  return num / z;
}

namespace detail {

template <typename PmfFn>
double marginal_check_impl(const Pmf& mu, int k, PmfFn&& pmf) {
  const int n = mu.size();
  double worst = 0.0;
  std::vector<int> tuple(k);
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == k) {
      double extended = 0.0;
      std::vector<int> longer = tuple;
      longer.push_back(0);
      for (int i = 0; i < n; ++i) {
        longer[k] = i;
        extended += pmf(mu, longer);
      }
      worst = std::max(worst, std::abs(extended - pmf(mu, tuple)));
      return;
    }
    for (int i = 0; i < n; ++i) {
      bool dup = false;
      for (int a = 0; a < depth; ++a) dup = dup || tuple[a] == i;
      if (dup) continue;
      tuple[depth] = i;
      self(self, depth + 1);
    }
  };
  rec(rec, 0);
  return worst;
}

}  // namespace detail

// Max over k-tuples of | sum over last entries of the (k+1)-draw law minus
// the k-draw law |; identically ~0 for the sequential-draw law.
inline double swor_marginal_check(const Pmf& mu, int k) {
  if (k + 1 > mu.support_size())
    throw std::invalid_argument("swor_marginal_check: k+1 exceeds the support");
  return detail::marginal_check_impl(mu, k, [](const Pmf& m, const std::vector<int>& t) {
    return swor_pmf(m, t);
  });
}

inline double distinct_product_marginal_check(const Pmf& mu, int k) {
  if (k + 1 > mu.support_size())
    throw std::invalid_argument("distinct_product_marginal_check: k+1 exceeds the support");
  return detail::marginal_check_impl(mu, k, [](const Pmf& m, const std::vector<int>& t) {
    return distinct_product_pmf(m, t);
  });
}

// Sequential sampler: draw, remove mass, renormalize.
inline std::vector<int> swor_sample(const Pmf& mu, int k, Rng& rng) {
  if (k > mu.support_size())
    throw std::invalid_argument("swor_sample: k exceeds the support");
  std::vector<double> mass = mu.p;
  double total = 1.0;
  std::vector<int> out;
  out.reserve(k);
  for (int draw = 0; draw < k; ++draw) {
    const double u = rng.uniform() * total;
    double cum = 0.0;
    int pick = -1;
    for (int i = 0; i < int(mass.size()); ++i) {
      if (mass[i] <= 0.0) continue;
      cum += mass[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    if (pick < 0) {  // numerical edge: take the last supported index
      for (int i = int(mass.size()) - 1; i >= 0; --i)
        if (mass[i] > 0.0) {
          pick = i;
          break;
        }
    }
    out.push_back(pick);
    total -= mass[pick];
    mass[pick] = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Joint distributions over n variables with d outcomes each.
// ---------------------------------------------------------------------------

struct JointDistribution {
  int n = 0;  // variables
  int d = 0;  // outcomes per variable
  std::vector<double> p;  // flat table, variable 0 least significant

  std::size_t table_size() const { return p.size(); }
  int digit(std::size_t idx, int var) const {
    std::size_t q = idx;
    for (int l = 0; l < var; ++l) q /= d;
    return int(q % d);
  }

  static JointDistribution make(int n, int d, std::vector<double> table) {
    if (n < 1 || d < 2) throw std::invalid_argument("joint: need n >= 1, d >= 2");
    if (n * std::log2(double(d)) > 24.0 + 1e-9)
      throw std::invalid_argument("joint: table too large (n log2 d > 24)");
    std::size_t expect = 1;
    for (int l = 0; l < n; ++l) expect *= std::size_t(d);
    if (table.size() != expect) throw std::invalid_argument("joint: table size mismatch");
    double sum = 0.0;
    for (double v : table) {
      if (v < 0.0) throw std::invalid_argument("joint: negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10)
      throw std::invalid_argument("joint: entries must sum to 1");
    return {n, d, std::move(table)};
  }

  static JointDistribution random(int n, int d, Rng& rng) {
    std::size_t size = 1;
    for (int l = 0; l < n; ++l) size *= std::size_t(d);
    std::vector<double> t(size);
    double sum = 0.0;
    for (auto& v : t) {
      v = -std::log(1.0 - rng.uniform());
      sum += v;
    }
    for (auto& v : t) v /= sum;
    return make(n, d, std::move(t));
  }

  static JointDistribution product_of(const std::vector<std::vector<double>>& locals) {
    const int n = int(locals.size());
    const int d = int(locals.at(0).size());
    std::size_t size = 1;
    for (int l = 0; l < n; ++l) size *= std::size_t(d);
    std::vector<double> t(size, 1.0);
    for (std::size_t idx = 0; idx < size; ++idx) {
      std::size_t q = idx;
      for (int l = 0; l < n; ++l) {
        t[idx] *= locals[l].at(q % d);
        q /= d;
      }
    }
    return make(n, d, std::move(t));
  }
};

// Marginal over `vars`, result indexed with vars[0] least significant.
inline std::vector<double> marginal_table(const JointDistribution& j,
                                          const std::vector<int>& vars) {
  std::size_t out_size = 1;
  for (std::size_t l = 0; l < vars.size(); ++l) out_size *= std::size_t(j.d);
  std::vector<double> out(out_size, 0.0);
  for (std::size_t idx = 0; idx < j.p.size(); ++idx) {
    if (j.p[idx] == 0.0) continue;
    std::size_t key = 0, stride = 1;
    for (int v : vars) {
      key += std::size_t(j.digit(idx, v)) * stride;
      stride *= std::size_t(j.d);
    }
    out[key] += j.p[idx];
  }
  return out;
}

inline double shannon_entropy_nats(const std::vector<double>& table) {
  double h = 0.0;
  for (double v : table)
    if (v > kProbFloor) h -= v * std::log(v);
  return h;
}

// I(A : B) = S(A) + S(B) - S(AB), in nats.
inline double mutual_information(const JointDistribution& j, const std::vector<int>& a,
                                 const std::vector<int>& b) {
  for (int x : a)
    for (int y : b)
      if (x == y) throw std::invalid_argument("mutual_information: overlapping sets");
  std::vector<int> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  return shannon_entropy_nats(marginal_table(j, a)) +
         shannon_entropy_nats(marginal_table(j, b)) -
         shannon_entropy_nats(marginal_table(j, ab));
}

// I(X_a : X_b | X_C) as the conditional-outcome average of pair MI; outcomes
// below the probability floor are skipped and the retained mass renormalized.
inline double conditional_mutual_information(const JointDistribution& j, int a, int b,
                                             const std::vector<int>& c) {
  if (a == b) throw std::invalid_argument("cmi: a and b must differ");
  for (int x : c)
    if (x == a || x == b) throw std::invalid_argument("cmi: conditioning set hits the pair");
  std::vector<int> vars{a, b};
  vars.insert(vars.end(), c.begin(), c.end());
  const auto table = marginal_table(j, vars);
  const std::size_t dd = std::size_t(j.d) * std::size_t(j.d);
  std::size_t blocks = 1;
  for (std::size_t l = 0; l < c.size(); ++l) blocks *= std::size_t(j.d);

  double total_mass = 0.0;
  double acc = 0.0;
  std::vector<double> pa(j.d), pb(j.d);
  for (std::size_t x = 0; x < blocks; ++x) {
    double mass = 0.0;
    for (std::size_t t = 0; t < dd; ++t) mass += table[x * dd + t];
    if (mass < kProbFloor) continue;
    total_mass += mass;
    std::fill(pa.begin(), pa.end(), 0.0);
    std::fill(pb.begin(), pb.end(), 0.0);
    double hab = 0.0;
    for (std::size_t t = 0; t < dd; ++t) {
      const double v = table[x * dd + t] / mass;
      pa[t % j.d] += v;
      pb[t / j.d] += v;
      if (v > kProbFloor) hab -= v * std::log(v);
    }
    acc += mass * (shannon_entropy_nats(pa) + shannon_entropy_nats(pb) - hab);
  }
  if (total_mass < kProbFloor) return 0.0;
  return acc / total_mass;
}

// ---------------------------------------------------------------------------
// Decoupling selection.
// ---------------------------------------------------------------------------

struct DecouplingResult {
  int k_prime = 0;
  std::vector<int> conditioning;  // chosen C (ascending)
  double achieved = 0.0;          // weighted CMI sum at the chosen (k', C)
  double average = 0.0;           // E_{k'<k} E_{C ~ mu^{*k'}} of the same sum
  double mi_bound = 0.0;          // (1/k) E_{i~pi} I(X_i : X_{-i})
  double entropy_bound = 0.0;     // ln(d)/k
  bool exhaustive = true;         // false: Monte Carlo estimate of the average
};

namespace detail {

// Weighted CMI sum over pairs; pairs touching C contribute zero (conditioning
// on a member of the pair makes it deterministic).
inline double weighted_cmi_sum(const JointDistribution& j, const Pmf& pi, const Pmf& mu,
                               const std::vector<int>& c) {
  double acc = 0.0;
  for (int a = 0; a < j.n; ++a) {
    if (pi.p[a] == 0.0) continue;
    if (std::find(c.begin(), c.end(), a) != c.end()) continue;
    for (int b = 0; b < j.n; ++b) {
      if (b == a || mu.p[b] == 0.0) continue;
      if (std::find(c.begin(), c.end(), b) != c.end()) continue;
      acc += pi.p[a] * mu.p[b] * conditional_mutual_information(j, a, b, c);
    }
  }
  return acc;
}

}  // namespace detail

// Averages the weighted CMI sum over k' < k and C ~ mu^{*k'} and returns the
// minimizing (k', C). Small candidate spaces are enumerated exhaustively and
// the chain
//   average <= (1/k) E_{i~pi} I(X_i : X_{-i}) <= ln(d)/k
// is checked; beyond `exhaustive_limit` candidate tuples the average is a
// fixed-seed Monte Carlo estimate (noisy, so not asserted) and minimization
// runs over the sampled candidates.
inline DecouplingResult decoupling_select(const JointDistribution& j, const Pmf& pi,
                                          const Pmf& mu, int k,
                                          std::size_t exhaustive_limit = 200000) {
  if (pi.size() != j.n || mu.size() != j.n)
    throw std::invalid_argument("decoupling_select: pmf sizes must match the variable count");
  if (k < 1 || k >= mu.support_size())
    throw std::invalid_argument("decoupling_select: need 1 <= k < |supp(mu)|");

  std::map<std::uint64_t, double> value_by_set;
  auto value_of = [&](std::uint64_t set_mask) {
    auto it = value_by_set.find(set_mask);
    if (it != value_by_set.end()) return it->second;
    std::vector<int> c;
    for (int i = 0; i < j.n; ++i)
      if (set_mask >> i & 1) c.push_back(i);
    const double v = detail::weighted_cmi_sum(j, pi, mu, c);
    value_by_set.emplace(set_mask, v);
    return v;
  };

  const int support = mu.support_size();
  double tuple_count = 0.0;
  {
    double layer = 1.0;
    for (int kp = 0; kp < k; ++kp) {
      tuple_count += layer;
      layer *= double(support - kp);
    }
  }

  DecouplingResult best;
  best.achieved = std::numeric_limits<double>::infinity();
  best.exhaustive = tuple_count <= double(exhaustive_limit);
  double average = 0.0;

  auto offer = [&](int kp, std::uint64_t mask) {
    const double val = value_of(mask);
    if (val < best.achieved) {
      best.achieved = val;
      best.k_prime = kp;
      best.conditioning.clear();
      for (int i = 0; i < j.n; ++i)
        if (mask >> i & 1) best.conditioning.push_back(i);
    }
  };

  if (best.exhaustive) {
    // Ordered tuples with their sequential-draw weights; the CMI value only
    // depends on the underlying set.
    auto rec = [&](auto&& self, std::uint64_t used, double weight, double removed,
                   int depth, int target) -> void {
      if (depth == target) {
        average += weight * value_of(used) / double(k);
        return;
      }
      for (int i = 0; i < j.n; ++i) {
        if (used >> i & 1 || mu.p[i] == 0.0) continue;
        const double denom = depth == 0 ? 1.0 : 1.0 - removed;
        if (denom <= 1e-15)
          throw std::runtime_error("decoupling_select: denominator underflow");
        self(self, used | (std::uint64_t{1} << i), weight * mu.p[i] / denom,
             removed + mu.p[i], depth + 1, target);
      }
    };
    std::vector<int> supp_idx;
    for (int i = 0; i < j.n; ++i)
      if (mu.p[i] > 0.0) supp_idx.push_back(i);
    for (int kp = 0; kp < k; ++kp) {
      rec(rec, 0, 1.0, 0.0, 0, kp);
      std::vector<int> pick(kp);
      auto choose = [&](auto&& self, int start, int depth) -> void {
        if (depth == kp) {
          std::uint64_t mask = 0;
          for (int v : pick) mask |= std::uint64_t{1} << v;
          offer(kp, mask);
          return;
        }
        for (int idx = start; idx < int(supp_idx.size()); ++idx) {
          pick[depth] = supp_idx[idx];
          self(self, idx + 1, depth + 1);
        }
      };
      choose(choose, 0, 0);
    }
  } else {
    Rng rng(0xdec0);
    const int draws = 2000;
    for (int s = 0; s < draws; ++s) {
      const int kp = int(rng.below(std::uint64_t(k)));
      const auto tuple = swor_sample(mu, kp, rng);
      std::uint64_t mask = 0;
      for (int v : tuple) mask |= std::uint64_t{1} << v;
      average += value_of(mask) / double(draws);
      offer(kp, mask);
    }
  }

  best.average = average;
  std::vector<int> rest;
  double mi_avg = 0.0;
  for (int i = 0; i < j.n; ++i) {
    if (pi.p[i] == 0.0) continue;
    rest.clear();
    for (int l = 0; l < j.n; ++l)
      if (l != i) rest.push_back(l);
    mi_avg += pi.p[i] * mutual_information(j, {i}, rest);
  }
  best.mi_bound = mi_avg / k;
  best.entropy_bound = std::log(double(j.d)) / k;
  if (best.mi_bound > best.entropy_bound + 1e-10)
    throw std::logic_error("decoupling_select: entropy bound violated");
  if (best.exhaustive && best.average > best.mi_bound + 1e-10)
    throw std::logic_error("decoupling_select: averaged decoupling chain violated");
  return best;
}

// ---------------------------------------------------------------------------
// Informationally complete measurements.
// ---------------------------------------------------------------------------

struct ICPOVM {
  int d = 0;
  std::vector<Matrix> effects;  // PSD, summing to the identity
  double kappa_measured = 0.0;  // max ||xi||_1 / ||Lambda(xi)||_1 over a traceless basis
};

// ||Lambda(xi)||_1 = sum_m |tr(E_m xi)|.
inline double povm_image_l1(const ICPOVM& povm, const Matrix& xi) {
  double s = 0.0;
  for (const auto& e : povm.effects) s += std::abs((e * xi).trace());
  return s;
}

namespace detail {

// Hermitian traceless basis elements normalized to unit trace norm.
inline std::vector<Matrix> traceless_unit_basis(int d) {
  std::vector<Matrix> basis;
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) {
      Matrix x = Matrix::Zero(d, d);
      x(r, c) = cplx(0.5, 0);
      x(c, r) = cplx(0.5, 0);
      basis.push_back(x);
      Matrix y = Matrix::Zero(d, d);
      y(r, c) = cplx(0, -0.5);
      y(c, r) = cplx(0, 0.5);
      basis.push_back(y);
    }
  for (int r = 0; r + 1 < d; ++r) {
    Matrix z = Matrix::Zero(d, d);
    z(r, r) = cplx(0.5, 0);
    z(r + 1, r + 1) = cplx(-0.5, 0);
    basis.push_back(z);
  }
  return basis;
}

inline double measure_kappa(const ICPOVM& povm) {
  double kappa = 0.0;
  for (const auto& xi : traceless_unit_basis(povm.d)) {
    const double image = povm_image_l1(povm, xi);
    if (image <= 1e-14) return std::numeric_limits<double>::infinity();
    kappa = std::max(kappa, trace_norm(xi) / image);
  }
  return kappa;
}

inline void append_basis_effects(std::vector<Matrix>& effects,
                                 const std::vector<Vector>& basis, double weight) {
  for (const auto& v : basis) effects.push_back(weight * (v * v.adjoint()));
}

}  // namespace detail

// d = 2: uniformly weighted six-outcome Pauli-eigenbasis measurement.
// d = 3: uniform union of the four mutually unbiased bases.
// d = 4: randomized rank-one design, symmetrized to resolve the identity.
inline ICPOVM build_ic_povm(int d) {
  ICPOVM povm;
  povm.d = d;
  if (d == 2) {
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<Vector> vecs;
    Vector v(2);
    v << 1, 0;
    vecs.push_back(v);
    v << 0, 1;
    vecs.push_back(v);
    v << s, s;
    vecs.push_back(v);
    v << s, -s;
    vecs.push_back(v);
    v << s, cplx(0, 1) * s;
    vecs.push_back(v);
    v << s, cplx(0, -1) * s;
    vecs.push_back(v);
    detail::append_basis_effects(povm.effects, vecs, 1.0 / 3.0);
  } else if (d == 3) {
    std::vector<Vector> vecs;
    for (int j = 0; j < 3; ++j) {
      Vector v = Vector::Zero(3);
      v(j) = 1;
      vecs.push_back(v);
    }
    const cplx omega = std::exp(cplx(0, 2.0 * M_PI / 3.0));
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < 3; ++j) {
        Vector v(3);
        for (int x = 0; x < 3; ++x)
          v(x) = std::pow(omega, double(a * x * x + j * x)) / std::sqrt(3.0);
        vecs.push_back(v);
      }
    detail::append_basis_effects(povm.effects, vecs, 1.0 / 4.0);
  } else if (d == 4) {
    // Pick the random design (over a few fixed seeds) with the best measured
    // distortion; 2 d^2 random states span the operator space almost surely.
    ICPOVM best;
    best.kappa_measured = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      Rng rng(0xfe44ull, seed);
      std::vector<Vector> vecs;
      for (int m = 0; m < 2 * d * d; ++m) {
        Vector v(d);
        for (int r = 0; r < d; ++r) v(r) = cplx(rng.gaussian(), rng.gaussian());
        v.normalize();
        vecs.push_back(v);
      }
      Matrix s = Matrix::Zero(d, d);
      for (const auto& v : vecs) s += v * v.adjoint();
      Eigen::SelfAdjointEigenSolver<Matrix> es(s);
      Matrix s_inv_sqrt = es.operatorInverseSqrt();
      ICPOVM candidate;
      candidate.d = d;
      for (const auto& v : vecs) {
        Vector w = s_inv_sqrt * v;
        candidate.effects.push_back(w * w.adjoint());
      }
      candidate.kappa_measured = detail::measure_kappa(candidate);
      if (candidate.kappa_measured < best.kappa_measured) best = candidate;
    }
    povm = best;
  } else {
    throw std::invalid_argument("build_ic_povm: supported dimensions are 2, 3, 4");
  }
  if (povm.kappa_measured == 0.0) povm.kappa_measured = detail::measure_kappa(povm);
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& e : povm.effects) sum += e;
  if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12)
    throw std::logic_error("build_ic_povm: effects do not resolve the identity");
  if (povm.kappa_measured > 18.0 * d)
    throw std::logic_error("build_ic_povm: measured distortion exceeds 18d");
  return povm;
}

// ---------------------------------------------------------------------------
// Distinguishable-particle states and measure-and-condition.
// ---------------------------------------------------------------------------

struct SpinState {
  int n = 0;
  int d = 0;
  Matrix mat;

  std::int64_t dim() const {
    std::int64_t s = 1;
    for (int l = 0; l < n; ++l) s *= d;
    return s;
  }
};

inline SpinState hs_random_spin_state(int n, int d, Rng& rng) {
  SpinState st{n, d, {}};
  const auto dim = st.dim();
  Matrix g(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = cplx(rng.gaussian(), rng.gaussian());
  st.mat = g * g.adjoint();
  st.mat /= st.mat.trace().real();
  return st;
}

inline SpinState product_spin_state(const std::vector<Matrix>& locals) {
  SpinState st{int(locals.size()), int(locals.at(0).rows()), Matrix::Ones(1, 1)};
  Matrix acc = Matrix::Ones(1, 1);
  // Site 0 is the least significant tensor factor.
  for (auto it = locals.rbegin(); it != locals.rend(); ++it) {
    Matrix next(acc.rows() * it->rows(), acc.cols() * it->cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r)
      for (Eigen::Index c = 0; c < acc.cols(); ++c)
        next.block(r * it->rows(), c * it->cols(), it->rows(), it->cols()) = acc(r, c) * (*it);
    acc = std::move(next);
  }
  st.mat = std::move(acc);
  return st;
}

// Marginal over `keep` (ordered; keep[0] least significant in the result).
inline Matrix spin_marginal(const SpinState& st, const std::vector<int>& keep) {
  std::vector<int> rest;
  for (int l = 0; l < st.n; ++l)
    if (std::find(keep.begin(), keep.end(), l) == keep.end()) rest.push_back(l);
  std::int64_t keep_dim = 1;
  for (std::size_t l = 0; l < keep.size(); ++l) keep_dim *= st.d;
  std::int64_t rest_dim = 1;
  for (std::size_t l = 0; l < rest.size(); ++l) rest_dim *= st.d;

  auto full_index = [&](std::int64_t kidx, std::int64_t ridx) {
    std::int64_t idx = 0;
    std::int64_t kq = kidx;
    for (int site : keep) {
      std::int64_t digit = kq % st.d;
      kq /= st.d;
      std::int64_t stride = 1;
      for (int l = 0; l < site; ++l) stride *= st.d;
      idx += digit * stride;
    }
    std::int64_t rq = ridx;
    for (int site : rest) {
      std::int64_t digit = rq % st.d;
      rq /= st.d;
      std::int64_t stride = 1;
      for (int l = 0; l < site; ++l) stride *= st.d;
      idx += digit * stride;
    }
    return idx;
  };

  Matrix out = Matrix::Zero(keep_dim, keep_dim);
  for (std::int64_t kr = 0; kr < keep_dim; ++kr)
    for (std::int64_t kc = 0; kc < keep_dim; ++kc) {
      cplx acc(0, 0);
      for (std::int64_t r = 0; r < rest_dim; ++r)
        acc += st.mat(full_index(kr, r), full_index(kc, r));
      out(kr, kc) = acc;
    }
  return out;
}

// Classical joint of measuring every site with the same POVM.
inline JointDistribution joint_from_povm(const SpinState& rho, const ICPOVM& povm) {
  const int m = int(povm.effects.size());
  std::size_t size = 1;
  for (int l = 0; l < rho.n; ++l) size *= std::size_t(m);
  std::vector<double> table(size, 0.0);

  // Condition the least significant remaining site at each level.
  auto condition_first = [&](const Matrix& state, int sites_left, const Matrix& effect) {
    const std::int64_t sub = state.rows() / rho.d;
    Matrix out = Matrix::Zero(sub, sub);
    for (std::int64_t r = 0; r < sub; ++r)
      for (std::int64_t c = 0; c < sub; ++c) {
        cplx acc(0, 0);
        for (int a = 0; a < rho.d; ++a)
          for (int b = 0; b < rho.d; ++b)
            acc += effect(a, b) * state(b + rho.d * r, a + rho.d * c);
        out(r, c) = acc;
      }
    (void)sites_left;
    return out;
  };

  auto rec = [&](auto&& self, const Matrix& state, int depth, std::size_t partial,
                 std::size_t stride) -> void {
    if (depth == rho.n) {
      table[partial] = state(0, 0).real();
      return;
    }
    for (int x = 0; x < m; ++x)
      self(self, condition_first(state, rho.n - depth, povm.effects[x]), depth + 1,
           partial + stride * std::size_t(x), stride * std::size_t(m));
  };
  rec(rec, rho.mat, 0, 0, 1);

  double sum = 0.0;
  for (double& v : table) {
    if (v < 0.0 && v > -1e-12) v = 0.0;
    sum += v;
  }
  for (double& v : table) v /= sum;
  return JointDistribution::make(rho.n, m, std::move(table));
}

struct ConditionedBranch {
  double prob = 0.0;
  std::vector<int> outcome;  // one POVM outcome per conditioned site
  Matrix state;              // full-system state, measured sites maximally mixed
};

// Measures the sites in C, conditions on each outcome tuple, and replaces the
// measured sites by maximally mixed factors. Branch probabilities below the
// floor are dropped and the remaining mass renormalized.
inline std::vector<ConditionedBranch> measure_and_condition(const SpinState& rho,
                                                            const std::vector<int>& c,
                                                            const ICPOVM& povm) {
  for (std::size_t a = 0; a < c.size(); ++a) {
    if (c[a] < 0 || c[a] >= rho.n) throw std::out_of_range("measure_and_condition: site range");
    for (std::size_t b = a + 1; b < c.size(); ++b)
      if (c[a] == c[b]) throw std::invalid_argument("measure_and_condition: repeated site");
  }
  const int m = int(povm.effects.size());
  double branches = 1.0;
  for (std::size_t l = 0; l < c.size(); ++l) branches *= m;
  if (branches > 2e5) throw std::invalid_argument("measure_and_condition: outcome explosion");

  if (c.empty()) return {{1.0, {}, rho.mat}};

  // Condition site `site` with `effect`, keeping the site count (the measured
  // site is replaced in place by 1/d).
  auto condition_replace = [&](const Matrix& state, int site, const Matrix& effect) {
    const std::int64_t dim = state.rows();
    std::int64_t stride = 1;
    for (int l = 0; l < site; ++l) stride *= rho.d;
    Matrix out = Matrix::Zero(dim, dim);
    for (std::int64_t r = 0; r < dim; ++r) {
      const int rd = int(r / stride % rho.d);
      const std::int64_t rbase = r - rd * stride;
      for (std::int64_t col = 0; col < dim; ++col) {
        const int cd = int(col / stride % rho.d);
        if (rd != cd) continue;  // maximally mixed insert is diagonal
        const std::int64_t cbase = col - cd * stride;
        cplx acc(0, 0);
        for (int a = 0; a < rho.d; ++a)
          for (int b = 0; b < rho.d; ++b)
            acc += effect(a, b) * state(rbase + b * stride, cbase + a * stride);
        out(r, col) = acc / double(rho.d);
      }
    }
    return out;
  };

  std::vector<ConditionedBranch> out;
  std::vector<int> outcome(c.size(), 0);
  auto rec = [&](auto&& self, const Matrix& state, std::size_t depth) -> void {
    if (depth == c.size()) {
      const double prob = state.trace().real();
      if (prob < kProbFloor) return;
      ConditionedBranch branch;
      branch.prob = prob;
      branch.outcome = outcome;
      branch.state = state / prob;
      out.push_back(std::move(branch));
      return;
    }
    for (int x = 0; x < m; ++x) {
      outcome[depth] = x;
      self(self, condition_replace(state, c[depth], povm.effects[x]), depth + 1);
    }
  };
  rec(rec, rho.mat, 0);

  double mass = 0.0;
  for (const auto& b : out) mass += b.prob;
  for (auto& b : out) b.prob /= mass;
  return out;
}

// ---------------------------------------------------------------------------
// Constructive separable approximation.
// ---------------------------------------------------------------------------

struct ApproxWeighting {
  enum class Kind { Star, Bipartite, General };
  Kind kind = Kind::Star;
  int n = 0;
  Pmf pi{{}};
  Pmf mu{{}};
  Eigen::MatrixXd pair_weight;  // w(i,j), ordered pairs, sums to 1
  std::optional<WeightMatrix> weights;
};

// Root at site 0, conditioning drawn from the leaves.
inline ApproxWeighting star_weighting(int n) {
  if (n < 2) throw std::invalid_argument("star_weighting: need n >= 2");
  ApproxWeighting w;
  w.kind = ApproxWeighting::Kind::Star;
  w.n = n;
  w.pi = Pmf::point_mass(n, 0);
  std::vector<int> leaves;
  for (int i = 1; i < n; ++i) leaves.push_back(i);
  w.mu = Pmf::uniform_on(n, leaves);
  w.pair_weight = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) w.pair_weight(0, j) = 1.0 / (n - 1);
  return w;
}

inline ApproxWeighting bipartite_weighting(int a, int b) {
  if (a < 1 || b < 1) throw std::invalid_argument("bipartite_weighting: need parts >= 1");
  ApproxWeighting w;
  w.kind = ApproxWeighting::Kind::Bipartite;
  w.n = a + b;
  std::vector<int> first, second;
  for (int i = 0; i < a; ++i) first.push_back(i);
  for (int i = 0; i < b; ++i) second.push_back(a + i);
  w.pi = Pmf::uniform_on(w.n, first);
  w.mu = Pmf::uniform_on(w.n, second);
  w.pair_weight = Eigen::MatrixXd::Zero(w.n, w.n);
  for (int i : first)
    for (int j : second) w.pair_weight(i, j) = 1.0 / (double(a) * double(b));
  return w;
}

inline ApproxWeighting general_weighting(const WeightMatrix& wm) {
  ApproxWeighting w;
  w.kind = ApproxWeighting::Kind::General;
  w.n = int(wm.G.rows());
  std::vector<double> pi(w.n);
  for (int i = 0; i < w.n; ++i) pi[i] = wm.pi(i);
  w.pi = Pmf::make(pi);
  w.mu = w.pi;  // conditioning follows the coupling marginal
  w.pair_weight = wm.G;
  w.weights = wm;
  return w;
}

struct ProductBranch {
  double prob = 0.0;
  std::vector<Matrix> locals;
};

struct SeparableApprox {
  std::vector<ProductBranch> ensemble;
  double measured = 0.0;
  int k_prime = 0;
  std::vector<int> conditioning;
  double bound = 0.0;
  std::optional<double> bound_appendix;  // 18-constant star variant
  double kappa = 0.0;
  bool pass = true;
  std::vector<std::string> notes;
};

// Builds the conditioned product-of-marginals mixture and measures the
// weighted average two-site trace distance against it.
inline SeparableApprox build_separable_approx(const SpinState& rho,
                                              const ApproxWeighting& weighting, int k) {
  if (weighting.n != rho.n)
    throw std::invalid_argument("build_separable_approx: weighting size mismatch");
  if (rho.n * std::log2(double(rho.d)) > 12.0 + 1e-9)
    throw std::invalid_argument("build_separable_approx: state exceeds the dimension cap");
  if (k < 1 || k >= weighting.mu.support_size())
    throw std::invalid_argument("build_separable_approx: need 1 <= k < |supp(mu)|");

  const ICPOVM povm = build_ic_povm(rho.d);
  const JointDistribution joint = joint_from_povm(rho, povm);

  // Candidate conditioning sets: subsets of supp(mu) of size < k.
  std::vector<int> support;
  for (int i = 0; i < rho.n; ++i)
    if (weighting.mu.p[i] > 0.0) support.push_back(i);

  double best_score = std::numeric_limits<double>::infinity();
  std::vector<int> best_c;
  auto consider = [&](const std::vector<int>& c) {
    double score = 0.0;
    if (weighting.kind == ApproxWeighting::Kind::General) {
      // Printed selection combination: P(C) + 18 d (32 gamma_C tr A^2)^{1/4}.
      double pc = 0.0;
      for (int i : c) pc += 4.0 * weighting.pi.p[i];
      double gamma = detail::weighted_cmi_sum(joint, weighting.pi, weighting.pi, c);
      score = pc + 18.0 * rho.d *
                       std::pow(32.0 * std::max(gamma, 0.0) *
                                    weighting.weights->tr_A_squared,
                                0.25);
    } else {
      score = detail::weighted_cmi_sum(joint, weighting.pi, weighting.mu, c);
    }
    if (score < best_score - 1e-15) {
      best_score = score;
      best_c = c;
    }
  };
  std::vector<int> pick;
  auto choose = [&](auto&& self, int start, int depth, int target) -> void {
    if (depth == target) {
      consider(pick);
      return;
    }
    for (int idx = start; idx < int(support.size()); ++idx) {
      pick.push_back(support[idx]);
      self(self, idx + 1, depth + 1, target);
      pick.pop_back();
    }
  };
  for (int kp = 0; kp < k; ++kp) choose(choose, 0, 0, kp);

  SeparableApprox result;
  result.k_prime = int(best_c.size());
  result.conditioning = best_c;
  result.kappa = povm.kappa_measured;

  const auto branches = measure_and_condition(rho, best_c, povm);
  for (const auto& branch : branches) {
    ProductBranch pb;
    pb.prob = branch.prob;
    const SpinState full{rho.n, rho.d, branch.state};
    for (int site = 0; site < rho.n; ++site) pb.locals.push_back(spin_marginal(full, {site}));
    result.ensemble.push_back(std::move(pb));
  }

  double measured = 0.0;
  for (int i = 0; i < rho.n; ++i)
    for (int jv = 0; jv < rho.n; ++jv) {
      if (i == jv) continue;
      const double w = weighting.pair_weight(i, jv);
      if (w == 0.0) continue;
      const Matrix rho_ij = spin_marginal(rho, {i, jv});
      Matrix sigma_ij = Matrix::Zero(rho.d * rho.d, rho.d * rho.d);
      for (const auto& pb : result.ensemble) {
        Matrix prod(rho.d * rho.d, rho.d * rho.d);
        for (Eigen::Index r2 = 0; r2 < rho.d; ++r2)
          for (Eigen::Index c2 = 0; c2 < rho.d; ++c2)
            prod.block(r2 * rho.d, c2 * rho.d, rho.d, rho.d) =
                pb.locals[jv](r2, c2) * pb.locals[i];
        sigma_ij += pb.prob * prod;
      }
      measured += w * trace_norm(Matrix(rho_ij - sigma_ij));
    }
  result.measured = measured;

  switch (weighting.kind) {
    case ApproxWeighting::Kind::Star:
      result.bound = thm10_star(rho.d, rho.n);
      result.bound_appendix = thm10_star_appendix(rho.d, rho.n);
      break;
    case ApproxWeighting::Kind::Bipartite: {
      const int b_size = weighting.mu.support_size();
      result.bound = 22.0 * std::cbrt(double(rho.d) * rho.d * std::log(double(rho.d)) / b_size);
      result.notes.push_back("bipartite bound evaluated at the conditioned-part size");
      break;
    }
    case ApproxWeighting::Kind::General:
      result.bound = thm8_bound(rho.d, *weighting.weights);
      break;
  }
  result.pass = result.measured <= result.bound + kPassSlack;
  if (!result.pass)
    throw std::logic_error("build_separable_approx: measured distance exceeded the bound");
  return result;
}

}  // namespace fermext
