// Operator algebra on the fermionic Fock space: Majorana operators in the
// Jordan-Wigner representation, local parity operators, the even-projection
// channel and the Majorana-monomial expansion.
//
// Conventions (fixed so that matrix representations are bit-exact):
//   * site-major mode ordering: global mode q = site * p + (alpha / 2),
//     alpha in [0, 2p) indexes the two Majorana flavours per mode;
//   * basis state s occupies mode q iff bit q of s is set;
//   * Jordan-Wigner strings extend over all lower-index global modes.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fermext {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;

// Dense-dimension cap on the qubit count p*N. FM_DIM_CAP overrides.
inline int dim_cap() {
  static const int cap = [] {
    if (const char* s = std::getenv("FM_DIM_CAP")) {
      const int v = std::atoi(s);
      if (v > 0) return v;
    }
    return 14;
  }();
  return cap;
}

struct SystemShape {
  int sites = 0;           // N
  int modes_per_site = 0;  // p

  int total_modes() const { return sites * modes_per_site; }
  int majorana_count() const { return 2 * total_modes(); }
  std::int64_t dim() const { return std::int64_t{1} << total_modes(); }

  bool operator==(const SystemShape&) const = default;

  static SystemShape make(int sites, int modes_per_site) {
    if (sites < 1 || modes_per_site < 1)
      throw std::invalid_argument("SystemShape: sites and modes_per_site must be positive");
    if (sites * modes_per_site > dim_cap())
      throw std::invalid_argument("SystemShape: p*N = " +
                                  std::to_string(sites * modes_per_site) +
                                  " exceeds dense cap " + std::to_string(dim_cap()));
    return SystemShape{sites, modes_per_site};
  }
};

// Global Majorana index: g = 2*mode + flavour, flavour 0 = f^dag + f,
// flavour 1 = i(f^dag - f).
inline int majorana_index(const SystemShape& shape, int site, int alpha) {
  if (site < 0 || site >= shape.sites)
    throw std::out_of_range("majorana_index: site out of range");
  if (alpha < 0 || alpha >= 2 * shape.modes_per_site)
    throw std::out_of_range("majorana_index: alpha out of range");
  const int mode = site * shape.modes_per_site + alpha / 2;
  return 2 * mode + (alpha & 1);
}

inline std::pair<int, int> site_alpha_of(const SystemShape& shape, int g) {
  const int mode = g / 2;
  const int site = mode / shape.modes_per_site;
  const int alpha = 2 * (mode % shape.modes_per_site) + (g & 1);
  return {site, alpha};
}

// ---------------------------------------------------------------------------
// Signed-permutation action of Majorana monomials on basis states.
// ---------------------------------------------------------------------------

// m_g |s> = phase * |s ^ (1 << mode)>, string over lower modes.
inline void apply_majorana_in_place(int g, std::uint64_t& s, cplx& phase) {
  const int q = g >> 1;
  const std::uint64_t below = (std::uint64_t{1} << q) - 1;
  if (std::popcount(s & below) & 1) phase = -phase;
  if (g & 1) {
    phase *= ((s >> q) & 1) ? cplx(0, -1) : cplx(0, 1);
  }
  s ^= std::uint64_t{1} << q;
}

// A monomial is a bitmask over the 2*p*N global Majorana indices; the
// operator is the product in ascending index order. Application composes
// right-to-left, i.e. the highest index acts first.
inline std::pair<cplx, std::uint64_t> apply_monomial(std::uint64_t mono,
                                                     std::uint64_t s) {
  cplx phase(1, 0);
  std::uint64_t t = s;
  while (mono) {
    const int g = 63 - std::countl_zero(mono);
    apply_majorana_in_place(g, t, phase);
    mono &= ~(std::uint64_t{1} << g);
  }
  return {phase, t};
}

// Occupation-flip mask of a monomial: mode q flips iff it carries an odd
// number of Majorana factors.
inline std::uint64_t monomial_flip_mask(std::uint64_t mono) {
  std::uint64_t flips = 0;
  std::uint64_t m = mono;
  while (m) {
    const int g = std::countr_zero(m);
    flips ^= std::uint64_t{1} << (g >> 1);
    m &= m - 1;
  }
  return flips;
}

// Reordering sign of the product m_A * m_B brought to canonical ascending
// order with squares removed: (-1)^|{(a,b) in A x B : a > b}|, mask A ^ B.
inline std::pair<int, std::uint64_t> compose_monomials(std::uint64_t a,
                                                       std::uint64_t b) {
  int inversions = 0;
  std::uint64_t m = b;
  while (m) {
    const int g = std::countr_zero(m);
    inversions += (g >= 63) ? 0 : std::popcount(a >> (g + 1));
    m &= m - 1;
  }
  return {(inversions & 1) ? -1 : 1, a ^ b};
}

// ---------------------------------------------------------------------------
// MonomialSum: exact linear combinations of Majorana monomials.
// ---------------------------------------------------------------------------

struct MonoTerm {
  std::uint64_t mask = 0;
  cplx coeff{0, 0};
};

class MonomialSum {
 public:
  explicit MonomialSum(SystemShape shape) : shape_(shape) {}
  MonomialSum(SystemShape shape, std::vector<MonoTerm> terms)
      : shape_(shape), terms_(std::move(terms)) {
    normalize();
  }

  static MonomialSum identity(SystemShape shape) {
    return MonomialSum(shape, {{0, cplx(1, 0)}});
  }
  static MonomialSum majorana(SystemShape shape, int site, int alpha) {
    const int g = majorana_index(shape, site, alpha);
    return MonomialSum(shape, {{std::uint64_t{1} << g, cplx(1, 0)}});
  }
  // f_q = (m_x + i m_y) / 2 for global mode q.
  static MonomialSum annihilator(SystemShape shape, int mode) {
    const std::uint64_t x = std::uint64_t{1} << (2 * mode);
    const std::uint64_t y = std::uint64_t{1} << (2 * mode + 1);
    return MonomialSum(shape, {{x, cplx(0.5, 0)}, {y, cplx(0, 0.5)}});
  }
  static MonomialSum creator(SystemShape shape, int mode) {
    return annihilator(shape, mode).adjoint();
  }
  static MonomialSum number_op(SystemShape shape, int mode) {
    return creator(shape, mode) * annihilator(shape, mode);
  }

  const SystemShape& shape() const { return shape_; }
  const std::vector<MonoTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  MonomialSum& operator+=(const MonomialSum& other) {
    require_same_shape(other);
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    normalize();
    return *this;
  }
  MonomialSum& operator-=(const MonomialSum& other) { return *this += other * cplx(-1, 0); }
  MonomialSum operator+(const MonomialSum& other) const {
    MonomialSum r = *this;
    r += other;
    return r;
  }
  MonomialSum operator-(const MonomialSum& other) const {
    MonomialSum r = *this;
    r -= other;
    return r;
  }
  MonomialSum operator*(cplx c) const {
    MonomialSum r = *this;
    for (auto& t : r.terms_) t.coeff *= c;
    r.normalize();
    return r;
  }
  MonomialSum operator*(const MonomialSum& other) const {
    require_same_shape(other);
    std::vector<MonoTerm> prod;
    prod.reserve(terms_.size() * other.terms_.size());
    for (const auto& ta : terms_)
      for (const auto& tb : other.terms_) {
        const auto [sign, mask] = compose_monomials(ta.mask, tb.mask);
        prod.push_back({mask, double(sign) * ta.coeff * tb.coeff});
      }
    return MonomialSum(shape_, std::move(prod));
  }

  // (c m_I)^dag = conj(c) (-1)^{k(k-1)/2} m_I for k factors.
  MonomialSum adjoint() const {
    std::vector<MonoTerm> adj = terms_;
    for (auto& t : adj) {
      const int k = std::popcount(t.mask);
      const bool flip = ((k * (k - 1) / 2) & 1) != 0;
      t.coeff = std::conj(t.coeff);
      if (flip) t.coeff = -t.coeff;
    }
    return MonomialSum(shape_, std::move(adj));
  }

  // Relabel sites through `site_map` (order-preserving maps keep signs exact).
  MonomialSum relabel_sites(const SystemShape& target,
                            const std::vector<int>& site_map) const {
    std::vector<MonoTerm> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
      std::uint64_t mask = 0;
      std::uint64_t m = t.mask;
      while (m) {
        const int g = std::countr_zero(m);
        m &= m - 1;
        const auto [site, alpha] = site_alpha_of(shape_, g);
        mask |= std::uint64_t{1} << majorana_index(target, site_map.at(site), alpha);
      }
      out.push_back({mask, t.coeff});
    }
    return MonomialSum(target, std::move(out));
  }

  void apply(const Vector& in, Vector& out) const {
    out.setZero(in.size());
    for (const auto& t : terms_) {
      for (Eigen::Index s = 0; s < in.size(); ++s) {
        if (in[s] == cplx(0, 0)) continue;
        const auto [phase, target] = apply_monomial(t.mask, std::uint64_t(s));
        out[Eigen::Index(target)] += t.coeff * phase * in[s];
      }
    }
  }

  Matrix to_dense() const {
    const std::int64_t d = shape_.dim();
    Matrix m = Matrix::Zero(d, d);
    for (const auto& t : terms_)
      for (std::int64_t s = 0; s < d; ++s) {
        const auto [phase, target] = apply_monomial(t.mask, std::uint64_t(s));
        m(Eigen::Index(target), s) += t.coeff * phase;
      }
    return m;
  }

  cplx trace() const {
    for (const auto& t : terms_)
      if (t.mask == 0) return t.coeff * double(shape_.dim());
    return cplx(0, 0);
  }

  // tr(M rho) evaluated column-sparsely against a dense matrix.
  cplx expectation(const Matrix& rho) const {
    cplx acc(0, 0);
    const std::int64_t d = shape_.dim();
    for (const auto& t : terms_)
      for (std::int64_t s = 0; s < d; ++s) {
        const auto [phase, target] = apply_monomial(t.mask, std::uint64_t(s));
        acc += t.coeff * phase * rho(s, Eigen::Index(target));
      }
    return acc;
  }

 private:
  void require_same_shape(const MonomialSum& other) const {
    if (!(shape_ == other.shape_))
      throw std::invalid_argument("MonomialSum: shape mismatch");
  }
  void normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const MonoTerm& a, const MonoTerm& b) { return a.mask < b.mask; });
    std::vector<MonoTerm> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
      if (!merged.empty() && merged.back().mask == t.mask)
        merged.back().coeff += t.coeff;
      else
        merged.push_back(t);
    }
    std::erase_if(merged, [](const MonoTerm& t) { return std::abs(t.coeff) < 1e-15; });
    terms_ = std::move(merged);
  }

  SystemShape shape_;
  std::vector<MonoTerm> terms_;
};

inline MonomialSum operator*(cplx c, const MonomialSum& m) { return m * c; }

// ---------------------------------------------------------------------------
// Dense operators.
// ---------------------------------------------------------------------------

struct FockOperator {
  SystemShape shape;
  Matrix mat;
};

inline bool is_hermitian(const Matrix& m, double tol = kHermitianTol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline void require_same_shape(const FockOperator& a, const FockOperator& b) {
  if (!(a.shape == b.shape)) throw std::invalid_argument("FockOperator: shape mismatch");
}

inline FockOperator majorana(const SystemShape& shape, int site, int alpha) {
  return {shape, MonomialSum::majorana(shape, site, alpha).to_dense()};
}

// Per-site occupation-parity fingerprint of a basis state, one bit per site.
inline std::uint32_t site_parity_key(const SystemShape& shape, std::uint64_t s) {
  std::uint32_t key = 0;
  const int p = shape.modes_per_site;
  const std::uint64_t site_mask = (std::uint64_t{1} << p) - 1;
  for (int j = 0; j < shape.sites; ++j)
    key |= std::uint32_t(std::popcount(s >> (j * p) & site_mask) & 1) << j;
  return key;
}

// P_j = (-i)^p prod_alpha m_j^{2alpha-1} m_j^{2alpha}; diagonal +-1 on the
// occupation parity of site j.
inline FockOperator local_parity(const SystemShape& shape, int site) {
  if (site < 0 || site >= shape.sites)
    throw std::out_of_range("local_parity: site out of range");
  const std::int64_t d = shape.dim();
  const int p = shape.modes_per_site;
  const std::uint64_t site_mask = (std::uint64_t{1} << p) - 1;
  Matrix m = Matrix::Zero(d, d);
  for (std::int64_t s = 0; s < d; ++s) {
    const bool odd = std::popcount(std::uint64_t(s) >> (site * p) & site_mask) & 1;
    m(s, s) = odd ? cplx(-1, 0) : cplx(1, 0);
  }
  return {shape, m};
}

inline MonomialSum local_parity_monomials(const SystemShape& shape, int site) {
  MonomialSum prod = MonomialSum::identity(shape);
  for (int alpha = 0; alpha < shape.modes_per_site; ++alpha) {
    prod = prod * MonomialSum::majorana(shape, site, 2 * alpha);
    prod = prod * MonomialSum::majorana(shape, site, 2 * alpha + 1);
  }
  cplx factor(1, 0);
  for (int a = 0; a < shape.modes_per_site; ++a) factor *= cplx(0, -1);
  return prod * factor;
}

// Xi_j(X) = (X + P_j X P_j) / 2: keeps entries whose bra and ket agree on
// the occupation parity of site j.
inline FockOperator xi_site(const FockOperator& x, int site) {
  if (site < 0 || site >= x.shape.sites)
    throw std::out_of_range("xi_site: site out of range");
  const std::int64_t d = x.shape.dim();
  const int p = x.shape.modes_per_site;
  const std::uint64_t site_mask = (std::uint64_t{1} << p) - 1;
  std::vector<int> par(d);
  for (std::int64_t s = 0; s < d; ++s)
    par[s] = std::popcount(std::uint64_t(s) >> (site * p) & site_mask) & 1;
  Matrix m = x.mat;
  for (std::int64_t c = 0; c < d; ++c)
    for (std::int64_t r = 0; r < d; ++r)
      if (par[r] != par[c]) m(r, c) = cplx(0, 0);
  return {x.shape, m};
}

// Xi = Xi_1 o ... o Xi_N: keeps entries whose bra and ket agree on every
// per-site parity; projects onto the totally even component.
inline FockOperator xi_total(const FockOperator& x) {
  const std::int64_t d = x.shape.dim();
  std::vector<std::uint32_t> key(d);
  for (std::int64_t s = 0; s < d; ++s) key[s] = site_parity_key(x.shape, std::uint64_t(s));
  Matrix m = x.mat;
  for (std::int64_t c = 0; c < d; ++c)
    for (std::int64_t r = 0; r < d; ++r)
      if (key[r] != key[c]) m(r, c) = cplx(0, 0);
  return {x.shape, m};
}

// ---------------------------------------------------------------------------
// Monomial expansion A = sum_I c_I m_I with c_I = tr(m_I^dag A) / dim.
// ---------------------------------------------------------------------------

struct MajoranaMonomial {
  std::vector<std::pair<int, int>> indices;  // (site, alpha), strictly ordered
  cplx coeff{0, 0};
  std::uint64_t mask = 0;
};

inline constexpr int kExpandModeCap = 8;  // 4^(pN) enumeration beyond this is infeasible

inline std::vector<MajoranaMonomial> expand(const FockOperator& a,
                                            double threshold = 1e-12) {
  const int modes = a.shape.total_modes();
  if (modes > kExpandModeCap)
    throw std::invalid_argument("expand: p*N = " + std::to_string(modes) +
                                " exceeds expansion cap " + std::to_string(kExpandModeCap));
  const std::int64_t d = a.shape.dim();
  const int nmaj = a.shape.majorana_count();

  // Monomials with flip mask f only touch the band A[s^f, s]; skip empty bands.
  std::vector<double> band_max(d, 0.0);
  for (std::int64_t c = 0; c < d; ++c)
    for (std::int64_t r = 0; r < d; ++r) {
      const double v = std::abs(a.mat(r, c));
      std::uint64_t f = std::uint64_t(r) ^ std::uint64_t(c);
      if (v > band_max[f]) band_max[f] = v;
    }

  std::vector<MajoranaMonomial> result;
  const std::uint64_t total = std::uint64_t{1} << nmaj;
  for (std::uint64_t mono = 0; mono < total; ++mono) {
    if (band_max[monomial_flip_mask(mono)] <= threshold / 2) continue;
    // tr(m^dag A) accumulated through the conjugated basis action.
    cplx acc(0, 0);
    for (std::int64_t s = 0; s < d; ++s) {
      const auto [phase, target] = apply_monomial(mono, std::uint64_t(s));
      acc += std::conj(phase) * a.mat(Eigen::Index(target), s);
    }
    const cplx c = acc / double(d);
    if (std::abs(c) <= threshold) continue;
    MajoranaMonomial m;
    m.mask = mono;
    m.coeff = c;
    std::uint64_t bits = mono;
    while (bits) {
      const int g = std::countr_zero(bits);
      bits &= bits - 1;
      m.indices.push_back(site_alpha_of(a.shape, g));
    }
    result.push_back(std::move(m));
  }
  return result;
}

inline FockOperator reconstruct(const SystemShape& shape,
                                const std::vector<MajoranaMonomial>& monomials) {
  std::vector<MonoTerm> terms;
  terms.reserve(monomials.size());
  for (const auto& m : monomials) terms.push_back({m.mask, m.coeff});
  return {shape, MonomialSum(shape, std::move(terms)).to_dense()};
}

enum class ParityClass { TotallyEven, TotallyOdd, Mixed };

inline int site_index_count(const SystemShape& shape, std::uint64_t mono, int site) {
  const int p = shape.modes_per_site;
  const std::uint64_t site_majoranas = ((std::uint64_t{1} << (2 * p)) - 1)
                                       << (2 * site * p);
  return std::popcount(mono & site_majoranas);
}

inline ParityClass classify_parity(const FockOperator& a, double threshold = 1e-12) {
  bool all_even = true, all_odd = true;
  for (const auto& m : expand(a, threshold)) {
    for (int j = 0; j < a.shape.sites; ++j) {
      const int c = site_index_count(a.shape, m.mask, j);
      if (c % 2 != 0) all_even = false;
      if (c % 2 == 0 && c != 0) all_odd = false;
    }
  }
  if (all_even) return ParityClass::TotallyEven;
  if (all_odd) return ParityClass::TotallyOdd;
  return ParityClass::Mixed;
}

// A = A_even + A_rest, with A_even the sum of the totally even monomials.
// The parity projections realize that sum without enumerating monomials.
inline std::pair<FockOperator, FockOperator> even_odd_split(const FockOperator& a) {
  FockOperator even = xi_total(a);
  return {even, FockOperator{a.shape, a.mat - even.mat}};
}

// Symbolic counterpart of the even projection: drops every monomial with an
// odd index count on some site.
inline MonomialSum even_monomials(const MonomialSum& sum) {
  std::vector<MonoTerm> kept;
  for (const auto& t : sum.terms()) {
    bool even = true;
    for (int site = 0; site < sum.shape().sites && even; ++site)
      even = site_index_count(sum.shape(), t.mask, site) % 2 == 0;
    if (even) kept.push_back(t);
  }
  return MonomialSum(sum.shape(), std::move(kept));
}

// ---------------------------------------------------------------------------
// Norms.
// ---------------------------------------------------------------------------

inline double operator_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline double trace_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues().sum();
}

inline double trace_norm(const FockOperator& x) { return trace_norm(x.mat); }

// Largest singular value of a monomial sum via power iteration on M^dag M,
// matrix-free. Deterministic start; intended for operators whose square is
// (close to) a multiple of the identity, where convergence is immediate.
inline double monomial_sum_norm(const MonomialSum& m, int iterations = 24,
                                std::uint64_t seed = 0x9e3779b97f4a7c15ull) {
  const std::int64_t d = m.shape().dim();
  const MonomialSum adj = m.adjoint();
  Vector v(d), w(d);
  std::uint64_t x = seed;
  for (std::int64_t s = 0; s < d; ++s) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    v[s] = cplx(double(x >> 40) / double(1 << 24) - 0.5,
                double((x >> 16) & 0xffffff) / double(1 << 24) - 0.5);
  }
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    m.apply(v, w);
    adj.apply(w, v);
    lambda = v.norm();
    if (lambda == 0.0) return 0.0;
    v /= lambda;
  }
  return std::sqrt(lambda);
}

}  // namespace fermext
