// Serialization: binary operator dumps, the JSON graph and Hamiltonian
// schemas, CSV report rows and JSON report rendering.

#pragma once

#include "fermext/definetti.hpp"
#include "fermext/fock.hpp"
#include "fermext/graph.hpp"
#include "fermext/hamiltonian.hpp"
#include "fermext/report.hpp"
#include "fermext/state.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fermext {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Binary matrix dump: "FMOP", u32 sites, u32 modes_per_site, u64 dim, then
// row-major (re, im) float64 pairs, little-endian.
// ---------------------------------------------------------------------------

inline void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little)
    throw std::runtime_error("binary dump: little-endian platform required");
}

inline void write_operator_dump(std::ostream& out, const FockOperator& op) {
  require_little_endian();
  out.write("FMOP", 4);
  const std::uint32_t n = op.shape.sites, p = op.shape.modes_per_site;
  const std::uint64_t d = std::uint64_t(op.shape.dim());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&p), 4);
  out.write(reinterpret_cast<const char*>(&d), 8);
  for (std::int64_t r = 0; r < op.shape.dim(); ++r)
    for (std::int64_t c = 0; c < op.shape.dim(); ++c) {
      const double re = op.mat(r, c).real(), im = op.mat(r, c).imag();
      out.write(reinterpret_cast<const char*>(&re), 8);
      out.write(reinterpret_cast<const char*>(&im), 8);
    }
}

inline FockOperator read_operator_dump(std::istream& in) {
  require_little_endian();
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "FMOP")
    throw std::runtime_error("binary dump: bad magic");
  std::uint32_t n = 0, p = 0;
  std::uint64_t d = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&p), 4);
  in.read(reinterpret_cast<char*>(&d), 8);
  const SystemShape shape = SystemShape::make(int(n), int(p));
  if (std::uint64_t(shape.dim()) != d) throw std::runtime_error("binary dump: dimension mismatch");
  Matrix m(shape.dim(), shape.dim());
  for (std::int64_t r = 0; r < shape.dim(); ++r)
    for (std::int64_t c = 0; c < shape.dim(); ++c) {
      double re = 0, im = 0;
      in.read(reinterpret_cast<char*>(&re), 8);
      in.read(reinterpret_cast<char*>(&im), 8);
      m(r, c) = cplx(re, im);
    }
  if (!in) throw std::runtime_error("binary dump: truncated payload");
  return {shape, std::move(m)};
}

// ---------------------------------------------------------------------------
// Graph schema: {"n": int, "edges": [[i, j], ...], "weights": [[...]]?}
// ---------------------------------------------------------------------------

inline InteractionGraph graph_from_json(const json& spec) {
  if (!spec.contains("n") || !spec["n"].is_number_integer())
    throw std::invalid_argument("graph schema: field 'n' must be an integer");
  if (!spec.contains("edges") || !spec["edges"].is_array())
    throw std::invalid_argument("graph schema: field 'edges' must be an array");
  const int n = spec["n"].get<int>();
  std::vector<std::pair<int, int>> edges;
  int row = 0;
  for (const auto& e : spec["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw std::invalid_argument("graph schema: edges[" + std::to_string(row) +
                                  "] must be a pair of integers");
    edges.push_back({e[0].get<int>(), e[1].get<int>()});
    ++row;
  }
  return from_edge_list(n, edges);
}

inline std::optional<WeightMatrix> weights_from_json(const json& spec, int n) {
  if (!spec.contains("weights")) return std::nullopt;
  const auto& w = spec["weights"];
  if (!w.is_array() || int(w.size()) != n)
    throw std::invalid_argument("graph schema: 'weights' must be an n x n array");
  Eigen::MatrixXd g(n, n);
  for (int r = 0; r < n; ++r) {
    if (!w[r].is_array() || int(w[r].size()) != n)
      throw std::invalid_argument("graph schema: weights[" + std::to_string(r) +
                                  "] must have n entries");
    for (int c = 0; c < n; ++c) g(r, c) = w[r][c].get<double>();
  }
  return weight_matrix_from(g);
}

inline json graph_to_json(const InteractionGraph& g) {
  json j;
  j["n"] = g.n;
  j["edges"] = json::array();
  for (const auto& [a, b] : g.edges) j["edges"].push_back(json::array({a, b}));
  return j;
}

// Named families for CLI arguments: star:N, ring:N, complete:N,
// bipartite:A,B, lattice:D,L[,open]; anything else is a JSON file path.
inline InteractionGraph parse_graph_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  auto ints_after = [&]() {
    std::vector<int> vals;
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "open" || tok == "periodic") continue;
      vals.push_back(std::stoi(tok));
    }
    return vals;
  };
  if (family == "star") return star_graph(ints_after().at(0));
  if (family == "ring") return ring_graph(ints_after().at(0));
  if (family == "complete") return complete_graph(ints_after().at(0));
  if (family == "bipartite") {
    const auto v = ints_after();
    return complete_bipartite_graph(v.at(0), v.at(1));
  }
  if (family == "lattice") {
    const auto v = ints_after();
    const bool open = spec.find("open") != std::string::npos;
    return lattice_graph(v.at(0), v.at(1), !open);
  }
  std::ifstream in(spec);
  if (!in) throw std::invalid_argument("graph: unknown family or missing file '" + spec + "'");
  json j;
  in >> j;
  return graph_from_json(j);
}

// ---------------------------------------------------------------------------
// Hamiltonian schema:
//   {"family": "hubbard_spinless" | "hubbard_spinful" | "qc" | "explicit",
//    "params": {...}, "graph": {...}?, "terms": [...]?}
// ---------------------------------------------------------------------------

inline Matrix complex_matrix_from_json(const json& rows) {
  const int n = int(rows.size());
  Matrix m(n, rows.at(0).size());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < int(rows[r].size()); ++c) {
      const auto& cell = rows[r][c];
      if (cell.is_array())
        m(r, c) = cplx(cell.at(0).get<double>(), cell.at(1).get<double>());
      else
        m(r, c) = cplx(cell.get<double>(), 0.0);
    }
  return m;
}

inline TwoLocalHamiltonian hamiltonian_from_json(const json& spec) {
  if (!spec.contains("family") || !spec["family"].is_string())
    throw std::invalid_argument("hamiltonian schema: field 'family' must be a string");
  const std::string family = spec["family"].get<std::string>();
  const json params = spec.value("params", json::object());
  if (family == "hubbard_spinless" || family == "hubbard_spinful") {
    const int dims = params.value("D", 1);
    const int length = params.value("L", 2);
    const double t = params.value("t", 1.0);
    const double u = params.value("U", 0.0);
    const bool periodic = params.value("periodic", true);
    return family == "hubbard_spinless"
               ? build_hubbard_spinless(dims, length, t, u, periodic)
               : build_hubbard_spinful(dims, length, t, u, periodic);
  }
  if (family == "qc") {
    const int sites = params.at("sites").get<int>();
    const int p = params.value("p", 1);
    const Matrix t = complex_matrix_from_json(params.at("t"));
    const Matrix vc = complex_matrix_from_json(params.at("v"));
    return build_qc_hamiltonian(t, vc.real(), sites, p);
  }
  if (family == "explicit") {
    const int p = params.value("p", 1);
    if (!spec.contains("graph"))
      throw std::invalid_argument("hamiltonian schema: explicit family needs 'graph'");
    InteractionGraph g = graph_from_json(spec["graph"]);
    TwoLocalHamiltonian h;
    h.shape = SystemShape::make(g.n, p);
    h.graph = g;
    const SystemShape local{2, p};
    if (!spec.contains("terms") || !spec["terms"].is_array())
      throw std::invalid_argument("hamiltonian schema: explicit family needs 'terms'");
    for (const auto& t : spec["terms"]) {
      const int i = t.at("i").get<int>();
      const int j = t.at("j").get<int>();
      if (i == j || i < 0 || j < 0 || i >= g.n || j >= g.n)
        throw std::invalid_argument("hamiltonian schema: bad term sites");
      Matrix h2 = complex_matrix_from_json(t.at("matrix"));
      if (h2.rows() != local.dim() || h2.cols() != local.dim())
        throw std::invalid_argument("hamiltonian schema: term matrix must be 4^p square");
      if (!is_hermitian(h2))
        throw std::invalid_argument("hamiltonian schema: term matrix must be Hermitian");
      // Recover the exact monomial form from the dense block.
      std::vector<MonoTerm> terms;
      const auto expansion = expand(FockOperator{local, h2}, 1e-14);
      for (const auto& mono : expansion) terms.push_back({mono.mask, mono.coeff});
      h.terms.push_back({std::min(i, j), std::max(i, j), MonomialSum(local, terms), h2});
    }
    detail::normalize_terms(h);
    return h;
  }
  throw std::invalid_argument("hamiltonian schema: unknown family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Report rendering.
// ---------------------------------------------------------------------------

inline json to_json(const BoundReport& r) {
  json j;
  j["theorem"] = r.theorem;
  j["params"] = r.params;
  j["value"] = r.bound;
  if (r.measured) j["measured"] = *r.measured;
  if (r.strict_value) j["strict_value"] = *r.strict_value;
  if (r.appendix_value) j["appendix_value"] = *r.appendix_value;
  if (r.measured) j["pass"] = r.pass;
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

inline json to_json(const MonogamyReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"site", row.site},
                    {"degree", row.degree},
                    {"measured", row.measured},
                    {"bound", row.bound},
                    {"pass", row.pass}});
  return json{{"rows", rows}, {"pass", r.pass}, {"max_ratio", r.max_ratio}, {"notes", r.notes}};
}

inline std::string monogamy_csv(const MonogamyReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "site,measured,bound,pass\n";
  for (const auto& row : r.rows)
    out << row.site << ',' << row.measured << ',' << row.bound << ','
        << (row.pass ? 1 : 0) << '\n';
  return out.str();
}

inline json to_json(const CertificateReport& r) {
  json j;
  j["edge_count"] = r.edge_count;
  j["ground_energy"] = r.ground_energy;
  j["product_energy"] = r.product_energy;
  j["delta"] = r.delta;
  j["bound"] = r.bound;
  j["monogamy_term"] = r.monogamy_term;
  j["scale"] = r.scale;
  j["ground_energy_per_edge"] = r.ground_energy / r.edge_count;
  j["product_energy_per_edge"] = r.product_energy / r.edge_count;
  j["ground_degeneracy"] = r.ground_degeneracy;
  j["converged"] = r.converged;
  j["pass"] = r.pass;
  j["cover"] = r.cover;
  j["notes"] = r.notes;
  return j;
}

inline json to_json(const DecouplingResult& r) {
  return json{{"k_prime", r.k_prime},
              {"C", r.conditioning},
              {"achieved", r.achieved},
              {"average", r.average},
              {"mi_bound", r.mi_bound},
              {"entropy_bound", r.entropy_bound}};
}

inline json to_json(const SeparableApprox& r) {
  json j;
  j["bound"] = r.bound;
  if (r.bound_appendix) j["bound_appendix"] = *r.bound_appendix;
  j["measured"] = r.measured;
  j["k_prime"] = r.k_prime;
  j["C"] = r.conditioning;
  j["kappa_measured"] = r.kappa;
  j["pass"] = r.pass;
  j["ensemble_size"] = r.ensemble.size();
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

}  // namespace fermext
