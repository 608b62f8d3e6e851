// Report records shared by the bound, monogamy and certification paths.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fermext {

inline constexpr double kPassSlack = 1e-9;

// One evaluated bound, keyed by its theorem tag. `pass` is only meaningful
// when a measured value is present.
struct BoundReport {
  std::string theorem;
  std::map<std::string, double> params;
  double bound = 0.0;
  std::optional<double> measured;
  std::optional<double> strict_value;    // proof-derived constant variant
  std::optional<double> appendix_value;  // restated-constant variant
  bool pass = true;
  std::vector<std::string> notes;
};

inline BoundReport make_bound_report(std::string theorem,
                                     std::map<std::string, double> params,
                                     double bound,
                                     std::optional<double> measured = std::nullopt,
                                     double slack = kPassSlack) {
  BoundReport r;
  r.theorem = std::move(theorem);
  r.params = std::move(params);
  r.bound = bound;
  r.measured = measured;
  r.pass = !measured || *measured <= bound + slack;
  return r;
}

struct MonogamySiteRow {
  int site = 0;
  int degree = 0;
  double measured = 0.0;  // mean over neighbors of ||rho^{i,j} - sigma^{i,j}||_1
  double bound = 0.0;
  bool pass = true;
};

struct MonogamyReport {
  std::vector<MonogamySiteRow> rows;
  bool pass = true;
  double max_ratio = 0.0;  // max over sites of measured / bound
  std::vector<std::string> notes;
};

struct CertificateReport {
  double edge_count = 0;
  double ground_energy = 0.0;        // normalized units (max edge norm 1)
  double product_energy = 0.0;       // best mode-product energy found
  double delta = 0.0;                // (product - ground) / |E|, nonnegative
  double bound = 0.0;                // two-local composite bound
  double monogamy_term = 0.0;        // vertex-cover term alone
  double scale = 1.0;                // multiply energies by this for input units
  int ground_degeneracy = 1;
  bool converged = true;
  bool pass = true;
  std::vector<int> cover;
  std::vector<std::string> notes;
};

}  // namespace fermext
