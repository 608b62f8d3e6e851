#include "fermext/definetti.hpp"
#include "fermext/io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace fermext;

TEST_CASE("sampling-without-replacement law", "[definetti]") {
  const auto mu = Pmf::uniform(3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double expected = (a == b) ? 0.0 : 1.0 / 6.0;
      REQUIRE(swor_pmf(mu, {a, b}) == Catch::Approx(expected).margin(1e-14));
    }
  REQUIRE(swor_pmf(mu, {2}) == Catch::Approx(1.0 / 3.0).margin(1e-14));
  REQUIRE_THROWS_AS(swor_pmf(mu, {0, 1, 2, 0}), std::invalid_argument);

  // Weighted case against a hand evaluation.
  const auto w = Pmf::make({0.5, 0.3, 0.2});
  REQUIRE(swor_pmf(w, {0, 1}) == Catch::Approx(0.5 * 0.3 / 0.5).margin(1e-14));
  REQUIRE(swor_pmf(w, {1, 2, 0}) ==
          Catch::Approx(0.3 * (0.2 / 0.7) * (0.5 / 0.5)).margin(1e-14));
}

TEST_CASE("marginal consistency holds exactly for sequential draws", "[definetti]") {
  REQUIRE(swor_marginal_check(Pmf::uniform(4), 2) < 1e-12);
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> raw(6);
    double sum = 0.0;
    for (auto& v : raw) {
      v = 0.05 + rng.uniform();
      sum += v;
    }
    for (auto& v : raw) v /= sum;
    const auto mu = Pmf::make(raw);
    REQUIRE(swor_marginal_check(mu, 3) < 1e-12);
    REQUIRE(swor_marginal_check(mu, 5) < 1e-12);  // k = n - 1 edge case
  }
}

TEST_CASE("distinct-tuple product law fails the marginal identity", "[definetti]") {
  const auto mu = Pmf::make({0.7, 0.2, 0.1});
  REQUIRE(distinct_product_marginal_check(mu, 1) > 1e-3);
  // It is still a valid distribution over distinct pairs.
  double total = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) total += distinct_product_pmf(mu, {a, b});
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("sampler edge cases and empirical frequencies", "[definetti]") {
  Rng rng(9);
  const auto point = Pmf::point_mass(4, 2);
  REQUIRE(swor_sample(point, 1, rng) == std::vector<int>{2});

  const auto mu = Pmf::uniform(3);
  auto perm = swor_sample(mu, 3, rng);
  std::sort(perm.begin(), perm.end());
  REQUIRE(perm == std::vector<int>{0, 1, 2});

  // Empirical pair frequencies against the law (chi-square style margin).
  std::map<std::pair<int, int>, int> counts;
  const int samples = 60000;
  for (int s = 0; s < samples; ++s) {
    const auto t = swor_sample(mu, 2, rng);
    counts[{t[0], t[1]}]++;
  }
  for (const auto& [pair, count] : counts)
    REQUIRE(double(count) / samples == Catch::Approx(1.0 / 6.0).margin(0.01));
  REQUIRE(counts.size() == 6);
}

TEST_CASE("mutual information basics", "[definetti]") {
  // Independent product: zero.
  const auto prod = JointDistribution::product_of({{0.3, 0.7}, {0.6, 0.4}});
  REQUIRE(mutual_information(prod, {0}, {1}) == Catch::Approx(0.0).margin(1e-12));
  // Perfectly correlated bits: ln 2.
  std::vector<double> t(4, 0.0);
  t[0] = 0.5;
  t[3] = 0.5;
  const auto corr = JointDistribution::make(2, 2, t);
  REQUIRE(mutual_information(corr, {0}, {1}) == Catch::Approx(std::log(2.0)).margin(1e-12));
  REQUIRE_THROWS_AS(mutual_information(corr, {0}, {0}), std::invalid_argument);
}

TEST_CASE("chain rule for mutual information on random joints", "[definetti]") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto j = JointDistribution::random(3, 2, rng);
    const double lhs = mutual_information(j, {0}, {1, 2});
    const double rhs =
        mutual_information(j, {0}, {2}) + conditional_mutual_information(j, 0, 1, {2});
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-10));
  }
}

TEST_CASE("conditional mutual information special cases", "[definetti]") {
  Rng rng(25);
  const auto j = JointDistribution::random(3, 2, rng);
  REQUIRE(conditional_mutual_information(j, 0, 1, {}) ==
          Catch::Approx(mutual_information(j, {0}, {1})).margin(1e-12));
  REQUIRE_THROWS_AS(conditional_mutual_information(j, 0, 1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(conditional_mutual_information(j, 1, 1, {}), std::invalid_argument);

  // Markov chain 0 -> 2 -> 1: conditioning on the middle variable removes
  // all correlation.
  std::vector<double> table(8, 0.0);
  for (int x0 = 0; x0 < 2; ++x0)
    for (int x2 = 0; x2 < 2; ++x2)
      for (int x1 = 0; x1 < 2; ++x1) {
        const double p0 = 0.5;
        const double p2_given_0 = (x2 == x0) ? 0.9 : 0.1;
        const double p1_given_2 = (x1 == x2) ? 0.8 : 0.2;
        table[x0 + 2 * x1 + 4 * x2] += p0 * p2_given_0 * p1_given_2;
      }
  const auto markov = JointDistribution::make(3, 2, table);
  REQUIRE(conditional_mutual_information(markov, 0, 1, {2}) ==
          Catch::Approx(0.0).margin(1e-12));
  REQUIRE(mutual_information(markov, {0}, {1}) > 0.01);
}

TEST_CASE("decoupling selection on product and deterministic joints", "[definetti]") {
  const auto prod = JointDistribution::product_of({{0.2, 0.8}, {0.5, 0.5}, {0.7, 0.3}, {0.4, 0.6}});
  const auto pi = Pmf::uniform(4);
  const auto res = decoupling_select(prod, pi, pi, 2);
  REQUIRE(res.achieved == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(res.k_prime == 0);
  REQUIRE(res.conditioning.empty());

  // All bits equal: conditioning on any single variable kills every CMI.
  std::vector<double> ghz(16, 0.0);
  ghz[0] = 0.5;
  ghz[15] = 0.5;
  const auto shared = JointDistribution::make(4, 2, ghz);
  const auto res2 = decoupling_select(shared, pi, pi, 3);
  REQUIRE(res2.achieved == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(res2.k_prime == 1);
}

TEST_CASE("decoupling chain on random joints", "[definetti]") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + int(rng.below(4));  // 3..6
    const int k = 1 + int(rng.below(std::uint64_t(std::min(4, n - 1))));
    const auto j = JointDistribution::random(n, 2, rng);
    std::vector<double> raw(n);
    double sum = 0.0;
    for (auto& v : raw) {
      v = 0.1 + rng.uniform();
      sum += v;
    }
    for (auto& v : raw) v /= sum;
    const auto pi = Pmf::make(raw);
    const auto res = decoupling_select(j, pi, Pmf::uniform(n), k);
    REQUIRE(res.achieved <= res.average + 1e-12);
    REQUIRE(res.average <= res.mi_bound + 1e-10);
    REQUIRE(res.mi_bound <= res.entropy_bound + 1e-10);
    REQUIRE(res.achieved <= std::log(2.0) / k + 1e-10);
  }
}

TEST_CASE("sampled decoupling fallback is seeded and tracks the exhaustive average",
          "[definetti]") {
  Rng rng(33);
  const auto j = JointDistribution::random(5, 2, rng);
  const auto pi = Pmf::uniform(5);
  const auto exact = decoupling_select(j, pi, pi, 3);
  REQUIRE(exact.exhaustive);
  // Force the Monte Carlo branch with a tiny candidate budget.
  const auto mc1 = decoupling_select(j, pi, pi, 3, 2);
  const auto mc2 = decoupling_select(j, pi, pi, 3, 2);
  REQUIRE_FALSE(mc1.exhaustive);
  REQUIRE(mc1.average == mc2.average);
  REQUIRE(mc1.conditioning == mc2.conditioning);
  REQUIRE(mc1.average == Catch::Approx(exact.average).margin(0.05));
  REQUIRE(mc1.achieved >= exact.achieved - 1e-12);
}

TEST_CASE("qubit measurement: six effects, informational completeness, distortion",
          "[definetti]") {
  const auto povm = build_ic_povm(2);
  REQUIRE(povm.effects.size() == 6);
  Matrix sum = Matrix::Zero(2, 2);
  for (const auto& e : povm.effects) {
    sum += e;
    REQUIRE(min_eigenvalue(e) > -1e-12);
  }
  REQUIRE((sum - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  // The effects span the full operator space: Gram matrix has rank 4.
  Eigen::MatrixXd gram(6, 6);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      gram(a, b) = (povm.effects[a].adjoint() * povm.effects[b]).trace().real();
  REQUIRE(Eigen::FullPivLU<Eigen::MatrixXd>(gram).rank() == 4);

  REQUIRE(povm.kappa_measured == Catch::Approx(3.0).margin(1e-9));
  REQUIRE(povm.kappa_measured <= 36.0);

  // Distortion witnessed on random traceless operators.
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix g(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) g(r, c) = cplx(rng.gaussian(), rng.gaussian());
    Matrix xi = 0.5 * (g + Matrix(g.adjoint()));
    xi -= (xi.trace() / 2.0) * Matrix::Identity(2, 2);
    const double tn = trace_norm(xi);
    if (tn < 1e-9) continue;
    REQUIRE(tn <= povm.kappa_measured * povm_image_l1(povm, xi) * (1.0 + 1e-9));
  }
}

TEST_CASE("qutrit and ququart measurements resolve the identity within bounds",
          "[definetti]") {
  for (int d : {3, 4}) {
    const auto povm = build_ic_povm(d);
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& e : povm.effects) sum += e;
    REQUIRE((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(povm.kappa_measured <= 18.0 * d);
    Eigen::MatrixXd gram(povm.effects.size(), povm.effects.size());
    for (std::size_t a = 0; a < povm.effects.size(); ++a)
      for (std::size_t b = 0; b < povm.effects.size(); ++b)
        gram(a, b) = (povm.effects[a].adjoint() * povm.effects[b]).trace().real();
    REQUIRE(Eigen::FullPivLU<Eigen::MatrixXd>(gram).rank() == d * d);
  }
  REQUIRE_THROWS_AS(build_ic_povm(5), std::invalid_argument);
}

TEST_CASE("measure-and-condition basics", "[definetti]") {
  Rng rng(11);
  const auto povm = build_ic_povm(2);

  // Empty conditioning set: the single branch is the state itself.
  const SpinState rho = hs_random_spin_state(3, 2, rng);
  const auto none = measure_and_condition(rho, {}, povm);
  REQUIRE(none.size() == 1);
  REQUIRE(none[0].prob == Catch::Approx(1.0).margin(1e-12));

  // Probabilities sum to one.
  const auto branches = measure_and_condition(rho, {1}, povm);
  double mass = 0.0;
  for (const auto& b : branches) {
    mass += b.prob;
    REQUIRE(std::abs(b.state.trace().real() - 1.0) < 1e-10);
  }
  REQUIRE(mass == Catch::Approx(1.0).margin(1e-10));

  // Product input: every conditional agrees with the unmeasured marginal on
  // the untouched sites.
  std::vector<Matrix> locals;
  for (int site = 0; site < 3; ++site) {
    Matrix g(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) g(r, c) = cplx(rng.gaussian(), rng.gaussian());
    Matrix m = g * g.adjoint();
    m /= m.trace().real();
    locals.push_back(m);
  }
  const SpinState prod = product_spin_state(locals);
  for (const auto& b : measure_and_condition(prod, {0}, povm)) {
    const SpinState full{3, 2, b.state};
    REQUIRE((spin_marginal(full, {1}) - locals[1]).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((spin_marginal(full, {2}) - locals[2]).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((spin_marginal(full, {0}) - Matrix(Matrix::Identity(2, 2) / 2.0))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
  }

  // Classically maximally correlated pair, conditioning on the first site in
  // the computational branches gives point masses on the second.
  Matrix cc = Matrix::Zero(4, 4);
  cc(0, 0) = 0.5;
  cc(3, 3) = 0.5;
  const SpinState classical{2, 2, cc};
  const auto cond = measure_and_condition(classical, {0}, povm);
  const SpinState z0{2, 2, cond[0].state};  // outcome |0><0|/3
  const Matrix site1 = spin_marginal(z0, {1});
  REQUIRE(site1(0, 0).real() == Catch::Approx(1.0).margin(1e-10));

  REQUIRE_THROWS_AS(measure_and_condition(rho, {0, 0}, povm), std::invalid_argument);
  REQUIRE_THROWS_AS(measure_and_condition(rho, {7}, povm), std::out_of_range);
}

TEST_CASE("separable approximation: product inputs come back exactly", "[definetti]") {
  Rng rng(13);
  std::vector<Matrix> locals;
  for (int site = 0; site < 4; ++site) {
    Matrix g(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) g(r, c) = cplx(rng.gaussian(), rng.gaussian());
    Matrix m = g * g.adjoint();
    m /= m.trace().real();
    locals.push_back(m);
  }
  const SpinState prod = product_spin_state(locals);
  const auto approx = build_separable_approx(prod, star_weighting(4), 2);
  REQUIRE(approx.measured < 1e-9);
  REQUIRE(approx.k_prime == 0);
  REQUIRE(approx.conditioning.empty());
}

TEST_CASE("separable approximation on random states stays under its bound", "[definetti]") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const SpinState rho = hs_random_spin_state(4, 2, rng);
    const auto approx = build_separable_approx(rho, star_weighting(4), 2);
    REQUIRE(approx.pass);
    REQUIRE(approx.measured <= 2.0);  // trace distances of states never exceed 2
    // Every ensemble member is a product of genuine single-site states.
    double mass = 0.0;
    for (const auto& branch : approx.ensemble) {
      mass += branch.prob;
      REQUIRE(branch.locals.size() == 4);
      for (const auto& local : branch.locals) {
        REQUIRE(std::abs(local.trace().real() - 1.0) < 1e-9);
        REQUIRE(min_eigenvalue(local) > -1e-10);
      }
    }
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("separable approximation with bipartite and general weightings", "[definetti]") {
  Rng rng(19);
  const SpinState rho = hs_random_spin_state(4, 2, rng);
  // The conditioning budget must stay below the conditioned part's size.
  const auto bip = build_separable_approx(rho, bipartite_weighting(2, 2), 1);
  REQUIRE(bip.pass);
  const auto w = uniform_weight_matrix(complete_graph(4));
  const auto gen = build_separable_approx(rho, general_weighting(w), 2);
  REQUIRE(gen.pass);
  REQUIRE(gen.bound == Catch::Approx(thm8_bound(2, w)).margin(1e-12));
}

TEST_CASE("shared classical randomness: measured distance recorded under the bound",
          "[definetti]") {
  // A shared uniform bit across four sites. The six-outcome measurement does
  // not collapse the hidden bit on its unbiased outcomes, so the conditioned
  // mixture keeps a finite distance; it must still sit below the bound.
  Matrix cc = Matrix::Zero(16, 16);
  cc(0, 0) = 0.5;
  cc(15, 15) = 0.5;
  const SpinState shared{4, 2, cc};
  const auto approx = build_separable_approx(shared, star_weighting(4), 2);
  REQUIRE(approx.pass);
  REQUIRE(approx.measured <= 2.0);
}
