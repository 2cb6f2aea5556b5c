#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "phylorank/model_selection.hpp"
#include "phylorank/newick.hpp"
#include "phylorank/simulate.hpp"
#include "phylorank/stats.hpp"
#include "phylorank/tree_models.hpp"

#include "support/oracles.hpp"

using namespace phylorank;
using test_support::balanced;
using test_support::caterpillar;

namespace {

struct EnumeratedKl {
  double j_yule = 0.0;
  double j_uniform = 0.0;
  double kl_yu = 0.0;
  double kl_uy = 0.0;
};

EnumeratedKl enumerate_kl(int n) {
  EnumeratedKl out;
  long long count = 0;
  enumerate_trees(n, [&](const PhyloTree&) { ++count; });
  const double pu = 1.0 / static_cast<double>(count);
  enumerate_trees(n, [&](const PhyloTree& t) {
    const double py = to_double(prob_yule(t));
    out.j_yule -= py * std::log(py);
    out.j_uniform -= pu * std::log(pu);
    out.kl_yu += py * std::log(py / pu);
    out.kl_uy += pu * std::log(pu / py);
  });
  return out;
}

}  // namespace

TEST_CASE("entropies at n = 3") {
  CHECK_THAT(entropy_uniform(3), Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
  CHECK_THAT(entropy_yule(3), Catch::Matchers::WithinAbs(std::log(3.0), 1e-12));
  CHECK_THROWS_AS(entropy_yule(2), ModelError);
  CHECK_THROWS_AS(entropy_uniform(2), ModelError);
}

TEST_CASE("entropies and KL distances match enumeration for n = 3..6") {
  for (int n = 3; n <= 6; ++n) {
    const auto enumerated = enumerate_kl(n);
    CHECK_THAT(entropy_uniform(n), Catch::Matchers::WithinAbs(enumerated.j_uniform, 1e-10));
    CHECK_THAT(entropy_yule(n), Catch::Matchers::WithinAbs(enumerated.j_yule, 1e-10));
    CHECK_THAT(kl_yule_uniform(n), Catch::Matchers::WithinAbs(enumerated.kl_yu, 1e-10));
    CHECK_THAT(kl_uniform_yule(n), Catch::Matchers::WithinAbs(enumerated.kl_uy, 1e-10));
  }
}

TEST_CASE("KL distances vanish at n = 3 and stay non-negative") {
  CHECK_THAT(kl_yule_uniform(3), Catch::Matchers::WithinAbs(0.0, 1e-10));
  CHECK_THAT(kl_uniform_yule(3), Catch::Matchers::WithinAbs(0.0, 1e-10));
  for (int n : {4, 5, 10, 25, 50, 120}) {
    CHECK(kl_yule_uniform(n) >= 0.0);
    CHECK(kl_uniform_yule(n) >= 0.0);
  }
}

TEST_CASE("kl_yule_uniform grows with n") {
  double prev = kl_yule_uniform(4);
  for (int n = 5; n <= 50; ++n) {
    const double cur = kl_yule_uniform(n);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("S_n series") {
  CHECK_THAT(s_n(3), Catch::Matchers::WithinAbs(std::log(2.0) / 3.0, 1e-14));
  CHECK_THAT(s_prime_n(200), Catch::Matchers::WithinAbs(1.44, 0.01));
  for (int n = 3; n <= 300; ++n) CHECK(s_n(n) > s_prime_n(n));
}

TEST_CASE("power bound behaves") {
  // smallest n whose bound exceeds 0.85 lies between 550 and 700
  int first = -1;
  for (int n = 300; n <= 800; ++n)
    if (power_bound(n) > 0.85) {
      first = n;
      break;
    }
  CHECK(first >= 550);
  CHECK(first <= 700);
  double prev = power_bound(100);
  for (int n = 101; n <= 2000; ++n) {
    const double cur = power_bound(n);
    CHECK(cur > prev);
    CHECK(cur > 0.0);
    CHECK(cur < 1.0);
    prev = cur;
  }
}

TEST_CASE("lr_test decision rule") {
  // n = 3: single shape, log ratio 0, boundary rejects
  const auto r3 = lr_test(caterpillar(3));
  CHECK(r3.log_lr == 0.0);
  CHECK_FALSE(r3.accept_yule);
  // fully balanced 16-leaf tree: lambda product 15 * 7^2 * 3^4 * 1^8
  const auto rb = lr_test(balanced(16));
  CHECK(rb.bayes_factor == BigRational(catalan(15), BigCount(15) * 49 * 81));
  CHECK(rb.accept_yule);
  CHECK(rb.log_lr > 0.0);
  // 16-leaf caterpillar: lambda product 15!
  const auto rc = lr_test(caterpillar(16));
  CHECK(rc.bayes_factor == BigRational(catalan(15), factorial(15)));
  CHECK_FALSE(rc.accept_yule);
  CHECK(rc.log_lr < 0.0);
  CHECK(rb.power_bound.has_value());
  CHECK(*rb.power_bound > 0.0);
  CHECK(*rb.power_bound < 1.0);
  CHECK_THAT(*rb.kl_yu, Catch::Matchers::WithinAbs(kl_yule_uniform(16), 1e-14));
}

TEST_CASE("lr_test handles polytomies through resolution weighting") {
  auto t = parse_newick("((A,B,C),(D,E));");
  const auto report = lr_test(t);
  CHECK(report.bayes_factor == bayes_factor_resolved(t));
  CHECK_THROWS_AS(lr_test(parse_newick("((A,B,C,D,E),F);")), ModelError);
}

TEST_CASE("empirical error rates at n = 100") {
  const int n = 100;
  const int replicates = 2000;
  int rejected_yule = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    RngStream rng(811, rep);
    const auto t = sample_yule_ranked(n, rng).tree;
    if (!lr_test(t).accept_yule) ++rejected_yule;
  }
  const double type1 = static_cast<double>(rejected_yule) / replicates;
  CHECK(type1 < 0.2);

  int accepted_uniform = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    RngStream rng(812, rep);
    const auto t = sample_uniform(n, rng);
    if (lr_test(t).accept_yule) ++accepted_uniform;
  }
  const double type2 = static_cast<double>(accepted_uniform) / replicates;
  const double bound = 1.0 - power_bound(n);
  const double se = std::sqrt(type2 * (1.0 - type2) / replicates);
  CHECK(type2 < bound + 3.0 * se + 1e-9);
}
