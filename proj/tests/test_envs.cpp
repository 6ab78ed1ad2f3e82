#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfgirl/core.hpp"
#include "mfgirl/envs.hpp"

using namespace mfg;

namespace {

MeanField random_mean_field(int n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = uniform01(rng) + 1e-3;
    sum += x;
  }
  for (double& x : v) x /= sum;
  return MeanField(v);
}

MfgSpec make(EnvName name, EnvVariant variant = EnvVariant::Original, int horizon = 5) {
  EnvConfig cfg;
  cfg.name = name;
  cfg.variant = variant;
  cfg.horizon = horizon;
  return build_env(cfg);
}

}  // namespace

TEST_CASE("env name and variant keys round-trip") {
  for (const std::string key : {"invest", "malware", "virus", "rps", "lr"})
    CHECK(env_name_key(parse_env_name(key)) == key);
  for (const std::string key : {"original", "new"})
    CHECK(env_variant_key(parse_env_variant(key)) == key);
  CHECK_THROWS_AS(parse_env_name("poker"), ConfigError);
  CHECK_THROWS_AS(parse_env_variant("newest"), ConfigError);
}

TEST_CASE("env shapes and initial fields") {
  MfgSpec invest = make(EnvName::Invest);
  CHECK(invest.n_states() == 10);
  CHECK(invest.n_actions() == 2);
  for (int s = 0; s < 10; ++s) CHECK(invest.mu0[s] == doctest::Approx(0.1));

  MfgSpec lr = make(EnvName::LeftRight);
  CHECK(lr.n_states() == 3);
  CHECK(lr.mu0[0] == doctest::Approx(0.0));
  CHECK(lr.mu0[1] == doctest::Approx(0.5));
  CHECK(lr.mu0[2] == doctest::Approx(0.5));

  CHECK(make(EnvName::Virus).n_states() == 2);
  CHECK(make(EnvName::Rps).n_states() == 3);
  CHECK(make(EnvName::Rps).n_actions() == 3);
}

TEST_CASE("virus: infection probability at a half-infected field") {
  MeanField mu(std::vector<double>{0.5, 0.5});
  auto row = make(EnvName::Virus).transition(0, 0, mu);
  CHECK(row[1] == doctest::Approx(0.9 * 0.9 * 0.5));  // 0.405
  auto row_new = make(EnvName::Virus, EnvVariant::New).transition(0, 0, mu);
  CHECK(row_new[1] == doctest::Approx(0.8 * 0.8 * 0.5));  // 0.32
  // Distancing fully protects a susceptible agent.
  auto row_d = make(EnvName::Virus).transition(0, 1, mu);
  CHECK(row_d[0] == doctest::Approx(1.0));
  // Infected agents recover with 0.3 regardless of action.
  for (int a = 0; a < 2; ++a)
    CHECK(make(EnvName::Virus).transition(1, a, mu)[0] == doctest::Approx(0.3));
}

TEST_CASE("virus: reward ordering over the four state-action cells") {
  MfgSpec spec = make(EnvName::Virus);
  MeanField mu = MeanField::uniform(2);
  CHECK((*spec.reward)(0, 0, mu) == doctest::Approx(0.0));
  CHECK((*spec.reward)(0, 1, mu) == doctest::Approx(-0.5));
  CHECK((*spec.reward)(1, 0, mu) == doctest::Approx(-1.0));
  CHECK((*spec.reward)(1, 1, mu) == doctest::Approx(-1.5));
}

TEST_CASE("malware: intervening resets to level 0") {
  MfgSpec spec = make(EnvName::Malware);
  for (int s = 0; s < 10; ++s) {
    auto row = spec.transition(s, 1, MeanField::uniform(10));
    CHECK(row[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("malware: degradation law, original vs new chi support") {
  MfgSpec orig = make(EnvName::Malware);
  // From level 0, chi ~ U(0,1): floor(10 chi) uniform over 0..9.
  auto row = orig.transition(0, 0, MeanField::uniform(10));
  for (int k = 0; k < 10; ++k) CHECK(row[k] == doctest::Approx(0.1));
  // New dynamics: chi ~ U(0.5, 1): mass only on 5..9, each 0.2.
  MfgSpec newer = make(EnvName::Malware, EnvVariant::New);
  auto row_new = newer.transition(0, 0, MeanField::uniform(10));
  for (int k = 0; k < 5; ++k) CHECK(row_new[k] == doctest::Approx(0.0));
  for (int k = 5; k < 10; ++k) CHECK(row_new[k] == doctest::Approx(0.2));
  // Worst level can only stay put.
  CHECK(orig.transition(9, 0, MeanField::uniform(10))[9] == doctest::Approx(1.0));
}

TEST_CASE("malware: reward formula") {
  MfgSpec spec = make(EnvName::Malware);
  MeanField mu = MeanField::point_mass(10, 4);  // <mu> = 4
  CHECK((*spec.reward)(5, 0, mu) == doctest::Approx(-(0.2 + 4.0) * 0.5));
  CHECK((*spec.reward)(5, 1, mu) == doctest::Approx(-(0.2 + 4.0) * 0.5 - 0.5));
  CHECK((*spec.reward)(0, 0, mu) == doctest::Approx(0.0));
}

TEST_CASE("invest: hold is a self-loop; invest moves up by the exact law") {
  MfgSpec spec = make(EnvName::Invest);
  MeanField mu = MeanField::uniform(10);  // <mu> = 4.5 >= 4: congested
  for (int s = 0; s < 10; ++s)
    CHECK(spec.transition(s, 0, mu)[s] == doctest::Approx(1.0));
  // Congested, from 0: floor(5 chi) uniform over 0..4.
  auto row = spec.transition(0, 1, mu);
  for (int k = 0; k < 5; ++k) CHECK(row[k] == doctest::Approx(0.2));
  for (int k = 5; k < 10; ++k) CHECK(row[k] == doctest::Approx(0.0));
  // Uncongested field (<mu> = 0 < 4): floor(10 chi) uniform over 0..9.
  auto fast = spec.transition(0, 1, MeanField::point_mass(10, 0));
  for (int k = 0; k < 10; ++k) CHECK(fast[k] == doctest::Approx(0.1));
}

TEST_CASE("invest: the congestion threshold is strict") {
  MfgSpec orig = make(EnvName::Invest);
  MeanField at4 = MeanField::point_mass(10, 4);
  // <mu> = 4 is not < 4, so the original dynamics are congested here...
  CHECK(orig.transition(0, 1, at4)[0] == doctest::Approx(0.2));
  // ...while the new threshold of 5 still counts 4 as uncongested.
  MfgSpec newer = make(EnvName::Invest, EnvVariant::New);
  CHECK(newer.transition(0, 1, at4)[0] == doctest::Approx(0.1));
}

TEST_CASE("invest: reward formula") {
  MfgSpec spec = make(EnvName::Invest);
  MeanField mu = MeanField::uniform(10);
  CHECK((*spec.reward)(6, 0, mu) == doctest::Approx(0.3 * 0.6 - 0.2 * 4.5));
  CHECK((*spec.reward)(6, 1, mu) == doctest::Approx(0.3 * 0.6 - 0.2 * 4.5 - 0.2));
}

TEST_CASE("rps: rewards are the cyclic population payoffs") {
  MfgSpec spec = make(EnvName::Rps);
  MeanField all_scissors = MeanField::point_mass(3, 2);
  CHECK((*spec.reward)(0, 0, all_scissors) == doctest::Approx(2.0));
  MeanField mu(std::vector<double>{0.2, 0.3, 0.5});
  CHECK((*spec.reward)(0, 0, mu) == doctest::Approx(2.0 * 0.5 - 0.3));
  CHECK((*spec.reward)(1, 0, mu) == doctest::Approx(4.0 * 0.2 - 2.0 * 0.5));
  CHECK((*spec.reward)(2, 0, mu) == doctest::Approx(6.0 * 0.3 - 3.0 * 0.2));
}

TEST_CASE("rps: original moves are exact, new dynamics slip uniformly") {
  MfgSpec orig = make(EnvName::Rps);
  MeanField mu = MeanField::uniform(3);
  for (int a = 0; a < 3; ++a) CHECK(orig.transition(1, a, mu)[a] == doctest::Approx(1.0));
  MfgSpec newer = make(EnvName::Rps, EnvVariant::New);
  auto row = newer.transition(0, 2, mu);
  CHECK(row[2] == doctest::Approx(0.8 + 0.2 / 3.0));
  CHECK(row[0] == doctest::Approx(0.2 / 3.0));
  CHECK(row[1] == doctest::Approx(0.2 / 3.0));
}

TEST_CASE("left-right: no transition ever returns to center") {
  for (EnvVariant v : {EnvVariant::Original, EnvVariant::New}) {
    MfgSpec spec = make(EnvName::LeftRight, v);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a)
        CHECK(spec.transition(s, a, spec.mu0)[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("all envs and variants: transition rows are distributions") {
  std::mt19937_64 rng(61);
  for (EnvName name : {EnvName::Invest, EnvName::Malware, EnvName::Virus, EnvName::Rps,
                       EnvName::LeftRight}) {
    for (EnvVariant variant : {EnvVariant::Original, EnvVariant::New}) {
      MfgSpec spec = make(name, variant);
      for (int rep = 0; rep < 100; ++rep) {
        MeanField mu = random_mean_field(spec.n_states(), rng);
        for (int s = 0; s < spec.n_states(); ++s)
          for (int a = 0; a < spec.n_actions(); ++a) {
            auto row = spec.transition(s, a, mu);
            REQUIRE(static_cast<int>(row.size()) == spec.n_states());
            double sum = 0.0;
            for (double x : row) {
              CHECK(x >= 0.0);
              sum += x;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
          }
      }
    }
  }
}

TEST_CASE("floor_uniform_increment: edge cases") {
  CHECK(floor_uniform_increment(0, 1, 0.0, 1.0) == std::vector<double>{1.0});
  CHECK_THROWS_AS(floor_uniform_increment(3, 1, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("floor_uniform_increment: matches a Monte Carlo oracle") {
  std::mt19937_64 rng(67);
  struct Case {
    int span, divisor;
    double lo, hi;
  };
  for (const Case& c : {Case{10, 1, 0.0, 1.0}, Case{10, 2, 0.0, 1.0},
                        Case{7, 1, 0.5, 1.0}, Case{4, 2, 0.25, 0.9}}) {
    auto probs = floor_uniform_increment(c.span, c.divisor, c.lo, c.hi);
    const int n = 1000000;
    std::vector<int> counts(c.span, 0);
    for (int i = 0; i < n; ++i) {
      double chi = c.lo + (c.hi - c.lo) * uniform01(rng);
      int k = static_cast<int>(std::floor(chi * c.span / c.divisor));
      REQUIRE(k >= 0);
      REQUIRE(k < c.span);
      ++counts[k];
    }
    for (int k = 0; k < c.span; ++k) {
      double p = probs[k];
      double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / n);
      CHECK(std::abs(static_cast<double>(counts[k]) / n - p) < 3.0 * se + 1e-6);
    }
  }
}

TEST_CASE("mean_state: numeric environments only") {
  MfgSpec invest = make(EnvName::Invest);
  CHECK(mean_state(MeanField::uniform(10), invest) == doctest::Approx(4.5));
  CHECK(mean_state(MeanField::point_mass(10, 9), invest) == doctest::Approx(9.0));
  MfgSpec virus = make(EnvName::Virus);
  CHECK_THROWS_AS(mean_state(MeanField::uniform(2), virus), std::invalid_argument);
  CHECK_THROWS_AS(mean_state(MeanField::uniform(3), invest), std::invalid_argument);
}

TEST_CASE("encode_features: one-hots plus the raw field") {
  MeanField mu(std::vector<double>{0.5, 0.5});
  auto x = encode_features(0, 1, mu, 2, 2);
  CHECK(x == std::vector<double>{1.0, 0.0, 0.0, 1.0, 0.5, 0.5});
  auto y = encode_state_features(1, mu, 2);
  CHECK(y == std::vector<double>{0.0, 1.0, 0.5, 0.5});
  // Distinct cells encode distinctly.
  CHECK(encode_features(0, 0, mu, 2, 2) != encode_features(0, 1, mu, 2, 2));
  CHECK(encode_features(0, 0, mu, 2, 2) != encode_features(1, 0, mu, 2, 2));
  CHECK_THROWS_AS(encode_features(2, 0, mu, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(encode_state_features(0, mu, 3), std::invalid_argument);
}

TEST_CASE("build_env validates the horizon") {
  EnvConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS_AS(build_env(cfg), ConfigError);
}
