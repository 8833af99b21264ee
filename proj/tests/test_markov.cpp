#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "riskd/error.hpp"
#include "riskd/markov.hpp"
#include "test_support.hpp"

using namespace riskd;
using testkit::Matrix;
using testkit::Vector;

namespace {

Matrix two_state() {
  Matrix P(2, 2);
  P << 0.9, 0.1, 0.2, 0.8;
  return P;
}

Matrix mat_power(const Matrix& P, int k) {
  Matrix out = Matrix::Identity(P.rows(), P.cols());
  for (int s = 0; s < k; ++s) out = out * P;
  return out;
}

}  // namespace

TEST_CASE("chain validation names the offending row") {
  Matrix P(2, 2);
  P << 0.5, 0.5, 0.3, 0.6;
  try {
    MarkovChain(P, Vector::Zero(2), 0.9);
    FAIL("accepted a non-stochastic row");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  P << 0.5, 0.5, -0.1, 1.1;
  CHECK_THROWS_AS(MarkovChain(P, Vector::Zero(2), 0.9), InvalidInput);
  P << 0.5, 0.5, 0.5, 0.5;
  CHECK_THROWS_AS(MarkovChain(P, Vector::Zero(2), 1.0), InvalidInput);
  CHECK_THROWS_AS(MarkovChain(P, Vector::Zero(2), 0.0), InvalidInput);
  CHECK_THROWS_AS(MarkovChain(P, Vector::Zero(3), 0.5), InvalidInput);
}

TEST_CASE("stationary distribution") {
  SUBCASE("period-2 chain is rejected") {
    Matrix P(2, 2);
    P << 0, 1, 1, 0;
    CHECK_THROWS_AS(stationary_distribution(MarkovChain(P, Vector::Zero(2), 0.9)), ErgodicityError);
    CHECK(chain_period(P) == 2);
  }
  SUBCASE("reducible chain is rejected") {
    Matrix P(3, 3);
    P << 1, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5;
    CHECK_THROWS_AS(check_ergodic(P), ErgodicityError);
  }
  SUBCASE("symmetric rows") {
    Matrix P = Matrix::Constant(2, 2, 0.5);
    const auto q = stationary_distribution(MarkovChain(P, Vector::Zero(2), 0.9));
    CHECK(q.q(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q.q(1) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("two-state chain matches the hand solution") {
    const auto q = stationary_distribution(MarkovChain(two_state(), Vector::Zero(2), 0.9));
    CHECK(std::abs(q.q(0) - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(q.q(1) - 1.0 / 3.0) < 1e-12);
    CHECK(q.residual <= 1e-12);
  }
  SUBCASE("random chains") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = testkit::pick(g, 2, 9);
      const MarkovChain chain(testkit::random_ergodic(g, n), Vector::Zero(n), 0.9);
      const auto q = stationary_distribution(chain);
      CHECK(std::abs(q.q.sum() - 1.0) <= 1e-12);
      CHECK(q.q.minCoeff() > 0.0);
      CHECK((q.q.transpose() * chain.transition() - q.q.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("poisson solution") {
  SUBCASE("memoryless chain gives e_i - q") {
    const MarkovChain chain(Matrix::Constant(2, 2, 0.5), Vector::Zero(2), 0.9);
    const auto q = stationary_distribution(chain);
    const Matrix nu = poisson_solution(chain, q);
    const Matrix expected = Matrix::Identity(2, 2) - Vector::Ones(2) * q.q.transpose();
    CHECK((nu - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("residual on random chains") {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = testkit::pick(g, 2, 8);
      const MarkovChain chain(testkit::random_ergodic(g, n), Vector::Zero(n), 0.9);
      const auto q = stationary_distribution(chain);
      const Matrix nu = poisson_solution(chain, q);
      const Matrix rhs = Matrix::Identity(n, n) - Vector::Ones(n) * q.q.transpose() +
                         chain.transition() * nu;
      CHECK((nu - rhs).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  SUBCASE("matches the truncated series") {
    const MarkovChain chain(two_state(), Vector::Zero(2), 0.9);
    const auto q = stationary_distribution(chain);
    const Matrix nu = poisson_solution(chain, q);
    const Matrix Q = Vector::Ones(2) * q.q.transpose();
    Matrix series = Matrix::Zero(2, 2);
    Matrix Pt = Matrix::Identity(2, 2);
    for (int t = 0; t <= 200; ++t) {
      series += Pt - Q;
      Pt = Pt * chain.transition();
    }
    CHECK((nu - series).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("multistep matrix") {
  const MarkovChain two(two_state(), Vector::Zero(2), 0.9);
  SUBCASE("lambda = 0 gives the identity") {
    CHECK((multistep_matrix(two, 0.0).pbar - Matrix::Identity(2, 2)).norm() == 0.0);
  }
  SUBCASE("identity chain") {
    const MarkovChain id(Matrix::Identity(3, 3), Vector::Zero(3), 0.9);
    CHECK((multistep_matrix(id, 0.7).pbar - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("truncated series, 60 terms") {
    const MarkovChain half(Matrix::Constant(2, 2, 0.5), Vector::Zero(2), 0.9);
    const double la = 0.5 * 0.9;
    Matrix series = Matrix::Zero(2, 2);
    for (int l = 0; l < 60; ++l) series += (1 - la) * std::pow(la, l) * mat_power(half.transition(), l);
    CHECK((multistep_matrix(half, 0.5).pbar - series).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("convex combination of powers on random chains") {
    std::mt19937_64 g(13);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = testkit::pick(g, 2, 7);
      const MarkovChain chain(testkit::random_ergodic(g, n), Vector::Zero(n), 0.9);
      const double lambda = testkit::unif(g);
      const auto pbar = multistep_matrix(chain, lambda);
      CHECK((pbar.pbar.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
      const double la = lambda * 0.9;
      Matrix series = Matrix::Zero(n, n);
      Matrix Pl = Matrix::Identity(n, n);
      double w = 1 - la;
      for (int l = 0; l < 2000 && w > 1e-18; ++l) {
        series += w * Pl;
        Pl = Pl * chain.transition();
        w *= la;
      }
      CHECK((pbar.pbar - series).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("q-norm nonexpansive") {
    std::mt19937_64 g(14);
    const MarkovChain chain(testkit::random_ergodic(g, 6), Vector::Zero(6), 0.9);
    const auto q = stationary_distribution(chain);
    const auto pbar = multistep_matrix(chain, 0.8);
    for (int k = 0; k < 1000; ++k) {
      const Vector h = testkit::random_vector(g, 6);
      CHECK(q_norm(q.q, chain.transition() * h) <= q_norm(q.q, h) * (1 + 1e-12));
      CHECK(q_norm(q.q, pbar.pbar * h) <= q_norm(q.q, h) * (1 + 1e-12));
    }
  }
  SUBCASE("lambda*alpha >= 1 or lambda outside [0,1] is rejected") {
    CHECK_THROWS_AS(multistep_matrix(two, 1.2), InvalidInput);
    CHECK_THROWS_AS(multistep_matrix(two, -0.1), InvalidInput);
  }
}

TEST_CASE("neutral policy value") {
  SUBCASE("zero cost") {
    const MarkovChain chain(two_state(), Vector::Zero(2), 0.9);
    CHECK(neutral_policy_value(chain).norm() == 0.0);
  }
  SUBCASE("single state geometric series") {
    const MarkovChain chain(Matrix::Ones(1, 1), Vector::Ones(1), 0.5);
    CHECK(neutral_policy_value(chain)(0) == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("value iteration oracle") {
    Vector c(2);
    c << 1, 3;
    const MarkovChain chain(two_state(), c, 0.9);
    const Vector v = neutral_policy_value(chain);
    const Vector vi = testkit::value_iteration(two_state(), c, 0.9, 500);
    CHECK((v - vi).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((v - c - 0.9 * two_state() * v).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("simulation") {
  SUBCASE("zero steps") {
    const MarkovChain chain(two_state(), Vector::Zero(2), 0.9);
    const auto tr = simulate(chain, 1, 0, 5);
    CHECK(tr.states == std::vector<std::size_t>{1});
  }
  SUBCASE("deterministic cycle") {
    Matrix P(2, 2);
    P << 0, 1, 1, 0;
    const MarkovChain chain(P, Vector::Zero(2), 0.9);
    CHECK(simulate(chain, 0, 3, 99).states == std::vector<std::size_t>{0, 1, 0, 1});
  }
  SUBCASE("empirical frequencies approach q") {
    Matrix P(3, 3);
    P << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.3, 0.6;
    const MarkovChain chain(P, Vector::Zero(3), 0.9);
    const auto q = stationary_distribution(chain);
    const auto tr = simulate(chain, 0, 1'000'000, 2024);
    Vector freq = Vector::Zero(3);
    for (std::size_t s : tr.states) freq(Eigen::Index(s)) += 1.0;
    freq /= static_cast<double>(tr.states.size());
    CHECK((freq - q.q).cwiseAbs().maxCoeff() <= 0.01);
  }
  SUBCASE("same seed, same trajectory; every step has positive probability") {
    std::mt19937_64 g(15);
    const MarkovChain chain(testkit::random_ergodic(g, 6, 0.5), Vector::Zero(6), 0.9);
    const auto a = simulate(chain, 2, 5000, 77);
    const auto b = simulate(chain, 2, 5000, 77);
    CHECK(a.states == b.states);
    for (std::size_t t = 0; t + 1 < a.states.size(); ++t) {
      REQUIRE(chain.transition()(Eigen::Index(a.states[t]), Eigen::Index(a.states[t + 1])) > 0.0);
    }
    CHECK(simulate(chain, 2, 5000, 78).states != a.states);
  }
}

TEST_CASE("stream derivation") {
  const Rng root(42);
  Rng a = root.stream(0), b = root.stream(1), a2 = root.stream(0);
  CHECK(a.next() == a2.next());
  CHECK(a.seed() != b.seed());
  CHECK(derive_seed(42, 0) == splitmix64(42 ^ splitmix64(1)));
  Rng u(3);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
}
