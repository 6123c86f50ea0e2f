#include <doctest.h>

#include <cmath>

#include "oracles.hpp"

using namespace pgbias;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double sigmoid_second(double x) { return oracle::sigmoid_prime(x) * (1.0 - 2.0 * oracle::sigmoid(x)); }

}  // namespace

TEST_CASE("gallery listing") {
  CHECK(gallery_names() == std::vector<std::string>{"figure1", "figure2", "figure3"});
  for (const auto& name : gallery_names()) {
    const auto e = gallery_entry(name);
    CHECK(e.name == name);
    CHECK_FALSE(e.provenance.empty());
    CHECK_FALSE(e.expected_behavior.empty());
  }
  CHECK_THROWS_AS(gallery_entry("figure4"), std::invalid_argument);
  CHECK(figure2(4).provenance.find("reconstruction") != std::string::npos);
  CHECK(figure3().provenance.find("reconstruction") != std::string::npos);
}

TEST_CASE("figure 1: first and second partials of the biased update") {
  const auto e = figure1();
  for (double gamma : {0.0, 0.5, 0.9, 1.0}) {
    const ParameterField f(FieldKind::biased, e.mdp, e.policy, gamma);
    for (double t1 : {-2.0, -1.0, 0.0, 1.0, 2.0})
      for (double t2 : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const VectorXd theta = Eigen::Vector2d(t1, t2);
        const double s1 = oracle::sigmoid(t1), s2 = oracle::sigmoid(t2);
        const double p1 = oracle::sigmoid_prime(t1), p2 = oracle::sigmoid_prime(t2);
        const VectorXd g = f(theta);
        CHECK(std::abs(g(0) - gamma * s2 * p1) < 1e-12);
        CHECK(std::abs(g(1) - s1 * p2) < 1e-12);

        const MatrixXd fd = oracle::central_jacobian([&](const VectorXd& t) { return f(t); }, theta, 1e-4);
        CHECK(std::abs(fd(0, 0) - gamma * s2 * sigmoid_second(t1)) < 1e-5);
        CHECK(std::abs(fd(0, 1) - gamma * p1 * p2) < 1e-5);
        CHECK(std::abs(fd(1, 0) - p1 * p2) < 1e-5);
        CHECK(std::abs(fd(1, 1) - s1 * sigmoid_second(t2)) < 1e-5);
      }
  }
}

TEST_CASE("figure 1 occupancy") {
  const auto e = figure1();
  for (double gamma : {0.0, 0.5, 1.0}) {
    const double t1 = 0.7;
    const VectorXd d = occupancy_weights<double>(e.mdp, policy_probs<double>(e.policy, Eigen::Vector2d(t1, -0.3)), gamma);
    CHECK(d(0) == doctest::Approx(1.0));
    CHECK(d(1) == doctest::Approx((1.0 - gamma) * oracle::sigmoid(t1)));
  }
}

TEST_CASE("figure 2: path returns and the threshold discount") {
  for (int delay : {2, 4, 6}) {
    const auto e = figure2(delay);
    const double threshold = std::pow(0.5, 1.0 / delay);
    CHECK(e.mdp.num_states() == delay + 4);
    const VectorXd short_path = VectorXd::Constant(1, 40.0), long_path = VectorXd::Constant(1, -40.0);
    for (double gamma : {0.3, threshold, 0.95}) {
      CHECK(objective<double>(e.mdp, e.policy, short_path, gamma) == doctest::Approx(1.0));
      CHECK(objective<double>(e.mdp, e.policy, long_path, gamma) == doctest::Approx(2.0 * std::pow(gamma, delay)));
      for (double t : {-1.0, 0.0, 1.5}) {
        const VectorXd theta = VectorXd::Constant(1, t);
        const double g = grad_biased<double>(e.mdp, e.policy, theta, gamma)(0);
        CHECK(g == doctest::Approx(oracle::sigmoid_prime(t) * (1.0 - 2.0 * std::pow(gamma, delay))).scale(1.0));
      }
    }
    CHECK(objective<double>(e.mdp, e.policy, short_path, 1.0) == doctest::Approx(1.0));
    CHECK(objective<double>(e.mdp, e.policy, long_path, 1.0) == doctest::Approx(2.0));
  }
  CHECK_THROWS_AS(figure2(1), std::invalid_argument);
}

TEST_CASE("figure 3 certified properties") {
  const auto e = figure3();
  const VectorXd always_a1 = VectorXd::Constant(1, 40.0);
  CHECK(objective<double>(e.mdp, e.policy, always_a1, 1.0) == doctest::Approx(101.0));
  CHECK(objective<double>(e.mdp, e.policy, always_a1, 0.0) == doctest::Approx(1.0));
  const auto s = score_policy(e.mdp, e.policy, VectorXd::Zero(1), 0.0);
  CHECK(s.envelope.undiscounted_max == 101.0);
  CHECK(s.envelope.discounted_max == 1.0);

  for (double t : {-3.0, -1.0, 0.0, 2.0}) {
    const auto v = solve_values<double>(e.mdp, e.policy, VectorXd::Constant(1, t), 0.0);
    const Index s3 = e.mdp.state_index("s3"), s5 = e.mdp.state_index("s5");
    CHECK(v.adv.row(s3).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(v.adv.row(s5).cwiseAbs().maxCoeff() < 1e-12);
    // The s2 advantage of the +2 action exceeds the s1 advantage of the +1
    // action only once sigma(theta) > 1/3.
    const double sig = oracle::sigmoid(t);
    CHECK((v.adv(e.mdp.state_index("s2"), 1) > v.adv(e.mdp.state_index("s1"), 0)) == (sig > 1.0 / 3.0));
  }
}

TEST_CASE("random MDP generator") {
  const auto a = random_mdp(6, 3, 42);
  const auto b = random_mdp(6, 3, 42);
  const auto c = random_mdp(6, 3, 43);
  CHECK(structurally_equal(a.mdp, b.mdp));
  CHECK_FALSE(structurally_equal(a.mdp, c.mdp));
  CHECK(a.name == "random-6x3-42");
  CHECK(a.mdp.num_states() == 6);
  CHECK(a.policy.num_params == 15);
  CHECK(validate_mdp(a.mdp).ok());
  const auto exit_heavy = random_mdp(5, 2, 7, 1.0, 0.4);
  for (Index s : exit_heavy.mdp.transient_states())
    for (Index act = 0; act < 2; ++act) CHECK(exit_heavy.mdp.transitions[act](s, exit_heavy.mdp.terminal) >= 0.4 - 1e-15);
  CHECK_THROWS_AS(random_mdp(1, 2, 0), std::invalid_argument);
}
