#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"

using namespace pgbias;
using nlohmann::json;

namespace {

bool has_violation(const ValidationReport& r, const std::string& code) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.code == code; });
}

TabularMDP two_state() {
  auto mdp = TabularMDP::make({"s", "end"}, {"a", "b"}, "end", 0.9);
  mdp.set_action_independent("s", "end", 1.0);
  mdp.set_initial("s", 1.0);
  return mdp;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("gallery MDPs validate with an empty report") {
  for (const auto& name : gallery_names()) {
    const auto report = validate_mdp(gallery_entry(name).mdp);
    CHECK_MESSAGE(report.ok(), name);
    CHECK(report.notices.empty());
  }
  for (int delay : {2, 3, 7}) CHECK(validate_mdp(figure2(delay).mdp).ok());
}

TEST_CASE("random MDPs validate") {
  oracle::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    CHECK(validate_mdp(oracle::random_cyclic(rng).mdp).ok());
    CHECK(validate_mdp(oracle::random_acyclic(rng, 4, 2).mdp).ok());
  }
}

TEST_CASE("validation names each broken invariant") {
  SUBCASE("row sum") {
    auto mdp = two_state();
    mdp.transitions[1](0, 1) = 0.5;
    const auto r = validate_mdp(mdp);
    REQUIRE(has_violation(r, "row_sum"));
    CHECK(r.violations.front().location == "(s, b)");
  }
  SUBCASE("negative probability") {
    auto mdp = two_state();
    mdp.transitions[0](0, 0) = -0.25;
    mdp.transitions[0](0, 1) = 1.25;
    CHECK(has_violation(validate_mdp(mdp), "probability_range"));
  }
  SUBCASE("terminal must absorb") {
    auto mdp = two_state();
    mdp.transitions[0](1, 1) = 0.0;
    mdp.transitions[0](1, 0) = 1.0;
    CHECK(has_violation(validate_mdp(mdp), "terminal_absorbing"));
  }
  SUBCASE("terminal reward") {
    auto mdp = two_state();
    mdp.reward(1, 0) = 3.0;
    CHECK(has_violation(validate_mdp(mdp), "terminal_reward"));
  }
  SUBCASE("initial distribution") {
    auto mdp = two_state();
    mdp.initial(0) = 0.5;
    CHECK(has_violation(validate_mdp(mdp), "d0_sum"));
    mdp.initial << 1.5, -0.5;
    CHECK(has_violation(validate_mdp(mdp), "d0_range"));
  }
  SUBCASE("discount range") {
    auto mdp = two_state();
    mdp.gamma = 1.5;
    CHECK(has_violation(validate_mdp(mdp), "gamma"));
  }
  SUBCASE("trap state breaks episodicity") {
    auto mdp = TabularMDP::make({"s", "trap", "end"}, {"a", "b"}, "end", 0.9);
    mdp.set_transition("s", "a", "end", 1.0);
    mdp.set_transition("s", "b", "trap", 1.0);
    mdp.set_action_independent("trap", "trap", 0.0);
    mdp.set_initial("s", 1.0);
    const auto cert = certify_episodicity(mdp);
    CHECK_FALSE(cert.ok);
    CHECK(cert.trapped == std::vector<Index>{1});
    CHECK(has_violation(validate_mdp(mdp), "episodicity"));
  }
  SUBCASE("initial mass on the terminal state is only a notice") {
    auto mdp = two_state();
    mdp.initial << 0.5, 0.5;
    const auto r = validate_mdp(mdp);
    CHECK(r.ok());
    REQUIRE(r.notices.size() == 1);
    CHECK(r.notices.front().code == "d0_terminal");
  }
}

TEST_CASE("episodicity certificate reports a spectral radius below one") {
  const auto cert = certify_episodicity(figure1().mdp);
  CHECK(cert.ok);
  CHECK(cert.spectral_radius < 1.0);
  CHECK(cert.trapped.empty());
}

TEST_CASE("documents round-trip through the schema") {
  oracle::Rng rng(5);
  std::vector<TabularMDP> cases;
  for (const auto& name : gallery_names()) cases.push_back(gallery_entry(name).mdp);
  for (int i = 0; i < 20; ++i) cases.push_back(oracle::random_cyclic(rng).mdp);
  const auto path = temp_file("pgbias_roundtrip.json");
  for (const auto& mdp : cases) {
    CHECK(structurally_equal(mdp_from_json(mdp_to_json(mdp)), mdp));
    save_mdp(mdp, path);
    CHECK(structurally_equal(load_mdp(path), mdp));
  }
  std::filesystem::remove(path);
}

TEST_CASE("reader rejects malformed documents with the offending field") {
  json doc = mdp_to_json(figure1().mdp);

  SUBCASE("missing transition row") {
    auto& rows = doc["transitions"];
    rows.erase(std::remove_if(rows.begin(), rows.end(),
                              [](const json& t) { return t["s"] == "s2" && t["a"] == "a2"; }),
               rows.end());
    try {
      mdp_from_json(doc);
      FAIL("expected a format error");
    } catch (const MdpFormatError& e) {
      CHECK(e.field() == "transitions");
      CHECK(std::string(e.what()).find("(s2, a2)") != std::string::npos);
    }
  }
  SUBCASE("duplicate entry") {
    doc["rewards"].push_back(doc["rewards"][0]);
    CHECK_THROWS_AS(mdp_from_json(doc), MdpFormatError);
  }
  SUBCASE("unknown state") {
    doc["d0"][0]["s"] = "nowhere";
    CHECK_THROWS_AS(mdp_from_json(doc), MdpFormatError);
  }
  SUBCASE("syntax error") {
    const auto path = temp_file("pgbias_broken.json");
    std::ofstream(path) << "{\"states\": [";
    CHECK_THROWS_AS(read_mdp(path), MdpFormatError);
    std::filesystem::remove(path);
  }
  SUBCASE("parse succeeds but validation fails") {
    doc["d0"][0]["p"] = 0.5;
    const auto path = temp_file("pgbias_invalid.json");
    std::ofstream(path) << doc.dump();
    CHECK_NOTHROW(read_mdp(path));
    CHECK_THROWS_AS(load_mdp(path), ValidationError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("name lookup") {
  const auto mdp = figure1().mdp;
  CHECK(mdp.state_index("s2") == 1);
  CHECK(mdp.action_index("a2") == 1);
  CHECK_THROWS_AS(mdp.state_index("s9"), std::invalid_argument);
  CHECK(mdp.transient_states() == std::vector<Index>{0, 1});
}

TEST_CASE("policy probabilities match an independent softmax") {
  oracle::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto e = oracle::random_cyclic(rng);
    const Eigen::VectorXd theta = oracle::random_theta(rng, e.policy.num_params, -5, 5);
    const Eigen::MatrixXd p = policy_probs<double>(e.policy, theta);
    CHECK((p - oracle::probs(e.policy, theta)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  const auto f1 = figure1();
  const Eigen::MatrixXd p = policy_probs<double>(f1.policy, Eigen::Vector2d(0.3, -1.2));
  CHECK(p(0, 0) == doctest::Approx(oracle::sigmoid(0.3)).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(oracle::sigmoid(-1.2)).epsilon(1e-15));
}

TEST_CASE("policy probabilities survive extreme logits") {
  const auto f1 = figure1();
  const Eigen::MatrixXd p = policy_probs<double>(f1.policy, Eigen::Vector2d(800.0, -800.0));
  CHECK(p.allFinite());
  CHECK(p(0, 0) == 1.0);
  CHECK(p(1, 1) == 1.0);
}

TEST_CASE("score identity: sum over actions of pi psi vanishes") {
  oracle::Rng rng(17);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto e = i % 3 == 0 ? gallery_entry(gallery_names()[i % 9 / 3]) : oracle::random_cyclic(rng);
    const Eigen::VectorXd theta = oracle::random_theta(rng, e.policy.num_params, -5, 5);
    const Eigen::MatrixXd p = policy_probs<double>(e.policy, theta);
    const Eigen::MatrixXd psi = compatible_features<double>(e.policy, p);
    const Index na = p.cols();
    for (Index s = 0; s < p.rows(); ++s) {
      Eigen::VectorXd total = Eigen::VectorXd::Zero(e.policy.num_params);
      for (Index a = 0; a < na; ++a) total += p(s, a) * psi.row(s * na + a).transpose();
      worst = std::max(worst, oracle::max_abs(total));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("compatible features match differences of log-probabilities") {
  oracle::Rng rng(23);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto e = i % 2 ? figure3() : oracle::random_cyclic(rng, 5);
    const Eigen::VectorXd theta = oracle::random_theta(rng, e.policy.num_params, -5, 5);
    const Eigen::MatrixXd psi = compatible_features<double>(e.policy, theta);
    for (Index s = 0; s < e.mdp.num_states(); ++s)
      for (Index a = 0; a < e.mdp.num_actions(); ++a) {
        const Eigen::VectorXd fd = oracle::log_policy_gradient_fd(e.policy, theta, s, a);
        worst = std::max(worst, oracle::max_abs(psi.row(s * e.mdp.num_actions() + a).transpose() - fd));
      }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("the two oracle forms of the score function agree") {
  oracle::Rng rng(29);
  const auto e = figure3();
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd theta = oracle::random_theta(rng, 1, -5, 5);
    for (Index s = 0; s < e.mdp.num_states(); ++s)
      for (Index a = 0; a < 2; ++a)
        CHECK(oracle::max_abs(oracle::log_policy_gradient(e.policy, theta, s, a) -
                              oracle::log_policy_gradient_fd(e.policy, theta, s, a)) < 1e-8);
  }
}

TEST_CASE("parameterization constructors") {
  const auto mdp = figure1().mdp;
  const auto sig = PolicyParameterization::sigmoid(mdp, {"s1"});
  CHECK(sig.num_params == 1);
  CHECK(sig.slots(0, 0) == 0);
  CHECK(sig.slots(1, 0) == -1);
  CHECK(sig.parameterized_states() == std::vector<Index>{0});

  const auto soft = PolicyParameterization::softmax(mdp);
  CHECK(soft.num_params == 4);
  CHECK((soft.slots.row(2).array() == -1).all());

  const auto tied = PolicyParameterization::tied(mdp, {{"s1", 0}, {"s2", 0}});
  CHECK(tied.num_params == 1);
  CHECK(tied.slots(1, 0) == 0);

  CHECK_THROWS_AS(check_theta(sig, 2), std::invalid_argument);
  CHECK_THROWS_AS(policy_probs<double>(sig, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
