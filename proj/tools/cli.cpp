#include "cli.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "pgbias/pgbias.hpp"

namespace pgbias::cli {

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string format = "json";
  std::string out;
};

struct Source {
  std::string gallery;
  std::string mdp_path;
  int chain_delay = 4;
};

struct Loaded {
  TabularMDP mdp;
  PolicyParameterization policy;
  double default_gamma = 0.0;
};

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_number(const std::string& token, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw UsageError("malformed " + what + ": '" + token + "'");
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  if (text.empty()) throw UsageError("empty " + what);
  std::vector<double> out;
  for (const auto& tok : split(text, ',')) out.push_back(parse_number(tok, what));
  return out;
}

std::vector<double> parse_gammas(const std::string& text) {
  auto gammas = parse_list(text, "gamma list");
  for (double g : gammas)
    if (!(g >= 0.0 && g <= 1.0)) throw UsageError("gamma " + number(g) + " outside [0, 1]");
  return gammas;
}

Loaded load_source(const Source& src) {
  if (src.gallery.empty() == src.mdp_path.empty()) throw UsageError("give exactly one of --gallery or --mdp");
  Loaded out;
  if (!src.gallery.empty()) {
    GalleryEntry entry;
    try {
      entry = src.gallery == "figure2" ? figure2(src.chain_delay) : gallery_entry(src.gallery);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    out.mdp = std::move(entry.mdp);
    out.policy = std::move(entry.policy);
    out.default_gamma = entry.gamma_probe;
  } else {
    out.mdp = load_mdp(src.mdp_path);
    out.policy = out.mdp.num_actions() == 2
                     ? PolicyParameterization::sigmoid(out.mdp, [&] {
                         std::vector<std::string> names;
                         for (Index s : out.mdp.transient_states()) names.push_back(out.mdp.states[s]);
                         return names;
                       }())
                     : PolicyParameterization::softmax(out.mdp);
    out.default_gamma = out.mdp.gamma;
  }
  return out;
}

std::vector<double> gammas_or_default(const std::string& text, const Loaded& src) {
  return text.empty() ? std::vector<double>{src.default_gamma} : parse_gammas(text);
}

Eigen::VectorXd parse_theta(const std::string& text, Index dim) {
  if (text.empty()) return Eigen::VectorXd::Zero(dim);
  const auto values = parse_list(text, "theta");
  if (static_cast<Index>(values.size()) != dim)
    throw UsageError("theta has " + std::to_string(values.size()) + " entries, policy expects " + std::to_string(dim));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
}

/// "start:stop:count" per dimension, dimensions separated by commas. The
/// first dimension varies slowest.
std::vector<Eigen::VectorXd> parse_grid(const std::string& text, Index dim) {
  const auto dims = split(text, ',');
  if (static_cast<Index>(dims.size()) != dim)
    throw UsageError("theta grid has " + std::to_string(dims.size()) + " dimensions, policy expects " + std::to_string(dim));
  std::vector<std::vector<double>> axes;
  for (const auto& d : dims) {
    const auto parts = split(d, ':');
    if (parts.size() != 3) throw UsageError("grid axis '" + d + "' is not start:stop:count");
    const double lo = parse_number(parts[0], "grid start");
    const double hi = parse_number(parts[1], "grid stop");
    const double count = parse_number(parts[2], "grid count");
    if (count < 1 || count != std::floor(count)) throw UsageError("grid count must be a positive integer");
    std::vector<double> axis;
    const int n = static_cast<int>(count);
    for (int i = 0; i < n; ++i) axis.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    axes.push_back(std::move(axis));
  }
  std::vector<Eigen::VectorXd> points(1, Eigen::VectorXd::Zero(dim));
  for (Index j = 0; j < dim; ++j) {
    std::vector<Eigen::VectorXd> next;
    for (const auto& p : points)
      for (double v : axes[j]) {
        Eigen::VectorXd q = p;
        q(j) = v;
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

std::vector<Eigen::VectorXd> theta_points(const std::string& theta, const std::string& grid, Index dim) {
  if (!theta.empty() && !grid.empty()) throw UsageError("give at most one of --theta and --theta-grid");
  if (!grid.empty()) return parse_grid(grid, dim);
  return {parse_theta(theta, dim)};
}

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Callers write into
/// slot i, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

json base_config(const std::string& subcommand, const Globals& g, const Source& src) {
  json source;
  if (!src.gallery.empty()) {
    source["gallery"] = src.gallery;
    if (src.gallery == "figure2") source["chain_delay"] = src.chain_delay;
  } else if (!src.mdp_path.empty()) {
    source["mdp"] = src.mdp_path;
  }
  return {{"subcommand", subcommand}, {"source", source}, {"seed", g.seed}, {"jobs", g.jobs}, {"format", g.format}};
}

class Emitter {
 public:
  Emitter(const Globals& g, std::ostream& out) : globals_(g), out_(out) {}

  void json_document(const json& config, const json& result) {
    const json doc = {{"tool", "pgbias"}, {"version", PGBIAS_VERSION}, {"config", config}, {"result", result}};
    write(doc.dump(2) + "\n");
  }

  void csv_document(const json& config, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream text;
    text << "# pgbias " << PGBIAS_VERSION << "\n# config " << config.dump() << "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) text << (i ? "," : "") << cells[i];
      text << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    write(text.str());
  }

  bool csv() const { return globals_.format == "csv"; }

 private:
  void write(const std::string& text) {
    if (globals_.out.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(globals_.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + globals_.out);
    file << text;
  }

  const Globals& globals_;
  std::ostream& out_;
};

std::vector<std::string> indexed(const std::string& prefix, Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& row, const Eigen::VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) row.push_back(number(v(i)));
}

void add_source_options(CLI::App* cmd, Source& src) {
  cmd->add_option("--gallery", src.gallery, "built-in MDP: figure1 | figure2 | figure3");
  cmd->add_option("--mdp", src.mdp_path, "MDP document (JSON schema)");
  cmd->add_option("--chain-delay", src.chain_delay, "figure2 chain length")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  Source src;
  std::string gamma, theta, grid, form = "q";
};

int cmd_analyze(const AnalyzeOptions& o, const Globals& g, std::ostream& out) {
  const auto src = load_source(o.src);
  const auto gammas = gammas_or_default(o.gamma, src);
  const auto points = theta_points(o.theta, o.grid, src.policy.num_params);
  if (o.form != "q" && o.form != "advantage") throw UsageError("--form must be q or advantage");
  const CriticForm form = o.form == "q" ? CriticForm::action_value : CriticForm::advantage;
  const std::vector<FieldKind> kinds = {FieldKind::discounted, FieldKind::biased, FieldKind::undiscounted};

  struct Row {
    double gamma;
    Eigen::VectorXd theta;
    std::vector<Eigen::VectorXd> grads;
    double j_gamma = 0.0, j = 0.0;
  };
  std::vector<Row> rows;
  for (double gm : gammas)
    for (const auto& p : points) rows.push_back({gm, p, {}, 0.0, 0.0});

  parallel_for(rows.size(), g.jobs, [&](std::size_t i) {
    Row& r = rows[i];
    r.grads.push_back(grad_discounted<double>(src.mdp, src.policy, r.theta, r.gamma, form));
    r.grads.push_back(grad_biased<double>(src.mdp, src.policy, r.theta, r.gamma, form));
    r.grads.push_back(grad_undiscounted<double>(src.mdp, src.policy, r.theta, form));
    r.j_gamma = objective<double>(src.mdp, src.policy, r.theta, r.gamma);
    r.j = objective<double>(src.mdp, src.policy, r.theta, 1.0);
  });

  json config = base_config("analyze", g, o.src);
  config["gamma"] = gammas;
  config["theta"] = o.theta;
  config["theta_grid"] = o.grid;
  config["form"] = o.form;

  Emitter emit(g, out);
  const Index k = src.policy.num_params;
  if (emit.csv()) {
    std::vector<std::string> header = {"gamma"};
    for (auto& h : indexed("theta_", k)) header.push_back(h);
    header.push_back("field");
    for (auto& h : indexed("g_", k)) header.push_back(h);
    header.push_back("J_gamma");
    header.push_back("J");
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows)
      for (std::size_t f = 0; f < kinds.size(); ++f) {
        std::vector<std::string> line = {number(r.gamma)};
        append(line, r.theta);
        line.push_back(to_string(kinds[f]));
        append(line, r.grads[f]);
        line.push_back(number(r.j_gamma));
        line.push_back(number(r.j));
        table.push_back(std::move(line));
      }
    emit.csv_document(config, header, table);
  } else {
    json result = json::array();
    for (const auto& r : rows)
      for (std::size_t f = 0; f < kinds.size(); ++f)
        result.push_back({{"gamma", r.gamma},
                          {"theta", to_json(r.theta)},
                          {"field", to_string(kinds[f])},
                          {"gradient", to_json(r.grads[f])},
                          {"J_gamma", r.j_gamma},
                          {"J", r.j}});
    emit.json_document(config, result);
  }
  return ExitCode::ok;
}

// ---------------------------------------------------------------- symmetry

struct SymmetryOptions {
  Source src;
  std::string gamma, theta, grid, field = "grad_biased", method = "fd";
  double h = kDefaultStep;
};

FieldKind field_kind(const std::string& name) {
  try {
    return parse_field_kind(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_symmetry(const SymmetryOptions& o, const Globals& g, std::ostream& out) {
  const auto src = load_source(o.src);
  const auto gammas = gammas_or_default(o.gamma, src);
  const auto points = theta_points(o.theta, o.grid, src.policy.num_params);
  const FieldKind kind = field_kind(o.field);
  if (o.method != "fd" && o.method != "analytic") throw UsageError("--method must be fd or analytic");
  const auto method = o.method == "fd" ? JacobianMethod::finite_difference : JacobianMethod::analytic;
  if (method == JacobianMethod::finite_difference && !(o.h > 0.0)) throw UsageError("--h must be positive");

  std::vector<std::pair<double, Eigen::VectorXd>> probes;
  for (double gm : gammas)
    for (const auto& p : points) probes.emplace_back(gm, p);
  std::vector<SymmetryReport> reports(probes.size());
  parallel_for(probes.size(), g.jobs, [&](std::size_t i) {
    const ParameterField field(kind, src.mdp, src.policy, probes[i].first);
    reports[i] = jacobian(field, probes[i].second, method, o.h);
  });

  json config = base_config("symmetry", g, o.src);
  config["gamma"] = gammas;
  config["theta"] = o.theta;
  config["theta_grid"] = o.grid;
  config["field"] = to_string(kind);
  config["method"] = to_string(method);
  config["h"] = o.h;

  Emitter emit(g, out);
  if (emit.csv()) {
    std::vector<std::string> header = {"gamma", "defect", "method", "h", "field"};
    for (auto& h : indexed("theta_", src.policy.num_params)) header.push_back(h);
    std::vector<std::vector<std::string>> table;
    for (const auto& r : reports) {
      std::vector<std::string> line = {number(r.gamma), number(r.defect), to_string(r.method), number(r.step), r.field};
      append(line, r.theta);
      table.push_back(std::move(line));
    }
    emit.csv_document(config, header, table);
  } else {
    json result = json::array();
    for (const auto& r : reports) result.push_back(to_json(r));
    emit.json_document(config, result);
  }
  return ExitCode::ok;
}

// ---------------------------------------------------------------- flow

struct FlowCommandOptions {
  Source src;
  std::string gamma, theta0, field = "grad_biased";
  FlowOptions flow;
};

int cmd_flow(const FlowCommandOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto src = load_source(o.src);
  const auto gammas = gammas_or_default(o.gamma, src);
  if (gammas.size() != 1) throw UsageError("flow takes a single gamma");
  const FieldKind kind = field_kind(o.field);
  if (!(o.flow.step_size > 0.0)) throw UsageError("--alpha must be positive");
  const Eigen::VectorXd theta0 = parse_theta(o.theta0, src.policy.num_params);
  const ParameterField field(kind, src.mdp, src.policy, gammas.front());
  FlowOptions options = o.flow;
  options.score_gamma = gammas.front();
  const FlowResult result = flow(field, theta0, options);

  if (result.diverged) err << "warning: flow diverged after " << result.iterations << " iterations\n";
  if (result.reason == StopReason::max_iterations) err << "warning: flow hit the iteration limit\n";
  if (result.scores && !result.scores->envelope.notice.empty()) err << "notice: " << result.scores->envelope.notice << "\n";

  json config = base_config("flow", g, o.src);
  config["gamma"] = gammas.front();
  config["theta0"] = to_json(theta0);
  config["field"] = to_string(kind);
  config["alpha"] = options.step_size;
  config["max_iters"] = options.max_iters;
  config["tol_grad"] = options.tol_grad;
  config["saturation"] = options.saturation;
  config["decimation"] = options.decimation;

  Emitter emit(g, out);
  if (emit.csv()) {
    std::vector<std::string> header = {"iter"};
    for (auto& h : indexed("theta_", theta0.size())) header.push_back(h);
    std::vector<std::vector<std::string>> table;
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
      std::vector<std::string> line = {std::to_string(result.trajectory_iters[i])};
      append(line, result.trajectory[i]);
      table.push_back(std::move(line));
    }
    emit.csv_document(config, header, table);
  } else {
    emit.json_document(config, to_json(result));
  }
  return ExitCode::ok;
}

// ---------------------------------------------------------------- circulation

struct CirculationOptions {
  Source src;
  std::string gamma, rect = "-1,1,-1,1", slice = "0,1", theta, field = "grad_biased", orientation = "clockwise";
  int steps = 64;
};

int cmd_circulation(const CirculationOptions& o, const Globals& g, std::ostream& out) {
  const auto src = load_source(o.src);
  const auto gammas = gammas_or_default(o.gamma, src);
  const FieldKind kind = field_kind(o.field);
  const auto r = parse_list(o.rect, "rectangle");
  if (r.size() != 4) throw UsageError("--rect needs a1,b1,a2,b2");
  const auto sl = parse_list(o.slice, "slice");
  if (sl.size() != 2) throw UsageError("--slice needs two parameter indices");
  if (o.steps < 16) throw UsageError("--steps must be at least 16");
  if (o.orientation != "clockwise" && o.orientation != "counterclockwise")
    throw UsageError("--orientation must be clockwise or counterclockwise");
  Slice slice{static_cast<Index>(sl[0]), static_cast<Index>(sl[1]), parse_theta(o.theta, src.policy.num_params)};
  const Rectangle rect{r[0], r[1], r[2], r[3]};
  const auto orient = o.orientation == "clockwise" ? Orientation::clockwise : Orientation::counterclockwise;

  std::vector<CirculationReport> reports(gammas.size());
  parallel_for(gammas.size(), g.jobs, [&](std::size_t i) {
    const ParameterField field(kind, src.mdp, src.policy, gammas[i]);
    reports[i] = circulation(field, rect, o.steps, slice, orient);
  });

  json config = base_config("circulation", g, o.src);
  config["gamma"] = gammas;
  config["field"] = to_string(kind);
  config["rect"] = r;
  config["slice"] = sl;
  config["theta"] = o.theta;
  config["steps"] = o.steps;
  config["orientation"] = o.orientation;

  Emitter emit(g, out);
  if (emit.csv()) {
    std::vector<std::vector<std::string>> table;
    for (const auto& rep : reports)
      table.push_back({number(rep.gamma), rep.field, number(rep.value), number(rep.error_bound), number(rep.trapezoid),
                       number(rep.refined), std::to_string(rep.steps), o.orientation});
    emit.csv_document(config, {"gamma", "field", "value", "error_bound", "trapezoid", "refined", "steps", "orientation"},
                      table);
  } else {
    json result = json::array();
    for (const auto& rep : reports) result.push_back(to_json(rep));
    emit.json_document(config, result);
  }
  return ExitCode::ok;
}

// ---------------------------------------------------------------- mc

struct McOptions {
  Source src;
  std::string gamma, theta, trajectories;
  long episodes = 100'000;
  long horizon_cap = 0;
  bool weighted = false, unweighted = false;
};

int cmd_mc(const McOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto src = load_source(o.src);
  const auto gammas = gammas_or_default(o.gamma, src);
  if (gammas.size() != 1) throw UsageError("mc takes a single gamma");
  const double gamma = gammas.front();
  if (o.episodes < 2) throw UsageError("--episodes must be at least 2");
  const Eigen::VectorXd theta = parse_theta(o.theta, src.policy.num_params);

  const auto batch = simulate(src.mdp, src.policy, theta, o.episodes, g.seed, {o.horizon_cap, g.jobs});
  if (batch.truncated_count > 0)
    err << "warning: " << batch.truncated_count << " episode(s) hit the horizon cap of " << batch.horizon_cap << "\n";
  if (!o.trajectories.empty()) {
    std::ofstream lines(o.trajectories, std::ios::binary);
    if (!lines) throw std::runtime_error("cannot write " + o.trajectories);
    for (const auto& t : batch.episodes) lines << to_json(t, src.mdp).dump() << "\n";
  }

  std::vector<bool> which;
  if (o.weighted || !o.unweighted) which.push_back(true);
  if (o.unweighted || !o.weighted) which.push_back(false);

  const Eigen::VectorXd exact_discounted = grad_discounted<double>(src.mdp, src.policy, theta, gamma);
  const Eigen::VectorXd exact_biased = grad_biased<double>(src.mdp, src.policy, theta, gamma);

  json config = base_config("mc", g, o.src);
  config["gamma"] = gamma;
  config["theta"] = to_json(theta);
  config["episodes"] = o.episodes;
  config["horizon_cap"] = batch.horizon_cap;
  config["estimators"] = json::array();
  for (bool w : which) config["estimators"].push_back(w ? "weighted" : "unweighted");

  std::vector<EstimatorReport> reports;
  for (bool w : which) reports.push_back(mc_gradient(batch, src.policy, theta, gamma, w));

  auto z_scores = [](const EstimatorReport& r, const Eigen::VectorXd& exact) {
    Eigen::VectorXd z(exact.size());
    for (Index i = 0; i < exact.size(); ++i)
      z(i) = r.standard_error(i) > 0.0 ? (r.mean(i) - exact(i)) / r.standard_error(i) : 0.0;
    return z;
  };

  Emitter emit(g, out);
  if (emit.csv()) {
    std::vector<std::string> header = {"estimator", "component", "mean", "standard_error", "grad_discounted",
                                       "grad_biased", "z_discounted", "z_biased"};
    std::vector<std::vector<std::string>> table;
    for (const auto& r : reports) {
      const auto zd = z_scores(r, exact_discounted);
      const auto zb = z_scores(r, exact_biased);
      for (Index i = 0; i < r.mean.size(); ++i)
        table.push_back({r.estimator, std::to_string(i), number(r.mean(i)), number(r.standard_error(i)),
                         number(exact_discounted(i)), number(exact_biased(i)), number(zd(i)), number(zb(i))});
    }
    emit.csv_document(config, header, table);
  } else {
    json result = {{"grad_discounted", to_json(exact_discounted)},
                   {"grad_biased", to_json(exact_biased)},
                   {"truncated_episodes", batch.truncated_count},
                   {"estimators", json::array()}};
    for (const auto& r : reports) {
      json entry = to_json(r);
      entry["z_vs_grad_discounted"] = to_json(z_scores(r, exact_discounted));
      entry["z_vs_grad_biased"] = to_json(z_scores(r, exact_biased));
      result["estimators"].push_back(std::move(entry));
    }
    emit.json_document(config, result);
  }
  return ExitCode::ok;
}

// ---------------------------------------------------------------- gallery / validate

int cmd_gallery_list(const Globals& g, std::ostream& out) {
  json config = {{"subcommand", "gallery list"}, {"seed", g.seed}, {"format", g.format}};
  Emitter emit(g, out);
  if (emit.csv()) {
    std::vector<std::vector<std::string>> table;
    for (const auto& name : gallery_names()) {
      const auto e = gallery_entry(name);
      table.push_back({e.name, number(e.gamma_probe), to_string(e.policy.kind), std::to_string(e.policy.num_params)});
    }
    emit.csv_document(config, {"name", "gamma_probe", "policy_kind", "num_params"}, table);
  } else {
    json result = json::array();
    for (const auto& name : gallery_names()) result.push_back(describe(gallery_entry(name)));
    emit.json_document(config, result);
  }
  return ExitCode::ok;
}

int cmd_gallery_export(const std::string& name, const std::string& path, int chain_delay, const Globals& g,
                       std::ostream& err) {
  GalleryEntry entry;
  try {
    entry = name == "figure2" ? figure2(chain_delay) : gallery_entry(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json doc = mdp_to_json(entry.mdp);
  doc["generator"] = {{"tool", "pgbias"},
                      {"version", PGBIAS_VERSION},
                      {"config", {{"subcommand", "gallery export"}, {"name", name}, {"chain_delay", chain_delay}, {"seed", g.seed}}},
                      {"provenance", entry.provenance}};
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << doc.dump(2) << "\n";
  err << "wrote " << path << "\n";
  return ExitCode::ok;
}

int cmd_validate(const Source& src_opts, const Globals& g, std::ostream& out) {
  if (src_opts.gallery.empty() == src_opts.mdp_path.empty()) throw UsageError("give exactly one of --gallery or --mdp");
  TabularMDP mdp;
  if (!src_opts.gallery.empty()) {
    try {
      mdp = src_opts.gallery == "figure2" ? figure2(src_opts.chain_delay).mdp : gallery_entry(src_opts.gallery).mdp;
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    mdp = read_mdp(src_opts.mdp_path);
  }
  const auto report = validate_mdp(mdp);
  Emitter emit(g, out);
  json config = base_config("validate", g, src_opts);
  if (emit.csv()) {
    std::vector<std::vector<std::string>> table;
    for (const auto& v : report.violations) table.push_back({"violation", v.code, "\"" + v.location + "\""});
    for (const auto& v : report.notices) table.push_back({"notice", v.code, "\"" + v.location + "\""});
    emit.csv_document(config, {"kind", "code", "location"}, table);
  } else {
    emit.json_document(config, to_json(report));
  }
  return report.ok() ? ExitCode::ok : ExitCode::validation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact analysis of policy-gradient update directions on finite episodic MDPs", "pgbias"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "worker threads for sweeps and sampling")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", g.out, "write results to this file instead of stdout");
  app.set_version_flag("--version", PGBIAS_VERSION);

  AnalyzeOptions analyze;
  auto* c_analyze = app.add_subcommand("analyze", "evaluate the three gradient fields and both objectives");
  add_source_options(c_analyze, analyze.src);
  c_analyze->add_option("--gamma", analyze.gamma, "comma-separated discounts");
  c_analyze->add_option("--theta", analyze.theta, "comma-separated parameter vector");
  c_analyze->add_option("--theta-grid", analyze.grid, "start:stop:count per dimension, comma-separated");
  c_analyze->add_option("--form", analyze.form, "critic: q | advantage");

  SymmetryOptions symmetry;
  auto* c_symmetry = app.add_subcommand("symmetry", "Jacobian symmetry defect of a field");
  c_symmetry->set_help_flag("--help", "print this help message and exit");
  add_source_options(c_symmetry, symmetry.src);
  c_symmetry->add_option("--gamma", symmetry.gamma, "comma-separated discounts");
  c_symmetry->add_option("--theta", symmetry.theta, "probe point");
  c_symmetry->add_option("--theta-grid", symmetry.grid, "start:stop:count per dimension");
  c_symmetry->add_option("--field", symmetry.field, "grad_discounted | grad_biased | grad_biased_via_lemma | grad_undiscounted");
  c_symmetry->add_option("--method", symmetry.method, "fd | analytic");
  c_symmetry->add_option("--h", symmetry.h, "finite-difference step");

  FlowCommandOptions flow_opts;
  auto* c_flow = app.add_subcommand("flow", "fixed-step ascent along a field and scoring of its endpoint");
  add_source_options(c_flow, flow_opts.src);
  c_flow->add_option("--gamma", flow_opts.gamma, "discount");
  c_flow->add_option("--theta0", flow_opts.theta0, "starting parameters");
  c_flow->add_option("--field", flow_opts.field, "field to follow");
  c_flow->add_option("--alpha", flow_opts.flow.step_size, "step size");
  c_flow->add_option("--max-iters", flow_opts.flow.max_iters, "iteration limit");
  c_flow->add_option("--tol-grad", flow_opts.flow.tol_grad, "field-norm tolerance");
  c_flow->add_option("--saturation", flow_opts.flow.saturation, "distance from a deterministic policy");
  c_flow->add_option("--decimate", flow_opts.flow.decimation, "keep every n-th iterate")->check(CLI::PositiveNumber);

  CirculationOptions circ;
  auto* c_circ = app.add_subcommand("circulation", "loop integral of a field around a rectangle");
  add_source_options(c_circ, circ.src);
  c_circ->add_option("--gamma", circ.gamma, "comma-separated discounts");
  c_circ->add_option("--rect", circ.rect, "a1,b1,a2,b2");
  c_circ->add_option("--slice", circ.slice, "two parameter indices");
  c_circ->add_option("--theta", circ.theta, "values of the other parameters");
  c_circ->add_option("--field", circ.field, "field to integrate");
  c_circ->add_option("--steps", circ.steps, "trapezoid panels per edge");
  c_circ->add_option("--orientation", circ.orientation, "clockwise | counterclockwise");

  McOptions mc;
  auto* c_mc = app.add_subcommand("mc", "Monte Carlo REINFORCE estimators against the exact fields");
  add_source_options(c_mc, mc.src);
  c_mc->add_option("--gamma", mc.gamma, "discount");
  c_mc->add_option("--theta", mc.theta, "policy parameters");
  c_mc->add_option("--episodes", mc.episodes, "number of episodes");
  c_mc->add_option("--horizon-cap", mc.horizon_cap, "steps per episode before truncation (0: automatic)");
  c_mc->add_flag("--weighted", mc.weighted, "only the gamma^t-weighted estimator");
  c_mc->add_flag("--unweighted", mc.unweighted, "only the unweighted estimator");
  c_mc->add_option("--trajectories", mc.trajectories, "also write episodes as JSON lines");

  auto* c_gallery = app.add_subcommand("gallery", "built-in MDPs");
  c_gallery->require_subcommand(1);
  c_gallery->fallthrough();
  auto* c_list = c_gallery->add_subcommand("list", "describe the built-in MDPs");
  std::string export_name, export_path;
  int export_delay = 4;
  auto* c_export = c_gallery->add_subcommand("export", "write a built-in MDP as a document");
  c_export->add_option("name", export_name, "entry name")->required();
  c_export->add_option("path", export_path, "output file")->required();
  c_export->add_option("--chain-delay", export_delay, "figure2 chain length")->check(CLI::PositiveNumber);

  Source validate_src;
  auto* c_validate = app.add_subcommand("validate", "check an MDP against every structural invariant");
  add_source_options(c_validate, validate_src);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ExitCode::ok;
  } catch (const CLI::CallForVersion&) {
    out << PGBIAS_VERSION << "\n";
    return ExitCode::ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return ExitCode::usage;
  }

  try {
    if (c_analyze->parsed()) return cmd_analyze(analyze, g, out);
    if (c_symmetry->parsed()) return cmd_symmetry(symmetry, g, out);
    if (c_flow->parsed()) return cmd_flow(flow_opts, g, out, err);
    if (c_circ->parsed()) return cmd_circulation(circ, g, out);
    if (c_mc->parsed()) return cmd_mc(mc, g, out, err);
    if (c_list->parsed()) return cmd_gallery_list(g, out);
    if (c_export->parsed()) return cmd_gallery_export(export_name, export_path, export_delay, g, err);
    if (c_validate->parsed()) return cmd_validate(validate_src, g, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return ExitCode::usage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return ExitCode::validation;
  } catch (const MdpFormatError& e) {
    err << "parse error: " << e.what() << "\n";
    return ExitCode::validation;
  } catch (const SingularSystemError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return ExitCode::numerical;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return ExitCode::usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::numerical;
  }
  err << "no subcommand\n";
  return ExitCode::usage;
}

}  // namespace pgbias::cli
