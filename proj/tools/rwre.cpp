// rwre: command-line front end for the (1,R) random walk library.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwre/analytics.hpp"
#include "rwre/config.hpp"
#include "rwre/decompose.hpp"
#include "rwre/env.hpp"
#include "rwre/exitprob.hpp"
#include "rwre/validate.hpp"
#include "rwre/walk.hpp"
#include "table.hpp"

namespace {

using rwre::cli::Cell;
using rwre::cli::Table;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> paths;
  std::optional<std::int64_t> depth;
  std::optional<double> tol;
  std::optional<std::string> format;
  std::optional<std::string> out;
  std::optional<std::int64_t> n_steps;
  std::optional<std::int64_t> max_steps;
  std::optional<std::int64_t> env_samples;
  // subcommand specific
  bool emit_sites = false;
  std::string input;
  std::string table = "levels";
  std::string weights;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--paths", f.paths, "number of ladder paths");
  cmd->add_option("--depth", f.depth, "series / truncation depth");
  cmd->add_option("--tol", f.tol, "numerical tolerance");
  cmd->add_option("--format", f.format, "csv, jsonl or pretty")->check(CLI::IsMember({"csv", "jsonl", "json-lines", "pretty"}));
  cmd->add_option("--out", f.out, "output file (default stdout)");
  cmd->add_option("--n-steps", f.n_steps, "steps per replica for fixed-n runs");
  cmd->add_option("--max-steps", f.max_steps, "step cap per ladder path");
  cmd->add_option("--env-samples", f.env_samples, "environment draws for i.i.d. laws");
}

rwre::ExperimentConfig resolve(const Flags& f) {
  rwre::ExperimentConfig c = f.config.empty() ? rwre::ExperimentConfig{} : rwre::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.paths) c.paths = *f.paths;
  if (f.depth) c.depth = *f.depth;
  if (f.tol) c.tol = *f.tol;
  if (f.format) c.format = rwre::parse_format(*f.format);
  if (f.out) c.out = *f.out;
  if (f.n_steps) c.n_steps = *f.n_steps;
  if (f.max_steps) c.max_steps = *f.max_steps;
  if (f.env_samples) c.env_samples = *f.env_samples;
  c.check();
  return c;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw rwre::Error(rwre::ErrorCode::kConfigError, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void emit(const rwre::ExperimentConfig& c, const Table& t) {
  Output out(c.out);
  rwre::cli::write_table(out.stream(), t, c.format);
}

rwre::Environment realize(const rwre::ExperimentConfig& c) {
  return rwre::sample_environment(c.law, rwre::Window{-c.depth, c.depth}, rwre::hash_pair(c.seed, 0));
}

std::string type_name(int index, int R) {
  if (R == 2) return std::string(1, static_cast<char>('A' + index));
  const rwre::CrossingType t = rwre::type_at(index, R);
  return "o" + std::to_string(t.overshoot) + "d" + std::to_string(t.depth);
}

std::string outcome_name(const rwre::Outcome& o) {
  std::string s;
  for (std::size_t k = 0; k < o.size(); ++k) s += (k ? " " : "") + std::to_string(o[k]);
  return s;
}

int cmd_simulate(const Flags& f) {
  const auto c = resolve(f);
  const rwre::Environment env = realize(c);
  const auto batch = rwre::simulate_ladder_batch(env, c.paths, rwre::hash_pair(c.seed, 1), c.max_steps);
  Table t;
  t.columns = {"record", "index", "t1", "ending_jump", "min_site", "t1_se", "max_steps_exceeded"};
  if (f.emit_sites) t.columns.push_back("sites");
  rwre::RunningStats t1;
  std::int64_t stuck = 0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto idx = static_cast<std::int64_t>(k);
    if (!batch[k]) {
      ++stuck;
      t.add({std::string("max_steps"), idx});
      continue;
    }
    const rwre::WalkPath& p = *batch[k];
    t1.add(static_cast<double>(p.t1()));
    std::vector<Cell> row{std::string("path"), idx, p.t1(), static_cast<std::int64_t>(p.ending_jump()), p.min_site()};
    if (f.emit_sites) {
      row.resize(7);
      row.push_back(nlohmann::json(p.sites).dump());
    }
    t.add(std::move(row));
  }
  t.add({std::string("summary"), t1.count, t1.mean(), Cell{}, Cell{}, t1.std_error(), stuck});
  emit(c, t);
  return 0;
}

std::vector<rwre::WalkPath> read_paths(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw rwre::Error(rwre::ErrorCode::kConfigError, "cannot open '" + file + "'");
  std::vector<rwre::WalkPath> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    // simulate's trailing summary row carries no path
    if (j.is_object() && j.value("record", "") == "summary") continue;
    if (j.is_discarded() || !j.contains("sites")) {
      throw rwre::Error(rwre::ErrorCode::kMalformedPath, "record without a 'sites' array: " + line.substr(0, 80));
    }
    auto sites = j.at("sites");
    if (sites.is_string()) sites = nlohmann::json::parse(sites.get<std::string>());
    out.push_back(rwre::WalkPath{sites.get<std::vector<std::int64_t>>()});
  }
  return out;
}

int cmd_decompose(const Flags& f) {
  const auto c = resolve(f);
  const int R = c.R;
  std::vector<rwre::WalkPath> paths;
  if (!f.input.empty()) {
    paths = read_paths(f.input);
  } else {
    for (auto& p : rwre::simulate_ladder_batch(realize(c), c.paths, rwre::hash_pair(c.seed, 1), c.max_steps)) {
      if (p) paths.push_back(std::move(*p));
    }
  }
  const int n_types = rwre::num_types(R);
  Table t;
  if (f.table == "levels") {
    std::map<std::int64_t, rwre::TypeCounts> sums;
    rwre::TypeCounts immigrants(static_cast<std::size_t>(n_types), 0);
    for (const auto& p : paths) {
      const auto rec = rwre::decompose_general(p, R);
      for (const auto& [level, u] : rec.counts) {
        auto& s = sums[level];
        if (s.empty()) s.assign(u.size(), 0);
        for (std::size_t k = 0; k < u.size(); ++k) s[k] += u[k];
      }
      ++immigrants[static_cast<std::size_t>(rec.immigration_type)];
    }
    t.columns = {"level"};
    for (int k = 0; k < n_types; ++k) t.columns.push_back(type_name(k, R));
    std::vector<Cell> imm{std::int64_t{1}};
    for (auto n : immigrants) imm.push_back(n);
    t.add(std::move(imm));
    for (auto it = sums.rbegin(); it != sums.rend(); ++it) {
      std::vector<Cell> row{it->first};
      for (auto n : it->second) row.push_back(n);
      t.add(std::move(row));
    }
  } else if (f.table == "offspring") {
    rwre::OffspringTable table(R);
    for (const auto& p : paths) table.add(rwre::decompose_general(p, R));
    t.columns = {"level", "parent", "outcome", "count", "frequency"};
    for (std::int64_t level : table.levels()) {
      for (int parent = 0; parent < n_types; ++parent) {
        const auto obs = table.outcomes(level, parent);
        const auto n = rwre::OffspringTable::count(obs);
        for (const auto& [o, k] : obs) {
          t.add({level, type_name(parent, R), outcome_name(o), k, static_cast<double>(k) / static_cast<double>(n)});
        }
      }
    }
  } else {
    throw rwre::Error(rwre::ErrorCode::kConfigError, "--table must be levels or offspring");
  }
  emit(c, t);
  return 0;
}

int cmd_exact(const Flags& f) {
  const auto c = resolve(f);
  const rwre::Environment env = realize(c);
  const int R = c.R;
  rwre::ExitSolver solver(env, std::min(c.tol, rwre::kDefaultTol), c.depth);
  Table t;
  t.columns = {"quantity", "value", "depth", "seed"};
  const auto seed = static_cast<std::int64_t>(c.seed);
  const auto& exits = solver.exit_limit(0);
  for (int j = 0; j < R; ++j) t.add({"exit_prob_" + std::to_string(j + 1), exits.probs[static_cast<std::size_t>(j)], exits.truncation_n, seed});
  const auto cb = solver.crossing_back(0);
  for (int k = 0; k < rwre::num_types(R); ++k) t.add({"crossing_back_" + type_name(k, R), cb.probs[static_cast<std::size_t>(k)], Cell{}, seed});
  // mean offspring matrix at level 0, row = parent
  const auto mm = solver.mean_matrix(0);
  for (int a = 0; a < rwre::num_types(R); ++a) {
    for (int b = 0; b < rwre::num_types(R); ++b) {
      t.add({"mean_matrix_" + type_name(a, R) + "_" + type_name(b, R),
             mm.entries(static_cast<std::size_t>(a), static_cast<std::size_t>(b)), Cell{}, seed});
    }
  }
  const auto et1 = rwre::expected_t1_series(solver, c.depth, c.tol);
  t.add({std::string("expected_t1"), et1.value, et1.depth, seed});
  if (R == 2) {
    const auto pi = rwre::invariant_density_series(solver, c.depth, c.tol);
    t.add({std::string("invariant_density"), pi.value, pi.depth, seed});
    if (env.is_homogeneous() && env.at(0).mean_increment() > 0.0) {
      const auto hs = rwre::homogeneous_closed_forms(env.at(0));
      t.add({std::string("closed_form_e_t1"), hs.e_t1, Cell{}, seed});
      t.add({std::string("closed_form_e_x_t1"), hs.e_x_t1, Cell{}, seed});
      t.add({std::string("lambda1"), hs.lambda1, Cell{}, seed});
      t.add({std::string("lambda2"), hs.lambda2, Cell{}, seed});
    }
  }
  emit(c, t);
  return 0;
}

int cmd_drift(const Flags& f) {
  const auto c = resolve(f);
  const rwre::DriftReport d = rwre::drift(c.law, c.depth, c.tol, c.env_samples, c.seed);
  Table t;
  t.columns = {"value", "stderr", "depth", "samples", "seed", "estimator", "numerator", "denominator"};
  Cell se = d.estimator == "exact" ? Cell{} : Cell{d.std_error};
  t.add({d.v_p, se, d.depth, d.samples, static_cast<std::int64_t>(c.seed), d.estimator, d.numerator, d.denominator});
  emit(c, t);
  return 0;
}

int cmd_wald(const Flags& f) {
  const auto c = resolve(f);
  Table t;
  t.columns = {"atom", "value", "series_residual", "e_x1", "e_x_t1", "e_t1_closed", "e_t1_series", "depth"};
  const auto& atoms = c.law.atoms();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const auto w = rwre::wald_check(atoms[k], c.depth, c.tol);
    t.add({static_cast<std::int64_t>(k), w.closed_form_residual, w.series_residual, w.e_x1, w.e_x_t1, w.e_t1_closed,
           w.e_t1_series, c.depth});
  }
  emit(c, t);
  return 0;
}

int cmd_validate(const Flags& f) {
  const auto c = resolve(f);
  rwre::ValidationOptions opt;
  if (!f.weights.empty()) {
    std::vector<long long> w;
    std::stringstream ss(f.weights);
    std::string item;
    while (std::getline(ss, item, ',')) w.push_back(std::stoll(item));
    opt.time_weights = w;
  }
  const auto results = rwre::run_validation(c, opt);
  Table t;
  t.columns = {"check", "pass", "value", "threshold", "detail"};
  for (const auto& r : results) t.add({r.name, r.pass, r.value, r.threshold, r.detail});
  emit(c, t);
  for (const auto& r : results) {
    if (!r.pass) std::cerr << "FAILED: " << r.name << '\n';
  }
  return rwre::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and exact computations for (1,R) random walks in random environments"};
  app.require_subcommand(1);
  Flags f;
  auto* sim = app.add_subcommand("simulate", "simulate ladder paths; one record per path plus a summary");
  auto* dec = app.add_subcommand("decompose", "per-level crossing-back type counts or offspring frequencies");
  auto* exa = app.add_subcommand("exact", "exit, crossing-back, E(T1) and density at the origin");
  auto* dri = app.add_subcommand("drift", "law-of-large-numbers velocity from the series formula");
  auto* wal = app.add_subcommand("wald", "Wald identity residuals for each atom");
  auto* val = app.add_subcommand("validate", "run the full check battery; nonzero exit on failure");
  for (auto* cmd : {sim, dec, exa, dri, wal, val}) add_common(cmd, f);
  sim->add_flag("--emit-sites", f.emit_sites, "include the full trajectory in each record");
  dec->add_option("--input", f.input, "JSON-lines path records with a 'sites' array");
  dec->add_option("--table", f.table, "levels or offspring");
  val->add_option("--weights", f.weights, "override time-identity weights, e.g. 3,2,1");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(f);
    if (*dec) return cmd_decompose(f);
    if (*exa) return cmd_exact(f);
    if (*dri) return cmd_drift(f);
    if (*wal) return cmd_wald(f);
    if (*val) return cmd_validate(f);
  } catch (const rwre::Error& e) {
    std::cerr << "error [" << rwre::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
