#include "pnreg_tools/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pnreg/errors.hpp"
#include "pnreg/gamma.hpp"
#include "pnreg/leverage.hpp"
#include "pnreg/linear_solvers.hpp"
#include "pnreg/matrix_market.hpp"
#include "pnreg/oracle.hpp"
#include "pnreg/pnorm.hpp"
#include "pnreg_tools/instances.hpp"
#include "pnreg_tools/report.hpp"
#include "pnreg_tools/run_config.hpp"

namespace pnreg::tools {

namespace {

const std::map<std::string, std::string>& flag_help() {
  static const std::map<std::string, std::string> h = {
      {"p", "exponent p > 1"},
      {"eps", "target relative gap (homotopy: additive, relative to |b|_2^p)"},
      {"A", "matrix-market file for A"},
      {"b", "vector file for b (one value per line)"},
      {"C", "matrix-market file for the d x d constraint matrix (form p1)"},
      {"v", "vector file for the constraint right-hand side"},
      {"t", "vector file of thresholds"},
      {"form", "p1 (min |Ax-b|_p) or p2 (min |x|_p s.t. A^T x = b)"},
      {"method", "residual, homotopy or dual-auto"},
      {"seed", "random seed; all randomness derives from it"},
      {"trace", "write a JSON-lines iteration trace to this file ('-' for stderr)"},
      {"out", "write the primary output (solution, sample matrix) to this file"},
      {"sampled", "solve residual problems on gamma samples (p1, p <= 2)"},
      {"line_search", "search the step length (off: fixed refinement step)"},
      {"max_outer", "outer iteration cap"},
      {"C_h", "gamma-sampling oversampling constant, h = C_h d ln n"},
      {"mwu_C", "leading constant of rho, beta, tau in the weights solver"},
      {"mwu_C_alpha", "leading constant of the weights solver step"},
      {"spectral_c", "oversampling constant of spectral approximation"},
      {"m_knob", "rebuild period knob of the maintained inverse"},
      {"rebuild_period", "explicit rebuild period (0: formula)"},
      {"only", "comma-separated criteria to run"},
      {"suite", "bench suite: tiny, desk or scaling"},
      {"repeats", "timing repeats per scaling point"},
  };
  return h;
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

struct Loaded {
  RunConfig cfg;
  std::map<std::string, std::string> extra;
};

// Splits flags into RunConfig keys and command-specific extras.
Loaded load(const std::map<std::string, std::string>& flags,
            const std::vector<std::string>& extra_keys) {
  std::map<std::string, std::string> cfg_flags;
  Loaded l;
  for (const auto& [k, v] : flags) {
    if (std::find(extra_keys.begin(), extra_keys.end(), k) != extra_keys.end())
      l.extra[k] = v;
    else
      cfg_flags[k] = v;
  }
  l.cfg = resolve_config(cfg_flags);
  return l;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required flag --") + flag);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int parse_flags(const std::string& command, const std::string& description,
                const std::vector<std::string>& keys, const Args& args,
                std::map<std::string, std::string>& flags, std::ostream& out, std::ostream& err) {
  CLI::App app{description, "pnreg " + command};
  app.footer(
      "Config files (--config) hold flat key=value lines using the flag names\n"
      "without dashes ('-' and '_' are interchangeable); '#' starts a comment.\n"
      "Flags given on the command line override the file.\n"
      "Exit codes: 0 success, 1 solve/verification failure, 2 usage error.");
  std::map<std::string, std::string> storage;
  std::map<std::string, CLI::Option*> opts;
  std::vector<std::string> all = keys;
  all.push_back("config");
  for (const auto& k : all) {
    std::string names = "--" + k;
    if (dashed(k) != k) names += ",--" + dashed(k);
    auto it = flag_help().find(k);
    std::string help = k == "config" ? "key=value configuration file"
                                     : (it != flag_help().end() ? it->second : "");
    opts[k] = app.add_option(names, storage[k], help);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'pnreg " << command << " --help'\n";
    return 2;
  }
  for (const auto& [k, opt] : opts)
    if (opt->count() > 0) flags[k] = storage[k];
  return -1;
}

int cmd_solve(const Args& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  int rc = parse_flags("solve", "Solve a p-norm regression problem; prints a JSON report.",
                       {"p", "eps", "A", "b", "C", "v", "form", "method", "seed", "trace", "out",
                        "sampled", "line_search", "max_outer", "C_h", "mwu_C", "mwu_C_alpha",
                        "spectral_c", "m_knob", "rebuild_period"},
                       args, flags, out, err);
  if (rc >= 0) return rc;
  return guarded(err, [&]() {
    RunConfig cfg = load(flags, {}).cfg;
    cfg.validate();
    require(cfg.A_path, "A");
    require(cfg.b_path, "b");
    if (cfg.C_path.empty() != cfg.v_path.empty())
      throw UsageError("--C and --v must be given together");
    RegressionProblem prob;
    prob.form = cfg.form;
    prob.p = cfg.p;
    prob.A = read_matrix_market(cfg.A_path);
    prob.b = read_vector(cfg.b_path);
    if (!cfg.C_path.empty()) {
      prob.C = read_matrix_market(cfg.C_path).to_dense();
      prob.v = read_vector(cfg.v_path);
    }
    SolverConfig sc = cfg.solver_config();
    std::unique_ptr<std::ofstream> trace_file;
    std::ostream* trace_out = nullptr;
    if (cfg.trace_path == "-") {
      trace_out = &err;
    } else if (!cfg.trace_path.empty()) {
      trace_file = std::make_unique<std::ofstream>(cfg.trace_path);
      if (!*trace_file) throw UsageError("cannot open trace file " + cfg.trace_path);
      trace_out = trace_file.get();
    }
    if (trace_out)
      sc.trace = [trace_out](const TraceEvent& ev) { *trace_out << trace_json(ev).dump() << "\n"; };
    SolveReport rep = solve(prob, sc);
    out << report_json(rep, prob, cfg.eps).dump(2) << "\n";
    if (!cfg.out_path.empty()) write_vector(rep.solution, cfg.out_path);
    return 0;
  });
}

int cmd_sparsify(const Args& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  int rc = parse_flags("sparsify",
                       "Spectral approximation of A by leverage-score row sampling; prints JSON.",
                       {"A", "seed", "spectral_c", "out"}, args, flags, out, err);
  if (rc >= 0) return rc;
  return guarded(err, [&]() {
    RunConfig cfg = load(flags, {}).cfg;
    cfg.validate();
    require(cfg.A_path, "A");
    SparseMatrix A = read_matrix_market(cfg.A_path);
    SeededRng rng(cfg.seed);
    SpectralConfig sc;
    sc.c = cfg.spectral_c;
    SpectralResult res = spectral_approximation(A, rng, sc);
    nlohmann::json j;
    j["n"] = A.n_rows();
    j["d"] = A.n_cols();
    j["rows"] = res.approx.n_rows();
    j["retries"] = res.retries;
    j["u_norms"] = res.u_norms;
    j["indices"] = res.sample.indices;
    j["weights"] = res.sample.weights;
    if (A.n_cols() <= 200) {
      Vector mu = generalized_eigenvalues(gram(res.approx), gram(A));
      j["mu_min"] = mu[0];
      j["mu_max"] = mu[mu.size() - 1];
    }
    out << j.dump(2) << "\n";
    if (!cfg.out_path.empty()) write_matrix_market(res.approx, cfg.out_path);
    return 0;
  });
}

int cmd_leverage(const Args& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  int rc = parse_flags("leverage",
                       "Exact leverage scores of A, or l_p Lewis weights when --p > 2.",
                       {"A", "p", "out"}, args, flags, out, err);
  if (rc >= 0) return rc;
  return guarded(err, [&]() {
    RunConfig cfg = load(flags, {}).cfg;
    cfg.validate();
    require(cfg.A_path, "A");
    SparseMatrix A = read_matrix_market(cfg.A_path);
    nlohmann::json j;
    Vector scores;
    if (cfg.p > 2.0) {
      LewisResult lw = lewis_weights(A, cfg.p, 100);
      scores = lw.weights;
      j["kind"] = "lewis";
      j["p"] = cfg.p;
      j["fixed_point_residual"] = lw.residual;
    } else {
      scores = leverage_scores_exact(A).values;
      j["kind"] = "leverage";
    }
    j["sum"] = scores.sum();
    j["scores"] = vector_json(scores);
    out << j.dump(2) << "\n";
    if (!cfg.out_path.empty()) write_vector(scores, cfg.out_path);
    return 0;
  });
}

int cmd_gamma_sample(const Args& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  int rc = parse_flags("gamma-sample",
                       "Row sample preserving sum gamma_q(t_i, (Ax)_i); --p gives q in (1, 2].",
                       {"A", "t", "p", "seed", "C_h", "out"}, args, flags, out, err);
  if (rc >= 0) return rc;
  return guarded(err, [&]() {
    RunConfig cfg = load(flags, {}).cfg;
    cfg.validate();
    require(cfg.A_path, "A");
    if (cfg.p > 2.0) throw UsageError("gamma-sample needs --p in (1, 2]");
    SparseMatrix A = read_matrix_market(cfg.A_path);
    Vector t = cfg.t_path.empty() ? Vector(Vector::Ones(A.n_rows())) : read_vector(cfg.t_path);
    if (t.size() != A.n_rows()) throw DimensionMismatch("t must have one entry per row of A");
    GammaSampleConfig gc;
    gc.C_h = cfg.C_h;
    SeededRng rng(cfg.seed);
    GammaSampleResult gs = gamma_sample(A, t, cfg.p, gc, rng);
    nlohmann::json j;
    j["n"] = A.n_rows();
    j["q"] = cfg.p;
    j["h"] = gs.h;
    j["rounds"] = gs.rounds;
    j["support"] = gs.sample.size();
    j["support_sizes"] = gs.support_sizes;
    j["indices"] = gs.sample.indices;
    std::vector<double> w;
    for (Index i : gs.sample.indices) w.push_back(gs.w[i]);
    j["w"] = w;
    out << j.dump(2) << "\n";
    if (!cfg.out_path.empty()) write_vector(gs.w, cfg.out_path);
    return 0;
  });
}

ScalingPoint measure_richardson_scaling(Index n, Index d, Index nnz_per_row, std::uint64_t seed,
                                        int iterations, int repeats) {
  SeededRng rng(seed, static_cast<std::uint64_t>(nnz_per_row));
  SparseMatrix A = random_sparse(n, d, nnz_per_row, rng);
  Vector b = gaussian_vector(n, rng);
  SpectralResult sp = spectral_approximation(A, rng);
  InverseOperator inv = InverseOperator::build(sp.approx);
  const double lambda = 4.0;
  StoppingRule rule;
  rule.rel_tol = 0.0;
  rule.max_iter = iterations;
  Vector rhs = matvec_t(A, b);
  ScalingPoint pt;
  pt.nnz = A.nnz();
  pt.iterations = iterations;
  pt.seconds = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    RichardsonResult rr = richardson_solve(
        [&](const Vector& x) { return matvec_t(A, matvec(A, x)); }, rhs,
        [&](const Vector& v) { return Vector(inv.apply(v) / lambda); }, lambda, rule);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pt.seconds = std::min(pt.seconds, s);
    pt.iterations = rr.iterations;
  }
  pt.per_iteration = pt.seconds / std::max(1, pt.iterations);
  return pt;
}

namespace {

struct BenchRow {
  std::string instance, method, status;
  Index nnz = 0, n = 0, d = 0;
  double p = 0.0;
  int iterations = 0;
  double seconds = 0.0, per_iteration = 0.0, gap = 0.0;
};

void write_row(std::ostream& out, const BenchRow& r) {
  out << r.instance << ',' << r.method << ',' << r.nnz << ',' << r.n << ',' << r.d << ','
      << r.p << ',' << r.iterations << ',' << format_double(r.seconds) << ','
      << format_double(r.per_iteration) << ',' << format_double(r.gap) << ',' << r.status
      << "\n";
}

double oracle_value(const RegressionProblem& prob, bool& ok) {
  DenseMatrix A = prob.A.to_dense();
  oracle::OracleResult o = prob.form == ProblemForm::P1
                               ? oracle::pnorm_oracle(A, prob.b, prob.C, prob.v, prob.p)
                               : oracle::min_norm_oracle(A, prob.b, prob.p);
  ok = o.converged;
  return o.value;
}

BenchRow bench_solve(const std::string& name, const RegressionProblem& prob, const RunConfig& cfg,
                     const TraceSink& trace) {
  BenchRow row;
  row.instance = name;
  row.method = to_string(cfg.method);
  row.nnz = prob.A.nnz();
  row.n = prob.A.n_rows();
  row.d = prob.A.n_cols();
  row.p = prob.p;
  try {
    SolverConfig sc = cfg.solver_config();
    sc.trace = trace;
    SolveReport rep = solve(prob, sc);
    row.iterations = rep.outer_iterations;
    row.seconds = rep.seconds;
    row.per_iteration = rep.seconds / std::max(1, rep.outer_iterations);
    row.gap = rep.gap;
    row.status = rep.status;
    if (row.n <= 1024 && row.d <= 64) {
      bool ok = false;
      double opt = oracle_value(prob, ok);
      if (ok && opt > 0.0) row.gap = (rep.objective - opt) / opt;
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    std::replace(row.status.begin(), row.status.end(), ',', ';');
  }
  return row;
}

}  // namespace

int cmd_bench(const Args& args, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> flags;
  int rc = parse_flags("bench", "Benchmark sweep; prints a CSV table.",
                       {"suite", "method", "seed", "eps", "trace", "repeats", "C_h", "mwu_C",
                        "mwu_C_alpha", "spectral_c", "m_knob", "rebuild_period"},
                       args, flags, out, err);
  if (rc >= 0) return rc;
  return guarded(err, [&]() {
    Loaded l = load(flags, {"suite", "repeats"});
    RunConfig cfg = l.cfg;
    std::string suite = l.extra.count("suite") ? l.extra["suite"] : "tiny";
    int repeats = l.extra.count("repeats") ? std::stoi(l.extra["repeats"]) : 3;
    if (repeats <= 0) throw UsageError("repeats must be positive");
    std::unique_ptr<std::ofstream> trace_file;
    TraceSink trace;
    if (!cfg.trace_path.empty()) {
      std::ostream* to = &err;
      if (cfg.trace_path != "-") {
        trace_file = std::make_unique<std::ofstream>(cfg.trace_path);
        if (!*trace_file) throw UsageError("cannot open trace file " + cfg.trace_path);
        to = trace_file.get();
      }
      trace = [to](const TraceEvent& ev) { *to << trace_json(ev).dump() << "\n"; };
    }
    out << kBenchHeader << "\n";
    if (suite == "tiny") {
      cfg.p = 3.0;
      cfg.validate();
      SeededRng rng(cfg.seed);
      RegressionProblem prob = make_p1(64, 4, 3, 3.0, rng);
      write_row(out, bench_solve("tiny-p1", prob, cfg, trace));
    } else if (suite == "desk") {
      for (double p : {1.5, 3.0, 4.0}) {
        for (ProblemForm form : {ProblemForm::P1, ProblemForm::P2}) {
          RunConfig c = cfg;
          c.p = p;
          c.form = form;
          c.validate();
          SeededRng rng(cfg.seed, static_cast<std::uint64_t>(p * 100));
          RegressionProblem prob = form == ProblemForm::P1 ? make_p1(256, 16, 4, p, rng)
                                                           : make_p2(256, 16, 4, p, rng);
          std::ostringstream name;
          name << "desk-" << to_string(form) << "-p" << p;
          write_row(out, bench_solve(name.str(), prob, c, trace));
        }
      }
    } else if (suite == "scaling") {
      cfg.validate();
      for (Index k : {2, 4, 8, 16}) {
        ScalingPoint pt = measure_richardson_scaling(20000, 50, k, cfg.seed, 30, repeats);
        BenchRow row;
        row.instance = "scaling-k" + std::to_string(k);
        row.method = "richardson-ls";
        row.nnz = pt.nnz;
        row.n = 20000;
        row.d = 50;
        row.p = 2.0;
        row.iterations = pt.iterations;
        row.seconds = pt.seconds;
        row.per_iteration = pt.per_iteration;
        row.status = "timed";
        write_row(out, row);
      }
    } else {
      throw UsageError("unknown suite '" + suite + "' (expected tiny, desk or scaling)");
    }
    return 0;
  });
}

}  // namespace pnreg::tools
