// fracture-qs command line: run, sweep, oracle, verify.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fqs/config.hpp"
#include "fqs/error.hpp"
#include "fqs/evolution.hpp"
#include "fqs/io.hpp"
#include "fqs/kernels.hpp"
#include "fqs/oracle.hpp"
#include "fqs/study.hpp"
#include "fqs/text_format.hpp"
#include "fqs/verify.hpp"

namespace fs = std::filesystem;
using namespace fqs;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvariant = 2, kNonconvergence = 3, kIo = 4 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Nonconvergence: return kNonconvergence;
    case ErrorKind::InvariantViolation: return kInvariant;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Version: return kIo;
    default: return kUsage;
  }
}

RunConfig read_config(const std::string& path) {
  try {
    return load_config(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
}

std::ofstream open_append(const fs::path& p, bool truncate) {
  std::ofstream out(p, truncate ? std::ios::trunc : std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_opt, const std::string& resume_path) {
  const RunConfig cfg = read_config(config_path);
  const fs::path out = !out_opt.empty() ? fs::path(out_opt) : fs::path(cfg.output.directory);
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no output directory (--out or output.directory)");
  make_dir(out);
  OutputLock lock(out);

  Problem pr = build_problem(cfg);
  const fs::path ledger_path = out / "ledger.csv", traj_path = out / "trajectory.txt", ckpt_path = out / "checkpoint.txt";
  const int nodes = pr.mesh.node_count();
  const int m = pr.load.components();

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = read_checkpoint(resume_path, pr.mesh);

  {
    std::ofstream cfg_out = open_append(out / "config.used", true);
    cfg_out << render_config(cfg);
  }
  std::ofstream ledger_out = open_append(ledger_path, true);
  ledger_out << kLedgerHeader << '\n';
  std::ofstream traj_out;
  if (resume) {
    Trajectory kept;
    if (fs::exists(traj_path)) kept = read_trajectory(traj_path);
    if (kept.knots.size() < static_cast<std::size_t>(resume->index) + 1)
      throw Error(ErrorKind::Io, "trajectory in '" + out.string() + "' is shorter than the checkpoint");
    kept.knots.resize(static_cast<std::size_t>(resume->index) + 1);
    kept.components = m;
    write_trajectory(traj_path, kept, nodes);
    traj_out = open_append(traj_path, false);
    for (const auto& r : resume->ledger.rows) ledger_out << ledger_csv_row(r) << '\n';
  } else {
    traj_out = open_append(traj_path, true);
    write_trajectory_header(traj_out, m, nodes);
  }
  if (cfg.output.snapshot_every > 0) make_dir(out / "snapshots");

  EvolveOptions opts;
  opts.step = pr.step;
  opts.checkpoint_every = cfg.output.checkpoint_every;
  opts.on_checkpoint = [&](const Checkpoint& cp) { write_checkpoint(ckpt_path, cp); };
  opts.on_knot = [&](int k, const Knot& knot, const LedgerRow& row) {
    write_knot(traj_out, k, knot);
    traj_out.flush();
    ledger_out << ledger_csv_row(row) << '\n';
    ledger_out.flush();
    if (!traj_out || !ledger_out) throw Error(ErrorKind::Io, "writing run output failed");
    if (cfg.output.snapshot_every > 0 && (k % cfg.output.snapshot_every == 0 || k == pr.grid.steps())) {
      char name[32];
      std::snprintf(name, sizeof name, "knot_%06d.vtk", k);
      write_vtk(out / "snapshots" / name, pr.mesh, knot, m);
    }
  };

  InitialConfiguration init;
  if (!resume) init = initial_configuration(pr.mesh, pr.density, pr.load, pr.step);
  const EvolutionResult res = evolve(pr.mesh, pr.density, pr.load, pr.grid, init, opts, resume ? &*resume : nullptr);
  write_snapshot(out / "final_state.txt", res.last.state);

  const bool exact = pr.step.backend == Backend::Exact;
  const InequalityReport ir = check_energy_inequality(res.ledger, exact ? 1e-8 : std::max(1e-6, 100.0 * pr.step.tolerance));
  const auto tc = first_crack_time(res.ledger);
  std::cout << "knots " << res.ledger.rows.size() << ", final total " << format_double(res.ledger.rows.back().total)
            << ", first crack " << (tc ? format_double(*tc) : std::string("none")) << ", energy inequality residual "
            << format_double(ir.max_residual) << ", balance residual " << format_double(energy_balance_residual(res.ledger))
            << '\n';
  if (!ir.passed) {
    std::cerr << "invariant violation: energy inequality fails at row " << ir.worst_row << " (residual "
              << format_double(ir.max_residual) << "), surface budget excess " << format_double(ir.max_budget_excess)
              << " at row " << ir.budget_row << '\n';
    return exact ? kInvariant : kOk;
  }
  return kOk;
}

int cmd_sweep(const std::string& config_path, int levels, const std::string& out_opt) {
  const RunConfig cfg = read_config(config_path);
  const fs::path out = !out_opt.empty() ? fs::path(out_opt) : fs::path(cfg.output.directory);
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "no output directory (--out or output.directory)");
  make_dir(out);
  OutputLock lock(out);

  const RefinementStudy st = refine_study(cfg, levels);
  {
    std::ofstream f = open_append(out / "study.csv", true);
    f << "level,delta,t,bulk,surface_c,total,residual\n";
    for (const auto& s : st.samples)
      f << s.level << ',' << format_double(s.delta) << ',' << format_double(s.t) << ',' << format_double(s.bulk) << ','
        << format_double(s.surface_c) << ',' << format_double(s.total) << ',' << format_double(s.residual) << '\n';
  }
  const auto until = precrack_horizon(st);
  const auto whole = balance_convergence(st);
  const auto pre = balance_convergence(st, until);
  {
    std::ofstream f = open_append(out / "rates.csv", true);
    f << "level,delta,residual,rate,precrack_residual,precrack_rate\n";
    auto rate = [](const BalanceRow& r) {
      if (r.exact) return std::string("exact");
      return r.rate ? format_double(*r.rate) : std::string();
    };
    for (std::size_t l = 0; l < whole.size(); ++l)
      f << whole[l].level << ',' << format_double(whole[l].delta) << ',' << format_double(whole[l].residual) << ','
        << rate(whole[l]) << ',' << format_double(pre[l].residual) << ',' << rate(pre[l]) << '\n';
  }
  {
    std::ofstream f = open_append(out / "differences.csv", true);
    f << "pair,t,bulk_difference,surface_c_difference\n";
    for (std::size_t p = 0; p < st.bulk_difference.size(); ++p)
      for (std::size_t i = 0; i < st.bulk_difference[p].size(); ++i)
        f << p << ',' << format_double(st.probe_times[i]) << ',' << format_double(st.bulk_difference[p][i]) << ','
          << format_double(st.surface_difference[p][i]) << '\n';
  }
  std::cout << "Successive differences between nested levels are Cauchy trends; they support but do not prove\n"
               "convergence of the discrete evolutions, which is only asserted along a subsequence.\n";
  for (std::size_t p = 0; p + 1 < st.bulk_difference.size(); ++p)
    for (std::size_t i = 0; i < st.bulk_difference[p].size() && i < st.bulk_difference[p + 1].size(); ++i)
      if (st.bulk_difference[p + 1][i] > st.bulk_difference[p][i] ||
          st.surface_difference[p + 1][i] > st.surface_difference[p][i]) {
        std::cout << "note: non-monotone level trend at t = " << format_double(st.probe_times[i]) << " (pairs " << p
                  << " and " << p + 1 << ")\n";
        break;
      }
  for (const auto& l : st.levels)
    if (!l.ok()) {
      std::cerr << "level " << l.level << " failed: " << l.error << '\n';
      return l.error.find("nonconvergence") != std::string::npos ? kNonconvergence : kUsage;
    }
  return kOk;
}

int cmd_verify(const std::string& traj_path, const std::string& ledger_path, const std::string& config_path) {
  const RunConfig cfg = read_config(config_path);
  Trajectory traj;
  EnergyLedger ledger;
  try {
    traj = read_trajectory(traj_path);
    ledger = read_ledger(ledger_path);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kIo;
  }
  const VerifyReport rep = verify_trajectory(traj, ledger, cfg);
  for (const auto& c : rep.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
  return rep.passed() ? kOk : kInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"Quasi-static brittle fracture by incremental energy minimisation"};
  app.require_subcommand(1);

  std::string config, out, resume, traj, ledger;
  int levels = 2;
  double L = 1.0, kappa = 1.0, rate = 1.0, T = 1.0;

  auto* run = app.add_subcommand("run", "evolve one configuration");
  run->add_option("--config", config, "run config file")->required();
  run->add_option("--out", out, "output directory (default: output.directory)");
  run->add_option("--resume", resume, "checkpoint to resume from");

  auto* sweep = app.add_subcommand("sweep", "refinement study over nested levels");
  sweep->add_option("--config", config, "run config file")->required();
  sweep->add_option("--levels", levels, "number of levels (>= 2)")->required()->check(CLI::Range(2, 24));
  sweep->add_option("--out", out, "output directory (default: output.directory)");

  auto* oracle = app.add_subcommand("oracle", "closed-form references");
  auto* bar = oracle->add_subcommand("bar", "crack time of the uniformly stretched bar");
  oracle->require_subcommand(1);
  bar->add_option("--L", L, "bar length")->required();
  bar->add_option("--kappa", kappa, "toughness")->required();
  bar->add_option("--rate", rate, "ramp rate of the end displacement")->required();
  bar->add_option("--T", T, "horizon")->required();

  auto* verify = app.add_subcommand("verify", "re-check a run's output");
  verify->add_option("--traj", traj, "trajectory file")->required();
  verify->add_option("--ledger", ledger, "ledger CSV")->required();
  verify->add_option("--config", config, "run config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(config, out, resume);
    if (*sweep) return cmd_sweep(config, levels, out);
    if (*bar) {
      const auto tc = bar_crack_time(BarOracle(L, kappa, rate, T));
      std::cout << "crack_time " << (tc ? format_double(*tc) : std::string("none")) << '\n';
      return kOk;
    }
    if (*verify) return cmd_verify(traj, ledger, config);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
