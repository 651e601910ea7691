#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fqs/domain_mesh.hpp"
#include "fqs/energy_model.hpp"
#include "fqs/evolution.hpp"
#include "fqs/incremental_solver.hpp"

namespace fqs {

/// Run description. Text form: `[section]` headers or dotted keys,
/// `key = value` with numbers, booleans, "strings" or bare words, and
/// bracketed lists (nested for pairs and triples). `#` starts a comment.
///
///   [w]       form, p, coefficient, growth_c
///   [mesh]    kind (bar | rect), length, width, height, h, kappa, notch,
///             dirichlet (list of sides), breakable (all | notch-line),
///             refine (halve h with every sweep level)
///   [load]    profile, offset (one [a, b, c] per component: a + b x + c y),
///             schedule (list of [t, r]), horizon
///   [solver]  backend (exact | altmin), tolerance, linear_tolerance, budget,
///             max_iterations, at_epsilon_over_h, at_eta, threshold,
///             seed_stride, truncate
///   [time]    T, delta, levels
///   [output]  directory, snapshot_every, checkpoint_every
///   seed
struct RunConfig {
  struct Density {
    std::string form = "quadratic";
    double p = 2.0;
    double coefficient = 1.0;
    double growth_c = 1.0;
  } w;

  struct MeshBlock {
    std::string kind = "bar";
    double length = 1.0;
    double width = 1.0;
    double height = 1.0;
    double h = 0.0;
    double kappa = 1.0;
    std::vector<double> notch;  // bar: [x]; rect: [x0, y0, x1, y1]
    std::vector<Side> dirichlet;
    BreakableSet breakable = BreakableSet::All;
    bool refine = false;
  } mesh;

  struct Load {
    std::vector<std::array<double, 3>> profile;
    std::vector<std::array<double, 3>> offset;
    std::vector<std::pair<double, double>> schedule;
    double horizon = 0.0;
  } load;

  struct Solver {
    Backend backend = Backend::Exact;
    double tolerance = 1e-10;
    double linear_tolerance = 1e-10;
    int budget = 20;
    int max_iterations = 2000;
    double at_epsilon_over_h = 4.0;
    double at_eta = 0.0;
    double threshold = 0.1;
    int seed_stride = 2;
    bool truncate = false;
  } solver;

  struct Time {
    double T = 0.0;
    double delta = 0.0;
    int levels = 1;
  } time;

  struct Output {
    std::string directory;
    int snapshot_every = 0;
    int checkpoint_every = 1;
  } output;

  std::uint64_t seed = 0;
};

/// Throws parse errors naming the line and key path.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Canonical text form; parse_config(render_config(c)) reproduces c.
std::string render_config(const RunConfig& config);

/// Everything needed to run one level of a study.
struct Problem {
  Mesh mesh;
  EnergyDensity density;
  LoadProgram load;
  StepOptions step;
  TimeGrid grid;
};

/// Level 0 is the configured grid; each level halves Δ (and h when mesh.refine is set).
Problem build_problem(const RunConfig& config, int level = 0);

}  // namespace fqs
