// rapid: benchmarks, demos, inventory tool and skill server.
//
// Exit codes: 0 ok, 2 usage or validation error, 3 I/O error,
// 4 other runtime failure (no solution, unreachable, timeout, ...).

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>

#include "rapid/config.hpp"
#include "rapid/skill_server.hpp"

using namespace rapid;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

struct Globals {
  std::string config_path;
  std::string output;  // machine-readable output, stdout when empty
  Config config;
  std::optional<KinematicModel> model_cache;

  const KinematicModel& model() {
    if (!model_cache) model_cache = load_model(config.get_path("model.path", std::string(RAPID_SOURCE_DIR) + "/models/ur16e_gantry.json"));
    return *model_cache;
  }
};

// Output stream for results; stdout unless --output names a file.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::Io, "cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation:
      return 2;
    case ErrorKind::Io:
      return 3;
    default:
      return 4;
  }
}

Pose tool_down_at(const Vec3& p) {
  Mat3 r;
  r.col(0) = Vec3(1, 0, 0);
  r.col(1) = Vec3(0, -1, 0);
  r.col(2) = Vec3(0, 0, -1);
  return {p, UnitQuaternion::from_matrix(r)};
}

// --- ik-bench ------------------------------------------------------------------

struct IkBenchArgs {
  int n = 1000;
  std::uint64_t seed = 7;
  int dls_seeds = 1;
  bool unfiltered = false;
};

void ik_bench(Globals& g, const IkBenchArgs& a) {
  const auto& m = g.model();
  const SelectionConfig cfg = selection_config(g.config);
  const CostWeights w = cost_weights(g.config);
  const DlsParams dls = dls_params(g.config);
  const JointConfig home = home_config(g.config);
  std::mt19937_64 goal_rng(a.seed), dls_rng(a.seed + 1);
  Sink sink(g.output);
  auto& os = sink.os();
  os << "pose,analytic_success,analytic_ms,candidates,d_j,p_p,p_a,total_cost,mu,dls_success,dls_ms\n";
  int ok = 0, dls_ok = 0;
  std::size_t max_c = 0;
  double t_analytic = 0.0, t_dls = 0.0;
  for (int i = 0; i < a.n; ++i) {
    JointConfig q;
    do q = random_config(m, goal_rng);
    while (!a.unfiltered && !passes_filters(posture_metrics(m, forward_kinematics(m, q)), cfg));
    const Pose target = end_effector_pose(m, q);

    auto t0 = Clock::now();
    const auto cs = enumerate_candidates(m, home, target, cfg, w);
    const double ta = ms_since(t0);
    t0 = Clock::now();
    const bool d = numeric_ik_multi_seed(m, target, cfg, a.dls_seeds, dls_rng, dls).has_value();
    const double td = ms_since(t0);

    t_analytic += ta;
    t_dls += td;
    max_c = std::max(max_c, cs.size());
    ok += cs.empty() ? 0 : 1;
    dls_ok += d ? 1 : 0;
    os << i << ',' << !cs.empty() << ',' << ta << ',' << cs.size();
    if (cs.empty()) {
      os << ",,,,,";
    } else {
      const auto& b = select_best(cs);
      os << ',' << b.d_j << ',' << b.p_p << ',' << b.p_a << ',' << b.total_cost << ',' << b.mu;
    }
    os << ',' << d << ',' << td << '\n';
  }
  std::cerr << std::fixed << std::setprecision(2) << "analytic: " << 100.0 * ok / a.n << "% success, "
            << t_analytic / a.n << " ms/pose, max " << max_c << " candidates\n"
            << "dls (" << a.dls_seeds << " seed" << (a.dls_seeds == 1 ? "" : "s") << "): " << 100.0 * dls_ok / a.n
            << "% success, " << t_dls / a.n << " ms/pose\n";
}

// --- plan-bench ----------------------------------------------------------------

struct PlanBenchArgs {
  int trials = 100;
  std::uint64_t seed = 11;
  std::string mode = "both";
  double budget = -1.0;
};

void plan_bench(Globals& g, const PlanBenchArgs& a) {
  const auto& m = g.model();
  const CollisionWorld world = collision_world(g.config);
  PlannerConfig pc = planner_config(g.config);
  if (a.budget > 0.0) pc.budget_s = a.budget;
  const JointConfig home = home_config(g.config);
  if (a.mode != "both" && a.mode != "corridor" && a.mode != "free")
    throw Error(ErrorKind::Validation, "--mode must be corridor, free or both");
  std::vector<bool> modes;
  if (a.mode != "free") modes.push_back(true);
  if (a.mode != "corridor") modes.push_back(false);

  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> ux(0.4, 1.7), uy(-0.3, 0.3), ud(0.3, 0.8), ua(-kPi, kPi);
  Sink sink(g.output);
  auto& os = sink.os();
  os << "trial,mode,success,plan_time,ee_length,waypoints,straight_line\n";
  std::map<bool, std::array<double, 3>> stats;  // successes, length sum, time sum
  for (int trial = 0; trial < a.trials;) {
    Vec3 s, goal;
    do {
      s = Vec3(ux(rng), uy(rng), 1.0);
      const double d = ud(rng), ang = ua(rng);
      goal = s + d * Vec3(std::cos(ang), std::sin(ang), 0.0);
    } while (goal.x() < 0.4 || goal.x() > 1.7 || std::abs(goal.y()) > 0.3);
    const auto cs = enumerate_candidates(m, home, tool_down_at(s), pc.selection, pc.weights);
    if (cs.empty() || !state_valid(world, m, select_best(cs).config)) continue;
    const JointConfig qs = select_best(cs).config;
    const std::uint64_t seed = 100 + trial;
    for (bool constrained : modes) {
      PlanResult r;
      try {
        r = plan(world, m, qs, tool_down_at(goal),
                 constrained ? std::optional<Corridor>(corridor_between(g.config, s, goal)) : std::nullopt, pc, seed);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::GoalSetEmpty) throw;
      }
      auto& st = stats[constrained];
      if (r.success()) {
        st[0] += 1;
        st[1] += r.path.ee_length;
      }
      st[2] += r.plan_time_s;
      os << trial << ',' << (constrained ? "corridor" : "free") << ',' << r.success() << ',' << r.plan_time_s << ','
         << (r.success() ? r.path.ee_length : 0.0) << ',' << r.path.waypoints.size() << ',' << (goal - s).norm()
         << '\n';
    }
    ++trial;
  }
  for (bool constrained : modes) {
    const auto& st = stats[constrained];
    std::cerr << std::fixed << std::setprecision(3) << (constrained ? "corridor" : "free") << ": "
              << 100.0 * st[0] / a.trials << "% success, mean ee length " << st[1] / std::max(st[0], 1.0)
              << " m, mean plan time " << st[2] / a.trials << " s\n";
  }
}

// --- sequence ------------------------------------------------------------------

void sequence(Globals& g, const std::string& plan_path, const std::string& mode_flag) {
  const DisassemblyPlan plan = load_plan_file(plan_path);
  const SolveMode mode = mode_flag.empty() ? sequencer_mode(g.config) : solve_mode_from_string(mode_flag);
  const Pose home = end_effector_pose(g.model(), home_config(g.config));
  json steps = json::array();
  double total = 0.0, total_stored = 0.0;
  for (const auto& st : plan.steps) {
    double cost = 0.0;
    const auto ordered = order_tasks(st.subtasks, home, mode, [](const SubTask& t) { return t.pose; }, &cost);
    double stored = 0.0;
    if (!st.subtasks.empty()) {
      std::vector<Pose> poses;
      for (const auto& t : st.subtasks) poses.push_back(t.pose);
      std::vector<int> order(poses.size() + 2, 0);
      std::iota(order.begin() + 1, order.end() - 1, 1);
      stored = tour_cost(build_weight_matrix(home, poses), order);
    }
    json ids = json::array();
    for (const auto& t : ordered) ids.push_back(t.id);
    const bool exact = uses_exact(mode, static_cast<int>(st.subtasks.size()) + 1);
    steps.push_back({{"s", st.s},
                     {"description", st.description},
                     {"solver", st.subtasks.empty() ? "none" : exact ? "exact" : "heuristic"},
                     {"tour_cost", cost},
                     {"stored_order_cost", stored},
                     {"order", ids}});
    total += cost;
    total_stored += stored;
    std::cerr << std::fixed << std::setprecision(3) << "step " << st.s << ": " << st.subtasks.size() << " tasks, tour "
              << cost << " m (stored order " << stored << " m)\n";
  }
  Sink sink(g.output);
  sink.os() << json{{"battery", plan.battery}, {"steps", steps}, {"total_tour_cost", total},
                    {"total_stored_order_cost", total_stored}}
                   .dump(2)
            << '\n';
}

// --- memory-demo -----------------------------------------------------------------

struct MemoryDemoArgs {
  std::string layout;
  int scans = 5;
  std::uint64_t seed = 1;
  std::string plan_out;
};

void memory_demo(Globals& g, const MemoryDemoArgs& a) {
  const auto truth = load_ground_truth(a.layout.empty() ? std::string(RAPID_SOURCE_DIR) + "/data/fastener_layout.json"
                                                        : a.layout);
  const DetectorRates rates = detector_rates(g.config);
  DetectionMemory mem(memory_config(g.config));
  int emitted = 0, fps = 0, merged = 0;
  for (int s = 0; s < a.scans; ++s) {
    const auto batch = simulate_detections(truth, rates, a.seed + s);
    emitted += static_cast<int>(batch.detections.size());
    fps += static_cast<int>(batch.false_positive_count());
    for (const auto& d : batch.detections) merged += mem.insert(d).merged ? 1 : 0;
  }
  std::map<std::string, int> by_label;
  for (const auto& o : mem.query_all()) ++by_label[o.detection.label];
  std::cerr << truth.size() << " true items, " << a.scans << " scans, " << emitted << " detections (" << fps
            << " false positives), " << merged << " merged, " << mem.size() << " objects stored\n";
  for (const auto& [label, n] : by_label) std::cerr << "  " << label << ": " << n << '\n';

  if (!a.plan_out.empty()) {
    DisassemblyPlan plan;
    plan.battery = "memory-demo";
    plan.provenance = {{"generator", "rapid memory-demo"}, {"scans", a.scans}, {"seed", a.seed}};
    std::set<std::string> labels;
    for (const auto& t : truth) labels.insert(t.label);
    const Vec3 center = workspace_center(g.config);
    int s = 1;
    for (const auto& label : labels) {
      auto r = tasks_from_memory(mem, {label}, s, center);
      plan.steps.push_back({s++, "remove " + label, std::move(r.subtasks)});
    }
    save_plan_file(plan, a.plan_out);
    std::cerr << "plan written to " << a.plan_out << '\n';
  }
  Sink sink(g.output);
  sink.os() << memory_snapshot_json(mem).dump(2) << '\n';
}

// --- servo-demo ------------------------------------------------------------------

struct ServoDemoArgs {
  std::optional<double> gain, period, depth_noise;
  double depth_bias = 1.0;
  double offset_x = 0.02, offset_y = 0.0, depth = 0.4;
  std::uint64_t seed = 1;
};

void servo_demo(Globals& g, const ServoDemoArgs& a) {
  ServoConfig cfg = servo_config(g.config);
  if (a.gain) cfg.gain = *a.gain;
  if (a.period) cfg.period = *a.period;
  if (a.depth_noise) cfg.depth_noise_sigma = *a.depth_noise;
  cfg.depth_bias = a.depth_bias;
  const CameraIntrinsics k = camera_intrinsics(g.config);
  const auto ee = HomogeneousTransform::translate(0.0, 0.05, a.depth);
  const SimCamera cam = SimCamera::scenario(k, ee, Vec3(1.0, 0.0, 0.85), a.depth, Vec2(a.offset_x, a.offset_y));
  const ServoResult r = servo_loop(cam, cfg, a.seed);
  Sink sink(g.output);
  auto& os = sink.os();
  os << "iter,e_x,e_y,e_norm,z,v_x,v_y,v_z\n";
  for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
    const auto& s = r.trajectory[i];
    os << i << ',' << s.e.x() << ',' << s.e.y() << ',' << s.e.norm() << ',' << s.z << ',' << s.v_c.x() << ','
       << s.v_c.y() << ',' << s.v_c.z() << '\n';
  }
  const char* outcome = r.outcome == ServoOutcome::Converged        ? "converged"
                        : r.outcome == ServoOutcome::LeftFieldOfView ? "target left the field of view"
                                                                     : "did not converge";
  std::cerr << outcome << " after " << r.iterations << " iterations, lateral residual "
            << 1000.0 * r.lateral_offset().norm() << " mm, " << r.sign_flips << " error sign flips\n";
}

// --- simulate-removal ------------------------------------------------------------

struct RemovalArgs {
  std::string strategy = "taught-in";
  std::string extension;
  int n = 204;
  int seeds = 100;
  std::uint64_t first_seed = 1;
  std::optional<double> sigma;
  std::string log;
};

void simulate_removal(Globals& g, const RemovalArgs& a) {
  if (a.seeds < 1) throw Error(ErrorKind::Validation, "--seeds must be >= 1");
  EngagementModel eng = engagement_model(g.config);
  if (!a.extension.empty()) eng.extension = extension_from_string(a.extension);
  StrategyNoise noise = strategy_noise(g.config, strategy_from_string(a.strategy));
  if (a.sigma) calibrated_parameter(noise) = *a.sigma;
  noise.validate();

  std::unique_ptr<Sink> log;
  if (!a.log.empty()) {
    log = std::make_unique<Sink>(a.log);
    log->os() << "seed,attempt,kind,fastener,lateral_x,lateral_y,success,duration_s,servo_iterations,servo_converged\n";
  }
  double rate = 0.0, rate_sq = 0.0, duration = 0.0;
  long attempts = 0, successes = 0, fp = 0, dup = 0;
  for (int k = 0; k < a.seeds; ++k) {
    const std::uint64_t seed = a.first_seed + k;
    const auto r = run_campaign(noise, eng, a.n, seed, log != nullptr);
    rate += r.success_rate;
    rate_sq += r.success_rate * r.success_rate;
    duration += r.duration_min;
    attempts += r.attempts;
    successes += r.successes;
    fp += r.false_positive_attempts;
    dup += r.duplicate_attempts;
    if (log)
      for (std::size_t i = 0; i < r.log.size(); ++i) {
        const auto& x = r.log[i];
        log->os() << seed << ',' << i << ',' << to_string(x.kind) << ',' << x.fastener << ',' << x.lateral.x() << ','
                  << x.lateral.y() << ',' << x.success << ',' << x.duration_s << ',' << x.servo_iterations << ','
                  << x.servo_converged << '\n';
      }
  }
  const double mean = rate / a.seeds;
  const double sd = std::sqrt(std::max(0.0, rate_sq / a.seeds - mean * mean));
  const json summary = {{"strategy", to_string(noise.strategy)},
                        {"extension", eng.extension == Extension::Long ? "long" : "short"},
                        {"r_cap_m", eng.r_cap()},
                        {"sigma_m", noise.sigma},
                        {"servo_sigma_m", noise.servo_sigma},
                        {"fasteners_per_campaign", a.n},
                        {"campaigns", a.seeds},
                        {"first_seed", a.first_seed},
                        {"mean_success_rate", mean},
                        {"success_rate_sd", sd},
                        {"mean_duration_min", duration / a.seeds},
                        {"attempts", attempts},
                        {"successes", successes},
                        {"false_positive_attempts", fp},
                        {"duplicate_attempts", dup}};
  Sink sink(g.output);
  sink.os() << summary.dump(2) << '\n';
  std::cerr << std::fixed << std::setprecision(2) << to_string(noise.strategy) << ": " << 100.0 * mean << "% success (sd "
            << 100.0 * sd << "), " << duration / a.seeds << " min per campaign\n";
}

// --- inventory -----------------------------------------------------------------

struct InventoryArgs {
  std::string plan;
  std::optional<int> step;
  std::string mark;
  bool verified = false;
  bool write = false;
};

void inventory(Globals& g, const InventoryArgs& a) {
  DisassemblyPlan plan = load_plan_file(a.plan);
  json out = json::object();
  if (!a.mark.empty()) {
    const RemovalAttempt r = mark_removed(plan, a.mark, a.verified);
    out["marked"] = {{"id", r.subtask_id}, {"verified", r.verified}, {"changed", r.changed}};
    if (!a.verified) std::cerr << "unverified attempt logged; inventory unchanged\n";
    if (a.write && r.changed) save_plan_file(plan, a.plan);
  }
  json steps = json::array();
  for (const auto& st : plan.steps) {
    if (a.step && st.s != *a.step) continue;
    json ids = json::array();
    for (const auto& t : remaining(plan, st.s)) ids.push_back(t.id);
    std::cerr << "step " << st.s << ": " << ids.size() << " of " << st.subtasks.size() << " remaining\n";
    steps.push_back({{"s", st.s}, {"total", st.subtasks.size()}, {"remaining", ids}});
  }
  if (a.step && steps.empty()) plan.step(*a.step);  // raises unknown step
  out["steps"] = steps;
  Sink sink(g.output);
  sink.os() << out.dump(2) << '\n';
}

// --- serve ---------------------------------------------------------------------

struct ServeArgs {
  int port = -1;
  bool stdio = false;
  std::string plan, strategy;
  std::optional<std::uint64_t> seed;
};

void serve(Globals& g, const ServeArgs& a) {
  if (a.stdio == (a.port >= 0)) throw Error(ErrorKind::Validation, "give exactly one of --port or --stdio");
  if (!a.strategy.empty()) g.config.set("server.strategy", a.strategy);
  const std::string plan_path =
      !a.plan.empty() ? a.plan : g.config.get_path("server.plan", std::string(RAPID_SOURCE_DIR) + "/data/top_cover_68.json");
  SkillContext ctx = skill_context(g.config, g.model(), load_plan_file(plan_path));
  if (a.seed) ctx.seed = *a.seed;
  SkillServer server(std::move(ctx));
  if (a.stdio) {
    server.serve(std::cin, std::cout);
    return;
  }
  TcpListener listener(a.port);
  std::cerr << "listening on 127.0.0.1:" << listener.port() << '\n';
  listener.serve(server);
  std::cerr << "shutdown after " << server.verified_removals() << " verified removals\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery disassembly toolkit: IK, planning, sequencing, perception memory, servoing, removal simulation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path, "Configuration file (default: config/default.conf in the source tree)");
  app.add_option("-o,--output", g.output, "Write machine-readable output here instead of stdout");

  IkBenchArgs ik;
  auto* ik_cmd = app.add_subcommand("ik-bench", "Closed-form IK pipeline vs damped least squares on random goals");
  ik_cmd->add_option("--n", ik.n, "Number of goal poses")->check(CLI::PositiveNumber);
  ik_cmd->add_option("--seed", ik.seed, "Random seed");
  ik_cmd->add_option("--dls-seeds", ik.dls_seeds, "Random restarts for the numeric baseline")->check(CLI::PositiveNumber);
  ik_cmd->add_flag("--unfiltered", ik.unfiltered, "Sample goals without the posture filters");

  PlanBenchArgs pb;
  auto* pb_cmd = app.add_subcommand("plan-bench", "Corridor vs unconstrained planning on random start/goal pairs");
  pb_cmd->add_option("--trials", pb.trials, "Start/goal pairs")->check(CLI::PositiveNumber);
  pb_cmd->add_option("--seed", pb.seed, "Random seed");
  pb_cmd->add_option("--mode", pb.mode, "corridor, free or both");
  pb_cmd->add_option("--budget", pb.budget, "Planning time budget per query (s)");

  std::string seq_plan, seq_mode;
  auto* seq_cmd = app.add_subcommand("sequence", "Order the subtasks of every step of a plan");
  seq_cmd->add_option("plan", seq_plan, "Plan JSON file")->required();
  seq_cmd->add_option("--mode", seq_mode, "exact, heuristic or auto");

  MemoryDemoArgs md;
  auto* md_cmd = app.add_subcommand("memory-demo", "Fuse simulated detection scans into the detection memory");
  md_cmd->add_option("--layout", md.layout, "Fastener layout JSON");
  md_cmd->add_option("--scans", md.scans, "Number of scans")->check(CLI::PositiveNumber);
  md_cmd->add_option("--seed", md.seed, "Random seed");
  md_cmd->add_option("--plan-out", md.plan_out, "Also synthesize task poses and write a plan here");

  ServoDemoArgs sd;
  auto* sd_cmd = app.add_subcommand("servo-demo", "Run one simulated visual servoing loop");
  sd_cmd->add_option("--gain", sd.gain, "Gain lambda (1/s)");
  sd_cmd->add_option("--period", sd.period, "Control period (s)");
  sd_cmd->add_option("--depth-noise", sd.depth_noise, "Per-pixel depth noise sigma (m)");
  sd_cmd->add_option("--depth-bias", sd.depth_bias, "Multiplicative error on the depth estimate");
  sd_cmd->add_option("--offset-x", sd.offset_x, "Initial lateral offset x (m)");
  sd_cmd->add_option("--offset-y", sd.offset_y, "Initial lateral offset y (m)");
  sd_cmd->add_option("--depth", sd.depth, "Camera to fastener depth (m)");
  sd_cmd->add_option("--seed", sd.seed, "Random seed");

  RemovalArgs ra;
  auto* ra_cmd = app.add_subcommand("simulate-removal", "Monte-Carlo removal campaigns for one strategy");
  ra_cmd->add_option("--strategy", ra.strategy, "taught-in, one-shot or servo");
  ra_cmd->add_option("--extension", ra.extension, "long or short");
  ra_cmd->add_option("--n", ra.n, "Fasteners per campaign")->check(CLI::PositiveNumber);
  ra_cmd->add_option("--seeds", ra.seeds, "Number of campaigns")->check(CLI::PositiveNumber);
  ra_cmd->add_option("--first-seed", ra.first_seed, "Seed of the first campaign");
  ra_cmd->add_option("--sigma", ra.sigma, "Override the calibrated noise parameter (m)");
  ra_cmd->add_option("--log", ra.log, "Per-attempt CSV log");

  InventoryArgs ia;
  auto* ia_cmd = app.add_subcommand("inventory", "List remaining subtasks or record a removal");
  ia_cmd->add_option("plan", ia.plan, "Plan JSON file")->required();
  ia_cmd->add_option("--step", ia.step, "Restrict to one step");
  ia_cmd->add_option("--mark", ia.mark, "Subtask id to record a removal attempt for");
  ia_cmd->add_flag("--verified", ia.verified, "The removal was verified");
  ia_cmd->add_flag("--write", ia.write, "Save the updated plan in place");

  ServeArgs sa;
  auto* sa_cmd = app.add_subcommand("serve", "Skill server speaking line-delimited JSON");
  sa_cmd->add_option("--port", sa.port, "TCP port on 127.0.0.1 (0 picks a free port)");
  sa_cmd->add_flag("--stdio", sa.stdio, "Serve on stdin/stdout");
  sa_cmd->add_option("--plan", sa.plan, "Plan JSON file");
  sa_cmd->add_option("--strategy", sa.strategy, "Removal strategy");
  sa_cmd->add_option("--seed", sa.seed, "Simulation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const std::string fallback = std::string(RAPID_SOURCE_DIR) + "/config/default.conf";
    if (!g.config_path.empty())
      g.config = Config::load(g.config_path);
    else if (std::filesystem::exists(fallback))
      g.config = Config::load(fallback);
    g.config.require_known(known_config_keys());

    if (*ik_cmd) ik_bench(g, ik);
    else if (*pb_cmd) plan_bench(g, pb);
    else if (*seq_cmd) sequence(g, seq_plan, seq_mode);
    else if (*md_cmd) memory_demo(g, md);
    else if (*sd_cmd) servo_demo(g, sd);
    else if (*ra_cmd) simulate_removal(g, ra);
    else if (*ia_cmd) inventory(g, ia);
    else if (*sa_cmd) serve(g, sa);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
