// Regenerates the JSON fixtures under data/.
//   make_fixtures <model.json> <out_dir>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "rapid/ik_select.hpp"
#include "rapid/kinematics.hpp"
#include "rapid/task_synthesis.hpp"

using namespace rapid;

namespace {

const Vec3 kCenter(1.06, 0.0, 0.0);
constexpr double kTop = 0.85;

// n points evenly spaced around the rectangle [x0,x1] x [y0,y1].
std::vector<Vec3> perimeter(int n, double x0, double x1, double y0, double y1) {
  const double w = x1 - x0, h = y1 - y0, total = 2 * (w + h);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    double s = total * i / n;
    Vec3 p;
    if (s < w) p = {x0 + s, y0, kTop};
    else if ((s -= w) < h) p = {x1, y0 + s, kTop};
    else if ((s -= h) < w) p = {x1 - s, y1, kTop};
    else p = {x0, y1 - (s - w), kTop};
    out.push_back(p);
  }
  return out;
}

std::vector<Vec3> grid(int nx, int ny, double x0, double x1, double y0, double y1) {
  std::vector<Vec3> out;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      out.push_back({nx == 1 ? 0.5 * (x0 + x1) : x0 + (x1 - x0) * i / (nx - 1),
                     ny == 1 ? 0.5 * (y0 + y1) : y0 + (y1 - y0) * j / (ny - 1), kTop});
  return out;
}

DisassemblyStep make_step(int s, const std::string& desc, const std::string& label, const std::string& tool,
                          const std::vector<Vec3>& pts) {
  DisassemblyStep st{s, desc, {}};
  for (std::size_t i = 0; i < pts.size(); ++i)
    st.subtasks.push_back({subtask_id(s, i), label, synthesize_task_pose(pts[i], kCenter), false, tool});
  return st;
}

int unreachable(const KinematicModel& m, const DisassemblyPlan& plan) {
  JointConfig home;
  home.gantry = 1.05;
  home.arm = {0.0, -1.2, 1.6, -0.4, 1.5708, 0.0};
  int bad = 0;
  for (const auto& st : plan.steps)
    for (const auto& t : st.subtasks) {
      JointConfig q = home;
      q.gantry = std::clamp(t.pose.position.x(), m.gantry_limits.low, m.gantry_limits.high);
      if (enumerate_candidates(m, q, t.pose, {}, {}).empty()) {
        std::cerr << "unreachable: " << t.id << " at " << t.pose.position.transpose() << "\n";
        ++bad;
      }
    }
  return bad;
}

void write(const std::string& path, const nlohmann::json& j) {
  std::ofstream(path) << j.dump(2) << '\n';
  std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixtures <model.json> <out_dir>\n";
    return 2;
  }
  const KinematicModel m = load_model(argv[1]);
  const std::string dir = argv[2];
  const nlohmann::json prov = {{"generator", "tools/make_fixtures.cpp"},
                               {"workspace_center", vec_to_json(kCenter)},
                               {"surface_z", kTop}};

  DisassemblyPlan full;
  full.battery = "ev-pack-a";
  full.provenance = prov;
  full.steps = {
      make_step(1, "Remove 8 large screws on top cover", "large_screw", "large_nutrunner",
                grid(4, 2, 0.3, 1.8, -0.3, 0.3)),
      make_step(2, "Remove 70 screws and nuts holding top cover", "screw", "nutrunner_high_torque",
                perimeter(70, 0.05, 2.07, -0.56, 0.56)),
      make_step(3, "Remove cover plate", "cover_plate", "none", {Vec3(0.6, 0.0, kTop)}),
      make_step(4, "Remove two busbars to break battery voltage into two", "busbar", "nutrunner_high_torque",
                grid(2, 1, 0.9, 1.2, 0.2, 0.2)),
      make_step(5, "Remove two large cables connecting across battery", "cable", "nutrunner_high_torque",
                grid(2, 1, 0.4, 1.7, -0.2, -0.2)),
      make_step(6, "Remove 6+1 large busbars", "busbar", "nutrunner_high_torque", grid(7, 1, 0.2, 1.9, 0.4, 0.4)),
      make_step(7, "Remove 3 busbars from battery controller", "busbar", "nutrunner_high_torque",
                grid(3, 1, 1.7, 1.95, -0.4, -0.4)),
      make_step(8, "Remove 8 wire harnesses", "wire_harness", "small_screwdriver_flathead",
                grid(8, 1, 0.2, 1.9, -0.45, -0.45)),
      make_step(9, "Take out 24 small bus bars", "small_busbar", "nutrunner_small_screwdriver",
                grid(8, 3, 0.15, 1.95, -0.35, 0.35)),
      make_step(10, "Take out first layer of screws holding in battery modules", "module_screw",
                "nutrunner_high_torque", grid(16, 5, 0.1, 2.0, -0.5, 0.5)),
      make_step(11, "Take out second layer of M14 screws", "m14_screw", "nutrunner_high_torque_m14",
                grid(16, 4, 0.12, 1.98, -0.45, 0.45)),
      make_step(12, "Remove 32 battery modules", "battery_module", "crowbar", grid(8, 4, 0.2, 1.9, -0.42, 0.42)),
  };
  int bad = unreachable(m, full);

  // Top-cover session: 68 parts, the first 63 already removed.
  DisassemblyPlan top;
  top.battery = "ev-pack-a";
  top.provenance = prov;
  top.steps = {make_step(2, "Remove screws and nuts holding top cover", "screw", "nutrunner_high_torque",
                         perimeter(68, 0.05, 2.07, -0.56, 0.56))};
  for (std::size_t i = 0; i < 63; ++i) top.steps[0].subtasks[i].is_removed = true;
  bad += unreachable(m, top);

  nlohmann::json items = nlohmann::json::array();
  for (const auto& st : full.steps) {
    if (st.s != 1 && st.s != 2) continue;
    for (const auto& t : st.subtasks)
      items.push_back({{"label", t.label}, {"position", vec_to_json(t.pose.position)}, {"size", {0.02, 0.02, 0.02}}});
  }

  write(dir + "/pack_plan_12.json", plan_to_json(full));
  write(dir + "/top_cover_68.json", plan_to_json(top));
  write(dir + "/fastener_layout.json", {{"items", items}});
  return bad == 0 ? 0 : 1;
}
