#pragma once
// Task poses from detected centroids, and the disassembly plan document
// with its removal inventory.
//
// Plan JSON:
//   {"battery": str,
//    "provenance": {...}            (optional, preserved verbatim)
//    "steps": [{"s": int, "description": str,
//               "subtasks": [{"id": str, "label": str, "pose": {...},
//                             "is_removed": bool, "tool": str}]}]}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rapid/detection_memory.hpp"
#include "rapid/error.hpp"
#include "rapid/se3.hpp"

namespace rapid {

struct SubTask {
  std::string id;
  std::string label;
  Pose pose;
  bool is_removed = false;
  std::string tool;
};

struct DisassemblyStep {
  int s = 0;
  std::string description;
  std::vector<SubTask> subtasks;
};

struct RemovalAttempt {
  std::string subtask_id;
  bool verified = false;
  bool changed = false;
};

struct DisassemblyPlan {
  std::string battery;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<DisassemblyStep> steps;
  std::vector<RemovalAttempt> attempt_log;  // in-memory only

  const DisassemblyStep& step(int s) const {
    for (const auto& st : steps)
      if (st.s == s) return st;
    throw Error(ErrorKind::UnknownId, "unknown step " + std::to_string(s));
  }
  DisassemblyStep& step(int s) {
    return const_cast<DisassemblyStep&>(static_cast<const DisassemblyPlan&>(*this).step(s));
  }

  const SubTask* find(const std::string& id) const {
    for (const auto& st : steps)
      for (const auto& t : st.subtasks)
        if (t.id == id) return &t;
    return nullptr;
  }
  SubTask* find(const std::string& id) {
    return const_cast<SubTask*>(static_cast<const DisassemblyPlan&>(*this).find(id));
  }

  std::size_t subtask_count() const {
    std::size_t n = 0;
    for (const auto& st : steps) n += st.subtasks.size();
    return n;
  }
  std::size_t removed_count() const {
    std::size_t n = 0;
    for (const auto& st : steps)
      for (const auto& t : st.subtasks) n += t.is_removed ? 1 : 0;
    return n;
  }
};

// Tool pointing straight down, y axis horizontal towards the vertical axis
// through `center`.
inline Pose synthesize_task_pose(const Vec3& c, const Vec3& center = Vec3::Zero()) {
  const Vec3 toward(center.x() - c.x(), center.y() - c.y(), 0.0);
  if (toward.norm() <= 1e-9)
    throw Error(ErrorKind::Degenerate, "centroid lies on the workspace vertical axis");
  const Vec3 z(0.0, 0.0, -1.0);
  const Vec3 y = toward.normalized();
  const Vec3 x = y.cross(z).normalized();
  return pose_from_axes(x, y, z, c);
}

inline std::string subtask_id(int step, std::size_t index) {
  return std::to_string(step) + "/" + std::to_string(index);
}

struct SynthesisResult {
  std::vector<SubTask> subtasks;
  std::vector<std::uint64_t> skipped;  // object ids with degenerate centroids
};

inline SynthesisResult tasks_from_memory(const DetectionMemory& mem, const std::set<std::string>& labels, int step,
                                         const Vec3& center = Vec3::Zero(), const std::string& tool = "") {
  SynthesisResult r;
  for (const auto& o : mem.query_all()) {
    if (!labels.count(o.detection.label)) continue;
    try {
      SubTask t;
      t.id = subtask_id(step, r.subtasks.size());
      t.label = o.detection.label;
      t.pose = synthesize_task_pose(o.detection.centroid, center);
      t.tool = tool;
      r.subtasks.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate) throw;
      r.skipped.push_back(o.id);
    }
  }
  return r;
}

// --- persistence ---------------------------------------------------------------

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Validation, "plan" + path + ": " + what);
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(path + "." + key, "missing");
  return *it;
}

template <typename T>
T typed(const nlohmann::json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) schema_error(path + "." + key, "expected string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) schema_error(path + "." + key, "expected boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) schema_error(path + "." + key, "expected integer");
  }
  return v.get<T>();
}

}  // namespace detail

inline DisassemblyPlan plan_from_json(const nlohmann::json& doc) {
  using detail::schema_error;
  using detail::typed;
  DisassemblyPlan plan;
  plan.battery = typed<std::string>(doc, "battery", "");
  if (doc.contains("provenance")) plan.provenance = doc.at("provenance");
  const auto& steps = detail::field(doc, "steps", "");
  if (!steps.is_array()) schema_error(".steps", "expected array");

  std::set<std::string> ids;
  std::set<int> ordinals;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string sp = ".steps[" + std::to_string(i) + "]";
    DisassemblyStep st;
    st.s = typed<int>(steps[i], "s", sp);
    if (!ordinals.insert(st.s).second) schema_error(sp + ".s", "duplicate step ordinal");
    st.description = typed<std::string>(steps[i], "description", sp);
    const auto& subs = detail::field(steps[i], "subtasks", sp);
    if (!subs.is_array()) schema_error(sp + ".subtasks", "expected array");
    for (std::size_t k = 0; k < subs.size(); ++k) {
      const std::string tp = sp + ".subtasks[" + std::to_string(k) + "]";
      SubTask t;
      t.id = typed<std::string>(subs[k], "id", tp);
      if (!ids.insert(t.id).second) schema_error(tp + ".id", "duplicate subtask id '" + t.id + "'");
      t.label = typed<std::string>(subs[k], "label", tp);
      t.is_removed = typed<bool>(subs[k], "is_removed", tp);
      t.tool = typed<std::string>(subs[k], "tool", tp);
      try {
        from_json(detail::field(subs[k], "pose", tp), t.pose);
      } catch (const nlohmann::json::exception& e) {
        schema_error(tp + ".pose", e.what());
      } catch (const Error& e) {
        schema_error(tp + ".pose", e.what());
      }
      st.subtasks.push_back(std::move(t));
    }
    plan.steps.push_back(std::move(st));
  }
  return plan;
}

inline nlohmann::json plan_to_json(const DisassemblyPlan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : plan.steps) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& t : st.subtasks) {
      nlohmann::json pose;
      to_json(pose, t.pose);
      subs.push_back(
          {{"id", t.id}, {"label", t.label}, {"pose", pose}, {"is_removed", t.is_removed}, {"tool", t.tool}});
    }
    steps.push_back({{"s", st.s}, {"description", st.description}, {"subtasks", subs}});
  }
  nlohmann::json doc = {{"battery", plan.battery}, {"steps", steps}};
  if (!plan.provenance.empty()) doc["provenance"] = plan.provenance;
  return doc;
}

// Canonical text: sorted keys, two-space indent.
inline std::string save_plan(const DisassemblyPlan& plan) { return plan_to_json(plan).dump(2); }

inline DisassemblyPlan load_plan(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("plan is not valid JSON: ") + e.what());
  }
  return plan_from_json(doc);
}

inline DisassemblyPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open plan " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_plan(ss.str());
}

inline void save_plan_file(const DisassemblyPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write plan " + path);
  out << save_plan(plan) << '\n';
}

// --- inventory ---------------------------------------------------------------

// Only a verified removal mutates state; unverified attempts are logged.
inline RemovalAttempt mark_removed(DisassemblyPlan& plan, const std::string& id, bool verified) {
  SubTask* t = plan.find(id);
  if (!t) throw Error(ErrorKind::UnknownId, "unknown subtask '" + id + "'");
  RemovalAttempt a{id, verified, false};
  if (verified && !t->is_removed) {
    t->is_removed = true;
    a.changed = true;
  }
  plan.attempt_log.push_back(a);
  return a;
}

inline std::vector<SubTask> remaining(const DisassemblyPlan& plan, int step) {
  std::vector<SubTask> out;
  for (const auto& t : plan.step(step).subtasks)
    if (!t.is_removed) out.push_back(t);
  return out;
}

}  // namespace rapid
