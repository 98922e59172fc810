#pragma once
// Line-delimited JSON skill server. One request per line:
//   {"id": any, "op": "plan_to_pose_relative" | "remove_fastener" |
//                     "query_inventory" | "shutdown", "params": {...}}
// and exactly one response line per request:
//   {"id": same, "status": "ok" | "error", "result": {...},
//    "verified": bool, "error": {"kind": str, "message": str}}
// "verified" is present for state-mutating ops only and reports the
// simulator's ground truth.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <functional>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <string>

#include "rapid/config.hpp"
#include "rapid/corridor_planner.hpp"
#include "rapid/error.hpp"
#include "rapid/kinematics.hpp"
#include "rapid/removal_sim.hpp"
#include "rapid/task_synthesis.hpp"

namespace rapid {

struct SkillContext {
  KinematicModel model;
  CollisionWorld world = CollisionWorld::reference_cell();
  PlannerConfig planner;
  Corridor corridor_shape;  // only the half-widths and margin are used
  JointConfig q;            // current robot configuration
  Aabb workspace{Vec3(-0.3, -0.9, 0.9), Vec3(2.4, 0.9, 1.55)};
  DisassemblyPlan plan;
  StrategyNoise noise;
  EngagementModel engagement;
  std::uint64_t seed = 1;
};

inline SkillContext skill_context(const Config& c, KinematicModel model, DisassemblyPlan plan) {
  SkillContext ctx;
  ctx.model = std::move(model);
  ctx.world = collision_world(c);
  ctx.planner = planner_config(c);
  ctx.corridor_shape = corridor_between(c, Vec3::Zero(), Vec3::UnitX());
  ctx.q = home_config(c);
  ctx.plan = std::move(plan);
  ctx.noise = strategy_noise(c, strategy_from_string(c.get_string("server.strategy", "servo")));
  ctx.engagement = engagement_model(c);
  ctx.seed = static_cast<std::uint64_t>(c.get_int("server.seed", 1));
  return ctx;
}

class SkillServer {
 public:
  explicit SkillServer(SkillContext ctx) : ctx_(std::move(ctx)) {}

  const DisassemblyPlan& plan() const { return ctx_.plan; }
  const JointConfig& configuration() const { return ctx_.q; }
  int verified_removals() const { return verified_removals_; }
  bool shutdown_requested() const { return shutdown_; }

  nlohmann::json handle(const nlohmann::json& req) {
    nlohmann::json id = nullptr;
    if (req.is_object() && req.contains("id")) id = req.at("id");
    try {
      if (!req.is_object()) throw Error(ErrorKind::Validation, "request must be a JSON object");
      if (!req.contains("op") || !req.at("op").is_string())
        throw Error(ErrorKind::Validation, "request needs a string 'op'");
      const std::string op = req.at("op").get<std::string>();
      const nlohmann::json params = req.value("params", nlohmann::json::object());
      if (!params.is_object()) throw Error(ErrorKind::Validation, "'params' must be an object");
      if (op == "plan_to_pose_relative") return plan_to_pose_relative(id, params);
      if (op == "remove_fastener") return remove_fastener(id, params);
      if (op == "query_inventory") return query_inventory(id, params);
      if (op == "shutdown") {
        shutdown_ = true;
        return ok(id, nlohmann::json::object());
      }
      throw Error(ErrorKind::Validation, "unknown op '" + op + "'");
    } catch (const Error& e) {
      return error(id, std::string(to_string(e.kind())), e.what());
    } catch (const nlohmann::json::exception& e) {
      return error(id, "validation", e.what());
    }
  }

  std::string handle_line(const std::string& line) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      return error(nullptr, "parse", e.what()).dump();
    }
    return handle(req).dump();
  }

  // Reads requests until EOF or shutdown.
  void serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (!shutdown_ && std::getline(in, line)) {
      if (line.empty()) continue;
      out << handle_line(line) << '\n' << std::flush;
    }
  }

 private:
  static nlohmann::json ok(const nlohmann::json& id, nlohmann::json result) {
    return {{"id", id}, {"status", "ok"}, {"result", std::move(result)}};
  }
  static nlohmann::json error(const nlohmann::json& id, const std::string& kind, const std::string& msg) {
    return {{"id", id}, {"status", "error"}, {"error", {{"kind", kind}, {"message", msg}}}};
  }

  static double number(const nlohmann::json& p, const char* key) {
    if (!p.contains(key)) return 0.0;
    if (!p.at(key).is_number()) throw Error(ErrorKind::Validation, std::string("'") + key + "' must be a number");
    const double v = p.at(key).get<double>();
    if (!std::isfinite(v)) throw Error(ErrorKind::Validation, std::string("'") + key + "' must be finite");
    return v;
  }

  nlohmann::json plan_to_pose_relative(const nlohmann::json& id, const nlohmann::json& p) {
    const Vec3 d(number(p, "dx"), number(p, "dy"), number(p, "dz"));
    const Pose start = end_effector_pose(ctx_.model, ctx_.q);
    nlohmann::json result;
    if (d.norm() == 0.0) {
      result = {{"requested", vec_to_json(d)}, {"achieved", vec_to_json(Vec3::Zero())}, {"waypoints", 1},
                {"ee_path_length", 0.0}, {"plan_time_s", 0.0}};
      nlohmann::json r = ok(id, result);
      r["verified"] = true;
      return r;
    }
    const Pose goal{start.position + d, start.orientation};
    if (!ctx_.workspace.contains(goal.position))
      throw Error(ErrorKind::Workspace, "target position lies outside the workspace");

    Corridor c = ctx_.corridor_shape;
    c.start = start.position;
    c.goal = goal.position;
    PlanResult plan;
    try {
      plan = rapid::plan(ctx_.world, ctx_.model, ctx_.q, goal, c, ctx_.planner, ctx_.seed + motion_count_++);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::GoalSetEmpty) throw Error(ErrorKind::Unreachable, e.what());
      throw;
    }
    if (!plan.success())
      throw Error(ErrorKind::Timeout, "no path found after " + std::to_string(plan.iterations) + " iterations");
    ctx_.q = plan.path.waypoints.back();
    const Vec3 achieved = end_effector_position(ctx_.model, ctx_.q) - start.position;
    result = {{"requested", vec_to_json(d)},
              {"achieved", vec_to_json(achieved)},
              {"waypoints", plan.path.waypoints.size()},
              {"ee_path_length", plan.path.ee_length},
              {"plan_time_s", plan.plan_time_s}};
    nlohmann::json r = ok(id, result);
    r["verified"] = (achieved - d).norm() < 1e-3;
    return r;
  }

  nlohmann::json remove_fastener(const nlohmann::json& id, const nlohmann::json& p) {
    if (!p.contains("subtask_id") || !p.at("subtask_id").is_string())
      throw Error(ErrorKind::Validation, "'subtask_id' must be a string");
    const std::string sid = p.at("subtask_id").get<std::string>();
    const SubTask* t = ctx_.plan.find(sid);
    if (!t) throw Error(ErrorKind::UnknownId, "unknown subtask '" + sid + "'");
    if (t->is_removed) throw Error(ErrorKind::AlreadyRemoved, "subtask '" + sid + "' is already removed");

    const AttemptRecord a =
        simulate_attempt(ctx_.noise, ctx_.engagement, detail::mix_seed(ctx_.seed, attempt_count_++));
    Pose commanded = t->pose;
    commanded.position += Vec3(a.lateral.x(), a.lateral.y(), 0.0);
    const bool success = attempt_removal(t->pose.position, commanded, ctx_.engagement);
    mark_removed(ctx_.plan, sid, success);
    if (success) ++verified_removals_;
    nlohmann::json r = ok(id, {{"subtask_id", sid},
                               {"removed", success},
                               {"lateral_error_m", a.lateral.norm()},
                               {"duration_s", a.duration_s}});
    r["verified"] = success;
    return r;
  }

  nlohmann::json query_inventory(const nlohmann::json& id, const nlohmann::json& p) {
    if (!p.contains("step") || !p.at("step").is_number_integer())
      throw Error(ErrorKind::Validation, "'step' must be an integer");
    nlohmann::json items = nlohmann::json::array();
    for (const auto& t : remaining(ctx_.plan, p.at("step").get<int>())) {
      nlohmann::json pose;
      to_json(pose, t.pose);
      items.push_back({{"id", t.id}, {"label", t.label}, {"tool", t.tool}, {"pose", pose}, {"is_removed", false}});
    }
    return ok(id, {{"remaining", items}, {"count", items.size()}});
  }

  SkillContext ctx_;
  bool shutdown_ = false;
  int verified_removals_ = 0;
  std::uint64_t motion_count_ = 0;
  std::uint64_t attempt_count_ = 0;
};

// --- TCP transport -------------------------------------------------------------

// Loopback listener; clients are served one after another until a
// shutdown request arrives.
class TcpListener {
 public:
  // port 0 picks an ephemeral port; see port().
  explicit TcpListener(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(ErrorKind::Io, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 4) < 0) {
      const std::string msg = std::strerror(errno);
      ::close(fd_);
      throw Error(ErrorKind::Io, "cannot listen on port " + std::to_string(port) + ": " + msg);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }

  void serve(SkillServer& server) {
    while (!server.shutdown_requested()) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::Io, std::string("accept: ") + std::strerror(errno));
      }
      serve_client(server, c);
      ::close(c);
    }
  }

 private:
  static bool write_all(int fd, const std::string& s) {
    std::size_t off = 0;
    while (off < s.size()) {
      const ssize_t n = ::send(fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  static void serve_client(SkillServer& server, int fd) {
    std::string buf;
    char chunk[4096];
    while (!server.shutdown_requested()) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!write_all(fd, server.handle_line(line) + "\n")) return;
        if (server.shutdown_requested()) return;
      }
    }
  }

  int fd_ = -1;
  int port_ = 0;
};

// Minimal blocking client used by tests and the scripted session.
class TcpClient {
 public:
  explicit TcpClient(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(ErrorKind::Io, "socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      ::close(fd_);
      throw Error(ErrorKind::Io, "cannot connect to port " + std::to_string(port));
    }
  }
  ~TcpClient() {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpClient(const TcpClient&) = delete;
  TcpClient& operator=(const TcpClient&) = delete;

  std::string request_line(const std::string& line) {
    const std::string msg = line + "\n";
    if (::send(fd_, msg.data(), msg.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(msg.size()))
      throw Error(ErrorKind::Io, "send failed");
    std::size_t nl;
    while ((nl = buf_.find('\n')) == std::string::npos) {
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) throw Error(ErrorKind::Io, "connection closed");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
    std::string out = buf_.substr(0, nl);
    buf_.erase(0, nl + 1);
    return out;
  }

  nlohmann::json request(const nlohmann::json& req) { return nlohmann::json::parse(request_line(req.dump())); }

 private:
  int fd_ = -1;
  std::string buf_;
};

// Scripted session for the "remove all remaining parts" task: query the
// inventory, remove each remaining part (retrying while the server reports
// verified=false, up to max_tries), then query again.
struct ScriptedOutcome {
  int initially_remaining = 0;
  int verified_removals = 0;
  int attempts = 0;
  int finally_remaining = 0;
  int responses = 0;
  int mismatched_ids = 0;
};

inline ScriptedOutcome run_removal_script(const std::function<nlohmann::json(const nlohmann::json&)>& call, int step,
                                          int max_tries = 10) {
  ScriptedOutcome o;
  int next_id = 1;
  auto send = [&](const std::string& op, nlohmann::json params) {
    const int id = next_id++;
    nlohmann::json resp = call({{"id", id}, {"op", op}, {"params", std::move(params)}});
    ++o.responses;
    if (resp.value("id", nlohmann::json()) != id) ++o.mismatched_ids;
    return resp;
  };
  auto inv = send("query_inventory", {{"step", step}});
  if (inv.value("status", "") != "ok") return o;
  o.initially_remaining = inv["result"]["count"].get<int>();
  for (const auto& item : inv["result"]["remaining"]) {
    const std::string sid = item["id"].get<std::string>();
    for (int t = 0; t < max_tries; ++t) {
      auto r = send("remove_fastener", {{"subtask_id", sid}});
      ++o.attempts;
      if (r.value("status", "") != "ok") break;
      if (r.value("verified", false)) {
        ++o.verified_removals;
        break;
      }
    }
  }
  auto fin = send("query_inventory", {{"step", step}});
  if (fin.value("status", "") == "ok") o.finally_remaining = fin["result"]["count"].get<int>();
  return o;
}

}  // namespace rapid
