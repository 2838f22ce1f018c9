#include "gapflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "gapflow/rng.hpp"

namespace gapflow {

namespace {

using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string flags_str(const FeatureFlags& f) {
  std::string s;
  s += f.projection ? '1' : '0';
  s += ',';
  s += f.radial_extend ? '1' : '0';
  s += ',';
  s += f.conversion ? '1' : '0';
  return s;
}

std::string group_key(const TrialRecord& r) {
  return r.world_kind + "|" + r.model + "|" + fmt(r.fov_deg) + "|" + flags_str(r.flags) + "|" +
         fmt(r.r_min_factor);
}

}  // namespace

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RobotKind parse_model(const std::string& name) {
  if (name == "holonomic_1st") return RobotKind::holonomic_1st;
  if (name == "nonholonomic_1st") return RobotKind::nonholonomic_1st;
  if (name == "nonholonomic_2nd") return RobotKind::nonholonomic_2nd;
  throw std::invalid_argument("unknown robot model '" + name + "'");
}

NavConfig make_nav_config(const TrialConfig& tc) {
  NavConfig cfg = NavConfig::defaults(tc.world_params.r_ins);
  cfg.robot.kind = parse_model(tc.model);
  cfg.robot.v_max = tc.v_max;
  cfg.sensor.fov = tc.fov_deg * kPi / 180.0;
  cfg.sensor.beams = std::max(24, static_cast<int>(std::llround(tc.fov_deg)));
  cfg.sensor.d_max = tc.d_max;
  cfg.sensor.range_noise = tc.range_noise;
  cfg.flags = tc.flags;
  cfg.t_max = tc.t_max;
  double r_ins = tc.world_params.r_ins;
  cfg.safety.r_min = tc.r_min_factor * r_ins;
  cfg.safety.r_nom = std::max(3.0 * r_ins, 1.5 * cfg.safety.r_min);
  return cfg;
}

TrialRecord run_trial(const TrialConfig& tc) {
  auto wall_t0 = Clock::now();
  TrialRecord rec;
  rec.world_kind = tc.world_kind;
  rec.model = tc.model;
  rec.fov_deg = tc.fov_deg;
  rec.flags = tc.flags;
  rec.r_min_factor = tc.r_min_factor;
  rec.seed = tc.seed;

  const std::uint64_t world_seed = mix_seed(fnv1a(tc.world_kind), tc.seed);
  World world = generate_world(tc.world_kind, world_seed, tc.world_params);
  NavConfig cfg = make_nav_config(tc);
  NavState nav = NavState::make(world, cfg);
  RobotState rs;
  rs.pose = world.start;
  Rng noise_rng(mix_seed(tc.seed, 0x5e5eULL));

  const double sim_dt = 0.01;
  const int substeps = std::max(1, static_cast<int>(std::llround(cfg.planner_dt / sim_dt)));
  const int max_ticks = static_cast<int>(cfg.t_max / cfg.planner_dt) + 8;
  bool collided = false;
  double sim_time = 0.0, path_len = 0.0, max_psi = 0.0;
  int replans = 0;

  if (bumper_check(world, rs.pose.position(), cfg.robot.r_ins)) collided = true;

  // A partial field of view starts blind outside the forward wedge. Spin once
  // in place, feeding scans into the egocircle, so planning starts with a full
  // picture of the surroundings; the mission clock starts afterwards.
  if (cfg.sensor.fov < 2.0 * kPi - 1e-9 && !collided) {
    const double spin_time = 2.0 * kPi / cfg.robot.omega_max;
    const int spin_ticks = static_cast<int>(std::ceil(spin_time / cfg.planner_dt));
    const Twist2 spin_cmd{0.0, 0.0, cfg.robot.omega_max};
    for (int t = 0; t < spin_ticks; ++t) {
      Scan scan = simulate_scan(world, rs.pose, cfg.sensor, cfg.robot.r_ins,
                                cfg.sensor.range_noise > 0 ? &noise_rng : nullptr);
      Pose2 delta = nav.ego_init ? nav.prev_pose.relative(rs.pose) : Pose2{};
      nav.ego = egocircle_update(nav.ego, delta, scan);
      nav.ego_init = true;
      nav.prev_pose = rs.pose;
      for (int i = 0; i < scan.size(); ++i) {
        double r = scan.ranges[static_cast<std::size_t>(i)];
        if (r < scan.d_max - 1e-9) {
          nav.belief.mark(rs.pose.from_frame(unit_from_angle(scan.angle_of(i)) * r));
        }
      }
      for (int k = 0; k < substeps; ++k) {
        rs = step(cfg.robot, rs, spin_cmd, sim_dt);
        sim_time += sim_dt;
      }
    }
  }

  for (int t = 0; t < max_ticks && !collided; ++t) {
    Scan scan = simulate_scan(world, rs.pose, cfg.sensor, cfg.robot.r_ins,
                              cfg.sensor.range_noise > 0 ? &noise_rng : nullptr);
    nav.pose = rs.pose;
    nav.path_length = path_len;
    TickResult res = tick(nav, scan, cfg);
    if (nav.last_log.replanned) ++replans;
    if (std::isfinite(nav.last_log.psi_value)) {
      max_psi = std::max(max_psi, nav.last_log.psi_value);
    }
    if (nav.status.outcome != NavOutcome::running) break;
    for (int k = 0; k < substeps; ++k) {
      Vec2 before = rs.pose.position();
      rs = step(cfg.robot, rs, res.cmd, sim_dt);
      path_len += distance(rs.pose.position(), before);
      sim_time += sim_dt;
      if (bumper_check(world, rs.pose.position(), cfg.robot.r_ins)) {
        collided = true;
        break;
      }
    }
  }

  if (collided) {
    rec.outcome = "collision";
  } else {
    switch (nav.status.outcome) {
      case NavOutcome::success: rec.outcome = "success"; break;
      case NavOutcome::abort: rec.outcome = "abort"; break;
      case NavOutcome::timeout: rec.outcome = "timeout"; break;
      default: rec.outcome = "timeout"; break;  // ran out of ticks
    }
  }
  rec.path_length = path_len;
  rec.sim_time = sim_time;
  rec.ticks = nav.tick_index;
  rec.replans = replans;
  rec.max_psi = max_psi;
  rec.tick_ms_mean = mean_of(nav.timings.per_tick_ms);
  rec.tick_ms_median = median_of(nav.timings.per_tick_ms);
  rec.traj_ms_median = median_of(nav.timings.per_trajectory_ms);
  rec.traj_count = static_cast<int>(nav.timings.per_trajectory_ms.size());
  rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - wall_t0).count();
  return rec;
}

std::vector<TrialConfig> expand_spec(const ExperimentSpec& spec) {
  std::vector<TrialConfig> out;
  for (const std::string& world : spec.worlds) {
    for (const std::string& model : spec.models) {
      for (double fov : spec.fovs_deg) {
        for (const FeatureFlags& flags : spec.flag_sets) {
          for (double rmf : spec.r_min_factors) {
            for (int s = 0; s < spec.seeds; ++s) {
              TrialConfig tc;
              tc.world_kind = world;
              tc.model = model;
              tc.fov_deg = fov;
              tc.flags = flags;
              tc.r_min_factor = rmf;
              tc.seed = spec.seed_base + static_cast<std::uint64_t>(s);
              tc.world_params = spec.world_params;
              tc.t_max = spec.t_max;
              tc.v_max = spec.v_max;
              tc.d_max = spec.d_max;
              tc.range_noise = spec.range_noise;
              out.push_back(tc);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, int jobs, bool progress) {
  std::vector<TrialConfig> configs = expand_spec(spec);
  std::vector<TrialRecord> records(configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  jobs = std::max(1, jobs);
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      records[i] = run_trial(configs[i]);
      std::size_t d = done.fetch_add(1) + 1;
      if (progress && (d % 10 == 0 || d == configs.size())) {
        std::fprintf(stderr, "\r%zu/%zu trials", d, configs.size());
        std::fflush(stderr);
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (progress) std::fprintf(stderr, "\n");
  return records;
}

std::string records_csv(const std::vector<TrialRecord>& records) {
  std::string out =
      "world,model,fov_deg,projection,radial_extend,conversion,r_min_factor,seed,"
      "outcome,path_length,sim_time,ticks,replans,max_psi\n";
  char buf[256];
  for (const TrialRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.1f,%s,%.3f,%llu,%s,%.4f,%.2f,%d,%d,%.4f\n",
                  r.world_kind.c_str(), r.model.c_str(), r.fov_deg, flags_str(r.flags).c_str(),
                  r.r_min_factor, static_cast<unsigned long long>(r.seed), r.outcome.c_str(),
                  r.path_length, r.sim_time, r.ticks, r.replans, r.max_psi);
    out += buf;
  }
  return out;
}

std::string timing_csv(const std::vector<TrialRecord>& records) {
  std::string out =
      "world,model,fov_deg,projection,radial_extend,conversion,r_min_factor,seed,"
      "tick_ms_mean,tick_ms_median,traj_ms_median,traj_count,wall_ms\n";
  char buf[256];
  for (const TrialRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.1f,%s,%.3f,%llu,%.4f,%.4f,%.4f,%d,%.1f\n",
                  r.world_kind.c_str(), r.model.c_str(), r.fov_deg, flags_str(r.flags).c_str(),
                  r.r_min_factor, static_cast<unsigned long long>(r.seed), r.tick_ms_mean,
                  r.tick_ms_median, r.traj_ms_median, r.traj_count, r.wall_ms);
    out += buf;
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::vector<SummaryRow> rows;
  std::vector<std::string> keys;
  std::vector<std::vector<double>> traj_medians;
  std::vector<std::vector<double>> tick_means;
  for (const TrialRecord& r : records) {
    std::string key = group_key(r);
    std::size_t gi = 0;
    for (; gi < keys.size(); ++gi) {
      if (keys[gi] == key) break;
    }
    if (gi == keys.size()) {
      keys.push_back(key);
      SummaryRow row;
      row.world_kind = r.world_kind;
      row.model = r.model;
      row.fov_deg = r.fov_deg;
      row.flags = r.flags;
      row.r_min_factor = r.r_min_factor;
      rows.push_back(row);
      traj_medians.emplace_back();
      tick_means.emplace_back();
    }
    SummaryRow& row = rows[gi];
    ++row.trials;
    if (r.outcome == "success") {
      ++row.success;
      row.mean_path_length += r.path_length;
      row.mean_sim_time += r.sim_time;
    } else if (r.outcome == "collision") {
      ++row.collision;
    } else if (r.outcome == "abort") {
      ++row.abort_;
    } else {
      ++row.timeout;
    }
    traj_medians[gi].push_back(r.traj_ms_median);
    tick_means[gi].push_back(r.tick_ms_mean);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].success > 0) {
      rows[i].mean_path_length /= rows[i].success;
      rows[i].mean_sim_time /= rows[i].success;
    }
    rows[i].traj_ms_median = median_of(traj_medians[i]);
    rows[i].tick_ms_mean = mean_of(tick_means[i]);
  }
  return rows;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-8s %-16s %5s %-5s %5s | %3s %7s %7s %7s %7s | %8s %8s\n",
                "world", "model", "fov", "P/R/C", "rmin", "n", "succ%", "coll%", "abort%",
                "tmo%", "path_m", "traj_ms");
  out += buf;
  for (const SummaryRow& r : rows) {
    std::string fl;
    fl += r.flags.projection ? 'P' : '-';
    fl += r.flags.radial_extend ? 'R' : '-';
    fl += r.flags.conversion ? 'C' : '-';
    double n = std::max(1, r.trials);
    std::snprintf(buf, sizeof(buf),
                  "%-8s %-16s %5.0f %-5s %5.2f | %3d %7.1f %7.1f %7.1f %7.1f | %8.2f %8.3f\n",
                  r.world_kind.c_str(), r.model.c_str(), r.fov_deg, fl.c_str(), r.r_min_factor,
                  r.trials, 100.0 * r.success / n, 100.0 * r.collision / n, 100.0 * r.abort_ / n,
                  100.0 * r.timeout / n, r.mean_path_length, r.traj_ms_median);
    out += buf;
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "world,model,fov_deg,projection,radial_extend,conversion,r_min_factor,trials,"
      "success,collision,abort,timeout,mean_path_length,mean_sim_time\n";
  char buf[256];
  for (const SummaryRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.1f,%s,%.3f,%d,%d,%d,%d,%d,%.4f,%.2f\n",
                  r.world_kind.c_str(), r.model.c_str(), r.fov_deg, flags_str(r.flags).c_str(),
                  r.r_min_factor, r.trials, r.success, r.collision, r.abort_, r.timeout,
                  r.mean_path_length, r.mean_sim_time);
    out += buf;
  }
  return out;
}

namespace {

std::string plot_csv(const std::vector<SummaryRow>& rows, bool sweep_fov) {
  std::string out = sweep_fov
                        ? "model,projection,radial_extend,conversion,r_min_factor,metric,x_fov_deg,y\n"
                        : "model,projection,radial_extend,conversion,fov_deg,metric,x_r_min_factor,y\n";
  char buf[256];
  const char* metrics[4] = {"success_rate", "collision_rate", "abort_rate", "timeout_rate"};
  // Aggregate over worlds for each config point.
  struct Point {
    std::string key;
    double x = 0.0;
    int trials = 0;
    int counts[4] = {0, 0, 0, 0};
  };
  std::vector<Point> pts;
  for (const SummaryRow& r : rows) {
    char kb[160];
    if (sweep_fov) {
      std::snprintf(kb, sizeof(kb), "%s,%s,%.3f", r.model.c_str(), flags_str(r.flags).c_str(),
                    r.r_min_factor);
    } else {
      std::snprintf(kb, sizeof(kb), "%s,%s,%.1f", r.model.c_str(), flags_str(r.flags).c_str(),
                    r.fov_deg);
    }
    double x = sweep_fov ? r.fov_deg : r.r_min_factor;
    std::string key = std::string(kb) + "@" + fmt(x);
    Point* p = nullptr;
    for (Point& q : pts) {
      if (q.key == key) p = &q;
    }
    if (!p) {
      pts.push_back({key, x, 0, {0, 0, 0, 0}});
      p = &pts.back();
    }
    p->trials += r.trials;
    p->counts[0] += r.success;
    p->counts[1] += r.collision;
    p->counts[2] += r.abort_;
    p->counts[3] += r.timeout;
  }
  for (const Point& p : pts) {
    std::string prefix = p.key.substr(0, p.key.find('@'));
    for (int m = 0; m < 4; ++m) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.3f,%.4f\n", prefix.c_str(), metrics[m], p.x,
                    p.trials > 0 ? static_cast<double>(p.counts[m]) / p.trials : 0.0);
      out += buf;
    }
  }
  return out;
}

}  // namespace

std::string plot_fov_csv(const std::vector<SummaryRow>& rows) { return plot_csv(rows, true); }

std::string plot_rmin_csv(const std::vector<SummaryRow>& rows) { return plot_csv(rows, false); }

ExperimentSpec load_spec_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec: invalid JSON: ") + e.what());
  }
  ExperimentSpec s;
  try {
    s.name = j.value("name", s.name);
    if (j.contains("worlds")) s.worlds = j["worlds"].get<std::vector<std::string>>();
    if (j.contains("models")) s.models = j["models"].get<std::vector<std::string>>();
    if (j.contains("fovs_deg")) s.fovs_deg = j["fovs_deg"].get<std::vector<double>>();
    if (j.contains("r_min_factors")) {
      s.r_min_factors = j["r_min_factors"].get<std::vector<double>>();
    }
    if (j.contains("flag_sets")) {
      s.flag_sets.clear();
      for (const auto& fj : j["flag_sets"]) {
        FeatureFlags f;
        f.projection = fj.value("projection", true);
        f.radial_extend = fj.value("radial_extend", true);
        f.conversion = fj.value("conversion", true);
        s.flag_sets.push_back(f);
      }
    }
    if (j.contains("world")) {
      const auto& w = j["world"];
      s.world_params.size = w.value("size", s.world_params.size);
      s.world_params.resolution = w.value("resolution", s.world_params.resolution);
      s.world_params.obstacle_count = w.value("obstacle_count", s.world_params.obstacle_count);
      s.world_params.r_ins = w.value("r_ins", s.world_params.r_ins);
      s.world_params.min_start_goal_sep =
          w.value("min_start_goal_sep", s.world_params.min_start_goal_sep);
    }
    s.seeds = j.value("seeds", s.seeds);
    s.seed_base = j.value("seed_base", s.seed_base);
    s.t_max = j.value("t_max", s.t_max);
    s.v_max = j.value("v_max", s.v_max);
    s.d_max = j.value("d_max", s.d_max);
    s.range_noise = j.value("range_noise", s.range_noise);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spec: bad field type: ") + e.what());
  }

  if (s.worlds.empty() || s.models.empty() || s.fovs_deg.empty() || s.flag_sets.empty() ||
      s.r_min_factors.empty()) {
    throw std::invalid_argument("spec: worlds/models/fovs_deg/flag_sets/r_min_factors "
                                "must be non-empty");
  }
  for (const std::string& w : s.worlds) {
    if (w != "dense" && w != "campus" && w != "office" && w != "sector") {
      throw std::invalid_argument("spec: unknown world kind '" + w + "'");
    }
  }
  for (const std::string& m : s.models) parse_model(m);
  for (double f : s.fovs_deg) {
    if (!(f > 0.0) || f > 360.0) throw std::invalid_argument("spec: fov_deg must be in (0, 360]");
  }
  for (double r : s.r_min_factors) {
    if (!(r > 0.0)) throw std::invalid_argument("spec: r_min_factors must be positive");
  }
  if (s.seeds <= 0) throw std::invalid_argument("spec: seeds must be positive");
  if (!(s.t_max > 0.0) || !(s.v_max > 0.0) || !(s.d_max > 0.0)) {
    throw std::invalid_argument("spec: t_max/v_max/d_max must be positive");
  }
  return s;
}

std::string spec_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["worlds"] = s.worlds;
  j["models"] = s.models;
  j["fovs_deg"] = s.fovs_deg;
  j["r_min_factors"] = s.r_min_factors;
  nlohmann::json flags = nlohmann::json::array();
  for (const FeatureFlags& f : s.flag_sets) {
    flags.push_back({{"projection", f.projection},
                     {"radial_extend", f.radial_extend},
                     {"conversion", f.conversion}});
  }
  j["flag_sets"] = flags;
  j["world"] = {{"size", s.world_params.size},
                {"resolution", s.world_params.resolution},
                {"obstacle_count", s.world_params.obstacle_count},
                {"r_ins", s.world_params.r_ins},
                {"min_start_goal_sep", s.world_params.min_start_goal_sep}};
  j["seeds"] = s.seeds;
  j["seed_base"] = s.seed_base;
  j["t_max"] = s.t_max;
  j["v_max"] = s.v_max;
  j["d_max"] = s.d_max;
  j["range_noise"] = s.range_noise;
  return j.dump(2);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<TrialRecord> parse_records_csv(const std::string& csv) {
  std::vector<TrialRecord> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string::npos) end = csv.size();
    std::string line = csv.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 14) throw std::invalid_argument("records csv: bad column count");
    TrialRecord r;
    r.world_kind = f[0];
    r.model = f[1];
    r.fov_deg = std::stod(f[2]);
    r.flags.projection = f[3] == "1";
    r.flags.radial_extend = f[4] == "1";
    r.flags.conversion = f[5] == "1";
    r.r_min_factor = std::stod(f[6]);
    r.seed = std::stoull(f[7]);
    r.outcome = f[8];
    r.path_length = std::stod(f[9]);
    r.sim_time = std::stod(f[10]);
    r.ticks = std::stoi(f[11]);
    r.replans = std::stoi(f[12]);
    r.max_psi = std::stod(f[13]);
    out.push_back(std::move(r));
  }
  return out;
}

void merge_timing_csv(std::vector<TrialRecord>& records, const std::string& timing) {
  std::size_t pos = 0, row = 0;
  bool header = true;
  while (pos < timing.size()) {
    std::size_t end = timing.find('\n', pos);
    if (end == std::string::npos) end = timing.size();
    std::string line = timing.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    if (row >= records.size()) break;
    auto f = split_csv_line(line);
    if (f.size() != 13) throw std::invalid_argument("timing csv: bad column count");
    records[row].tick_ms_mean = std::stod(f[8]);
    records[row].tick_ms_median = std::stod(f[9]);
    records[row].traj_ms_median = std::stod(f[10]);
    records[row].traj_count = std::stoi(f[11]);
    records[row].wall_ms = std::stod(f[12]);
    ++row;
  }
}

}  // namespace gapflow
