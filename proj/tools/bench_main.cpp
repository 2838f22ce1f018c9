// bench: Monte Carlo benchmark CLI.
//   bench run --spec <file> --out <dir> [--jobs N] [--seeds N]
//   bench summarize <dir>
//   bench plotdata <dir>
//   bench worldgen --kind <kind> --seed S --out <file> [--size M] [--resolution R]
// Exit codes: 0 ok, 1 runtime failure, 2 spec error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gapflow/bench.hpp"
#include "gapflow/sim.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

int cmd_run(const std::string& spec_path, const std::string& out_dir, int jobs, int seeds) {
  gapflow::ExperimentSpec spec;
  try {
    spec = gapflow::load_spec_json(read_file(spec_path));
    if (seeds > 0) spec.seeds = seeds;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return 2;
  }
  fs::create_directories(out_dir);
  auto records = gapflow::run_experiment(spec, jobs, true);
  std::string rec_csv = gapflow::records_csv(records);
  write_file(out_dir + "/records.csv", rec_csv);
  write_file(out_dir + "/timing.csv", gapflow::timing_csv(records));
  auto rows = gapflow::summarize(records);
  write_file(out_dir + "/summary.csv", gapflow::summary_csv(rows));
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(gapflow::fnv1a(rec_csv)));
  std::string manifest = "{\n  \"name\": \"" + spec.name + "\",\n  \"trials\": " +
                         std::to_string(records.size()) + ",\n  \"records_digest\": \"" + digest +
                         "\",\n  \"spec\": " + gapflow::spec_json(spec) + "\n}\n";
  write_file(out_dir + "/manifest.json", manifest);
  std::fputs(gapflow::summary_table(rows).c_str(), stdout);
  return 0;
}

int cmd_summarize(const std::string& dir) {
  auto records = gapflow::parse_records_csv(read_file(dir + "/records.csv"));
  if (fs::exists(dir + "/timing.csv")) {
    gapflow::merge_timing_csv(records, read_file(dir + "/timing.csv"));
  }
  std::fputs(gapflow::summary_table(gapflow::summarize(records)).c_str(), stdout);
  return 0;
}

int cmd_plotdata(const std::string& dir) {
  auto records = gapflow::parse_records_csv(read_file(dir + "/records.csv"));
  auto rows = gapflow::summarize(records);
  write_file(dir + "/plot_fov.csv", gapflow::plot_fov_csv(rows));
  write_file(dir + "/plot_rmin.csv", gapflow::plot_rmin_csv(rows));
  std::printf("wrote %s/plot_fov.csv and %s/plot_rmin.csv\n", dir.c_str(), dir.c_str());
  return 0;
}

int cmd_worldgen(const std::string& kind, std::uint64_t seed, const std::string& out,
                 double size, double resolution, int count) {
  gapflow::WorldGenParams p;
  p.size = size;
  p.resolution = resolution;
  if (count > 0) p.obstacle_count = count;
  gapflow::World w;
  try {
    w = gapflow::generate_world(kind, seed, p);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return 2;
  }
  gapflow::save_world_file(w, out);
  std::printf("wrote %s (%dx%d cells, start %.2f %.2f, goal %.2f %.2f)\n", out.c_str(), w.width,
              w.height, w.start.x, w.start.y, w.goal.x, w.goal.y);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gap-based navigation benchmark harness"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, dir, kind = "sector", out_file;
  int jobs = 1, seeds = 0, count = 0;
  std::uint64_t seed = 1;
  double size = 20.0, resolution = 0.05;

  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("--spec", spec_path, "experiment spec JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--jobs", jobs, "worker threads");
  run->add_option("--seeds", seeds, "override seed count");

  auto* summ = app.add_subcommand("summarize", "summarize a results directory");
  summ->add_option("dir", dir, "results directory")->required();

  auto* plot = app.add_subcommand("plotdata", "emit x/y series CSVs from results");
  plot->add_option("dir", dir, "results directory")->required();

  auto* wg = app.add_subcommand("worldgen", "generate a world file");
  wg->add_option("--kind", kind, "dense|campus|office|sector");
  wg->add_option("--seed", seed, "generation seed");
  wg->add_option("--out", out_file, "output world file")->required();
  wg->add_option("--size", size, "world side length (m)");
  wg->add_option("--resolution", resolution, "cell size (m)");
  wg->add_option("--count", count, "obstacle count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(spec_path, out_dir, jobs, seeds);
    if (summ->parsed()) return cmd_summarize(dir);
    if (plot->parsed()) return cmd_plotdata(dir);
    if (wg->parsed()) return cmd_worldgen(kind, seed, out_file, size, resolution, count);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "spec error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
