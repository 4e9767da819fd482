// Copyright 2026 The MIM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mim/mim.hpp"

namespace fs = std::filesystem;

namespace
{

/// Flags shared by run and export; each mirrors a config-file field.
struct CommonFlags
{
  std::string config;
  std::string scene;
  std::string robot;
  std::string inflation;
  int episodes{0};
  std::uint64_t seed{0};
  int snapshot_every{0};
  std::string out;
  double gamma{0.0};
  int kernel_size{0};
  int padding{0};
  int threads{0};
  bool no_fscore{false};

  CLI::Option * o_scene{}, * o_robot{}, * o_inflation{}, * o_episodes{}, * o_seed{}, * o_snapshot{}, * o_out{},
  * o_gamma{}, * o_kernel{}, * o_padding{}, * o_threads{}, * o_no_fscore{};

  void add(CLI::App * app)
  {
    app->add_option("--config", config, "JSON run configuration; flags override its values");
    o_scene = app->add_option("--scene", scene, "scene JSON file");
    o_robot = app->add_option("--robot", robot, "robot profile (turtlebot|spot); default from scene");
    o_inflation = app->add_option("--inflation", inflation, "adaptive|uniform")->check(CLI::IsMember({"adaptive", "uniform"}));
    o_episodes = app->add_option("--episodes", episodes, "episodes per batch");
    o_seed = app->add_option("--seed", seed, "batch seed");
    o_snapshot = app->add_option("--snapshot-every", snapshot_every, "write map snapshots every k frames (0: off)");
    o_out = app->add_option("--out", out, "output directory");
    o_gamma = app->add_option("--gamma", gamma, "intensity threshold as a fraction of R");
    o_kernel = app->add_option("--kernel-size", kernel_size, "inflation kernel size e (odd; 0 derives from robot)");
    o_padding = app->add_option("--padding", padding, "adaptive kernel perpendicular padding (cells; <0 derives)");
    o_threads = app->add_option("--threads", threads, "worker threads for episodes");
    o_no_fscore = app->add_flag("--no-fscore", no_fscore, "skip per-frame ground-truth scoring");
  }

  mim::RunConfig resolve() const
  {
    mim::RunConfig cfg = config.empty() ? mim::RunConfig{} : mim::load_config(config);
    if (*o_scene) {cfg.scene = scene;}
    if (*o_robot) {cfg.robot = robot;}
    if (*o_inflation) {cfg.pipeline.mode = mim::inflation_mode_from_string(inflation);}
    if (*o_episodes) {cfg.episodes = episodes;}
    if (*o_seed) {cfg.seed = seed;}
    if (*o_snapshot) {cfg.snapshot_every = snapshot_every;}
    if (*o_out) {cfg.out = out;}
    if (*o_gamma) {cfg.pipeline.gamma_fraction = gamma;}
    if (*o_kernel) {cfg.pipeline.kernel_size = kernel_size;}
    if (*o_padding) {cfg.pipeline.padding = padding;}
    if (*o_threads) {cfg.threads = threads;}
    if (*o_no_fscore) {cfg.episode.evaluate_fscore = false;}
    if (cfg.scene.empty()) {
      throw mim::SchemaError("scene", "no scene given (use --scene or the config field)");
    }
    mim::validate_config(cfg);
    return cfg;
  }
};

void write_snapshot(const fs::path & dir, const std::string & stem, const mim::FrameView & fv)
{
  const auto & layers = fv.perception.layers;
  for (auto role : mim::LayerSpec::roles) {
    mim::write_bytes((dir / (stem + "_" + mim::to_string(role) + ".pgm")).string(), mim::encode_pgm(layers.layer(role)));
  }
  mim::write_bytes((dir / (stem + "_plan.ppm")).string(), mim::encode_ppm(fv.perception.plan, fv.goal_robot));
}

int cmd_run(const CommonFlags & flags)
{
  const mim::RunConfig cfg = flags.resolve();
  const mim::Scene scene = mim::load_scene(cfg.scene);
  const mim::EpisodeSetup setup = mim::EpisodeSetup::from(scene, cfg);
  const fs::path dir = fs::path(cfg.out) / (scene.name + "_" + mim::to_string(cfg.pipeline.mode));
  fs::create_directories(dir);
  if (cfg.snapshot_every > 0) {
    fs::create_directories(dir / "snapshots");
  }

  auto hook_for = [&](int episode) -> mim::FrameHook {
      if (cfg.snapshot_every <= 0) {
        return {};
      }
      return [&, episode](const mim::FrameView & fv) {
               if (fv.frame % cfg.snapshot_every == 0) {
                 char stem[64];
                 std::snprintf(stem, sizeof(stem), "ep%03d_f%05d", episode, fv.frame);
                 write_snapshot(dir / "snapshots", stem, fv);
               }
             };
    };
  const auto results = mim::run_batch(setup, cfg.episodes, cfg.seed, cfg.threads, hook_for);
  for (std::size_t i = 0; i < results.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "episode_%03zu.csv", i);
    mim::write_text((dir / name).string(), mim::trajectory_csv(results[i].trajectory));
  }
  const mim::BatchReport report = mim::make_report(results);
  mim::write_text((dir / "report.json").string(), mim::to_json(report).dump(2) + "\n");
  const std::string table = mim::format_table({report});
  mim::write_text((dir / "report.txt").string(), table);
  std::cout << table;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto & r = results[i];
    std::cout << "  episode " << i << ": " << mim::to_string(r.outcome);
    if (!r.collided_with.empty()) {
      std::cout << " (" << r.collided_with << ")";
    }
    std::cout << ", " << r.frames << " frames\n";
  }
  std::cout << "results written to " << dir.string() << "\n";
  return 0;
}

int cmd_export(const CommonFlags & flags, int frame)
{
  mim::RunConfig cfg = flags.resolve();
  const mim::Scene scene = mim::load_scene(cfg.scene);
  const mim::EpisodeSetup setup = mim::EpisodeSetup::from(scene, cfg);
  const fs::path dir = fs::path(cfg.out) / (scene.name + "_maps");
  fs::create_directories(dir);
  bool written = false;
  std::uint64_t hash = 0;
  auto hook = [&](const mim::FrameView & fv) {
      if (fv.frame != frame) {
        return;
      }
      char stem[32];
      std::snprintf(stem, sizeof(stem), "f%05d", frame);
      write_snapshot(dir, stem, fv);
      for (auto role : mim::LayerSpec::roles) {
        mim::write_text((dir / (std::string(stem) + "_" + mim::to_string(role) + ".csv")).string(),
            mim::layer_csv(fv.perception.layers.layer(role)));
      }
      mim::LidarConfig lidar = setup.lidar;
      lidar.seed = mim::episode_seed(cfg.seed, 0);
      const auto pts = mim::cast_scan(setup.scene.primitives, fv.robot, lidar, static_cast<std::uint64_t>(fv.frame));
      mim::write_text((dir / (std::string(stem) + "_points.csv")).string(), mim::points_csv(pts));
      hash = mim::fnv1a64(mim::encode_ppm(fv.perception.plan, fv.goal_robot));
      written = true;
    };
  mim::EpisodeSetup one = setup;
  one.episode.evaluate_fscore = false;
  mim::run_episode(one, mim::episode_seed(cfg.seed, 0), hook);
  if (!written) {
    std::cerr << "episode ended before frame " << frame << "\n";
    return 1;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  std::cout << "maps for frame " << frame << " written to " << dir.string() << "\nplan ppm fnv1a64 " << hex << "\n";
  return 0;
}

int cmd_bench(const std::vector<int> & sizes, int frames, std::uint64_t seed, const std::string & inflation)
{
  mim::PipelineConfig pc;
  pc.mode = mim::inflation_mode_from_string(inflation);
  const auto resolved = mim::ResolvedPipeline::from(pc, mim::RobotProfile::turtlebot(), 255.0);
  std::printf("%8s %10s %10s %10s %10s %10s %10s\n", "points", "build", "classify", "fn", "inflate", "total", "p95");
  for (int size : sizes) {
    mim::PerceptionPipeline pipe(resolved);
    mim::SplitMix64 rng(mim::mix_seed(seed, static_cast<std::uint64_t>(size)));
    std::uniform_real_distribution<double> xy(-9.9, 9.9), z(-0.6, 0.6), inten(0.0, 255.0);
    std::vector<double> b, c, f, i, t;
    for (int k = 0; k < frames; ++k) {
      std::vector<mim::IntensityPoint> pts(static_cast<std::size_t>(size));
      for (auto & p : pts) {
        p = {xy(rng), xy(rng), z(rng), inten(rng)};
      }
      const auto out = pipe.process(pts, {0.05, 0.0, 0.0}, {10.0, 0.0});
      b.push_back(out.timing.build_ms);
      c.push_back(out.timing.classify_ms);
      f.push_back(out.timing.fn_ms);
      i.push_back(out.timing.inflate_ms);
      t.push_back(out.timing.total_ms);
    }
    auto mean = [](const std::vector<double> & v) {return mim::frame_latency(v).mean_ms;};
    std::printf("%8d %8.3fms %8.3fms %8.3fms %8.3fms %8.3fms %8.3fms\n", size, mean(b), mean(c), mean(f), mean(i), mean(t),
      mim::frame_latency(t).p95_ms);
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Multi-layer intensity map navigation simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto * run = app.add_subcommand("run", "run a batch of episodes on one scene");
  run_flags.add(run);

  CommonFlags export_flags;
  int export_frame = 20;
  auto * exp = app.add_subcommand("export", "write layer, plan and cloud files for one frame of episode 0");
  export_flags.add(exp);
  exp->add_option("--frame", export_frame, "frame index to export");

  std::vector<int> bench_sizes{0, 7500, 15000, 30000};
  int bench_frames = 50;
  std::uint64_t bench_seed = 1;
  std::string bench_inflation = "adaptive";
  auto * bench = app.add_subcommand("bench", "time the perception pipeline on random clouds");
  bench->add_option("--points", bench_sizes, "cloud sizes to sweep");
  bench->add_option("--frames", bench_frames, "frames per size");
  bench->add_option("--seed", bench_seed, "cloud seed");
  bench->add_option("--inflation", bench_inflation, "adaptive|uniform")->check(CLI::IsMember({"adaptive", "uniform"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(run_flags);
    }
    if (*exp) {
      return cmd_export(export_flags, export_frame);
    }
    if (*bench) {
      return cmd_bench(bench_sizes, bench_frames, bench_seed, bench_inflation);
    }
  } catch (const mim::SchemaError & e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
