// evsl: pattern generation, simulation, tagging, reconstruction and evaluation.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evsl/errors.hpp"
#include "evsl/io.hpp"
#include "evsl/pipeline.hpp"

using namespace evsl;

namespace {

struct SequenceFlags {
  std::optional<int> mode;
  std::optional<int> n;
  std::optional<int> line_width;
  std::optional<int> span_first;
  std::optional<int> span_last;
  std::optional<std::uint32_t> exposure_us;
  std::optional<double> blank_us;
  std::optional<double> total_us;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "Sequence mode (1-4)")->check(CLI::Range(1, 4));
    app->add_option("--n", n, "Depth patterns per channel block")->check(CLI::Range(1, 255));
    app->add_option("--line-width", line_width, "Line width in projector columns")
        ->check(CLI::PositiveNumber);
    app->add_option("--span-first", span_first, "First column of the line span");
    app->add_option("--span-last", span_last, "Last column of the line span");
    app->add_option("--exposure-us", exposure_us, "Base exposure")->check(CLI::PositiveNumber);
    app->add_option("--blank-us", blank_us, "Blank padding after each entry")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--total-us", total_us, "Target sequence duration (derives the blank)")
        ->check(CLI::PositiveNumber);
  }

  void apply(SequenceParams& p) const {
    if (mode) p.mode = *mode;
    if (n) p.n = *n;
    if (line_width) p.line_width = *line_width;
    if (span_first) p.span.first = *span_first;
    if (span_last) p.span.last = *span_last;
    if (exposure_us) p.exposure_us = *exposure_us;
    if (blank_us) {
      p.blank_us = *blank_us;
      p.total_us.reset();
    }
    if (total_us) p.total_us = *total_us;
  }
};

struct RunFlags {
  std::string config;
  std::string calibration;
  std::string scene;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> window_us;
  std::optional<int> k_max;
  std::optional<std::string> policy;
  SequenceFlags sequence;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app->add_option("--calibration", calibration, "Calibration file (JSON)")
        ->check(CLI::ExistingFile);
    app->add_option("--scene", scene, "Scene description (JSON)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--window-us", window_us, "Frame window (0: whole stream)");
    app->add_option("--k-max", k_max, "Events per fully lit pixel")->check(CLI::PositiveNumber);
    app->add_option("--policy", policy, "Depth combine policy")
        ->check(CLI::IsMember({"last", "mean", "median"}));
    sequence.add(app);
  }

  RunConfig resolve(const std::string& out) const {
    RunConfig c = config.empty() ? RunConfig{} : RunConfig::load(config);
    if (!calibration.empty()) c.calibration = calibration;
    if (!scene.empty()) c.scene = scene;
    if (seed) c.noise.seed = *seed;
    if (window_us) c.window_us = *window_us;
    if (k_max) c.simulation.k_max = *k_max;
    if (policy) c.policy = parse_policy(*policy);
    sequence.apply(c.sequence);
    if (!out.empty()) c.out = out;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-camera structured-light toolkit"};
  app.require_subcommand(1);
  std::string out;

  // patterns
  auto* patterns = app.add_subcommand("patterns", "Write a pattern sequence manifest and bitmaps");
  SequenceFlags pat_seq;
  bool diamond = false;
  pat_seq.add(patterns);
  patterns->add_flag("--diamond", diamond, "Also write diamond-compensated native bitmaps");
  patterns->add_option("--out", out, "Output directory")->required();

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Render an event stream for a scene");
  RunFlags sim_flags;
  bool sim_csv = false;
  sim_flags.add(simulate_cmd);
  simulate_cmd->add_flag("--csv", sim_csv, "Also write events.csv");
  simulate_cmd->add_option("--out", out, "Output directory")->required();

  // tag
  auto* tag_cmd = app.add_subcommand("tag", "Tag an event stream with depth and color");
  std::string events_path, manifest_path, tag_calib;
  std::optional<double> latency_mean, event_delay;
  bool tag_csv = false;
  tag_cmd->add_option("--events", events_path, "Event stream file")->required()
      ->check(CLI::ExistingFile);
  tag_cmd->add_option("--manifest", manifest_path, "Pattern manifest")->required()
      ->check(CLI::ExistingFile);
  tag_cmd->add_option("--calibration", tag_calib, "Calibration file")->check(CLI::ExistingFile);
  tag_cmd->add_option("--latency-mean", latency_mean, "Sensor latency used to pick the event delay");
  tag_cmd->add_option("--event-delay", event_delay, "Explicit event delay in us")
      ->excludes("--latency-mean");
  tag_cmd->add_flag("--csv", tag_csv, "Also write tagged.csv");
  tag_cmd->add_option("--out", out, "Output directory")->required();

  // reconstruct
  auto* recon_cmd = app.add_subcommand("reconstruct", "Build frames from tagged events");
  std::string tagged_path, recon_calib, recon_policy = "median";
  std::uint64_t recon_window = 0;
  int recon_kmax = 4;
  recon_cmd->add_option("--tagged", tagged_path, "Tagged event file")->required()
      ->check(CLI::ExistingFile);
  recon_cmd->add_option("--window-us", recon_window, "Frame window (0: whole stream)");
  recon_cmd->add_option("--policy", recon_policy, "Depth combine policy")
      ->check(CLI::IsMember({"last", "mean", "median"}));
  recon_cmd->add_option("--k-max", recon_kmax, "Events per fully lit pixel")
      ->check(CLI::PositiveNumber);
  recon_cmd->add_option("--calibration", recon_calib, "Calibration file")
      ->check(CLI::ExistingFile);
  recon_cmd->add_option("--out", out, "Output directory")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score frames against ground truth");
  std::string frames_dir, gt_dir;
  eval_cmd->add_option("--frames", frames_dir, "Frame directory")->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory")->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", out, "Write metrics.json and metrics.txt here");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end");
  RunFlags pipe_flags;
  pipe_flags.add(pipe_cmd);
  pipe_cmd->add_option("--out", out, "Output directory");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Write ground-truth depth and color frames");
  RunFlags oracle_flags;
  oracle_flags.add(oracle_cmd);
  oracle_cmd->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*patterns) {
      SequenceParams p;
      pat_seq.apply(p);
      const auto a = write_pattern_files(p, out, diamond);
      std::cout << "entries: " << a.sequence.entries.size() << "\n"
                << "bitmaps: " << a.bitmaps_written << "\n"
                << "coverage_percent: " << a.coverage.cp << "\n"
                << "duration_us: " << sequence_duration(a.sequence) << "\n"
                << "blank_us: " << a.sequence.blank_us << "\n";
    } else if (*simulate_cmd) {
      const auto c = sim_flags.resolve(out);
      const auto stream = simulate(c);
      io::write_events(c.out / "events.evt", stream);
      if (sim_csv) io::write_events_csv(c.out / "events.csv", stream);
      io::write_text(c.out / "manifest.json",
                     sequence_manifest_json(c.sequence, make_sequence(c.sequence)));
      io::write_text(c.out / "config.resolved.json", c.to_json());
      std::size_t on = 0, rising = 0;
      for (const auto& e : stream.events) on += e.polarity == Polarity::On;
      for (const auto& t : stream.triggers) rising += t.edge == Edge::Rising;
      std::cout << "events: " << stream.events.size() << "\n"
                << "on_events: " << on << "\n"
                << "triggers: " << stream.triggers.size() << "\n"
                << "rising_edges: " << rising << "\n";
    } else if (*tag_cmd) {
      const auto stream = io::read_events(events_path);
      const auto params = parse_manifest(io::read_text(manifest_path));
      const auto seq = make_sequence(params);
      TaggerConfig cfg;
      cfg.event_delay = event_delay ? *event_delay
                                    : recommended_event_delay(latency_mean.value_or(200.0),
                                                              seq.exposure_us);
      StreamTagger tagger(load_calibration_or_default(tag_calib), seq, cfg);
      auto result = tagger.run(stream);
      const io::TaggedFile tf{stream.width, stream.height, stream.start_time,
                              std::move(result.events)};
      io::write_tagged(fs::path(out) / "tagged.tag", tf);
      if (tag_csv) io::write_tagged_csv(fs::path(out) / "tagged.csv", tf);
      const auto text = stats_text(result.stats);
      io::write_text(fs::path(out) / "tag_stats.txt", text);
      std::cout << text;
    } else if (*recon_cmd) {
      const auto tagged = io::read_tagged(tagged_path);
      const auto sets = reconstruct_frames(tagged, recon_window, parse_policy(recon_policy),
                                           recon_kmax, load_calibration_or_default(recon_calib),
                                           out);
      std::cout << "frame_sets: " << sets.size() << "\n";
      for (std::size_t k = 0; k < sets.size(); ++k) {
        std::cout << "  " << k << ": [" << sets[k].window.t0 << ", " << sets[k].window.t1
                  << ") depth_pixels=" << sets[k].depth_pixels
                  << " color_pixels=" << sets[k].color_pixels << "\n";
      }
    } else if (*eval_cmd) {
      const auto ev = evaluate_dirs(frames_dir, gt_dir);
      if (!out.empty()) {
        io::write_text(fs::path(out) / "metrics.json", ev.to_json());
        io::write_text(fs::path(out) / "metrics.txt", ev.to_text());
      }
      std::cout << ev.to_text();
    } else if (*pipe_cmd) {
      const auto c = pipe_flags.resolve(out);
      std::cout << run_pipeline(c).to_text();
    } else if (*oracle_cmd) {
      const auto c = oracle_flags.resolve(out);
      write_oracle(c, c.out);
      io::write_text(c.out / "config.resolved.json", c.to_json());
      std::cout << "wrote " << (c.out / "depth_0000.png").string() << " and "
                << (c.out / "color_0000.png").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
