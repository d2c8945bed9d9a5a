#include "evsl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "evsl/errors.hpp"

namespace evsl {

namespace {

using json = nlohmann::json;

std::string indexed(const char* stem, std::size_t index, int digits, const char* ext) {
  std::ostringstream os;
  os << stem << '_' << std::setw(digits) << std::setfill('0') << index << ext;
  return os.str();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) ==
        keys.end()) {
      throw FormatError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json params_json(const SequenceParams& p) {
  json j{{"mode", p.mode},
         {"n", p.n},
         {"line_width", p.line_width},
         {"span", {p.span.first, p.span.last}},
         {"exposure_us", p.exposure_us},
         {"blank_us", p.blank_us}};
  if (p.total_us) j["total_us"] = *p.total_us;
  return j;
}

SequenceParams params_from_json(const json& j) {
  reject_unknown(j, {"mode", "n", "line_width", "span", "exposure_us", "blank_us", "total_us"},
                 "sequence");
  SequenceParams p;
  read_opt(j, "mode", p.mode);
  read_opt(j, "n", p.n);
  read_opt(j, "line_width", p.line_width);
  if (j.contains("span")) {
    const auto s = j.at("span").get<std::vector<int>>();
    if (s.size() != 2) throw FormatError("sequence: span needs [first, last]");
    p.span = {s[0], s[1]};
  }
  read_opt(j, "exposure_us", p.exposure_us);
  read_opt(j, "blank_us", p.blank_us);
  if (j.contains("total_us")) p.total_us = j.at("total_us").get<double>();
  return p;
}

/// Sorted (index, path) pairs for files named <stem>_NNNN.png in `dir`.
std::map<std::size_t, fs::path> indexed_files(const fs::path& dir, const std::string& stem) {
  std::map<std::size_t, fs::path> out;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  const std::regex re(stem + "_([0-9]+)\\.png");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, re)) out[std::stoul(m[1].str())] = entry.path();
  }
  return out;
}

}  // namespace

// ---- sequence ----

void SequenceParams::validate() const {
  if (mode < 1 || mode > 4) throw PatternError("sequence mode must be 1..4");
  if (mode != 1 && n < 1) throw PatternError("sequence needs n >= 1 depth patterns");
  if (line_width < 1) throw PatternError("line width must be positive");
  if (exposure_us == 0) throw PatternError("exposure must be positive");
  if (!(blank_us >= 0.0)) throw PatternError("blank must be non-negative");
  if (total_us && !(*total_us > 0.0)) throw PatternError("total duration must be positive");
}

PatternSequence make_sequence(const SequenceParams& p) {
  p.validate();
  const auto depth = p.mode != 1 ? generate_line_pattern(p.n, p.line_width, p.span) : PatternSet{};
  std::optional<PatternImage> color;
  if (p.mode == 1 || p.mode == 3) color = solid_pattern(p.span);
  auto seq = build_sequence(p.mode, depth, color, p.exposure_us, 0.0);
  const double blank = p.total_us ? blank_for_total(seq, *p.total_us) : p.blank_us;
  return build_sequence(p.mode, depth, color, p.exposure_us, blank);
}

std::string sequence_manifest_json(const SequenceParams& params, const PatternSequence& seq,
                                   const std::vector<std::string>& bitmap_names) {
  json j;
  j["format"] = "evsl-sequence";
  j["version"] = 1;
  j["params"] = params_json(params);
  j["resolved_blank_us"] = seq.blank_us;
  j["duration_us"] = sequence_duration(seq);
  j["span_us"] = sequence_span(seq);
  j["columns"] = seq.columns.columns;
  std::vector<PatternImage> depth;
  for (const auto& e : seq.entries) {
    if (e.role == Role::Depth) depth.push_back(seq.pattern_of(e));
  }
  j["coverage_percent"] = depth.empty() ? 0.0 : coverage_percentage(depth, params.span).cp;
  const auto onsets = entry_onsets(seq);
  json entries = json::array();
  for (std::size_t i = 0; i < seq.entries.size(); ++i) {
    const auto& e = seq.entries[i];
    json je{{"index", i},
            {"role", std::string(to_string(e.role))},
            {"channel", std::string(to_string(e.channel))},
            {"column", e.column_index >= 0 ? json(e.column_index + 1) : json(nullptr)},
            {"exposure_us", e.exposure_us},
            {"onset_us", onsets[i]}};
    if (i < bitmap_names.size()) je["bitmap"] = bitmap_names[i];
    entries.push_back(je);
  }
  j["entries"] = entries;
  return j.dump(2);
}

SequenceParams parse_manifest(const std::string& json_text) {
  try {
    const auto j = json::parse(json_text);
    if (j.value("format", "") != "evsl-sequence") throw FormatError("not a sequence manifest");
    if (j.value("version", 0) != 1) throw FormatError("unsupported manifest version");
    auto p = params_from_json(j.at("params"));
    if (j.contains("entries") && make_sequence(p).entries.size() != j.at("entries").size()) {
      throw FormatError("manifest entry count does not match its parameters");
    }
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

// ---- config ----

void RunConfig::validate() const {
  if (!calibration.empty() && !fs::exists(calibration)) {
    throw DataError("calibration file not found: " + calibration.string());
  }
  if (scene.empty()) throw DataError("config needs a scene file");
  if (!fs::exists(scene)) throw DataError("scene file not found: " + scene.string());
  sequence.validate();
  noise.validate();
  if (simulation.k_max < 1) throw DataError("k_max must be positive");
  if (simulation.repetitions < 1) throw DataError("repetitions must be positive");
  if (simulation.subsamples < 1) throw DataError("subsamples must be positive");
  if (!(simulation.coverage_threshold > 0.0 && simulation.coverage_threshold <= 1.0)) {
    throw DataError("coverage threshold must lie in (0, 1]");
  }
  if (!(tagger.min_depth < tagger.max_depth)) throw DataError("depth gate is empty");
  if (out.empty()) throw DataError("config needs an output directory");
}

RunConfig RunConfig::from_json(const std::string& json_text, const fs::path& base_dir) {
  RunConfig c;
  const auto resolve = [&](const std::string& s) {
    const fs::path p(s);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  try {
    const auto j = json::parse(json_text);
    reject_unknown(j,
                   {"calibration", "scene", "sequence", "noise", "simulation", "tagger",
                    "window_us", "policy", "out", "seed"},
                   "config");
    if (j.contains("calibration")) c.calibration = resolve(j.at("calibration").get<std::string>());
    if (j.contains("scene")) c.scene = resolve(j.at("scene").get<std::string>());
    if (j.contains("out")) c.out = resolve(j.at("out").get<std::string>());
    if (j.contains("sequence")) c.sequence = params_from_json(j.at("sequence"));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      reject_unknown(n,
                     {"background_rate", "latency_mean", "latency_jitter", "drop_probability",
                      "bus_cap"},
                     "noise");
      read_opt(n, "background_rate", c.noise.background_rate);
      read_opt(n, "latency_mean", c.noise.latency_mean);
      read_opt(n, "latency_jitter", c.noise.latency_jitter);
      read_opt(n, "drop_probability", c.noise.drop_probability);
      read_opt(n, "bus_cap", c.noise.bus_cap);
    }
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      reject_unknown(s,
                     {"k_max", "repetitions", "start_time", "emit_off", "subsamples",
                      "coverage_threshold"},
                     "simulation");
      read_opt(s, "k_max", c.simulation.k_max);
      read_opt(s, "repetitions", c.simulation.repetitions);
      read_opt(s, "start_time", c.simulation.start_time);
      read_opt(s, "emit_off", c.simulation.emit_off);
      read_opt(s, "subsamples", c.simulation.subsamples);
      read_opt(s, "coverage_threshold", c.simulation.coverage_threshold);
    }
    if (j.contains("tagger")) {
      const auto& t = j.at("tagger");
      reject_unknown(t, {"tol_id", "min_depth", "max_depth", "event_delay"}, "tagger");
      read_opt(t, "tol_id", c.tagger.tol_id);
      read_opt(t, "min_depth", c.tagger.min_depth);
      read_opt(t, "max_depth", c.tagger.max_depth);
      if (t.contains("event_delay") && !t.at("event_delay").is_null()) {
        c.tagger.event_delay = t.at("event_delay").get<double>();
        c.auto_event_delay = false;
      }
    }
    read_opt(j, "window_us", c.window_us);
    if (j.contains("policy")) c.policy = parse_policy(j.at("policy").get<std::string>());
    read_opt(j, "seed", c.noise.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(io::read_text(path), path.parent_path());
}

std::string RunConfig::to_json() const {
  const auto abs = [](const fs::path& p) {
    return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
  };
  json j;
  j["calibration"] = abs(calibration);
  j["scene"] = abs(scene);
  j["out"] = abs(out);
  j["sequence"] = params_json(sequence);
  j["noise"] = {{"background_rate", noise.background_rate},
                {"latency_mean", noise.latency_mean},
                {"latency_jitter", noise.latency_jitter},
                {"drop_probability", noise.drop_probability},
                {"bus_cap", noise.bus_cap}};
  j["simulation"] = {{"k_max", simulation.k_max},
                     {"repetitions", simulation.repetitions},
                     {"start_time", simulation.start_time},
                     {"emit_off", simulation.emit_off},
                     {"subsamples", simulation.subsamples},
                     {"coverage_threshold", simulation.coverage_threshold}};
  const auto t = effective_tagger();
  j["tagger"] = {{"tol_id", t.tol_id},
                 {"min_depth", t.min_depth},
                 {"max_depth", t.max_depth},
                 {"event_delay", t.event_delay}};
  j["window_us"] = window_us;
  j["policy"] = std::string(to_string(policy));
  j["seed"] = noise.seed;
  if (calibration.empty()) j.erase("calibration");
  return j.dump(2);
}

TaggerConfig RunConfig::effective_tagger() const {
  auto t = tagger;
  if (auto_event_delay) {
    t.event_delay = recommended_event_delay(noise.latency_mean, sequence.exposure_us);
  }
  return t;
}

CalibrationBundle load_calibration_or_default(const fs::path& path) {
  return path.empty() ? CalibrationBundle{} : io::load_calibration(path);
}

// ---- stages ----

PatternArtifacts write_pattern_files(const SequenceParams& params, const fs::path& dir,
                                     bool diamond) {
  PatternArtifacts a;
  a.sequence = make_sequence(params);
  const auto& seq = a.sequence;
  fs::create_directories(dir);
  if (diamond) fs::create_directories(dir / "native");

  std::vector<PatternImage> native(seq.patterns.size());
  std::vector<std::string> names;
  std::vector<PatternImage> depth;
  for (std::size_t i = 0; i < seq.entries.size(); ++i) {
    const auto& e = seq.entries[i];
    const auto& img = seq.pattern_of(e);
    if (e.role == Role::Depth) depth.push_back(img);
    names.push_back(indexed("entry", i, 3, ".png"));
    io::write_pattern_png(dir / names.back(), img);
    ++a.bitmaps_written;
    if (diamond) {
      if (native[e.pattern].width() == 0) native[e.pattern] = diamond_compensate(img);
      io::write_pattern_png(dir / "native" / names.back(), native[e.pattern]);
      ++a.bitmaps_written;
    }
  }
  if (!depth.empty()) a.coverage = coverage_percentage(depth, params.span);

  io::write_text(dir / "manifest.json", sequence_manifest_json(params, seq, names));
  std::ostringstream cp;
  cp << "entries: " << seq.entries.size() << "\n"
     << "depth_patterns: " << depth.size() << "\n"
     << "coverage_percent: " << a.coverage.cp << "\n"
     << "active_span: " << a.coverage.active_span << "\n"
     << "duration_us: " << sequence_duration(seq) << "\n"
     << "span_us: " << sequence_span(seq) << "\n"
     << "blank_us: " << seq.blank_us << "\n";
  io::write_text(dir / "coverage.txt", cp.str());
  return a;
}

EventStream simulate(const RunConfig& config) {
  config.validate();
  const auto calib = load_calibration_or_default(config.calibration);
  const auto scene = load_scene(config.scene);
  const auto seq = make_sequence(config.sequence);
  return render_events(scene, calib, seq, config.noise, config.simulation);
}

StreamTagger::StreamTagger(const CalibrationBundle& calib, const PatternSequence& seq,
                           const TaggerConfig& config)
    : rect_(build_rectification(calib.camera, calib.projector, calib.extrinsics)), seq_(seq) {
  state_ = init_tagger(rect_.rig, rect_.lut, seq_, config);
}

TagOutput StreamTagger::run(const EventStream& stream) {
  if (stream.width != rect_.lut.camera_width() || stream.height != rect_.lut.camera_height()) {
    throw DataError("stream size does not match the calibrated camera");
  }
  return process_stream(state_, stream);
}

double on_share(const RejectionStats& s) {
  const auto on = s.total() - s.off_polarity;
  return on > 0 ? 100.0 * static_cast<double>(s.accepted) / static_cast<double>(on) : 0.0;
}

std::string stats_text(const RejectionStats& s) {
  const double total = static_cast<double>(s.total());
  const auto pct = [&](std::uint64_t v) { return total > 0 ? 100.0 * v / total : 0.0; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "events: " << s.total() << "\n"
     << "accepted: " << s.accepted << " (" << pct(s.accepted) << "%)\n"
     << "accepted_of_on: " << on_share(s) << "%\n"
     << "rejected: " << s.rejected() << " (" << (total > 0 ? pct(s.rejected()) : 100.0) << "%)\n"
     << "  idle: " << s.idle << "\n"
     << "  id_window: " << s.id_window << "\n"
     << "  off_polarity: " << s.off_polarity << "\n"
     << "  out_of_bounds: " << s.out_of_bounds << "\n"
     << "  non_positive_disparity: " << s.non_positive_disparity << "\n"
     << "  depth_gate: " << s.depth_gate << "\n"
     << "desyncs: " << s.desyncs << "\n";
  return os.str();
}

std::vector<FrameSet> reconstruct_frames(const io::TaggedFile& tagged, std::uint64_t window_us,
                                         CombinePolicy policy, int k_max,
                                         const CalibrationBundle& calib, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<FrameSet> sets;
  json frames = json::array();
  if (!tagged.events.empty()) {
    if (tagged.width != calib.camera.width || tagged.height != calib.camera.height) {
      throw DataError("tagged file size does not match the calibrated camera");
    }
    const auto rect = build_rectification(calib.camera, calib.projector, calib.extrinsics);
    const std::uint64_t start = tagged.events.front().t;
    const std::uint64_t end = tagged.events.back().t;
    const std::uint64_t w = window_us > 0 ? window_us : end - start + 1;
    int max_column = 1;
    for (const auto& e : tagged.events) max_column = std::max<int>(max_column, e.column);
    max_column = std::min(max_column, 255);

    const auto windows = frame_windows(start, end, w);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const auto& win = windows[k];
      const auto depth = accumulate_depth(tagged.events, win, policy, tagged.width, tagged.height);
      const auto color = accumulate_color(tagged.events, win, k_max, tagged.width, tagged.height);
      const auto tmap = temporal_map(tagged.events, win, tagged.width, tagged.height);
      const auto cloud = build_point_cloud(depth, color, rect.rig, calib.camera);
      io::write_depth_png(dir / indexed("depth", k, 4, ".png"), depth);
      io::write_color_png(dir / indexed("color", k, 4, ".png"), color);
      io::write_temporal_png(dir / indexed("temporal", k, 4, ".png"), tmap, max_column);
      io::write_ply(dir / indexed("cloud", k, 4, ".ply"), cloud);
      FrameSet fs{win, depth.data_pixel_count(), color.valid_pixel_count(), cloud.points.size()};
      sets.push_back(fs);
      frames.push_back({{"index", k},
                        {"t0", win.t0},
                        {"t1", win.t1},
                        {"depth_pixels", fs.depth_pixels},
                        {"color_pixels", fs.color_pixels},
                        {"points", fs.points}});
    }
  }
  io::write_text(dir / "frames.json", json{{"window_us", window_us}, {"frames", frames}}.dump(2));
  return sets;
}

void write_oracle(const RunConfig& config, const fs::path& dir) {
  config.validate();
  const auto calib = load_calibration_or_default(config.calibration);
  const auto scene = load_scene(config.scene);
  const auto seq = make_sequence(config.sequence);
  const auto rect = build_rectification(calib.camera, calib.projector, calib.extrinsics);
  const auto illum = compute_illumination(scene, calib.camera, calib.projector, calib.extrinsics,
                                          config.simulation.subsamples);
  auto depth = ground_truth_depth(scene, calib.camera, rect.rig.depth_axis());
  bool has_depth = false;
  for (const auto& e : seq.entries) has_depth = has_depth || e.role == Role::Depth;
  if (has_depth) {
    depth = masked(depth, depth_support(illum, seq, config.simulation.coverage_threshold));
  }
  fs::create_directories(dir);
  io::write_depth_png(dir / "depth_0000.png", depth);
  io::write_color_png(dir / "color_0000.png", ground_truth_color(scene, calib.camera, config.simulation.k_max));
}

// ---- evaluation ----

std::string Evaluation::to_json() const {
  json j;
  json arr = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    auto r = json::parse(frames[i].to_json());
    r["index"] = indices[i];
    arr.push_back(r);
  }
  j["frames"] = arr;
  j["aggregate"] = json::parse(aggregate.to_json());
  return j.dump(2);
}

std::string Evaluation::to_text() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    os << "[frame " << indices[i] << "]\n" << frames[i].to_text();
  }
  os << "[aggregate]\n" << aggregate.to_text();
  return os.str();
}

Evaluation evaluate_dirs(const fs::path& frames_dir, const fs::path& gt_dir) {
  const auto frames = indexed_files(frames_dir, "depth");
  const auto gts = indexed_files(gt_dir, "depth");
  const auto frame_colors = indexed_files(frames_dir, "color");
  const auto gt_colors = indexed_files(gt_dir, "color");

  std::uint64_t window = 0;
  if (fs::exists(frames_dir / "frames.json")) {
    window = json::parse(io::read_text(frames_dir / "frames.json")).value("window_us", 0ull);
  }

  const auto lookup = [](const std::map<std::size_t, fs::path>& m,
                         std::size_t k) -> std::optional<fs::path> {
    if (auto it = m.find(k); it != m.end()) return it->second;
    if (m.size() == 1) return m.begin()->second;
    return std::nullopt;
  };

  Evaluation ev;
  double fr_sum = 0.0, sq_sum = 0.0, color_sq = 0.0;
  std::size_t overlap = 0, color_pixels = 0;
  bool any_color = false;
  for (const auto& [k, path] : frames) {
    const auto gt_path = lookup(gts, k);
    if (!gt_path) continue;
    const auto frame = io::read_depth_png(path);
    const auto gt = io::read_depth_png(*gt_path);
    if (frame.width != gt.width || frame.height != gt.height) {
      throw DataError("frame " + std::to_string(k) + " and its ground truth differ in size");
    }
    auto r = evaluate_depth(frame, gt);
    r.window = window;
    r.psnr = std::numeric_limits<double>::quiet_NaN();
    const auto fc = frame_colors.find(k);
    const auto gc = lookup(gt_colors, k);
    if (fc != frame_colors.end() && gc) {
      const auto c = io::read_color_png(fc->second);
      const auto g = io::read_color_png(*gc);
      if (c.width != g.width || c.height != g.height) {
        throw DataError("color frame " + std::to_string(k) + " and its ground truth differ in size");
      }
      std::size_t n = 0;
      for (std::size_t i = 0; i < c.mask.size(); ++i) n += c.mask[i] && g.mask[i];
      if (n > 0) {
        const double cr = color_rmse(c, g);
        r.psnr = psnr(c, g);
        color_sq += cr * cr * static_cast<double>(n);
        color_pixels += n;
        any_color = true;
      }
    }
    fr_sum += r.fill_rate;
    sq_sum += r.rmse * r.rmse * static_cast<double>(r.pixel_count_evaluated);
    overlap += r.pixel_count_evaluated;
    ev.indices.push_back(k);
    ev.frames.push_back(r);
  }
  if (ev.frames.empty()) {
    throw DataError("no frame/ground-truth pairs between " + frames_dir.string() + " and " +
                    gt_dir.string());
  }
  auto& a = ev.aggregate;
  a.fill_rate = fr_sum / static_cast<double>(ev.frames.size());
  a.pixel_count_evaluated = overlap;
  a.rmse = overlap > 0 ? std::sqrt(sq_sum / static_cast<double>(overlap)) : 0.0;
  a.window = window;
  if (any_color) {
    const double cr = std::sqrt(color_sq / static_cast<double>(color_pixels));
    a.psnr = cr == 0.0 ? std::numeric_limits<double>::infinity() : 20.0 * std::log10(255.0 / cr);
  } else {
    a.psnr = std::numeric_limits<double>::quiet_NaN();
  }
  return ev;
}

// ---- pipeline ----

std::string PipelineSummary::to_text() const {
  const double total = static_cast<double>(stats.total());
  std::ostringstream os;
  os << "events: " << events << "\n"
     << "triggers: " << triggers << "\n"
     << "tagged: " << stats.accepted << "\n"
     << "tagged_percent: " << std::fixed << std::setprecision(2)
     << (total > 0 ? 100.0 * stats.accepted / total : 0.0) << "\n"
     << "tagged_percent_of_on: " << on_share(stats) << "\n"
     << std::defaultfloat << "desyncs: " << stats.desyncs << "\n"
     << "frame_sets: " << frame_sets << "\n"
     << evaluation.aggregate.to_text();
  return os.str();
}

PipelineSummary run_pipeline(const RunConfig& config) {
  config.validate();
  const auto& out = config.out;
  fs::create_directories(out);
  io::write_text(out / "config.resolved.json", config.to_json());

  const auto calib = load_calibration_or_default(config.calibration);
  const auto artifacts = write_pattern_files(config.sequence, out / "patterns", false);

  const auto stream = simulate(config);
  io::write_events(out / "events.evt", stream);

  StreamTagger tagger(calib, artifacts.sequence, config.effective_tagger());
  auto tagged = tagger.run(stream);
  io::TaggedFile tf{stream.width, stream.height, stream.start_time, std::move(tagged.events)};
  io::write_tagged(out / "tagged.tag", tf);
  io::write_text(out / "tag_stats.txt", stats_text(tagged.stats));

  const auto sets = reconstruct_frames(tf, config.window_us, config.policy,
                                       config.simulation.k_max, calib, out / "frames");
  write_oracle(config, out / "gt");

  PipelineSummary s;
  s.events = stream.events.size();
  s.triggers = stream.triggers.size();
  s.stats = tagged.stats;
  s.frame_sets = sets.size();
  if (!sets.empty()) {
    s.evaluation = evaluate_dirs(out / "frames", out / "gt");
    io::write_text(out / "metrics.json", s.evaluation.to_json());
    io::write_text(out / "metrics.txt", s.evaluation.to_text());
  }
  io::write_text(out / "summary.txt", s.to_text());
  return s;
}

}  // namespace evsl
