#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evsl/geometry.hpp"
#include "evsl/io.hpp"
#include "evsl/metrics.hpp"
#include "evsl/patterns.hpp"
#include "evsl/recon.hpp"
#include "evsl/scene.hpp"
#include "evsl/simulator.hpp"
#include "evsl/tagger.hpp"

namespace evsl {

namespace fs = std::filesystem;

struct SequenceParams {
  int mode = 4;
  int n = 23;
  int line_width = 2;
  Span span{};
  std::uint32_t exposure_us = kDefaultExposureUs;
  double blank_us = 0.0;
  std::optional<double> total_us;  ///< when set, the blank is derived from it

  void validate() const;
};

PatternSequence make_sequence(const SequenceParams& params);

/// Pattern manifest document. `bitmap_names` may be empty.
std::string sequence_manifest_json(const SequenceParams& params, const PatternSequence& seq,
                                   const std::vector<std::string>& bitmap_names = {});
/// Reads the parameters back from a manifest.
SequenceParams parse_manifest(const std::string& json_text);

struct RunConfig {
  fs::path calibration;  ///< empty: built-in default rig
  fs::path scene;
  SequenceParams sequence;
  NoiseConfig noise;
  SimulationOptions simulation;
  TaggerConfig tagger;
  bool auto_event_delay = true;
  std::uint64_t window_us = 0;  ///< 0: one window over the whole stream
  CombinePolicy policy = CombinePolicy::Median;
  fs::path out = "out";

  /// Throws DataError when a referenced file is missing or a parameter is invalid.
  void validate() const;

  /// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
  static RunConfig from_json(const std::string& json_text, const fs::path& base_dir = {});
  static RunConfig load(const fs::path& path);
  std::string to_json() const;

  TaggerConfig effective_tagger() const;
};

CalibrationBundle load_calibration_or_default(const fs::path& path);

// ---- stages ----

struct PatternArtifacts {
  PatternSequence sequence;
  CoverageReport coverage;
  std::size_t bitmaps_written = 0;
};

/// manifest.json, entry_NNN.png per entry, coverage.txt; with `diamond` also
/// native/entry_NNN.png remapped for the diamond mirror array.
PatternArtifacts write_pattern_files(const SequenceParams& params, const fs::path& dir,
                                     bool diamond);

EventStream simulate(const RunConfig& config);

/// Rig, tables and state for one tagging run.
class StreamTagger {
 public:
  StreamTagger(const CalibrationBundle& calib, const PatternSequence& seq,
               const TaggerConfig& config);
  StreamTagger(const StreamTagger&) = delete;
  StreamTagger& operator=(const StreamTagger&) = delete;

  TagOutput run(const EventStream& stream);
  const Rectification& rectification() const { return rect_; }

 private:
  Rectification rect_;
  PatternSequence seq_;
  TaggerState state_;
};

/// Accepted events as a percentage of ON events (OFF events are never tagged).
double on_share(const RejectionStats& stats);
std::string stats_text(const RejectionStats& stats);

struct FrameSet {
  TimeWindow window;
  std::size_t depth_pixels = 0;
  std::size_t color_pixels = 0;
  std::size_t points = 0;
};

/// Writes depth_NNNN.png, color_NNNN.png, temporal_NNNN.png and cloud_NNNN.ply
/// per window plus frames.json. Windows start at the first tagged event; an
/// empty file yields no frame sets.
std::vector<FrameSet> reconstruct_frames(const io::TaggedFile& tagged, std::uint64_t window_us,
                                         CombinePolicy policy, int k_max,
                                         const CalibrationBundle& calib, const fs::path& dir);

/// Writes depth_0000.png (masked to the projector-reachable pixels of the
/// sequence) and color_0000.png.
void write_oracle(const RunConfig& config, const fs::path& dir);

struct Evaluation {
  std::vector<std::size_t> indices;
  std::vector<MetricsReport> frames;
  MetricsReport aggregate;

  std::string to_json() const;
  std::string to_text() const;
};

/// Pairs frames with ground truth by index. A ground-truth directory holding
/// a single frame serves every index. Throws DataError without pairs.
Evaluation evaluate_dirs(const fs::path& frames_dir, const fs::path& gt_dir);

struct PipelineSummary {
  std::size_t events = 0;
  std::size_t triggers = 0;
  RejectionStats stats;
  std::size_t frame_sets = 0;
  Evaluation evaluation;

  std::string to_text() const;
};

PipelineSummary run_pipeline(const RunConfig& config);

}  // namespace evsl
