#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "evsl/geometry.hpp"
#include "evsl/patterns.hpp"
#include "evsl/simulator.hpp"

namespace evsl {

struct TaggerConfig {
  double tol_id = 5.0;  ///< us
  double min_depth = 200.0;
  double max_depth = 5000.0;
  /// Subtracted from event timestamps before they are matched to an entry window.
  double event_delay = 0.0;
};

/// Event delay that centers latency-shifted events inside their entry window.
double recommended_event_delay(double latency_mean, std::uint32_t exposure_us);

enum class ActiveRole : std::uint8_t { Idle, Id, Depth, Color };

struct LineEndpoints {
  PixelCoord top;     ///< LUT_p(column, H)
  PixelCoord bottom;  ///< LUT_p(column, 0)
  double slope = 0.0; ///< dx/dy of the rectified line
};

struct TaggerState {
  int mode = 0;  ///< 0 while unknown
  int m = 0;     ///< 1-based column index of the active depth entry
  Channel active_channel = Channel::None;
  ActiveRole active_role = ActiveRole::Idle;
  std::size_t cursor = 0;  ///< entry index within the current mode layout

  const RectifiedRig* rig = nullptr;
  const RectificationLut* lut = nullptr;
  ColumnTable columns;
  int n = 0;
  std::uint32_t exposure_us = kDefaultExposureUs;
  std::array<std::vector<EntrySlot>, 4> layouts;  ///< per mode 1..4
  std::vector<LineEndpoints> line_endpoints_cache;
  TaggerConfig config;
};

struct TaggedEvent {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint64_t t = 0;
  float depth = 0.0f;
  Channel channel = Channel::None;
  float disparity = 0.0f;
  std::uint16_t column = 0;  ///< 1-based column index, 0 when no depth

  bool operator==(const TaggedEvent&) const = default;
};

enum class Rejection : std::uint8_t {
  None,
  Idle,
  IdWindow,
  OffPolarity,
  OutOfBounds,
  NonPositiveDisparity,
  DepthGate,
};

enum class TriggerOutcome : std::uint8_t { IdMatched, Advanced, Desync, Ignored };

struct TagResult {
  TaggedEvent event;
  Rejection rejection = Rejection::None;

  bool accepted() const { return rejection == Rejection::None; }
};

struct RejectionStats {
  std::uint64_t accepted = 0;
  std::uint64_t idle = 0;
  std::uint64_t id_window = 0;
  std::uint64_t off_polarity = 0;
  std::uint64_t out_of_bounds = 0;
  std::uint64_t non_positive_disparity = 0;
  std::uint64_t depth_gate = 0;
  std::uint64_t desyncs = 0;

  std::uint64_t rejected() const {
    return idle + id_window + off_polarity + out_of_bounds + non_positive_disparity + depth_gate;
  }
  std::uint64_t total() const { return accepted + rejected(); }
  void count(Rejection r);
};

struct TagOutput {
  std::vector<TaggedEvent> events;
  RejectionStats stats;
};

/// Builds an IDLE state with the endpoint cache for every column. The rig and
/// lut must outlive the state. Throws RangeError for columns outside the projector.
TaggerState init_tagger(const RectifiedRig& rig, const RectificationLut& lut,
                        const PatternSequence& seq, const TaggerConfig& config = {});

/// Applies one rising/falling pair. An exposure within tol_id of an ID pulse
/// resets the mode; anything else advances the entry cursor, and an
/// unexpected exposure or an entry past the end desynchronizes to IDLE.
TriggerOutcome on_trigger(TaggerState& state, const TriggerRecord& rising,
                          const TriggerRecord& falling);

/// Tags one event under the current state. Never allocates.
TagResult tag_event(const TaggerState& state, const EventRecord& e);

/// Runs the state machine over a whole stream. Only accepted events are
/// returned, in input order. Throws DataError on unordered or unpaired input.
TagOutput process_stream(TaggerState& state, const EventStream& stream);

}  // namespace evsl
