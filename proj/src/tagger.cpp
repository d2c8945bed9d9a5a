#include "evsl/tagger.hpp"

#include <cmath>

#include "evsl/errors.hpp"

namespace evsl {

double recommended_event_delay(double latency_mean, std::uint32_t exposure_us) {
  return latency_mean - 0.5 * static_cast<double>(exposure_us);
}

void RejectionStats::count(Rejection r) {
  switch (r) {
    case Rejection::None: ++accepted; break;
    case Rejection::Idle: ++idle; break;
    case Rejection::IdWindow: ++id_window; break;
    case Rejection::OffPolarity: ++off_polarity; break;
    case Rejection::OutOfBounds: ++out_of_bounds; break;
    case Rejection::NonPositiveDisparity: ++non_positive_disparity; break;
    case Rejection::DepthGate: ++depth_gate; break;
  }
}

TaggerState init_tagger(const RectifiedRig& rig, const RectificationLut& lut,
                        const PatternSequence& seq, const TaggerConfig& config) {
  TaggerState state;
  state.rig = &rig;
  state.lut = &lut;
  state.columns = seq.columns;
  state.n = seq.n;
  state.exposure_us = seq.exposure_us;
  state.config = config;
  if (!(config.min_depth > 0.0 && config.max_depth > config.min_depth)) {
    throw DataError("depth gate must satisfy 0 < min_depth < max_depth");
  }

  const int w = lut.projector_width();
  const int h = lut.projector_height();
  state.line_endpoints_cache.reserve(seq.columns.size());
  for (double col : seq.columns.columns) {
    if (!(col >= 0.0 && col <= w)) throw RangeError("column outside projector bounds");
    LineEndpoints ends;
    ends.top = lut.projector({col, static_cast<double>(h)});
    ends.bottom = lut.projector({col, 0.0});
    const double dy = ends.bottom.y - ends.top.y;
    ends.slope = dy != 0.0 ? (ends.bottom.x - ends.top.x) / dy : 0.0;
    state.line_endpoints_cache.push_back(ends);
  }

  const int n = seq.n > 0 ? seq.n : static_cast<int>(seq.columns.size());
  for (int mode = 1; mode <= 4; ++mode) {
    if (mode == 1) {
      state.layouts[0] = mode_layout(1, 0);
    } else if (n > 0) {
      state.layouts[static_cast<std::size_t>(mode - 1)] = mode_layout(mode, n);
    }
  }
  return state;
}

namespace {

void go_idle(TaggerState& s) {
  s.active_role = ActiveRole::Idle;
  s.mode = 0;
  s.m = 0;
  s.cursor = 0;
  s.active_channel = Channel::None;
}

}  // namespace

TriggerOutcome on_trigger(TaggerState& state, const TriggerRecord& rising,
                          const TriggerRecord& falling) {
  if (rising.edge != Edge::Rising || falling.edge != Edge::Falling || falling.t < rising.t) {
    throw DataError("trigger edges are not paired");
  }
  const double exposure = static_cast<double>(falling.t - rising.t);

  for (int mode = 1; mode <= 4; ++mode) {
    if (std::abs(exposure - id_exposure_us(mode)) <= state.config.tol_id) {
      if (state.layouts[static_cast<std::size_t>(mode - 1)].empty()) {
        go_idle(state);
        return TriggerOutcome::Desync;
      }
      state.mode = mode;
      state.cursor = 0;
      state.m = 0;
      state.active_role = ActiveRole::Id;
      state.active_channel = Channel::None;
      return TriggerOutcome::IdMatched;
    }
  }

  if (state.mode == 0) return TriggerOutcome::Ignored;

  const auto& layout = state.layouts[static_cast<std::size_t>(state.mode - 1)];
  const std::size_t next = state.cursor + 1;
  if (std::abs(exposure - state.exposure_us) > state.config.tol_id || next >= layout.size()) {
    go_idle(state);
    return TriggerOutcome::Desync;
  }
  const EntrySlot& slot = layout[next];
  state.cursor = next;
  state.active_channel = slot.channel;
  if (slot.role == Role::Depth) {
    state.active_role = ActiveRole::Depth;
    state.m = slot.column_index + 1;
  } else {
    state.active_role = ActiveRole::Color;
    state.m = 0;
  }
  return TriggerOutcome::Advanced;
}

TagResult tag_event(const TaggerState& state, const EventRecord& e) {
  TagResult r;
  r.event.x = e.x;
  r.event.y = e.y;
  r.event.t = e.t;

  if (state.active_role == ActiveRole::Idle) {
    r.rejection = Rejection::Idle;
    return r;
  }
  if (state.active_role == ActiveRole::Id) {
    r.rejection = Rejection::IdWindow;
    return r;
  }
  if (e.polarity != Polarity::On) {
    r.rejection = Rejection::OffPolarity;
    return r;
  }
  const RectificationLut& lut = *state.lut;
  if (e.x >= lut.camera_width() || e.y >= lut.camera_height()) {
    r.rejection = Rejection::OutOfBounds;
    return r;
  }
  r.event.channel = state.active_channel;
  if (state.active_role == ActiveRole::Color) return r;

  const PixelCoord& pe = lut.camera_at(e.x, e.y);
  const LineEndpoints& line = state.line_endpoints_cache[static_cast<std::size_t>(state.m - 1)];
  const double x_pr = line.top.x + (pe.y - line.top.y) * line.slope;
  const double disparity = x_pr - pe.x;
  if (!(disparity > 0.0)) {
    r.rejection = Rejection::NonPositiveDisparity;
    return r;
  }
  const double depth = state.rig->focal * state.rig->baseline / disparity;
  if (depth < state.config.min_depth || depth > state.config.max_depth) {
    r.rejection = Rejection::DepthGate;
    return r;
  }
  r.event.depth = static_cast<float>(depth);
  r.event.disparity = static_cast<float>(disparity);
  r.event.column = static_cast<std::uint16_t>(state.m);
  return r;
}

TagOutput process_stream(TaggerState& state, const EventStream& stream) {
  const auto& trig = stream.triggers;
  if (trig.size() % 2 != 0) throw DataError("trigger list has an unpaired edge");
  for (std::size_t i = 0; i < trig.size(); ++i) {
    const Edge expected = i % 2 == 0 ? Edge::Rising : Edge::Falling;
    if (trig[i].edge != expected) throw DataError("trigger edges do not alternate");
    if (i > 0 && trig[i].t < trig[i - 1].t) throw DataError("triggers are not time-ordered");
  }
  for (std::size_t i = 1; i < stream.events.size(); ++i) {
    if (stream.events[i].t < stream.events[i - 1].t) {
      throw DataError("events are not time-ordered");
    }
  }

  TagOutput out;
  out.events.reserve(stream.events.size());
  std::size_t next_pair = 0;
  const double delay = state.config.event_delay;
  for (const auto& e : stream.events) {
    const double t = static_cast<double>(e.t) - delay;
    while (next_pair < trig.size() && static_cast<double>(trig[next_pair].t) <= t) {
      if (on_trigger(state, trig[next_pair], trig[next_pair + 1]) == TriggerOutcome::Desync) {
        ++out.stats.desyncs;
      }
      next_pair += 2;
    }
    const TagResult r = tag_event(state, e);
    out.stats.count(r.rejection);
    if (r.accepted()) out.events.push_back(r.event);
  }
  while (next_pair < trig.size()) {
    if (on_trigger(state, trig[next_pair], trig[next_pair + 1]) == TriggerOutcome::Desync) {
      ++out.stats.desyncs;
    }
    next_pair += 2;
  }
  return out;
}

}  // namespace evsl
