#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <utility>

#include "evsl/errors.hpp"
#include "evsl/patterns.hpp"

using namespace evsl;

namespace {

// Small grid keeps the per-n sweeps cheap while leaving the column logic intact.
constexpr GridSize kThin{912, 4};

PatternSet lines(int n, GridSize grid = kThin) { return generate_line_pattern(n, 2, {56, 856}, grid); }

std::optional<PatternImage> solid(GridSize grid = kThin) { return solid_pattern({56, 856}, grid); }

}  // namespace

TEST(LinePattern, TwentyThreeLinesAreEquallySpaced) {
  const auto set = generate_line_pattern(23, 2, {56, 856}, {912, 1140});
  ASSERT_EQ(set.patterns.size(), 23u);
  ASSERT_EQ(set.columns.size(), 23u);
  for (int k = 0; k < 23; ++k) {
    const double expected = 56.0 + k * (800.0 / 22.0);
    EXPECT_NEAR(set.columns[k], expected, 0.5) << "line " << k;
    const auto& img = set.patterns[static_cast<std::size_t>(k)];
    EXPECT_EQ(img.on_pixel_count(), 2u * 1140u);
    const int left = static_cast<int>(set.columns[k] - 0.5);
    EXPECT_TRUE(img.at(left, 0));
    EXPECT_TRUE(img.at(left + 1, 1139));
    EXPECT_FALSE(img.at(left + 2, 500));
    EXPECT_FALSE(img.at(left - 1, 500));
  }
  EXPECT_DOUBLE_EQ(set.columns[0], 56.5);
  EXPECT_DOUBLE_EQ(set.columns[22], 856.5);
}

TEST(LinePattern, SingleLineSitsAtSpanCenter) {
  const auto set = generate_line_pattern(1, 2, {56, 856}, kThin);
  ASSERT_EQ(set.columns.size(), 1u);
  EXPECT_NEAR(set.columns[0], 456.0, 0.5);
  const auto odd = generate_line_pattern(1, 3, {56, 856}, kThin);
  EXPECT_DOUBLE_EQ(odd.columns[0], 456.0);
}

TEST(LinePattern, RejectsSpansWithoutUnitGaps) {
  EXPECT_THROW(generate_line_pattern(45, 2, {100, 189}, kThin), PatternError);
  EXPECT_THROW(generate_line_pattern(0, 2, {56, 856}, kThin), PatternError);
  EXPECT_THROW(generate_line_pattern(3, 2, {56, 950}, kThin), PatternError);
  EXPECT_NO_THROW(generate_line_pattern(45, 2, {56, 856}, kThin));
}

TEST(LinePattern, ColumnTablesStayIncreasingAndInBounds) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int width = std::uniform_int_distribution<int>(1, 4)(rng);
    const int first = std::uniform_int_distribution<int>(0, 400)(rng);
    const int last = std::uniform_int_distribution<int>(first, 911)(rng);
    const int n = std::uniform_int_distribution<int>(1, 80)(rng);
    PatternSet set;
    try {
      set = generate_line_pattern(n, width, {first, last}, kThin);
    } catch (const PatternError&) {
      continue;
    }
    EXPECT_NO_THROW(set.columns.validate(kThin.width));
    for (std::size_t i = 1; i < set.columns.size(); ++i) {
      EXPECT_GT(set.columns[i], set.columns[i - 1]);
    }
  }
}

TEST(DotPattern, CountsMatchConstruction) {
  const auto set = generate_dot_pattern(45, 60, 3, {56, 856}, {912, 1140});
  ASSERT_EQ(set.patterns.size(), 45u);
  EXPECT_EQ(set.columns.size(), 45u);
  for (const auto& p : set.patterns) {
    EXPECT_EQ(p.on_pixel_count(), 9u * 60u);
  }
  // Dots of one pattern share its column.
  const auto& p = set.patterns[10];
  const int center = static_cast<int>(set.columns[10]);
  for (int y = 0; y < 1140; ++y) {
    for (int x = 0; x < 912; ++x) {
      if (p.at(x, y)) {
        EXPECT_LE(std::abs(x - center), 1);
      }
    }
  }
}

TEST(DotPattern, SingleRowDegeneratesToOneDot) {
  const auto set = generate_dot_pattern(5, 1, 3, {56, 856}, {912, 60});
  for (const auto& p : set.patterns) {
    EXPECT_EQ(p.on_pixel_count(), 9u);
  }
  EXPECT_THROW(generate_dot_pattern(5, 40, 3, {56, 856}, {912, 60}), PatternError);
  EXPECT_THROW(generate_dot_pattern(5, 0, 3, {56, 856}, {912, 60}), PatternError);
}

TEST(Sequence, ModeOneIsIdThenRgb) {
  const auto seq = build_sequence(1, {}, solid());
  ASSERT_EQ(seq.entries.size(), 4u);
  EXPECT_EQ(seq.entries[0].role, Role::Id);
  EXPECT_EQ(seq.entries[0].exposure_us, 250u);
  const Channel expected[] = {Channel::R, Channel::G, Channel::B};
  for (int i = 1; i < 4; ++i) {
    EXPECT_EQ(seq.entries[i].role, Role::Color);
    EXPECT_EQ(seq.entries[i].channel, expected[i - 1]);
    EXPECT_EQ(seq.entries[i].exposure_us, 235u);
  }
  EXPECT_EQ(seq.pattern_of(seq.entries[0]).on_pixel_count(), 0u);
}

TEST(Sequence, ModeFourCyclesChannelBlocks) {
  const auto seq = build_sequence(4, lines(23), std::nullopt);
  ASSERT_EQ(seq.entries.size(), 70u);
  EXPECT_EQ(seq.entries[0].exposure_us, 280u);
  const Channel blocks[] = {Channel::R, Channel::G, Channel::B};
  for (int i = 1; i < 70; ++i) {
    const auto& e = seq.entries[static_cast<std::size_t>(i)];
    EXPECT_EQ(e.role, Role::Depth);
    EXPECT_EQ(e.channel, blocks[(i - 1) / 23]);
    EXPECT_EQ(e.column_index, (i - 1) % 23);
    EXPECT_EQ(e.exposure_us, 235u);
  }
}

TEST(Sequence, ModeTwoSingleLineTimeline) {
  const auto seq = build_sequence(2, lines(1), std::nullopt);
  ASSERT_EQ(seq.entries.size(), 2u);
  EXPECT_EQ(seq.entries[0].exposure_us, 260u);
  EXPECT_DOUBLE_EQ(sequence_span(seq), 495.0);
  EXPECT_DOUBLE_EQ(sequence_duration(seq), 470.0);
  const auto onsets = entry_onsets(seq);
  EXPECT_DOUBLE_EQ(onsets[1], 260.0);
}

TEST(Sequence, MissingInputsAreRejected) {
  EXPECT_THROW(build_sequence(3, {}, solid()), PatternError);
  EXPECT_THROW(build_sequence(4, {}, std::nullopt), PatternError);
  EXPECT_THROW(build_sequence(2, {}, std::nullopt), PatternError);
  EXPECT_THROW(build_sequence(1, {}, std::nullopt), PatternError);
  EXPECT_THROW(build_sequence(3, lines(5), std::nullopt), PatternError);
  EXPECT_THROW(build_sequence(5, lines(5), solid()), PatternError);
}

TEST(Sequence, StructureMatchesModeTablesForAllN) {
  for (int n = 1; n <= 64; ++n) {
    const auto depth = lines(n);
    for (int mode = 1; mode <= 4; ++mode) {
      const auto seq = build_sequence(mode, depth, solid());
      const auto again = build_sequence(mode, depth, solid());
      ASSERT_EQ(seq.entries.size(), again.entries.size());
      for (std::size_t i = 0; i < seq.entries.size(); ++i) {
        EXPECT_EQ(seq.entries[i].role, again.entries[i].role);
        EXPECT_EQ(seq.entries[i].pattern, again.entries[i].pattern);
      }
      const std::size_t expected = mode == 1 ? 4u
                                   : mode == 2 ? 1u + n
                                   : mode == 3 ? 4u + n
                                               : 1u + 3u * n;
      ASSERT_EQ(seq.entries.size(), expected) << "mode " << mode << " n " << n;
      EXPECT_EQ(seq.entries.front().role, Role::Id);
      EXPECT_EQ(seq.entries.front().exposure_us, kIdExposureUs[static_cast<std::size_t>(mode - 1)]);
      if (mode == 3) {
        for (int m = 0; m < n; ++m) {
          EXPECT_EQ(seq.entries[1 + m].column_index, m);
          EXPECT_EQ(seq.entries[1 + m].channel, Channel::None);
        }
        EXPECT_EQ(seq.entries[1 + n].channel, Channel::R);
        EXPECT_EQ(seq.entries[2 + n].channel, Channel::G);
        EXPECT_EQ(seq.entries[3 + n].channel, Channel::B);
      }
    }
  }
}

TEST(SequenceDuration, UnpaddedArithmetic) {
  EXPECT_DOUBLE_EQ(sequence_duration(build_sequence(4, lines(23), std::nullopt)), 16450.0);
  EXPECT_DOUBLE_EQ(sequence_duration(build_sequence(3, lines(45), solid())), 11515.0);
  EXPECT_DOUBLE_EQ(sequence_duration(build_sequence(3, lines(23), solid())), 6345.0);
}

TEST(SequenceDuration, LinearInNWithExposureSlope) {
  for (int n = 1; n < 40; ++n) {
    const double d2 = sequence_duration(build_sequence(2, lines(n + 1), std::nullopt)) -
                      sequence_duration(build_sequence(2, lines(n), std::nullopt));
    const double d4 = sequence_duration(build_sequence(4, lines(n + 1), std::nullopt)) -
                      sequence_duration(build_sequence(4, lines(n), std::nullopt));
    EXPECT_DOUBLE_EQ(d2, 235.0);
    EXPECT_DOUBLE_EQ(d4, 3.0 * 235.0);
  }
}

TEST(SequenceDuration, BlankPaddingReachesTarget) {
  auto seq = build_sequence(4, lines(23), std::nullopt);
  seq.blank_us = blank_for_total(seq, 17230.0);
  EXPECT_NEAR(sequence_duration(seq), 17230.0, 1e-9);
  EXPECT_THROW(blank_for_total(seq, 1000.0), PatternError);
}

TEST(Coverage, SolidPatternFillsItsSpan) {
  const GridSize grid{912, 20};
  const auto r = coverage_percentage({solid_pattern({56, 856}, grid)}, {56, 856});
  EXPECT_DOUBLE_EQ(r.cp, 100.0);
  EXPECT_EQ(r.active_span, 800);
}

TEST(Coverage, TwentyThreeLinesOverEightHundredColumns) {
  const auto set = generate_line_pattern(23, 2, {56, 856}, {912, 1140});
  const auto r = coverage_percentage(set.patterns, {56, 856});
  // 100 * (23 * 2 * 1140) / (800 * 1140)
  EXPECT_NEAR(r.cp, 5.75, 1e-12);

  const auto half = generate_line_pattern(23, 2, {56, 456}, {912, 1140});
  EXPECT_NEAR(coverage_percentage(half.patterns, {56, 456}).cp, 2.0 * r.cp, 1e-12);
}

TEST(Coverage, InvariantUnderVerticalTranslation) {
  const GridSize grid{912, 200};
  const auto set = generate_dot_pattern(20, 5, 3, {56, 856}, grid);
  std::vector<PatternImage> shifted;
  for (const auto& p : set.patterns) {
    PatternImage s(grid.width, grid.height);
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        if (p.at(x, y)) s.set(x, (y + 7) % grid.height);
      }
    }
    shifted.push_back(std::move(s));
  }
  EXPECT_DOUBLE_EQ(coverage_percentage(set.patterns, {56, 856}).cp,
                   coverage_percentage(shifted, {56, 856}).cp);
}

TEST(Coverage, Errors) {
  EXPECT_THROW(coverage_percentage({}, {56, 856}), PatternError);
  EXPECT_THROW(coverage_percentage({PatternImage(10, 10)}, {5, 5}), PatternError);
}

// ---------------------------------------------------------------------------
// Diamond display oracle: native cell (r, c) lights surface point
// (c + 0.5 (r mod 2), r / 2). The intended surface image of logical pixel
// (x, y) is its offset from the anchor rotated by 45 degrees and scaled by
// 1/sqrt(2): ((dx - dy) / 2, (dx + dy) / 2).
namespace {

using SurfacePoint = std::pair<double, double>;

std::set<SurfacePoint> render_native(const PatternImage& native, DiamondAnchor a) {
  std::set<SurfacePoint> pts;
  for (int r = 0; r < native.height(); ++r) {
    for (int c = 0; c < native.width(); ++c) {
      if (!native.at(c, r)) continue;
      const double sx = c + 0.5 * (r % 2);
      const double sy = r / 2.0;
      pts.insert({sx - a.x, sy - a.y / 2.0});
    }
  }
  return pts;
}

std::set<SurfacePoint> intended(const PatternImage& logical, DiamondAnchor a) {
  std::set<SurfacePoint> pts;
  for (int y = 0; y < logical.height(); ++y) {
    for (int x = 0; x < logical.width(); ++x) {
      if (!logical.at(x, y)) continue;
      const double dx = x - a.x;
      const double dy = y - a.y;
      pts.insert({(dx - dy) / 2.0, (dx + dy) / 2.0});
    }
  }
  return pts;
}

}  // namespace

TEST(Diamond, BlankStaysBlank) {
  const PatternImage blank(912, 1140);
  EXPECT_EQ(diamond_compensate(blank).on_pixel_count(), 0u);
}

TEST(Diamond, ThreeByThreeDotBecomesDiamondArrangement) {
  const GridSize grid{912, 1140};
  const auto a = diamond_anchor(grid);
  PatternImage dot(grid.width, grid.height);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      dot.set(a.x + dx, a.y + dy);
    }
  }
  const auto native = diamond_compensate(dot);
  EXPECT_EQ(native.on_pixel_count(), 9u);
  // Native rows relative to the anchor: 1, 2, 3, 2, 1 cells; odd rows are
  // offset by half a cell, so the lit cells form a rotated square.
  const std::set<std::pair<int, int>> expected{{-2, 0}, {-1, -1}, {-1, 0}, {0, -1}, {0, 0},
                                               {0, 1},  {1, -1},  {1, 0},  {2, 0}};
  std::set<std::pair<int, int>> got;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (native.at(c, r)) got.insert({r - a.y, c - a.x});
    }
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(render_native(native, a), intended(dot, a));
}

TEST(Diamond, CompensateThenRenderReproducesRandomSparsePatterns) {
  const GridSize grid{912, 1140};
  const auto a = diamond_anchor(grid);
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> ux(0, grid.width - 1);
  std::uniform_int_distribution<int> uy(0, grid.height - 1);
  for (int trial = 0; trial < 100; ++trial) {
    PatternImage logical(grid.width, grid.height);
    int placed = 0;
    while (placed < 200) {
      const int x = ux(rng);
      const int y = uy(rng);
      if (!diamond_representable(x, y, grid) || logical.at(x, y)) continue;
      logical.set(x, y);
      ++placed;
    }
    const auto native = diamond_compensate(logical);
    EXPECT_EQ(native.on_pixel_count(), logical.on_pixel_count());
    EXPECT_EQ(render_native(native, a), intended(logical, a)) << "trial " << trial;
  }
}
