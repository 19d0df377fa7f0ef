#pragma once

#include "mos/residual.hpp"

namespace mos {

struct HeuristicParams {
  double tau = 0.1;         // residual threshold
  int min_votes = 1;        // channels that must exceed tau
  double free_space_margin = 0.3;  // meters
  double grow_tolerance = 0.5;     // meters between 4-neighbors
  int min_region = 10;             // pixels

  void validate() const;
};

/// Residual thresholding: a valid pixel is moving iff at least min_votes
/// residual channels exceed tau. Invalid pixels are Ignore.
Grid<MovingLabel> segment_residual(const RangeImage& image,
                                   const ResidualStack& stack,
                                   const HeuristicParams& params);

/// Keeps a seed only where the most recent reprojected past range shows
/// free space behind the current return: r_past > r_cur + margin. Seeds
/// without a valid past range are dropped.
Grid<MovingLabel> free_space_filter(const RangeImage& image,
                                    const Grid<float>& past_ranges,
                                    const Grid<MovingLabel>& seeds,
                                    const HeuristicParams& params);

/// Flood fill from the surviving seeds over valid pixels, 4-connected with
/// azimuth wrap, joining neighbors within grow_tolerance of each other's
/// range. Components smaller than min_region are discarded.
Grid<MovingLabel> region_grow(const RangeImage& image,
                              const Grid<MovingLabel>& seeds,
                              const HeuristicParams& params);

/// Residual seeds -> free-space filter -> region growing.
Grid<MovingLabel> segment_residual_rg(const RangeImage& image,
                                      const ResidualStack& stack,
                                      const HeuristicParams& params);

}  // namespace mos
