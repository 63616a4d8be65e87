#pragma once

#include <optional>
#include <string_view>

#include "bevgrid/projection.hpp"

namespace bevgrid {

enum class LabelStrategy {
  kMajority,  // most frequent neighbour label, ties to the lowest class id
  kMaxId,     // largest neighbour label id (plain max-pooling of the label channel)
};

std::string_view to_string(LabelStrategy s);
std::optional<LabelStrategy> parse_label_strategy(std::string_view s);

/// Iterative fill of nodata pixels from their masked neighbours.
///
/// Each iteration reads the previous buffer only: a nodata pixel with at least
/// one masked pixel in its kernel x kernel neighbourhood takes the channel-wise
/// max of those neighbours' rgb and alt, and a label chosen by `strategy`.
/// Pixels that already hold data are never modified. Filled pixels keep
/// winner_index == kNoWinner since no point projects onto them.
RasterSet complete(const RasterSet& raster, int iterations, int kernel,
                   LabelStrategy strategy = LabelStrategy::kMajority);

/// Number of iterations after which `complete` leaves no nodata pixel:
/// ceil(max Chebyshev distance to the nearest masked pixel / kernel radius).
/// Throws if the raster has no masked pixel.
int fixpoint_iterations(const RasterSet& raster, int kernel);

}  // namespace bevgrid
