#pragma once

#include <optional>
#include <string>

#include "trackae/features.hpp"

namespace trackae {

// Two stacked panels (altitude, speed) overlaying the original series in red
// and the reconstruction in blue, with the MAE and threshold annotated.
std::string render_track_svg(const std::string& flight_id, const FeatureSeries& original,
                             const FeatureSeries& reconstruction, double mae,
                             std::optional<double> delta);

void write_track_svg(const std::string& path, const std::string& flight_id,
                     const FeatureSeries& original, const FeatureSeries& reconstruction,
                     double mae, std::optional<double> delta);

} // namespace trackae
