#pragma once

namespace tnd {

/// Attributes of a transit path that adoption models may condition on.
struct PathFeatures {
  double total_minutes = 0.0;  // walk + in-vehicle + padding
  int transfers = 0;
  double walk_minutes = 0.0;
  double in_vehicle_minutes = 0.0;

  bool operator==(const PathFeatures&) const = default;
};

}  // namespace tnd
