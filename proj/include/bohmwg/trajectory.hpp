#pragma once

#include <string_view>
#include <vector>

namespace bohmwg {

enum class Termination { completed, left_domain, entered_masked_region };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::left_domain: return "left_domain";
    case Termination::entered_masked_region: return "entered_masked_region";
  }
  return "unknown";
}

struct TrajectorySample {
  double t;
  double x;
  double y;
};

/// Polyline of one Bohmian particle in the plane, stored in increasing time.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination termination = Termination::completed;
};

/// One-dimensional trajectory; t and y have equal length.
struct Trajectory1D {
  double seed = 0.0;
  std::vector<double> t;
  std::vector<double> y;
  Termination termination = Termination::completed;

  double final_position() const { return y.empty() ? seed : y.back(); }
};

}  // namespace bohmwg
