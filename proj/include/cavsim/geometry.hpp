#ifndef CAVSIM_GEOMETRY_HPP
#define CAVSIM_GEOMETRY_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavsim/errors.hpp"

namespace cavsim {

/// One conflict point seen from a path: its id and the arc length from the
/// path's control-zone entry. Positions are scalar because the dynamics are
/// longitudinal-only; no 2-D geometry is modeled.
struct ConflictPoint {
  int conflict_id;
  double position;
};

struct PathDescriptor {
  int path_id;
  double length;
  std::vector<ConflictPoint> conflict_positions;  // strictly increasing, each in (0, length)
};

struct ConflictParticipant {
  int path_id;
  double position;
};

/// Validated intersection topology: paths plus the map from conflict id to
/// every (path, position) that passes through it. Immutable after load; safe
/// to share read-only across threads.
class IntersectionLayout {
 public:
  IntersectionLayout() = default;  // empty layout; populate via from_paths/load_layout

  static IntersectionLayout from_paths(std::vector<PathDescriptor> paths);

  const std::vector<PathDescriptor> &paths() const { return paths_; }
  const std::map<int, std::vector<ConflictParticipant>> &conflict_map() const {
    return conflict_map_;
  }

  bool has_path(int path_id) const;
  const PathDescriptor &path(int path_id) const;  // throws UnknownPath

 private:
  std::vector<PathDescriptor> paths_;
  std::map<int, std::vector<ConflictParticipant>> conflict_map_;
};

/// Parses a layout config section: either a built-in layout name (string) or
/// an object with a "paths" array. Throws LayoutError with the cause for
/// duplicate path ids, conflict positions outside (0, length), conflicts with
/// fewer than two participating paths, or non-monotone positions.
IntersectionLayout load_layout(const nlohmann::json &section);

nlohmann::json layout_to_json(const IntersectionLayout &layout);

/// Built-in "four-leg-12path" layout: 4 approaches x 3 movements, 100 m paths,
/// 3 conflict points per path at 40/50/60 m. Path i conflicts with paths
/// i+3, i+6 and i+9 (mod 12), i.e. with the same movement slot of the other
/// three approaches; the opposite-approach crossing sits at 50 m and the two
/// adjacent-approach crossings alternate between 40 m and 60 m.
IntersectionLayout builtin_layout(const std::string &name);

struct CrossingInfo {
  int conflict_id;
  double own_position;
  std::vector<ConflictParticipant> others;  // excludes the queried path
};

/// The conflicts a path passes through, in increasing position order, each
/// with the other paths sharing that physical point.
std::vector<CrossingInfo> conflicting_crossings(const IntersectionLayout &layout,
                                                int path_id);

}  // namespace cavsim

#endif  // CAVSIM_GEOMETRY_HPP
