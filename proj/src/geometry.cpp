#include "cavsim/geometry.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace cavsim {

IntersectionLayout IntersectionLayout::from_paths(std::vector<PathDescriptor> paths) {
  IntersectionLayout layout;
  std::set<int> seen_ids;
  for (const auto &path : paths) {
    if (!seen_ids.insert(path.path_id).second)
      throw LayoutError("duplicate path_id " + std::to_string(path.path_id));
    if (!(path.length > 0.0))
      throw LayoutError("path " + std::to_string(path.path_id) +
                        " has non-positive length");
    double prev = 0.0;
    for (const auto &cp : path.conflict_positions) {
      if (!(cp.position > 0.0 && cp.position < path.length))
        throw LayoutError("path " + std::to_string(path.path_id) + " conflict " +
                          std::to_string(cp.conflict_id) + " position " +
                          std::to_string(cp.position) + " outside (0, " +
                          std::to_string(path.length) + ")");
      if (!(cp.position > prev))
        throw LayoutError("path " + std::to_string(path.path_id) +
                          " conflict positions not strictly increasing");
      prev = cp.position;
      layout.conflict_map_[cp.conflict_id].push_back(
          ConflictParticipant{path.path_id, cp.position});
    }
  }
  for (const auto &[conflict_id, participants] : layout.conflict_map_) {
    if (participants.size() < 2)
      throw LayoutError("conflict " + std::to_string(conflict_id) +
                        " involves fewer than two paths");
  }
  layout.paths_ = std::move(paths);
  return layout;
}

bool IntersectionLayout::has_path(int path_id) const {
  for (const auto &p : paths_)
    if (p.path_id == path_id) return true;
  return false;
}

const PathDescriptor &IntersectionLayout::path(int path_id) const {
  for (const auto &p : paths_)
    if (p.path_id == path_id) return p;
  throw UnknownPath("no path with id " + std::to_string(path_id));
}

IntersectionLayout load_layout(const nlohmann::json &section) {
  if (section.is_string()) return builtin_layout(section.get<std::string>());
  if (!section.is_object() || !section.contains("paths") ||
      !section["paths"].is_array())
    throw LayoutError("layout must be a built-in name or an object with a 'paths' array");

  std::vector<PathDescriptor> paths;
  for (const auto &jp : section["paths"]) {
    PathDescriptor path;
    if (!jp.contains("path_id") || !jp["path_id"].is_number_integer())
      throw LayoutError("every path needs an integer 'path_id'");
    if (!jp.contains("length") || !jp["length"].is_number())
      throw LayoutError("every path needs a numeric 'length'");
    path.path_id = jp["path_id"].get<int>();
    path.length = jp["length"].get<double>();
    if (jp.contains("conflicts")) {
      if (!jp["conflicts"].is_array())
        throw LayoutError("path " + std::to_string(path.path_id) +
                          ": 'conflicts' must be an array");
      for (const auto &jc : jp["conflicts"]) {
        if (!jc.contains("conflict_id") || !jc.contains("position"))
          throw LayoutError("path " + std::to_string(path.path_id) +
                            ": conflicts need 'conflict_id' and 'position'");
        path.conflict_positions.push_back(
            ConflictPoint{jc["conflict_id"].get<int>(), jc["position"].get<double>()});
      }
    }
    paths.push_back(std::move(path));
  }
  return IntersectionLayout::from_paths(std::move(paths));
}

nlohmann::json layout_to_json(const IntersectionLayout &layout) {
  nlohmann::json jpaths = nlohmann::json::array();
  for (const auto &path : layout.paths()) {
    nlohmann::json jconflicts = nlohmann::json::array();
    for (const auto &cp : path.conflict_positions)
      jconflicts.push_back({{"conflict_id", cp.conflict_id}, {"position", cp.position}});
    jpaths.push_back({{"path_id", path.path_id},
                      {"length", path.length},
                      {"conflicts", jconflicts}});
  }
  return nlohmann::json{{"paths", jpaths}};
}

IntersectionLayout builtin_layout(const std::string &name) {
  if (name != "four-leg-12path")
    throw LayoutError("unknown built-in layout '" + name + "'");

  constexpr int kPaths = 12;
  constexpr double kLength = 100.0;

  // Conflict ids 0..5: opposite-approach pairs {i, i+6} at 50 m.
  // Conflict ids 6..17: the three 4-cycles {c, c+3, c+6, c+9}, edges colored
  // alternately 40 m / 60 m so every path sees one 40 and one 60.
  std::vector<PathDescriptor> paths(kPaths);
  for (int i = 0; i < kPaths; ++i) {
    paths[i].path_id = i;
    paths[i].length = kLength;
  }
  const auto add = [&](int path_id, int conflict_id, double position) {
    paths[path_id].conflict_positions.push_back(ConflictPoint{conflict_id, position});
  };
  for (int i = 0; i < 6; ++i) {
    add(i, i, 50.0);
    add(i + 6, i, 50.0);
  }
  int next_id = 6;
  for (int c = 0; c < 3; ++c) {
    const int cycle[4] = {c, c + 3, c + 6, c + 9};
    for (int e = 0; e < 4; ++e) {
      const double pos = (e % 2 == 0) ? 40.0 : 60.0;
      add(cycle[e], next_id, pos);
      add(cycle[(e + 1) % 4], next_id, pos);
      ++next_id;
    }
  }
  for (auto &path : paths) {
    std::sort(path.conflict_positions.begin(), path.conflict_positions.end(),
              [](const ConflictPoint &a, const ConflictPoint &b) {
                return a.position < b.position;
              });
  }
  return IntersectionLayout::from_paths(std::move(paths));
}

std::vector<CrossingInfo> conflicting_crossings(const IntersectionLayout &layout,
                                                int path_id) {
  const PathDescriptor &path = layout.path(path_id);
  std::vector<CrossingInfo> crossings;
  for (const auto &cp : path.conflict_positions) {
    CrossingInfo info{cp.conflict_id, cp.position, {}};
    for (const auto &participant : layout.conflict_map().at(cp.conflict_id))
      if (participant.path_id != path_id) info.others.push_back(participant);
    crossings.push_back(std::move(info));
  }
  return crossings;
}

}  // namespace cavsim
