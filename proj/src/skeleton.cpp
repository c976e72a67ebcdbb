#include "ego3d/skeleton.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

std::vector<Limb> tree_limbs(const std::vector<int>& parents) {
  std::vector<Limb> limbs;
  for (int j = 0; j < static_cast<int>(parents.size()); ++j) {
    if (parents[j] >= 0) limbs.push_back({parents[j], j});
  }
  return limbs;
}

template <typename T>
T field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw FormatError(std::string("skeleton: missing field '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("skeleton: bad field '") + key + "': " + e.what());
  }
}

std::vector<Limb> limbs_from(const std::vector<std::array<int, 2>>& pairs) {
  std::vector<Limb> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p[0], p[1]});
  return out;
}

}  // namespace

Skeleton::Skeleton(std::string name, std::vector<std::string> joint_names,
                   std::vector<int> parent_index, std::vector<int> origin_joints,
                   std::vector<int> estimated_joints, std::vector<Limb> peh_limbs,
                   std::vector<Limb> all_limbs)
    : name_(std::move(name)),
      joint_names_(std::move(joint_names)),
      parent_index_(std::move(parent_index)),
      origin_joints_(std::move(origin_joints)),
      estimated_joints_(std::move(estimated_joints)),
      peh_limbs_(std::move(peh_limbs)),
      all_limbs_(std::move(all_limbs)) {
  validate();
}

void Skeleton::validate() const {
  const int n = num_joints();
  if (n == 0) throw FormatError("skeleton '" + name_ + "': no joints");
  if (static_cast<int>(parent_index_.size()) != n) {
    throw FormatError("skeleton '" + name_ + "': parent_index has " +
                      std::to_string(parent_index_.size()) + " entries, expected " +
                      std::to_string(n));
  }
  auto check_id = [&](int id, const char* what) {
    if (id < 0 || id >= n) {
      throw FormatError("skeleton '" + name_ + "': " + what + " id " +
                        std::to_string(id) + " out of range");
    }
  };
  int roots = 0;
  for (int j = 0; j < n; ++j) {
    if (parent_index_[j] < 0) {
      ++roots;
    } else {
      check_id(parent_index_[j], "parent");
    }
  }
  if (roots != 1) {
    throw FormatError("skeleton '" + name_ + "': expected a single root, found " +
                      std::to_string(roots));
  }
  // Every joint must reach the root within n steps.
  for (int j = 0; j < n; ++j) {
    int cur = j;
    int steps = 0;
    while (parent_index_[cur] >= 0) {
      cur = parent_index_[cur];
      if (++steps > n) {
        throw FormatError("skeleton '" + name_ + "': parent cycle at joint " +
                          joint_names_[j]);
      }
    }
  }
  if (origin_joints_.empty()) {
    throw FormatError("skeleton '" + name_ + "': origin_joints is empty");
  }
  for (int id : origin_joints_) check_id(id, "origin joint");
  std::set<int> seen;
  for (int id : estimated_joints_) {
    check_id(id, "estimated joint");
    if (!seen.insert(id).second) {
      throw FormatError("skeleton '" + name_ + "': duplicate estimated joint");
    }
  }
  auto is_edge = [&](const Limb& l) {
    return l.parent >= 0 && l.parent < n && l.child >= 0 && l.child < n &&
           parent_index_[l.child] == l.parent;
  };
  for (const auto& l : all_limbs_) {
    if (!is_edge(l)) throw FormatError("skeleton '" + name_ + "': all_limbs entry is not a tree edge");
  }
  if (static_cast<int>(all_limbs_.size()) != n - 1) {
    throw FormatError("skeleton '" + name_ + "': all_limbs must list all " +
                      std::to_string(n - 1) + " tree edges");
  }
  for (const auto& l : peh_limbs_) {
    if (!is_edge(l)) throw FormatError("skeleton '" + name_ + "': peh_limbs entry is not a tree edge");
  }
}

int Skeleton::root() const {
  for (int j = 0; j < num_joints(); ++j) {
    if (parent_index_[j] < 0) return j;
  }
  return -1;
}

int Skeleton::joint_id(const std::string& name) const {
  auto it = std::find(joint_names_.begin(), joint_names_.end(), name);
  if (it == joint_names_.end()) throw IndexError("unknown joint '" + name + "'");
  return static_cast<int>(it - joint_names_.begin());
}

int Skeleton::estimated_slot(int id) const {
  auto it = std::find(estimated_joints_.begin(), estimated_joints_.end(), id);
  return it == estimated_joints_.end() ? -1 : static_cast<int>(it - estimated_joints_.begin());
}

Skeleton Skeleton::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("skeleton: document is not an object");
  return Skeleton(field<std::string>(doc, "name"),
                  field<std::vector<std::string>>(doc, "joint_names"),
                  field<std::vector<int>>(doc, "parent_index"),
                  field<std::vector<int>>(doc, "origin_joints"),
                  field<std::vector<int>>(doc, "estimated_joints"),
                  limbs_from(field<std::vector<std::array<int, 2>>>(doc, "peh_limbs")),
                  limbs_from(field<std::vector<std::array<int, 2>>>(doc, "all_limbs")));
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("skeleton: cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("skeleton: " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Skeleton::to_json() const {
  auto pairs = [](const std::vector<Limb>& limbs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : limbs) out.push_back({l.parent, l.child});
    return out;
  };
  return {{"name", name_},
          {"joint_names", joint_names_},
          {"parent_index", parent_index_},
          {"origin_joints", origin_joints_},
          {"estimated_joints", estimated_joints_},
          {"peh_limbs", pairs(peh_limbs_)},
          {"all_limbs", pairs(all_limbs_)}};
}

Skeleton Skeleton::unrealego16() {
  std::vector<std::string> names = {
      "head",    "neck",   "upperarm_r", "lowerarm_r", "hand_r", "upperarm_l",
      "lowerarm_l", "hand_l", "thigh_r", "calf_r",     "foot_r", "ball_r",
      "thigh_l", "calf_l", "foot_l",     "ball_l"};
  std::vector<int> parents = {1, -1, 1, 2, 3, 1, 5, 6, 1, 8, 9, 10, 1, 12, 13, 14};
  auto all = tree_limbs(parents);
  std::vector<Limb> peh;
  for (const auto& l : all) {
    if (l.child != 0) peh.push_back(l);
  }
  std::vector<int> estimated;
  for (int j = 1; j < 16; ++j) estimated.push_back(j);
  return Skeleton("unrealego16", std::move(names), std::move(parents), {8, 12},
                  std::move(estimated), std::move(peh), std::move(all));
}

Skeleton Skeleton::egocap17() {
  std::vector<std::string> names = {
      "neck",    "shoulder_r", "elbow_r", "wrist_r", "finger_r", "shoulder_l",
      "elbow_l", "wrist_l",    "finger_l", "hip_r",  "knee_r",   "ankle_r",
      "toe_r",   "hip_l",      "knee_l",  "ankle_l", "toe_l"};
  std::vector<int> parents = {-1, 0, 1, 2, 3, 0, 5, 6, 7, 0, 9, 10, 11, 0, 13, 14, 15};
  auto all = tree_limbs(parents);
  std::vector<int> estimated;
  for (int j = 0; j < 17; ++j) estimated.push_back(j);
  return Skeleton("egocap17", std::move(names), std::move(parents), {9, 13},
                  std::move(estimated), all, all);
}

}  // namespace ego3d
