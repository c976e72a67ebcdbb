#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ego3d {

/// A (parent, child) pair of joint ids.
struct Limb {
  int parent = 0;
  int child = 0;
  bool operator==(const Limb&) const = default;
};

/// Joint hierarchy plus the joint and limb subsets the pipeline works with.
///
/// The hierarchy is a tree over `joint_names`. The local-pose origin (the
/// pelvis) is not itself a tree node: it is the mean of `origin_joints`
/// (the two hip/thigh joints in the shipped skeletons).
class Skeleton {
 public:
  Skeleton() = default;
  Skeleton(std::string name, std::vector<std::string> joint_names,
           std::vector<int> parent_index, std::vector<int> origin_joints,
           std::vector<int> estimated_joints, std::vector<Limb> peh_limbs,
           std::vector<Limb> all_limbs);

  /// Parses and validates a skeleton document. Throws FormatError.
  static Skeleton from_json(const nlohmann::json& doc);
  static Skeleton load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// 16-joint head-mounted glasses skeleton: 15 estimated joints, 14
  /// embedding limbs (head-neck excluded), 15 hierarchy limbs.
  static Skeleton unrealego16();
  /// 17-joint helmet-rig skeleton (head removed), 16 limbs.
  static Skeleton egocap17();

  const std::string& name() const { return name_; }
  int num_joints() const { return static_cast<int>(joint_names_.size()); }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<int>& parent_index() const { return parent_index_; }
  const std::vector<int>& origin_joints() const { return origin_joints_; }
  const std::vector<int>& estimated_joints() const { return estimated_joints_; }
  const std::vector<Limb>& peh_limbs() const { return peh_limbs_; }
  const std::vector<Limb>& all_limbs() const { return all_limbs_; }
  int root() const;
  int joint_id(const std::string& name) const;

  /// Position of joint `id` within estimated_joints(), or -1.
  int estimated_slot(int id) const;

  bool operator==(const Skeleton&) const = default;

 private:
  void validate() const;

  std::string name_;
  std::vector<std::string> joint_names_;
  std::vector<int> parent_index_;
  std::vector<int> origin_joints_;
  std::vector<int> estimated_joints_;
  std::vector<Limb> peh_limbs_;
  std::vector<Limb> all_limbs_;
};

}  // namespace ego3d
