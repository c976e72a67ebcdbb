#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ego3d/skeleton.hpp"

namespace ego3d {

/// Which optional paths of the reconstructor are active.
///   B        heatmap encoder on joint heatmaps only
///   B+PH     encoder also sees the perspective embedding heatmaps
///   B+SM     stereo matcher on pairs of adjacent joint heatmaps
///   B+PH+SM  stereo matcher on perspective embedding heatmaps (full model)
enum class Variant { baseline, with_peh, with_sm, full };

std::string to_string(Variant v);
Variant variant_from(const std::string& name);

struct ModelConfig {
  int image_size = 256;
  int heatmap_size = 64;
  int n_joints = 15;       // estimated joints (heatmaps, metrics)
  int n_peh_limbs = 14;
  int n_output_joints = 16;  // decoder output rows (skeleton joints)
  int pose_feature_dim = 20;
  int sm_embedding_dim = 10;
  int decoder_hidden = 32;
  std::vector<int> encoder_conv_channels = {64, 128, 256};
  std::vector<int> encoder_fc = {2048, 512};
  std::vector<int> reconstructor_fc = {512, 2048};  // followed by the flattened conv volume
  std::vector<int> sm_conv_channels = {64, 128, 256};
  std::vector<int> sm_fc = {2048, 512};
  double backbone_width = 1.0;   // residual backbone channel multiplier
  double decoder_width = 1.0;    // extractor decoder channel multiplier
  bool pretrained_backbone = false;
  double pose_scale_cm = 10.0;   // decoder output unit
  Variant variant = Variant::full;
  /// Estimated-joint slots (parent, child) of each embedding limb; feeds the
  /// joint-heatmap stereo matcher of the B+SM variant.
  std::vector<std::array<int, 2>> limb_joint_slots;
  /// Skeleton ids of the limbs used by the cosine loss, and estimated joint ids.
  std::vector<std::array<int, 2>> peh_limbs;
  std::vector<int> estimated_joints;

  /// Full-resolution dimensions (256x256 images, 64x64 heatmaps).
  static ModelConfig full_scale(const Skeleton& skeleton);
  /// Narrow network on 64x64 images and 16x16 heatmaps.
  static ModelConfig toy(const Skeleton& skeleton);

  bool uses_peh() const { return variant == Variant::with_peh || variant == Variant::full; }
  bool uses_sm() const { return variant == Variant::with_sm || variant == Variant::full; }
  int jh_channels() const { return 2 * n_joints; }
  int peh_channels() const { return 4 * n_peh_limbs; }
  int encoder_in_channels() const { return jh_channels() + (uses_peh() ? peh_channels() : 0); }
  int encoder_volume() const;  // flattened heatmap-encoder conv output

  /// Throws ConfigError naming the first inconsistent field.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& doc);
};

// ---------------------------------------------------------------------------
// Building blocks

/// conv -> batch norm -> leaky ReLU(0.2)
struct ConvBnActImpl : torch::nn::Module {
  ConvBnActImpl(int in, int out, int kernel, int stride, int padding);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv{nullptr};
  torch::nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(ConvBnAct);

/// linear -> batch norm -> leaky ReLU(0.2)
struct LinearBnActImpl : torch::nn::Module {
  LinearBnActImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Linear fc{nullptr};
  torch::nn::BatchNorm1d bn{nullptr};
};
TORCH_MODULE(LinearBnAct);

struct BasicBlockImpl : torch::nn::Module {
  BasicBlockImpl(int in, int out, int stride);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

/// 18-layer residual backbone; returns the outputs of its four stages
/// (strides 4, 8, 16, 32).
struct ResNet18Impl : torch::nn::Module {
  explicit ResNet18Impl(double width);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);
  std::array<int, 4> stage_channels() const { return channels_; }

  torch::nn::Conv2d stem{nullptr};
  torch::nn::BatchNorm2d stem_bn{nullptr};
  torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};

 private:
  std::array<int, 4> channels_{};
};
TORCH_MODULE(ResNet18);

// ---------------------------------------------------------------------------
// Network components

/// Stereo U-Net heatmap estimator. One backbone (and one set of lateral 1x1
/// convolutions) serves both views; skip features of both views are
/// concatenated and fused by a three-stage upsampling decoder.
struct OpticalExtractorImpl : torch::nn::Module {
  OpticalExtractorImpl(const ModelConfig& cfg, int out_channels);
  /// left, right: [B, 3, S, S] -> [B, out_channels, S/4, S/4]
  torch::Tensor forward(const torch::Tensor& left, const torch::Tensor& right);

  ResNet18 backbone{nullptr};
  std::vector<ConvBnAct> lateral;  // stage 1..4
  ConvBnAct d1{nullptr}, d2{nullptr}, d3{nullptr};
  torch::nn::Conv2d head{nullptr};
  int out_channels = 0;
};
TORCH_MODULE(OpticalExtractor);

/// Strided conv stack followed by fully connected layers; the last layer is linear.
struct ConvEncoderImpl : torch::nn::Module {
  ConvEncoderImpl(int in_channels, int spatial, const std::vector<int>& conv_channels,
                  const std::vector<int>& fc, int out_dim);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential convs{nullptr};
  torch::nn::Sequential fcs{nullptr};
  torch::nn::Linear out{nullptr};
  int in_channels = 0;
  int flat_dim = 0;
};
TORCH_MODULE(ConvEncoder);

/// Heatmap stack -> pose feature vector.
struct HeatmapEncoderImpl : torch::nn::Module {
  explicit HeatmapEncoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& stack);
  ConvEncoder net{nullptr};
};
TORCH_MODULE(HeatmapEncoder);

/// One limb's four heatmap channels -> that limb's 3D orientation. A single
/// weight set is applied to every limb.
struct StereoMatcherImpl : torch::nn::Module {
  explicit StereoMatcherImpl(const ModelConfig& cfg);
  /// [B, 4, h, w] -> [B, 3]
  torch::Tensor forward_limb(const torch::Tensor& limb);
  /// [B, L, 4, h, w] -> [B, L, 3]
  torch::Tensor forward(const torch::Tensor& limbs);

  ConvEncoder encoder{nullptr};
  LinearBnAct fc1{nullptr}, fc2{nullptr};
  torch::nn::Linear out{nullptr};
};
TORCH_MODULE(StereoMatcher);

/// Pose features (+ limb orientations) -> [B, n_output_joints, 3] in cm.
struct PoseDecoderImpl : torch::nn::Module {
  explicit PoseDecoderImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& orientations);

  LinearBnAct fc1{nullptr}, fc2{nullptr};
  torch::nn::Linear out{nullptr};
  torch::Tensor mean_pose;  // buffer, cm
  int orientation_dim = 0;
  int n_output_joints = 0;
  double scale = 1.0;
};
TORCH_MODULE(PoseDecoder);

/// Pose features -> heatmap stack at encoder input shape. Training only.
struct HeatmapReconstructorImpl : torch::nn::Module {
  explicit HeatmapReconstructorImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& features);

  torch::nn::Sequential fcs{nullptr};
  torch::nn::Sequential deconvs{nullptr};
  torch::nn::ConvTranspose2d out{nullptr};
  std::array<int64_t, 3> volume{};
};
TORCH_MODULE(HeatmapReconstructor);

struct ReconstructorOutput {
  torch::Tensor pose;            // [B, N, 3] cm
  torch::Tensor orientations;    // [B, L, 3], undefined without the matcher
  torch::Tensor pose_features;   // [B, F]
  torch::Tensor recon;           // [B, C, h, w]
};

/// The five components plus their configuration.
struct NetBundleImpl : torch::nn::Module {
  explicit NetBundleImpl(const ModelConfig& cfg);

  /// Estimated heatmaps for both extractors. images: [B, 2, 3, S, S].
  std::pair<torch::Tensor, torch::Tensor> extract(const torch::Tensor& images);

  /// Encoder input for the active variant.
  torch::Tensor encoder_input(const torch::Tensor& jh, const torch::Tensor& peh) const;
  /// Stereo matcher input [B, L, 4, h, w] for the active variant.
  torch::Tensor matcher_input(const torch::Tensor& jh, const torch::Tensor& peh) const;

  /// 3D reconstruction from (estimated) heatmaps. Orientations enter the
  /// decoder detached from the matcher's graph.
  ReconstructorOutput reconstruct(const torch::Tensor& jh, const torch::Tensor& peh);

  std::vector<torch::Tensor> extractor_parameters();
  std::vector<torch::Tensor> reconstructor_parameters();

  ModelConfig config;
  OpticalExtractor jh_extractor{nullptr};
  OpticalExtractor peh_extractor{nullptr};
  HeatmapEncoder encoder{nullptr};
  StereoMatcher stereo_matcher{nullptr};
  PoseDecoder decoder{nullptr};
  HeatmapReconstructor reconstructor{nullptr};
};
TORCH_MODULE(NetBundle);

int64_t count_parameters(const torch::nn::Module& module);

}  // namespace ego3d
