#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

namespace ego3d {

/// Loss weights. lambda_cos is negative: the cosine term is a similarity.
struct LossWeights {
  double jh = 1.0;
  double ph = 1.0;
  double trans = 1.0;
  double pose = 1e-1;
  double recon = 1e-3;
  double cos = -1e-2;

  /// Throws ParameterError unless cos < 0 and the rest are >= 0.
  void validate() const;
};

// All losses treat dimension 0 as the batch. "mse" is the mean over every
// element of the compared tensors.

torch::Tensor loss_jh(const torch::Tensor& pred, const torch::Tensor& gt);

/// pred, gt: [B, 4L, h, w]; lengths: [B, L] (or [L]) limb pixel lengths, each >= 1.
/// Per-limb mse over its 4 channels divided by the limb length, averaged over
/// limbs and batch.
torch::Tensor loss_ph(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& lengths);

/// Orientation mse. pred, gt: [B, L, 3].
torch::Tensor loss_trans(const torch::Tensor& pred, const torch::Tensor& gt);

/// Sum over `joints` of the Euclidean distance, mean over the batch.
/// pred, gt: [B, N, 3]. An empty joint list uses every row.
torch::Tensor loss_pose(const torch::Tensor& pred, const torch::Tensor& gt, const std::vector<int>& joints = {});

/// mse(recon_jh, est_jh) + mse(recon_ph, est_ph). The PEH pair may be
/// undefined tensors (joint-heatmap-only encoders).
torch::Tensor loss_recon(const torch::Tensor& recon_jh, const torch::Tensor& est_jh, const torch::Tensor& recon_ph,
                         const torch::Tensor& est_ph);

struct CosLoss {
  torch::Tensor value;  // sum over limbs of cosine similarity, mean over batch
  int64_t skipped = 0;  // limb terms dropped for zero length
};

/// Cosine similarity between predicted and true limb vectors summed over
/// `limbs`. Terms with a zero-length limb in either pose are skipped.
CosLoss loss_cos(const torch::Tensor& pred, const torch::Tensor& gt, const std::vector<std::array<int, 2>>& limbs);

struct Loss2DParts {
  torch::Tensor jh, ph;
};

struct Loss3DParts {
  torch::Tensor trans, pose, recon, cos;
};

torch::Tensor total_2d(const Loss2DParts& parts, const LossWeights& w);
torch::Tensor total_3d(const Loss3DParts& parts, const LossWeights& w);

}  // namespace ego3d
