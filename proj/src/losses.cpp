#include "ego3d/losses.hpp"

#include "ego3d/errors.hpp"

namespace ego3d {

void LossWeights::validate() const {
  if (!(cos < 0.0)) throw ParameterError("loss weights: cos must be negative");
  for (double w : {jh, ph, trans, pose, recon}) {
    if (!(w >= 0.0)) throw ParameterError("loss weights: jh, ph, trans, pose and recon must be >= 0");
  }
}

namespace {

void same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    throw DimensionError(std::string(what) + ": prediction and target shapes differ");
  }
}

}  // namespace

torch::Tensor loss_jh(const torch::Tensor& pred, const torch::Tensor& gt) {
  same_shape(pred, gt, "loss_jh");
  return torch::mse_loss(pred, gt);
}

torch::Tensor loss_ph(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& lengths) {
  same_shape(pred, gt, "loss_ph");
  if (pred.dim() != 4 || pred.size(1) % 4 != 0) throw DimensionError("loss_ph: expected [B, 4L, h, w]");
  const int64_t b = pred.size(0), l = pred.size(1) / 4;
  auto len = lengths.to(pred.dtype());
  if (len.dim() == 1) len = len.unsqueeze(0).expand({b, l});
  if (len.dim() != 2 || len.size(0) != b || len.size(1) != l) {
    throw DimensionError("loss_ph: lengths must be [B, L] or [L]");
  }
  if (len.lt(1.0).any().item<bool>()) throw ParameterError("loss_ph: limb pixel length below 1");
  auto per_limb = (pred - gt).pow(2).reshape({b, l, -1}).mean(2);  // [B, L]
  return (per_limb / len).mean();
}

torch::Tensor loss_trans(const torch::Tensor& pred, const torch::Tensor& gt) {
  same_shape(pred, gt, "loss_trans");
  return torch::mse_loss(pred, gt);
}

torch::Tensor loss_pose(const torch::Tensor& pred, const torch::Tensor& gt, const std::vector<int>& joints) {
  same_shape(pred, gt, "loss_pose");
  if (pred.dim() != 3 || pred.size(2) != 3) throw DimensionError("loss_pose: expected [B, N, 3]");
  auto diff = pred - gt;
  if (!joints.empty()) {
    for (int j : joints) {
      if (j < 0 || j >= pred.size(1)) throw IndexError("loss_pose: joint id out of range");
    }
    std::vector<int64_t> idx(joints.begin(), joints.end());
    diff = diff.index_select(1, torch::tensor(idx, torch::kLong).to(pred.device()));
  }
  return diff.norm(2, 2).sum(1).mean();
}

torch::Tensor loss_recon(const torch::Tensor& recon_jh, const torch::Tensor& est_jh, const torch::Tensor& recon_ph,
                         const torch::Tensor& est_ph) {
  same_shape(recon_jh, est_jh, "loss_recon");
  auto total = torch::mse_loss(recon_jh, est_jh);
  if (recon_ph.defined() != est_ph.defined()) throw DimensionError("loss_recon: PEH pair half-defined");
  if (recon_ph.defined()) {
    same_shape(recon_ph, est_ph, "loss_recon");
    total = total + torch::mse_loss(recon_ph, est_ph);
  }
  return total;
}

CosLoss loss_cos(const torch::Tensor& pred, const torch::Tensor& gt, const std::vector<std::array<int, 2>>& limbs) {
  same_shape(pred, gt, "loss_cos");
  if (pred.dim() != 3 || pred.size(2) != 3) throw DimensionError("loss_cos: expected [B, N, 3]");
  std::vector<int64_t> parent, child;
  for (const auto& [p, c] : limbs) {
    if (p < 0 || c < 0 || p >= pred.size(1) || c >= pred.size(1)) throw IndexError("loss_cos: limb id out of range");
    parent.push_back(p);
    child.push_back(c);
  }
  auto pi = torch::tensor(parent, torch::kLong).to(pred.device());
  auto ci = torch::tensor(child, torch::kLong).to(pred.device());
  auto fp = pred.index_select(1, ci) - pred.index_select(1, pi);  // [B, L, 3]
  auto fg = gt.index_select(1, ci) - gt.index_select(1, pi);
  auto np = fp.norm(2, 2);
  auto ng = fg.norm(2, 2);
  auto valid = np.gt(0) & ng.gt(0);
  CosLoss out;
  out.skipped = valid.numel() - valid.sum().item<int64_t>();
  auto denom = torch::where(valid, np * ng, torch::ones_like(np));
  auto cos = torch::where(valid, (fp * fg).sum(2) / denom, torch::zeros_like(np));
  out.value = cos.sum(1).mean();
  return out;
}

torch::Tensor total_2d(const Loss2DParts& parts, const LossWeights& w) {
  return w.jh * parts.jh + w.ph * parts.ph;
}

torch::Tensor total_3d(const Loss3DParts& parts, const LossWeights& w) {
  return w.trans * parts.trans + w.pose * parts.pose + w.recon * parts.recon + w.cos * parts.cos;
}

}  // namespace ego3d
