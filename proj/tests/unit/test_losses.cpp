#include "torch_doctest.hpp"

#include <cmath>
#include <functional>

#include "ego3d/errors.hpp"
#include "ego3d/losses.hpp"
#include "loss_oracles.hpp"

using namespace ego3d;
using doctest::Approx;

namespace {

auto opts() { return torch::TensorOptions().dtype(torch::kFloat64); }

std::vector<std::array<int, 2>> limbs16() {
  return {{1, 2}, {2, 3}, {3, 4}, {1, 5}, {5, 6}, {6, 7}, {1, 8}, {8, 9}, {9, 10}, {10, 11}, {1, 12}, {12, 13}, {13, 14}, {14, 15}};
}

}  // namespace

TEST_CASE("loss weights") {
  LossWeights w;
  CHECK(w.jh == 1.0);
  CHECK(w.ph == 1.0);
  CHECK(w.trans == 1.0);
  CHECK(w.pose == 0.1);
  CHECK(w.recon == 1e-3);
  CHECK(w.cos == -1e-2);
  w.validate();
  w.cos = 0.01;
  CHECK_THROWS_AS(w.validate(), ParameterError);
  w = {};
  w.pose = -1;
  CHECK_THROWS_AS(w.validate(), ParameterError);
}

TEST_CASE("loss_jh and loss_trans") {
  torch::manual_seed(0);
  auto a = torch::rand({2, 30, 4, 4}, opts());
  CHECK(loss_jh(a, a).item<double>() == 0.0);
  CHECK(loss_jh(torch::ones_like(a), torch::zeros_like(a)).item<double>() == 1.0);
  auto b = torch::rand({2, 30, 4, 4}, opts());
  CHECK(std::abs(loss_jh(a, b).item<double>() - oracle::mse(a, b)) < 1e-10);

  auto o = torch::zeros({1, 14, 3}, opts());
  auto o2 = o.clone();
  o2[0][3][1] = 1.0;
  CHECK(loss_trans(o, o).item<double>() == 0.0);
  CHECK(loss_trans(o2, o).item<double>() == Approx(1.0 / 42.0).epsilon(1e-15));
  auto p = torch::randn({3, 14, 3}, opts()), q = torch::randn({3, 14, 3}, opts());
  CHECK(std::abs(loss_trans(p, q).item<double>() - oracle::mse(p, q)) < 1e-10);
  CHECK_THROWS_AS(loss_jh(a, b.narrow(1, 0, 29)), DimensionError);
}

TEST_CASE("loss_ph") {
  torch::manual_seed(1);
  auto gt = torch::rand({2, 56, 4, 4}, opts());
  auto len = torch::full({2, 14}, 1.0, opts());
  CHECK(loss_ph(gt, gt, len).item<double>() == 0.0);

  // Error on one limb only: length 2 halves its contribution.
  auto pred = gt.clone();
  pred.narrow(1, 8, 4).add_(0.3);
  const double at1 = loss_ph(pred, gt, len).item<double>();
  auto len2 = len.clone();
  len2.select(1, 2).fill_(2.0);
  CHECK(loss_ph(pred, gt, len2).item<double>() == Approx(at1 / 2).epsilon(1e-12));

  // Unit lengths reduce to the per-limb averaged mse.
  auto r = torch::rand({2, 56, 4, 4}, opts());
  CHECK(std::abs(loss_ph(r, gt, len).item<double>() - oracle::mse(r, gt)) < 1e-10);

  auto lr = 1.0 + 5.0 * torch::rand({2, 14}, opts());
  CHECK(std::abs(loss_ph(r, gt, lr).item<double>() - oracle::ph(r, gt, lr)) < 1e-10);
  // Per-limb lengths shared by the batch.
  auto l1 = 1.0 + torch::rand({14}, opts());
  CHECK(std::abs(loss_ph(r, gt, l1).item<double>() - oracle::ph(r, gt, l1.unsqueeze(0).expand({2, 14}))) < 1e-10);

  auto bad = len.clone();
  bad[0][0] = 0.5;
  CHECK_THROWS_AS(loss_ph(r, gt, bad), ParameterError);
}

TEST_CASE("loss_pose") {
  auto gt = torch::zeros({1, 16, 3}, opts());
  CHECK(loss_pose(gt, gt).item<double>() == 0.0);
  auto p = gt.clone();
  p[0][4][0] = 3.0;
  p[0][4][1] = 4.0;
  CHECK(loss_pose(p, gt).item<double>() == Approx(5.0).epsilon(1e-15));
  CHECK(loss_pose(p, gt, {0, 1, 2}).item<double>() == 0.0);

  torch::manual_seed(2);
  auto a = torch::randn({4, 16, 3}, opts()), b = torch::randn({4, 16, 3}, opts());
  std::vector<int> joints = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  CHECK(std::abs(loss_pose(a, b, joints).item<double>() - oracle::pose(a, b, joints)) < 1e-10);
  CHECK_THROWS_AS(loss_pose(a, b, {16}), IndexError);
}

TEST_CASE("loss_recon") {
  torch::manual_seed(3);
  auto jh = torch::rand({2, 30, 4, 4}, opts()), ph = torch::rand({2, 56, 4, 4}, opts());
  CHECK(loss_recon(jh, jh, ph, ph).item<double>() == 0.0);
  CHECK(loss_recon(torch::zeros_like(jh), torch::ones_like(jh), torch::zeros_like(ph), torch::ones_like(ph))
            .item<double>() == 2.0);
  auto rj = torch::rand_like(jh), rp = torch::rand_like(ph);
  CHECK(std::abs(loss_recon(rj, jh, rp, ph).item<double>() - (oracle::mse(rj, jh) + oracle::mse(rp, ph))) < 1e-10);
  CHECK(std::abs(loss_recon(rj, jh, {}, {}).item<double>() - oracle::mse(rj, jh)) < 1e-10);
}

TEST_CASE("loss_cos") {
  torch::manual_seed(4);
  auto gt = torch::randn({3, 16, 3}, opts());
  auto limbs = limbs16();
  CHECK(loss_cos(gt, gt, limbs).value.item<double>() == Approx(14.0).epsilon(1e-12));
  CHECK(loss_cos(-gt, gt, limbs).value.item<double>() == Approx(-14.0).epsilon(1e-12));
  auto p = torch::randn({3, 16, 3}, opts());
  auto c = loss_cos(p, gt, limbs);
  CHECK(c.skipped == 0);
  CHECK(std::abs(c.value.item<double>() - oracle::cos(p, gt, limbs)) < 1e-10);
  CHECK(c.value.item<double>() <= 14.0);
  CHECK(c.value.item<double>() >= -14.0);

  // A collapsed predicted limb drops its term and is counted.
  auto z = gt.clone();
  z[0][3] = z[0][2];
  auto cz = loss_cos(z, gt, limbs);
  CHECK(cz.skipped == 1);
  CHECK(std::isfinite(cz.value.item<double>()));
  CHECK(std::abs(cz.value.item<double>() - oracle::cos(z, gt, limbs)) < 1e-10);
}

TEST_CASE("weighted totals") {
  auto one = torch::ones({}, opts());
  auto zero = torch::zeros({}, opts());
  LossWeights w;
  CHECK(total_3d({zero, zero, zero, zero}, w).item<double>() == 0.0);
  CHECK(total_3d({one, one, one, one}, w).item<double>() == Approx(1.091).epsilon(1e-15));
  CHECK(total_3d({zero, zero, zero, 14.0 * one}, w).item<double>() == Approx(-0.14).epsilon(1e-15));
  CHECK(total_2d({one, one}, w).item<double>() == 2.0);
  CHECK(total_2d({zero, zero}, w).item<double>() == 0.0);
}

TEST_CASE("L_3D falls as predicted limbs rotate toward the truth") {
  torch::manual_seed(5);
  auto gt = torch::randn({1, 16, 3}, opts()) * 20.0;
  auto limbs = limbs16();
  LossWeights w;
  // Rotate the prediction about the z axis by a shrinking angle.
  double prev = 1e300;
  for (int k = 20; k >= 0; --k) {
    const double a = 0.15 * k;
    auto rot = torch::tensor({std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0}, opts())
                   .reshape({3, 3});
    auto pred = torch::matmul(gt, rot.t());
    auto zero = torch::zeros({}, opts());
    const double l = total_3d({zero, loss_pose(pred, gt), zero, loss_cos(pred, gt, limbs).value}, w).item<double>();
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("gradients match finite differences") {
  torch::manual_seed(6);
  auto limbs = limbs16();
  auto lengths = 1.0 + torch::rand({2, 14}, opts());
  auto gt_h = torch::rand({2, 56, 3, 3}, opts());
  auto gt_p = torch::randn({2, 16, 3}, opts());
  std::vector<std::pair<std::string, std::function<torch::Tensor(const torch::Tensor&)>>> cases = {
      {"jh", [&](const torch::Tensor& x) { return loss_jh(x, gt_h); }},
      {"ph", [&](const torch::Tensor& x) { return loss_ph(x, gt_h, lengths); }},
      {"recon", [&](const torch::Tensor& x) { return loss_recon(x, gt_h, x * 0.5, gt_h); }},
  };
  std::vector<std::pair<std::string, std::function<torch::Tensor(const torch::Tensor&)>>> pose_cases = {
      {"trans", [&](const torch::Tensor& x) { return loss_trans(x, gt_p); }},
      {"pose", [&](const torch::Tensor& x) { return loss_pose(x, gt_p); }},
      {"cos", [&](const torch::Tensor& x) { return loss_cos(x, gt_p, limbs).value; }},
  };
  auto check = [](const std::string& name, const std::function<torch::Tensor(const torch::Tensor&)>& f,
                  torch::Tensor x) {
    x = x.clone().requires_grad_(true);
    auto g = torch::autograd::grad({f(x)}, {x})[0];
    auto flat = x.detach().flatten();
    const double h = 1e-6;
    double worst = 0.0;
    for (int64_t i = 0; i < flat.numel(); ++i) {
      auto xp = flat.clone(), xm = flat.clone();
      xp[i] += h;
      xm[i] -= h;
      const double fd = (f(xp.view(x.sizes())).item<double>() - f(xm.view(x.sizes())).item<double>()) / (2 * h);
      const double an = g.flatten()[i].item<double>();
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
    }
    INFO(name);
    CHECK(worst < 1e-4);
  };
  for (auto& [n, f] : cases) check(n, f, torch::rand({2, 56, 3, 3}, opts()));
  for (auto& [n, f] : pose_cases) check(n, f, torch::randn({2, 16, 3}, opts()));
}
