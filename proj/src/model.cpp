#include "ego3d/model.hpp"

#include <cmath>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace nn = torch::nn;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "B";
    case Variant::with_peh: return "B+PH";
    case Variant::with_sm: return "B+SM";
    case Variant::full: return "B+PH+SM";
  }
  return "?";
}

Variant variant_from(const std::string& name) {
  if (name == "B") return Variant::baseline;
  if (name == "B+PH") return Variant::with_peh;
  if (name == "B+SM") return Variant::with_sm;
  if (name == "B+PH+SM") return Variant::full;
  throw ConfigError("unknown variant id '" + name + "' (expected B, B+PH, B+SM or B+PH+SM)");
}

// ---------------------------------------------------------------------------
// ModelConfig

namespace {

void fill_skeleton_fields(ModelConfig& c, const Skeleton& sk) {
  c.n_joints = static_cast<int>(sk.estimated_joints().size());
  c.n_peh_limbs = static_cast<int>(sk.peh_limbs().size());
  c.n_output_joints = sk.num_joints();
  c.estimated_joints = sk.estimated_joints();
  c.peh_limbs.clear();
  c.limb_joint_slots.clear();
  for (const auto& l : sk.peh_limbs()) {
    c.peh_limbs.push_back({l.parent, l.child});
    c.limb_joint_slots.push_back({sk.estimated_slot(l.parent), sk.estimated_slot(l.child)});
  }
}

int scaled(double base, double width) { return std::max(1, static_cast<int>(std::lround(base * width))); }

}  // namespace

ModelConfig ModelConfig::full_scale(const Skeleton& skeleton) {
  ModelConfig c;
  fill_skeleton_fields(c, skeleton);
  c.validate();
  return c;
}

ModelConfig ModelConfig::toy(const Skeleton& skeleton) {
  ModelConfig c;
  fill_skeleton_fields(c, skeleton);
  c.image_size = 64;
  c.heatmap_size = 16;
  c.backbone_width = 0.25;
  c.decoder_width = 0.0625;
  c.encoder_conv_channels = {32, 64, 128};
  c.encoder_fc = {256, 128};
  c.reconstructor_fc = {128, 256};
  c.sm_conv_channels = {16, 32, 64};
  c.sm_fc = {128, 64};
  c.validate();
  return c;
}

int ModelConfig::encoder_volume() const {
  const int s = heatmap_size >> static_cast<int>(encoder_conv_channels.size());
  return encoder_conv_channels.back() * s * s;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model config: '" + field + "' " + why);
  };
  if (image_size <= 0 || image_size % 32 != 0) fail("image_size", "must be a positive multiple of 32");
  if (heatmap_size * 4 != image_size) fail("heatmap_size", "must equal image_size / 4");
  if (n_joints <= 0) fail("n_joints", "must be positive");
  if (n_peh_limbs <= 0) fail("n_peh_limbs", "must be positive");
  if (n_output_joints <= 0) fail("n_output_joints", "must be positive");
  if (pose_feature_dim <= 0) fail("pose_feature_dim", "must be positive");
  if (sm_embedding_dim <= 0) fail("sm_embedding_dim", "must be positive");
  if (decoder_hidden <= 0) fail("decoder_hidden", "must be positive");
  if (!(backbone_width > 0.0)) fail("backbone_width", "must be positive");
  if (!(decoder_width > 0.0)) fail("decoder_width", "must be positive");
  if (!(pose_scale_cm > 0.0)) fail("pose_scale_cm", "must be positive");
  for (const auto* v : {&encoder_conv_channels, &sm_conv_channels}) {
    if (v->empty()) fail("conv_channels", "must not be empty");
    for (int c : *v) {
      if (c <= 0) fail("conv_channels", "entries must be positive");
    }
    if ((heatmap_size >> v->size()) < 1 || (heatmap_size % (1 << v->size())) != 0) {
      fail("conv_channels", "too many stride-2 layers for heatmap_size");
    }
  }
  for (const auto* v : {&encoder_fc, &reconstructor_fc, &sm_fc}) {
    for (int c : *v) {
      if (c <= 0) fail("fc", "entries must be positive");
    }
  }
  if (static_cast<int>(limb_joint_slots.size()) != n_peh_limbs) fail("limb_joint_slots", "needs one pair per limb");
  for (const auto& p : limb_joint_slots) {
    if (p[0] < 0 || p[0] >= n_joints || p[1] < 0 || p[1] >= n_joints) {
      fail("limb_joint_slots", "refers to a joint outside the estimated set");
    }
  }
  if (static_cast<int>(peh_limbs.size()) != n_peh_limbs) fail("peh_limbs", "needs one pair per limb");
  if (static_cast<int>(estimated_joints.size()) != n_joints) fail("estimated_joints", "must list n_joints ids");
  for (int j : estimated_joints) {
    if (j < 0 || j >= n_output_joints) fail("estimated_joints", "id out of range");
  }
  for (const auto& l : peh_limbs) {
    if (l[0] < 0 || l[0] >= n_output_joints || l[1] < 0 || l[1] >= n_output_joints) fail("peh_limbs", "id out of range");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"image_size", image_size},
          {"heatmap_size", heatmap_size},
          {"n_joints", n_joints},
          {"n_peh_limbs", n_peh_limbs},
          {"n_output_joints", n_output_joints},
          {"pose_feature_dim", pose_feature_dim},
          {"sm_embedding_dim", sm_embedding_dim},
          {"decoder_hidden", decoder_hidden},
          {"encoder_conv_channels", encoder_conv_channels},
          {"encoder_fc", encoder_fc},
          {"reconstructor_fc", reconstructor_fc},
          {"sm_conv_channels", sm_conv_channels},
          {"sm_fc", sm_fc},
          {"backbone_width", backbone_width},
          {"decoder_width", decoder_width},
          {"pretrained_backbone", pretrained_backbone},
          {"pose_scale_cm", pose_scale_cm},
          {"variant", to_string(variant)},
          {"limb_joint_slots", limb_joint_slots},
          {"peh_limbs", peh_limbs},
          {"estimated_joints", estimated_joints}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("model config: expected an object");
  ModelConfig c;
  const ModelConfig defaults;
  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!defaults.to_json().contains(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("model config: unknown field(s): " + list);
  }
  auto get = [&](const char* key, auto& dst) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("model config: field '") + key + "' has the wrong type");
    }
  };
  get("image_size", c.image_size);
  get("heatmap_size", c.heatmap_size);
  get("n_joints", c.n_joints);
  get("n_peh_limbs", c.n_peh_limbs);
  get("n_output_joints", c.n_output_joints);
  get("pose_feature_dim", c.pose_feature_dim);
  get("sm_embedding_dim", c.sm_embedding_dim);
  get("decoder_hidden", c.decoder_hidden);
  get("encoder_conv_channels", c.encoder_conv_channels);
  get("encoder_fc", c.encoder_fc);
  get("reconstructor_fc", c.reconstructor_fc);
  get("sm_conv_channels", c.sm_conv_channels);
  get("sm_fc", c.sm_fc);
  get("backbone_width", c.backbone_width);
  get("decoder_width", c.decoder_width);
  get("pretrained_backbone", c.pretrained_backbone);
  get("pose_scale_cm", c.pose_scale_cm);
  get("limb_joint_slots", c.limb_joint_slots);
  get("peh_limbs", c.peh_limbs);
  get("estimated_joints", c.estimated_joints);
  if (doc.contains("variant")) c.variant = variant_from(doc.at("variant").get<std::string>());
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Building blocks

ConvBnActImpl::ConvBnActImpl(int in, int out, int kernel, int stride, int padding) {
  conv = register_module("conv", nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding)));
  bn = register_module("bn", nn::BatchNorm2d(out));
}

torch::Tensor ConvBnActImpl::forward(const torch::Tensor& x) {
  return torch::leaky_relu(bn(conv(x)), 0.2);
}

LinearBnActImpl::LinearBnActImpl(int in, int out) {
  fc = register_module("fc", nn::Linear(in, out));
  bn = register_module("bn", nn::BatchNorm1d(out));
}

torch::Tensor LinearBnActImpl::forward(const torch::Tensor& x) {
  return torch::leaky_relu(bn(fc(x)), 0.2);
}

BasicBlockImpl::BasicBlockImpl(int in, int out, int stride) {
  conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)));
  bn1 = register_module("bn1", nn::BatchNorm2d(out));
  conv2 = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(out, out, 3).stride(1).padding(1).bias(false)));
  bn2 = register_module("bn2", nn::BatchNorm2d(out));
  if (stride != 1 || in != out) {
    downsample = register_module(
        "downsample", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                                     nn::BatchNorm2d(out)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto out = torch::relu(bn1(conv1(x)));
  out = bn2(conv2(out));
  auto identity = downsample ? downsample->forward(x) : x;
  return torch::relu(out + identity);
}

ResNet18Impl::ResNet18Impl(double width) {
  const int base = scaled(64, width);
  channels_ = {base, scaled(128, width), scaled(256, width), scaled(512, width)};
  stem = register_module("stem", nn::Conv2d(nn::Conv2dOptions(3, base, 7).stride(2).padding(3).bias(false)));
  stem_bn = register_module("stem_bn", nn::BatchNorm2d(base));
  auto make = [](int in, int out, int stride) {
    return nn::Sequential(BasicBlock(in, out, stride), BasicBlock(out, out, 1));
  };
  layer1 = register_module("layer1", make(base, channels_[0], 1));
  layer2 = register_module("layer2", make(channels_[0], channels_[1], 2));
  layer3 = register_module("layer3", make(channels_[1], channels_[2], 2));
  layer4 = register_module("layer4", make(channels_[2], channels_[3], 2));
}

std::vector<torch::Tensor> ResNet18Impl::forward(const torch::Tensor& x) {
  auto h = torch::relu(stem_bn(stem(x)));
  h = torch::max_pool2d(h, 3, 2, 1);
  auto f1 = layer1->forward(h);
  auto f2 = layer2->forward(f1);
  auto f3 = layer3->forward(f2);
  auto f4 = layer4->forward(f3);
  return {f1, f2, f3, f4};
}

// ---------------------------------------------------------------------------
// Optical feature extractor

OpticalExtractorImpl::OpticalExtractorImpl(const ModelConfig& cfg, int out_ch) : out_channels(out_ch) {
  if (cfg.pretrained_backbone) {
    throw ConfigError("model config: 'pretrained_backbone' weights are not bundled; train from scratch");
  }
  backbone = register_module("backbone", ResNet18(cfg.backbone_width));
  const auto stage = backbone->stage_channels();
  // Each view's skip features are widened to twice the full-scale stage width.
  const std::array<int, 4> full = {64, 128, 256, 512};
  std::array<int, 4> lat{};
  for (int i = 0; i < 4; ++i) {
    lat[i] = scaled(2 * full[i], cfg.decoder_width);
    lateral.push_back(register_module("lateral" + std::to_string(i + 1), ConvBnAct(stage[i], lat[i], 1, 1, 0)));
  }
  const int d1_out = scaled(2048, cfg.decoder_width);
  const int d2_out = scaled(1024, cfg.decoder_width);
  const int d3_out = scaled(1024, cfg.decoder_width);
  d1 = register_module("d1", ConvBnAct(2 * lat[3] + 2 * lat[2], d1_out, 3, 1, 1));
  d2 = register_module("d2", ConvBnAct(d1_out + 2 * lat[1], d2_out, 3, 1, 1));
  d3 = register_module("d3", ConvBnAct(d2_out + 2 * lat[0], d3_out, 3, 1, 1));
  head = register_module("head", nn::Conv2d(nn::Conv2dOptions(d3_out, out_ch, 1)));
}

torch::Tensor OpticalExtractorImpl::forward(const torch::Tensor& left, const torch::Tensor& right) {
  if (left.dim() != 4 || left.size(1) != 3 || !left.sizes().equals(right.sizes())) {
    throw DimensionError("optical extractor: expected two [B, 3, S, S] images of equal shape");
  }
  const int64_t batch = left.size(0);
  // Both views pass through the same modules in one batch.
  auto feats = backbone->forward(torch::cat({left, right}, 0));
  std::array<torch::Tensor, 4> skip;
  for (int i = 0; i < 4; ++i) {
    auto f = lateral[i]->forward(feats[i]);
    skip[i] = torch::cat({f.narrow(0, 0, batch), f.narrow(0, batch, batch)}, 1);
  }
  auto up = [](const torch::Tensor& t) {
    return torch::nn::functional::interpolate(
        t, torch::nn::functional::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0})
               .mode(torch::kBilinear).align_corners(false));
  };
  auto x = d1->forward(torch::cat({up(skip[3]), skip[2]}, 1));
  x = d2->forward(torch::cat({up(x), skip[1]}, 1));
  x = d3->forward(torch::cat({up(x), skip[0]}, 1));
  return head(x);
}

// ---------------------------------------------------------------------------
// Encoders and decoders

ConvEncoderImpl::ConvEncoderImpl(int in_ch, int spatial, const std::vector<int>& conv_channels,
                                 const std::vector<int>& fc, int out_dim)
    : in_channels(in_ch) {
  convs = register_module("convs", nn::Sequential());
  int c = in_ch;
  int s = spatial;
  for (int ch : conv_channels) {
    convs->push_back(ConvBnAct(c, ch, 4, 2, 1));
    c = ch;
    s /= 2;
  }
  flat_dim = c * s * s;
  fcs = register_module("fcs", nn::Sequential());
  int d = flat_dim;
  for (int width : fc) {
    fcs->push_back(LinearBnAct(d, width));
    d = width;
  }
  out = register_module("out", nn::Linear(d, out_dim));
}

torch::Tensor ConvEncoderImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != in_channels) {
    throw DimensionError("conv encoder: expected " + std::to_string(in_channels) + " input channels, got " +
                         (x.dim() == 4 ? std::to_string(x.size(1)) : "rank " + std::to_string(x.dim())));
  }
  auto h = convs->forward(x).flatten(1);
  if (h.size(1) != flat_dim) {
    throw DimensionError("conv encoder: flattened size " + std::to_string(h.size(1)) + " != " +
                         std::to_string(flat_dim));
  }
  if (!fcs->is_empty()) h = fcs->forward(h);
  return out(h);
}

HeatmapEncoderImpl::HeatmapEncoderImpl(const ModelConfig& cfg) {
  net = register_module("net", ConvEncoder(cfg.encoder_in_channels(), cfg.heatmap_size, cfg.encoder_conv_channels,
                                           cfg.encoder_fc, cfg.pose_feature_dim));
}

torch::Tensor HeatmapEncoderImpl::forward(const torch::Tensor& stack) { return net(stack); }

StereoMatcherImpl::StereoMatcherImpl(const ModelConfig& cfg) {
  encoder = register_module(
      "encoder", ConvEncoder(4, cfg.heatmap_size, cfg.sm_conv_channels, cfg.sm_fc, cfg.sm_embedding_dim));
  fc1 = register_module("fc1", LinearBnAct(cfg.sm_embedding_dim, cfg.decoder_hidden));
  fc2 = register_module("fc2", LinearBnAct(cfg.decoder_hidden, cfg.decoder_hidden));
  out = register_module("out", nn::Linear(cfg.decoder_hidden, 3));
}

torch::Tensor StereoMatcherImpl::forward_limb(const torch::Tensor& limb) {
  if (limb.dim() != 4 || limb.size(1) != 4) throw DimensionError("stereo matcher: expected [B, 4, h, w] input");
  return out(fc2(fc1(encoder(limb))));
}

torch::Tensor StereoMatcherImpl::forward(const torch::Tensor& limbs) {
  if (limbs.dim() != 5 || limbs.size(2) != 4) throw DimensionError("stereo matcher: expected [B, L, 4, h, w] input");
  const int64_t b = limbs.size(0), l = limbs.size(1);
  auto flat = limbs.reshape({b * l, 4, limbs.size(3), limbs.size(4)});
  return forward_limb(flat).reshape({b, l, 3});
}

PoseDecoderImpl::PoseDecoderImpl(const ModelConfig& cfg)
    : orientation_dim(cfg.uses_sm() ? 3 * cfg.n_peh_limbs : 0),
      n_output_joints(cfg.n_output_joints),
      scale(cfg.pose_scale_cm) {
  fc1 = register_module("fc1", LinearBnAct(cfg.pose_feature_dim + orientation_dim, cfg.decoder_hidden));
  fc2 = register_module("fc2", LinearBnAct(cfg.decoder_hidden, cfg.decoder_hidden));
  out = register_module("out", nn::Linear(cfg.decoder_hidden, 3 * cfg.n_output_joints));
  mean_pose = register_buffer("mean_pose", torch::zeros({cfg.n_output_joints, 3}));
}

torch::Tensor PoseDecoderImpl::forward(const torch::Tensor& features, const torch::Tensor& orientations) {
  torch::Tensor x = features;
  if (orientation_dim > 0) {
    if (!orientations.defined() || orientations.flatten(1).size(1) != orientation_dim) {
      throw DimensionError("pose decoder: expected " + std::to_string(orientation_dim) + " orientation values");
    }
    x = torch::cat({features, orientations.flatten(1)}, 1);
  }
  auto raw = out(fc2(fc1(x))).reshape({-1, n_output_joints, 3});
  return raw * scale + mean_pose;
}

HeatmapReconstructorImpl::HeatmapReconstructorImpl(const ModelConfig& cfg) {
  const int levels = static_cast<int>(cfg.encoder_conv_channels.size());
  const int s = cfg.heatmap_size >> levels;
  volume = {cfg.encoder_conv_channels.back(), s, s};
  fcs = register_module("fcs", nn::Sequential());
  int d = cfg.pose_feature_dim;
  for (int w : cfg.reconstructor_fc) {
    fcs->push_back(LinearBnAct(d, w));
    d = w;
  }
  fcs->push_back(LinearBnAct(d, static_cast<int>(volume[0] * volume[1] * volume[2])));
  deconvs = register_module("deconvs", nn::Sequential());
  int c = cfg.encoder_conv_channels.back();
  for (int i = levels - 2; i >= 0; --i) {
    const int next = cfg.encoder_conv_channels[i];
    deconvs->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(c, next, 4).stride(2).padding(1)));
    deconvs->push_back(nn::BatchNorm2d(next));
    deconvs->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    c = next;
  }
  out = register_module(
      "out", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(c, cfg.encoder_in_channels(), 4).stride(2).padding(1)));
}

torch::Tensor HeatmapReconstructorImpl::forward(const torch::Tensor& features) {
  auto h = fcs->forward(features).reshape({-1, volume[0], volume[1], volume[2]});
  if (!deconvs->is_empty()) h = deconvs->forward(h);
  return out(h);
}

// ---------------------------------------------------------------------------
// Bundle

NetBundleImpl::NetBundleImpl(const ModelConfig& cfg) : config(cfg) {
  config.validate();
  jh_extractor = register_module("jh_extractor", OpticalExtractor(config, config.jh_channels()));
  peh_extractor = register_module("peh_extractor", OpticalExtractor(config, config.peh_channels()));
  encoder = register_module("encoder", HeatmapEncoder(config));
  if (config.uses_sm()) stereo_matcher = register_module("stereo_matcher", StereoMatcher(config));
  decoder = register_module("decoder", PoseDecoder(config));
  reconstructor = register_module("reconstructor", HeatmapReconstructor(config));
}

std::pair<torch::Tensor, torch::Tensor> NetBundleImpl::extract(const torch::Tensor& images) {
  if (images.dim() != 5 || images.size(1) != 2 || images.size(2) != 3) {
    throw DimensionError("extract: expected images of shape [B, 2, 3, S, S]");
  }
  auto left = images.select(1, 0);
  auto right = images.select(1, 1);
  return {jh_extractor(left, right), peh_extractor(left, right)};
}

torch::Tensor NetBundleImpl::encoder_input(const torch::Tensor& jh, const torch::Tensor& peh) const {
  if (jh.size(1) != config.jh_channels()) throw DimensionError("encoder input: wrong joint heatmap channel count");
  if (!config.uses_peh()) return jh;
  if (!peh.defined() || peh.size(1) != config.peh_channels()) {
    throw DimensionError("encoder input: wrong perspective heatmap channel count");
  }
  return torch::cat({jh, peh}, 1);
}

torch::Tensor NetBundleImpl::matcher_input(const torch::Tensor& jh, const torch::Tensor& peh) const {
  const int64_t b = jh.size(0), h = jh.size(2), w = jh.size(3);
  if (config.variant == Variant::full) {
    return peh.reshape({b, config.n_peh_limbs, 4, h, w});
  }
  // (parent_L, parent_R, child_L, child_R) per limb; jh channels are (L, R) per joint.
  std::vector<int64_t> idx;
  for (const auto& [p, c] : config.limb_joint_slots) {
    idx.insert(idx.end(), {2 * p, 2 * p + 1, 2 * c, 2 * c + 1});
  }
  auto index = torch::tensor(idx, torch::kLong);
  return jh.index_select(1, index).reshape({b, config.n_peh_limbs, 4, h, w});
}

ReconstructorOutput NetBundleImpl::reconstruct(const torch::Tensor& jh, const torch::Tensor& peh) {
  ReconstructorOutput out;
  out.pose_features = encoder(encoder_input(jh, peh));
  torch::Tensor orient_in;
  if (config.uses_sm()) {
    out.orientations = stereo_matcher(matcher_input(jh, peh));
    orient_in = out.orientations.detach();
  }
  out.pose = decoder(out.pose_features, orient_in);
  out.recon = reconstructor(out.pose_features);
  return out;
}

std::vector<torch::Tensor> NetBundleImpl::extractor_parameters() {
  auto params = jh_extractor->parameters();
  auto more = peh_extractor->parameters();
  params.insert(params.end(), more.begin(), more.end());
  return params;
}

std::vector<torch::Tensor> NetBundleImpl::reconstructor_parameters() {
  std::vector<torch::Tensor> params;
  for (torch::nn::Module* m : std::initializer_list<torch::nn::Module*>{
           encoder.get(), stereo_matcher ? stereo_matcher.get() : nullptr, decoder.get(), reconstructor.get()}) {
    if (!m) continue;
    auto p = m->parameters();
    params.insert(params.end(), p.begin(), p.end());
  }
  return params;
}

int64_t count_parameters(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace ego3d
