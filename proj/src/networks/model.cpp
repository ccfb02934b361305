#include "neuroscope/networks/model.hpp"


#include <cmath>
#include <numeric>
#include <stdexcept>

#include "neuroscope/common/rng.hpp"

namespace neuroscope {

std::string to_string(Family family) {
  switch (family) {
    case Family::mobile_mini:
      return "mobile_mini";
    case Family::dense_mini:
      return "dense_mini";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "mobile_mini") return Family::mobile_mini;
  if (name == "dense_mini") return Family::dense_mini;
  throw std::invalid_argument("unsupported model family '" + std::string(name) + "'");
}

ModelSpec ModelSpec::defaults(Family family, int input_size) {
  ModelSpec s;
  s.family = family;
  s.input_size = input_size;
  if (family == Family::mobile_mini) {
    s.widths = {8, 16, 16, 32};
  } else {
    s.widths = {8, 16};
  }
  return s;
}

void ModelSpec::validate() const {
  if (num_classes != kNumClasses) throw std::invalid_argument("num_classes must be 3");
  if (channels != 1) throw std::invalid_argument("channels must be 1 (grayscale)");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0,1)");
  }
  if (input_size < 16) throw std::invalid_argument("input_size must be >= 16");
  const std::size_t want = family == Family::mobile_mini ? 4 : 2;
  if (widths.size() != want) {
    throw std::invalid_argument(to_string(family) + " expects " + std::to_string(want) +
                                " stage widths");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("stage widths must be positive");
  }
  if (dw_kernel < 1 || dw_kernel % 2 == 0) throw std::invalid_argument("dw_kernel must be a positive odd number");
  if (expansion < 1 || growth_rate < 1 || layers_per_block < 1) {
    throw std::invalid_argument("expansion, growth_rate and layers_per_block must be positive");
  }
  const int groups = 5;
  if (frozen_prefix_len < 0 || frozen_prefix_len > groups) {
    throw std::invalid_argument("frozen_prefix_len exceeds parameter group count");
  }
}

Json to_json(const ModelSpec& s) {
  return {{"family", to_string(s.family)}, {"input_size", s.input_size},
          {"channels", s.channels},        {"num_classes", s.num_classes},
          {"widths", s.widths},            {"expansion", s.expansion}, {"dw_kernel", s.dw_kernel},
          {"growth_rate", s.growth_rate},  {"layers_per_block", s.layers_per_block},
          {"dropout_rate", s.dropout_rate}, {"frozen_prefix_len", s.frozen_prefix_len}};
}

ModelSpec model_spec_from_json(const Json& j) {
  ModelSpec s = ModelSpec::defaults(family_from_string(j.at("family").get<std::string>()),
                                    j.value("input_size", 64));
  s.channels = j.value("channels", s.channels);
  s.num_classes = j.value("num_classes", s.num_classes);
  if (j.contains("widths")) s.widths = j.at("widths").get<std::vector<int>>();
  s.expansion = j.value("expansion", s.expansion);
  s.dw_kernel = j.value("dw_kernel", s.dw_kernel);
  s.growth_rate = j.value("growth_rate", s.growth_rate);
  s.layers_per_block = j.value("layers_per_block", s.layers_per_block);
  s.dropout_rate = j.value("dropout_rate", s.dropout_rate);
  s.frozen_prefix_len = j.value("frozen_prefix_len", s.frozen_prefix_len);
  s.validate();
  return s;
}

ProbVector ProbVector::checked(std::span<const double> values, double tol) {
  if (values.size() != kNumClasses) {
    throw std::invalid_argument("probability vector must have 3 entries");
  }
  ProbVector v;
  double total = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double x = values[c];
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("probability entry outside [0,1]: " + std::to_string(x));
    }
    v.p[c] = x;
    total += x;
  }
  if (std::abs(total - 1.0) > tol) {
    throw std::invalid_argument("probability vector sums to " + std::to_string(total));
  }
  return v;
}

int ProbVector::argmax() const {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

std::vector<ProbVector> ForwardResult::prob_vectors() const {
  std::vector<ProbVector> out;
  const std::size_t n = probs.dim(0);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(ProbVector::checked(probs.data().subspan(i * kNumClasses, kNumClasses)));
  }
  return out;
}

namespace {

// He-normal init: N(0, 2 / fan_in). Biases start at zero.
Tensor init_param(const std::string& name, const Shape& shape, Rng& rng) {
  Tensor t(shape);
  const bool is_bias = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
  if (!is_bias) {
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data()) v = rng.normal(0.0, sd);
  }
  t.set_requires_grad(true);
  return t;
}

constexpr std::uint64_t kHeadDropoutLayer = 1;

}  // namespace

void Model::add_group(std::string name, std::vector<std::pair<std::string, Shape>> params,
                      std::uint64_t init_seed) {
  Rng rng(derive_seed(init_seed, groups_.size() + 1));
  ParamGroup g{std::move(name), {}};
  for (auto& [pname, shape] : params) {
    Tensor t = init_param(pname, shape, rng);
    by_name_[pname] = t;
    g.params.push_back({pname, t});
  }
  groups_.push_back(std::move(g));
}

Model Model::build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  m.seed_ = seed;
  const auto u = [](int v) { return static_cast<std::size_t>(v); };
  const std::size_t k = kNumClasses;

  if (spec.family == Family::mobile_mini) {
    const std::size_t stem = u(spec.widths[0]), out1 = u(spec.widths[1]), out2 = u(spec.widths[2]);
    const std::size_t e1 = stem * u(spec.expansion), e2 = out1 * u(spec.expansion);
    const std::size_t dk = u(spec.dw_kernel);
    m.add_group("stem", {{"stem.w", {stem, 1, 3, 3}}, {"stem.b", {stem}}}, seed);
    m.add_group("block1", {{"block1.expand.w", {e1, stem, 1, 1}}, {"block1.expand.b", {e1}},
                           {"block1.dw.w", {e1, dk, dk}}, {"block1.dw.b", {e1}},
                           {"block1.project.w", {out1, e1, 1, 1}}, {"block1.project.b", {out1}}},
                seed);
    m.add_group("block2", {{"block2.expand.w", {e2, out1, 1, 1}}, {"block2.expand.b", {e2}},
                           {"block2.dw.w", {e2, dk, dk}}, {"block2.dw.b", {e2}},
                           {"block2.project.w", {out2, e2, 1, 1}}, {"block2.project.b", {out2}}},
                seed);
    const std::size_t fin = u(spec.widths[3]);
    m.add_group("final", {{"final.w", {fin, out2, 1, 1}}, {"final.b", {fin}}}, seed);
    m.add_group("head", {{"head.w", {k, fin}}, {"head.b", {k}}}, seed);
  } else {
    const std::size_t stem = u(spec.widths[0]), trans = u(spec.widths[1]);
    const std::size_t growth = u(spec.growth_rate), layers = u(spec.layers_per_block);
    m.add_group("stem", {{"stem.w", {stem, 1, 3, 3}}, {"stem.b", {stem}}}, seed);
    auto dense_block = [&](const std::string& name, std::size_t in) {
      std::vector<std::pair<std::string, Shape>> ps;
      for (std::size_t l = 0; l < layers; ++l) {
        const std::string p = name + ".layer" + std::to_string(l);
        ps.push_back({p + ".w", {growth, in + l * growth, 3, 3}});
        ps.push_back({p + ".b", {growth}});
      }
      m.add_group(name, std::move(ps), seed);
      return in + layers * growth;
    };
    const std::size_t after1 = dense_block("block1", stem);
    m.add_group("transition", {{"transition.w", {trans, after1, 1, 1}}, {"transition.b", {trans}}},
                seed);
    const std::size_t after2 = dense_block("block2", trans);
    m.add_group("head", {{"head.w", {k, after2}}, {"head.b", {k}}}, seed);
  }
  return m;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::logic_error("model has no parameter " + name);
  return it->second;
}

std::vector<NamedTensor> Model::parameters() const {
  std::vector<NamedTensor> out;
  for (const auto& g : groups_) out.insert(out.end(), g.params.begin(), g.params.end());
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) {
    for (const auto& p : g.params) n += p.tensor.numel();
  }
  return n;
}

void Model::set_frozen(bool frozen) {
  spec_.frozen_prefix_len = frozen ? static_cast<int>(base_group_count()) : 0;
}

Model Model::clone() const {
  Model m;
  m.spec_ = spec_;
  m.seed_ = seed_;
  for (const auto& g : groups_) {
    ParamGroup copy{g.name, {}};
    for (const auto& p : g.params) {
      Tensor t = p.tensor.clone();
      t.set_requires_grad(true);
      m.by_name_[p.name] = t;
      copy.params.push_back({p.name, t});
    }
    m.groups_.push_back(std::move(copy));
  }
  return m;
}

void Model::zero_grad() {
  for (auto& g : groups_) {
    for (auto& p : g.params) p.tensor.zero_grad();
  }
}

bool Model::parameters_finite() const {
  for (const auto& g : groups_) {
    for (const auto& p : g.params) {
      for (double v : p.tensor.data()) {
        if (!std::isfinite(v)) return false;
      }
    }
  }
  return true;
}

ForwardResult Model::forward(Tape* tape, const Tensor& batch, ForwardOptions opts) const {
  if (batch.rank() != 4 || batch.dim(1) != static_cast<std::size_t>(spec_.channels) ||
      batch.dim(2) != static_cast<std::size_t>(spec_.input_size) ||
      batch.dim(3) != static_cast<std::size_t>(spec_.input_size)) {
    throw ShapeError("forward: expected batch [N," + std::to_string(spec_.channels) + "," +
                     std::to_string(spec_.input_size) + "," + std::to_string(spec_.input_size) +
                     "], got " + shape_str(batch.shape()));
  }
  ForwardResult r = spec_.family == Family::mobile_mini ? forward_mobile(tape, batch, opts)
                                                        : forward_dense(tape, batch, opts);
  r.logits = head_logits(tape, r.activations.at("cam_target"), opts);
  r.probs = ops::softmax(tape, r.logits);
  return r;
}

Tensor Model::head_logits(Tape* tape, const Tensor& cam_target, ForwardOptions opts) const {
  Tensor pooled = ops::global_avg_pool(tape, cam_target);
  Tensor dropped = ops::dropout(tape, pooled, spec_.dropout_rate, opts.training,
                                {seed_, opts.step, kHeadDropoutLayer});
  return ops::dense(tape, dropped, param("head.w"), param("head.b"));
}

ForwardResult Model::forward_mobile(Tape* tape, const Tensor& x, ForwardOptions) const {
  using namespace ops;
  ForwardResult r;
  Tensor h = relu6(tape, conv2d(tape, x, param("stem.w"), param("stem.b"), 2, 1));
  h = avg_pool2(tape, h);
  r.activations["stem"] = h;

  // Inverted residual: 1x1 expand -> depthwise kxk -> linear 1x1 project.
  auto block = [&](const std::string& name, const Tensor& in, int stride) {
    Tensor e = relu6(tape, conv2d(tape, in, param(name + ".expand.w"), param(name + ".expand.b")));
    Tensor d = relu6(tape, depthwise_conv2d(tape, e, param(name + ".dw.w"), param(name + ".dw.b"),
                                            stride, spec_.dw_kernel / 2));
    Tensor p = conv2d(tape, d, param(name + ".project.w"), param(name + ".project.b"));
    if (p.shape() == in.shape()) p = add(tape, p, in);
    return p;
  };
  h = block("block1", h, 2);
  r.activations["block1"] = h;
  h = block("block2", h, 1);
  r.activations["block2"] = h;
  // 1x1 expansion + ReLU6 before pooling, as in the full architecture's last layer
  h = relu6(tape, conv2d(tape, h, param("final.w"), param("final.b")));
  r.activations["cam_target"] = h;
  return r;
}

ForwardResult Model::forward_dense(Tape* tape, const Tensor& x, ForwardOptions) const {
  using namespace ops;
  ForwardResult r;
  Tensor h = avg_pool2(tape, conv2d(tape, x, param("stem.w"), param("stem.b"), 2, 1));
  r.activations["stem"] = h;

  // Each layer sees the concatenation of everything before it.
  auto block = [&](const std::string& name, Tensor in) {
    for (int l = 0; l < spec_.layers_per_block; ++l) {
      const std::string p = name + ".layer" + std::to_string(l);
      Tensor grown = conv2d(tape, relu(tape, in), param(p + ".w"), param(p + ".b"), 1, 1);
      in = concat_channels(tape, in, grown);
    }
    return in;
  };
  h = block("block1", h);
  r.activations["block1"] = h;
  h = avg_pool2(tape, conv2d(tape, relu(tape, h), param("transition.w"), param("transition.b")));
  r.activations["transition"] = h;
  h = block("block2", h);
  r.activations["block2"] = h;
  h = relu(tape, h);
  r.activations["cam_target"] = h;
  return r;
}

void Model::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "model.json", {{"spec", to_json(spec_)}, {"seed", seed_}});
  const auto params = parameters();
  save_checkpoint(dir / "weights.json", params);
}

Model Model::load(const std::filesystem::path& dir) {
  const Json meta = read_json_file(dir / "model.json");
  Model m = build(model_spec_from_json(meta.at("spec")), meta.at("seed").get<std::uint64_t>());
  const auto loaded = load_checkpoint(dir / "weights.json");
  auto targets = m.parameters();
  assign_checkpoint(loaded, targets);
  return m;
}

}  // namespace neuroscope
