// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/models.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "avse/common.hpp"

namespace avse::models {

using nn::Tensor;

Variant variant_from_string(const std::string& name) {
  if (name == "audio_only" || name == "audio" || name == "a") return Variant::kAudioOnly;
  if (name == "visual_only" || name == "visual" || name == "v") return Variant::kVisualOnly;
  if (name == "audio_visual" || name == "av") return Variant::kAudioVisual;
  throw ConfigError("unknown model variant: " + name);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kAudioOnly: return "audio_only";
    case Variant::kVisualOnly: return "visual_only";
    case Variant::kAudioVisual: return "audio_visual";
  }
  return "?";
}

int ModelConfig::pooled_dim(int v, int n_pools) {
  for (int i = 0; i < n_pools; ++i) v /= 2;
  return v;
}

int ModelConfig::visual_feat_dim() const {
  return conv_maps[3] * pooled_dim(video_h, 4) * pooled_dim(video_w, 4);
}

int ModelConfig::fusion_input_width() const {
  switch (variant) {
    case Variant::kAudioOnly: return lstm_cells;
    case Variant::kVisualOnly: return lstm_cells;
    case Variant::kAudioVisual: return 2 * lstm_cells;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (context_depth < 0) throw ConfigError("ModelConfig: context_depth must be >= 0");
  if (audio_bins < 1 || lstm_cells < 1 || fusion_hidden < 1)
    throw ConfigError("ModelConfig: dimensions must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0))
    throw ConfigError("ModelConfig: dropout_p must be in [0,1)");
  for (int c : conv_maps)
    if (c < 1) throw ConfigError("ModelConfig: conv_maps entries must be >= 1");
  if (uses_video()) {
    if (video_h < 1 || video_w < 1) throw ConfigError("ModelConfig: video dims must be >= 1");
    if (pooled_dim(video_h, 4) < 1 || pooled_dim(video_w, 4) < 1)
      throw ConfigError("ModelConfig: video " + std::to_string(video_h) + "x" +
                        std::to_string(video_w) + " collapses to zero after 4 pools (need >= 16)");
  }
}

namespace {

Tensor uniform_tensor(std::vector<int> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

void init_lstm(nn::ParamStore& store, const std::string& prefix, int in, int hidden,
               Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  store.add(prefix + ".wx", uniform_tensor({in, 4 * hidden}, bound, rng));
  store.add(prefix + ".wh", uniform_tensor({hidden, 4 * hidden}, bound, rng));
  Tensor b({4 * hidden});
  for (int j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;  // forget gate bias
  store.add(prefix + ".b", std::move(b));
}

void init_dense(nn::ParamStore& store, const std::string& prefix, int in, int out,
                Rng& rng) {
  const double bound = std::sqrt(6.0 / (in + out));
  store.add(prefix + ".w", uniform_tensor({in, out}, bound, rng));
  store.add(prefix + ".b", Tensor({out}));
}

void init_conv(nn::ParamStore& store, const std::string& prefix, int cin, int cout,
               Rng& rng) {
  const double bound = std::sqrt(6.0 / (cin * 9 + cout * 9));
  store.add(prefix + ".w", uniform_tensor({cout, cin, 3, 3}, bound, rng));
  store.add(prefix + ".b", Tensor({cout}));
}

}  // namespace

struct MaskModel::ForwardState {
  int batch = 0;
  int steps = 0;
  // audio branch
  Tensor audio_in;  // transformed features [B,T,F]
  nn::LstmCache a_l1, a_l2;
  nn::DropoutCache a_d1, a_d2;
  // visual branch
  Tensor v_conv_in[4];  // input of each conv layer, [B*T,C,h,w]
  nn::MaxPoolCache v_pool[4];
  nn::LstmCache v_lstm;
  nn::DropoutCache v_drop;
  // fusion
  Tensor concat;
  Tensor fc1_act_in;  // dense output before relu
  Tensor fc1_out;     // after relu
  Tensor pred;        // sigmoid output [B,F]
};

MaskModel::MaskModel(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const int h = config_.lstm_cells;
  // Parameter creation order fixes the init draw order.
  if (config_.uses_audio()) {
    init_lstm(params_, "audio.lstm1", config_.audio_bins, h, rng);
    init_lstm(params_, "audio.lstm2", h, h, rng);
  }
  if (config_.uses_video()) {
    int cin = 1;
    for (int i = 0; i < 4; ++i) {
      init_conv(params_, "visual.conv" + std::to_string(i + 1), cin, config_.conv_maps[static_cast<size_t>(i)], rng);
      cin = config_.conv_maps[static_cast<size_t>(i)];
    }
    init_lstm(params_, "visual.lstm", config_.visual_feat_dim(), h, rng);
  }
  init_dense(params_, "fusion.hidden", config_.fusion_input_width(), config_.fusion_hidden, rng);
  init_dense(params_, "fusion.out", config_.fusion_hidden, config_.audio_bins, rng);
}

void MaskModel::check_inputs(const Tensor* audio, const Tensor* video) const {
  const int t_ctx = config_.context_frames();
  if (config_.uses_audio()) {
    if (!audio) throw ModalityError("forward: variant " + to_string(config_.variant) +
                                    " requires audio input");
    if (audio->rank() != 3 || audio->dim(1) != t_ctx || audio->dim(2) != config_.audio_bins)
      throw ShapeError("forward: audio must be [B," + std::to_string(t_ctx) + "," +
                       std::to_string(config_.audio_bins) + "], got " + audio->shape_str());
  }
  if (config_.uses_video()) {
    if (!video) throw ModalityError("forward: variant " + to_string(config_.variant) +
                                    " requires video input");
    if (video->rank() != 5 || video->dim(1) != t_ctx || video->dim(2) != 1 ||
        video->dim(3) != config_.video_h || video->dim(4) != config_.video_w)
      throw ShapeError("forward: video must be [B," + std::to_string(t_ctx) + ",1," +
                       std::to_string(config_.video_h) + "," + std::to_string(config_.video_w) +
                       "], got " + video->shape_str());
  }
  if (config_.uses_audio() && config_.uses_video() && audio->dim(0) != video->dim(0))
    throw ShapeError("forward: audio and video batch sizes differ");
}

Tensor MaskModel::run_forward(const Tensor* audio, const Tensor* video, bool training,
                              Rng* rng, ForwardState* state) const {
  check_inputs(audio, video);
  const int batch = config_.uses_audio() ? audio->dim(0) : video->dim(0);
  const int steps = config_.context_frames();
  const int h = config_.lstm_cells;

  Rng local_rng(0);
  if (training && rng == nullptr) throw Error("forward: training mode needs an rng");
  Rng& r = rng ? *rng : local_rng;

  ForwardState local;
  ForwardState& st = state ? *state : local;
  st.batch = batch;
  st.steps = steps;

  Tensor audio_feat, visual_feat;

  if (config_.uses_audio()) {
    Tensor feat = *audio;
    if (config_.log_power) {
      double* d = feat.data();
      for (int64_t i = 0; i < feat.size(); ++i) d[i] = std::log(d[i] + 1e-12);
    }
    if (state) st.audio_in = feat;
    Tensor h1 = nn::lstm_forward(feat, params_.at("audio.lstm1.wx").value,
                                 params_.at("audio.lstm1.wh").value,
                                 params_.at("audio.lstm1.b").value,
                                 state ? &st.a_l1 : nullptr);
    Tensor d1 = nn::dropout_forward(h1, config_.dropout_p, r, training,
                                    state ? &st.a_d1 : nullptr);
    Tensor h2 = nn::lstm_forward(d1, params_.at("audio.lstm2.wx").value,
                                 params_.at("audio.lstm2.wh").value,
                                 params_.at("audio.lstm2.b").value,
                                 state ? &st.a_l2 : nullptr);
    Tensor last = nn::last_step(h2);
    audio_feat = nn::dropout_forward(last, config_.dropout_p, r, training,
                                     state ? &st.a_d2 : nullptr);
  }

  if (config_.uses_video()) {
    Tensor x = video->reshaped({batch * steps, 1, config_.video_h, config_.video_w});
    for (int layer = 0; layer < 4; ++layer) {
      if (state) st.v_conv_in[layer] = x;
      const std::string prefix = "visual.conv" + std::to_string(layer + 1);
      Tensor conv = nn::conv2d_forward(x, params_.at(prefix + ".w").value,
                                       params_.at(prefix + ".b").value);
      x = nn::maxpool2_forward(conv, state ? &st.v_pool[layer] : nullptr);
    }
    Tensor seq = x.reshaped({batch, steps, config_.visual_feat_dim()});
    Tensor hv = nn::lstm_forward(seq, params_.at("visual.lstm.wx").value,
                                 params_.at("visual.lstm.wh").value,
                                 params_.at("visual.lstm.b").value,
                                 state ? &st.v_lstm : nullptr);
    Tensor last = nn::last_step(hv);
    visual_feat = nn::dropout_forward(last, config_.dropout_p, r, training,
                                      state ? &st.v_drop : nullptr);
  }

  // Fusion head; concatenation order is (audio, visual).
  Tensor z({batch, config_.fusion_input_width()});
  {
    int off = 0;
    if (config_.uses_audio()) {
      for (int bi = 0; bi < batch; ++bi)
        std::copy(audio_feat.data() + static_cast<int64_t>(bi) * h,
                  audio_feat.data() + static_cast<int64_t>(bi + 1) * h,
                  z.data() + static_cast<int64_t>(bi) * z.dim(1) + off);
      off += h;
    }
    if (config_.uses_video()) {
      for (int bi = 0; bi < batch; ++bi)
        std::copy(visual_feat.data() + static_cast<int64_t>(bi) * h,
                  visual_feat.data() + static_cast<int64_t>(bi + 1) * h,
                  z.data() + static_cast<int64_t>(bi) * z.dim(1) + off);
    }
  }
  if (state) st.concat = z;

  Tensor a1 = nn::dense_forward(z, params_.at("fusion.hidden.w").value,
                                params_.at("fusion.hidden.b").value);
  Tensor r1 = nn::relu_forward(a1);
  Tensor o = nn::dense_forward(r1, params_.at("fusion.out.w").value,
                               params_.at("fusion.out.b").value);
  Tensor pred = nn::sigmoid_forward(o);
  if (state) {
    st.fc1_act_in = a1;
    st.fc1_out = r1;
    st.pred = pred;
  }
  return pred;
}

void MaskModel::run_backward(const ForwardState& st, const Tensor& grad_pred) {
  const int batch = st.batch;
  const int steps = st.steps;
  const int h = config_.lstm_cells;

  Tensor d_out_pre = nn::sigmoid_backward(st.pred, grad_pred);
  Tensor d_fc1_out = nn::dense_backward(st.fc1_out, params_.at("fusion.out.w").value,
                                        d_out_pre, &params_.at("fusion.out.w").grad,
                                        &params_.at("fusion.out.b").grad);
  Tensor d_fc1_in = nn::relu_backward(st.fc1_act_in, d_fc1_out);
  Tensor d_concat = nn::dense_backward(st.concat, params_.at("fusion.hidden.w").value,
                                       d_fc1_in, &params_.at("fusion.hidden.w").grad,
                                       &params_.at("fusion.hidden.b").grad);

  int off = 0;
  if (config_.uses_audio()) {
    Tensor d_audio({batch, h});
    for (int bi = 0; bi < batch; ++bi)
      std::copy(d_concat.data() + static_cast<int64_t>(bi) * d_concat.dim(1) + off,
                d_concat.data() + static_cast<int64_t>(bi) * d_concat.dim(1) + off + h,
                d_audio.data() + static_cast<int64_t>(bi) * h);
    off += h;

    Tensor d_last = nn::dropout_backward(d_audio, st.a_d2);
    Tensor d_h2 = nn::last_step_grad(d_last, steps);
    Tensor d_d1 = nn::lstm_backward(st.a_l2, params_.at("audio.lstm2.wx").value,
                                    params_.at("audio.lstm2.wh").value, d_h2,
                                    &params_.at("audio.lstm2.wx").grad,
                                    &params_.at("audio.lstm2.wh").grad,
                                    &params_.at("audio.lstm2.b").grad);
    Tensor d_h1 = nn::dropout_backward(d_d1, st.a_d1);
    nn::lstm_backward(st.a_l1, params_.at("audio.lstm1.wx").value,
                      params_.at("audio.lstm1.wh").value, d_h1,
                      &params_.at("audio.lstm1.wx").grad,
                      &params_.at("audio.lstm1.wh").grad,
                      &params_.at("audio.lstm1.b").grad);
  }

  if (config_.uses_video()) {
    Tensor d_visual({batch, h});
    for (int bi = 0; bi < batch; ++bi)
      std::copy(d_concat.data() + static_cast<int64_t>(bi) * d_concat.dim(1) + off,
                d_concat.data() + static_cast<int64_t>(bi) * d_concat.dim(1) + off + h,
                d_visual.data() + static_cast<int64_t>(bi) * h);

    Tensor d_last = nn::dropout_backward(d_visual, st.v_drop);
    Tensor d_hv = nn::last_step_grad(d_last, steps);
    Tensor d_seq = nn::lstm_backward(st.v_lstm, params_.at("visual.lstm.wx").value,
                                     params_.at("visual.lstm.wh").value, d_hv,
                                     &params_.at("visual.lstm.wx").grad,
                                     &params_.at("visual.lstm.wh").grad,
                                     &params_.at("visual.lstm.b").grad);
    Tensor d_pool = d_seq.reshaped({batch * steps, config_.conv_maps[3],
                                    ModelConfig::pooled_dim(config_.video_h, 4),
                                    ModelConfig::pooled_dim(config_.video_w, 4)});
    for (int layer = 3; layer >= 0; --layer) {
      const std::string prefix = "visual.conv" + std::to_string(layer + 1);
      Tensor d_conv = nn::maxpool2_backward(d_pool, st.v_pool[layer]);
      d_pool = nn::conv2d_backward(st.v_conv_in[layer], params_.at(prefix + ".w").value,
                                   d_conv, &params_.at(prefix + ".w").grad,
                                   &params_.at(prefix + ".b").grad);
    }
  }
}

Tensor MaskModel::infer(const Tensor* audio, const Tensor* video) const {
  return run_forward(audio, video, /*training=*/false, nullptr, nullptr);
}

double MaskModel::train_step(const Tensor* audio, const Tensor* video,
                             const Tensor& targets, const nn::AdamConfig& opt, Rng& rng) {
  params_.zero_grads();
  ForwardState st;
  Tensor pred = run_forward(audio, video, /*training=*/true, &rng, &st);
  Tensor grad_pred;
  const double loss = nn::bce_loss(pred, targets, &grad_pred);
  run_backward(st, grad_pred);
  nn::adam_step(params_, opt);
  return loss;
}

double MaskModel::eval_loss(const Tensor* audio, const Tensor* video,
                            const Tensor& targets) const {
  Tensor pred = run_forward(audio, video, /*training=*/false, nullptr, nullptr);
  return nn::bce_loss(pred, targets, nullptr);
}

double MaskModel::loss_for_check(const Tensor* audio, const Tensor* video,
                                 const Tensor& targets, bool with_grad, bool training,
                                 Rng& rng) {
  ForwardState st;
  Tensor pred = run_forward(audio, video, training, &rng, with_grad ? &st : nullptr);
  Tensor grad_pred;
  const double loss = nn::bce_loss(pred, targets, with_grad ? &grad_pred : nullptr);
  if (with_grad) run_backward(st, grad_pred);
  return loss;
}

// ---- config file IO ----------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ModelConfig load_model_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_model_config: cannot open " + path);
  ModelConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "variant") cfg.variant = variant_from_string(val);
      else if (key == "context_depth") cfg.context_depth = std::stoi(val);
      else if (key == "audio_bins") cfg.audio_bins = std::stoi(val);
      else if (key == "lstm_cells") cfg.lstm_cells = std::stoi(val);
      else if (key == "fusion_hidden") cfg.fusion_hidden = std::stoi(val);
      else if (key == "dropout_p") cfg.dropout_p = std::stod(val);
      else if (key == "video_h") cfg.video_h = std::stoi(val);
      else if (key == "video_w") cfg.video_w = std::stoi(val);
      else if (key == "log_power") cfg.log_power = (val == "1" || val == "true");
      else if (key == "conv_maps") {
        std::stringstream ss(val);
        std::string item;
        size_t i = 0;
        while (std::getline(ss, item, ',')) {
          if (i >= 4) throw ConfigError("conv_maps needs exactly 4 entries");
          cfg.conv_maps[i++] = std::stoi(trim(item));
        }
        if (i != 4) throw ConfigError("conv_maps needs exactly 4 entries");
      } else {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  return cfg;
}

void save_model_config(const std::string& path, const ModelConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw IoError("save_model_config: cannot open " + path);
  os << "variant = " << to_string(cfg.variant) << "\n";
  os << "context_depth = " << cfg.context_depth << "\n";
  os << "audio_bins = " << cfg.audio_bins << "\n";
  os << "lstm_cells = " << cfg.lstm_cells << "\n";
  os << "conv_maps = " << cfg.conv_maps[0] << "," << cfg.conv_maps[1] << ","
     << cfg.conv_maps[2] << "," << cfg.conv_maps[3] << "\n";
  os << "fusion_hidden = " << cfg.fusion_hidden << "\n";
  os << "dropout_p = " << cfg.dropout_p << "\n";
  os << "video_h = " << cfg.video_h << "\n";
  os << "video_w = " << cfg.video_w << "\n";
  os << "log_power = " << (cfg.log_power ? 1 : 0) << "\n";
  if (!os) throw IoError("save_model_config: write failed for " + path);
}

}  // namespace avse::models
