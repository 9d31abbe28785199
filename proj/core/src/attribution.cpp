#include "frugal/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "frugal/error.hpp"

namespace frugal {

std::string_view to_string(AttributionMethod m) noexcept {
  switch (m) {
    case AttributionMethod::rollout: return "rollout";
    case AttributionMethod::globenc: return "globenc";
    case AttributionMethod::decompx: return "decompx";
  }
  return "unknown";
}

std::string_view to_string(SaliencyUnit u) noexcept {
  return u == SaliencyUnit::word ? "word" : "subword";
}

std::string_view to_string(ReductionMode m) noexcept {
  return m == ReductionMode::cls_row ? "cls_row" : "column_sum";
}

std::optional<AttributionMethod> parse_attribution_method(std::string_view s) noexcept {
  if (s == "rollout") return AttributionMethod::rollout;
  if (s == "globenc") return AttributionMethod::globenc;
  if (s == "decompx") return AttributionMethod::decompx;
  return std::nullopt;
}

std::optional<SaliencyUnit> parse_unit(std::string_view s) noexcept {
  if (s == "word") return SaliencyUnit::word;
  if (s == "subword") return SaliencyUnit::subword;
  return std::nullopt;
}

std::optional<ReductionMode> parse_reduction_mode(std::string_view s) noexcept {
  if (s == "cls_row") return ReductionMode::cls_row;
  if (s == "column_sum") return ReductionMode::column_sum;
  return std::nullopt;
}

Matrix mix_with_identity(const Matrix& m) {
  Matrix out = 0.5 * m;
  out.diagonal().array() += 0.5;
  return out;
}

Matrix rollout(std::span<const Matrix> layers) {
  if (layers.empty()) return {};
  Matrix acc = mix_with_identity(layers.front());
  for (std::size_t l = 1; l < layers.size(); ++l) {
    acc = mix_with_identity(layers[l]) * acc;
  }
  return acc;
}

AttributionMatrix attention_rollout(const ForwardTrace& trace) {
  std::vector<Matrix> mean_attention;
  mean_attention.reserve(trace.layers.size());
  for (const auto& layer : trace.layers) {
    Matrix mean = Matrix::Zero(layer.attention.front().rows(), layer.attention.front().cols());
    for (const auto& head : layer.attention) mean += head;
    mean /= static_cast<double>(layer.attention.size());
    mean_attention.push_back(std::move(mean));
  }
  return {rollout(mean_attention), AttributionMethod::rollout, 0};
}

namespace {

// g_z(v) = (v - mean(v)) / s(z) * gamma: the linear part of LN, with the
// denominator taken from the full (undecomposed) vector.
void normalize_part(Eigen::Ref<RowVector> v, double scale_std, const RowVector& gamma) {
  const double mean = v.mean();
  v = ((v.array() - mean) / scale_std * gamma.array()).matrix();
}

double relative_error(const RowVector& got, const RowVector& want) {
  const double denom = std::max(want.norm(), 1e-12);
  return (got - want).norm() / denom;
}

double max_row_error(const Matrix& got, const Matrix& want) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.rows(); ++i) {
    worst = std::max(worst, relative_error(got.row(i), want.row(i)));
  }
  return worst;
}

}  // namespace

GlobEncLayer globenc_layer(const ForwardTrace& trace, const EncoderBundle& bundle, std::size_t l) {
  const auto& lt = trace.layers.at(l);
  const auto& weights = bundle.layers.at(l);
  const Matrix& x = trace.hidden.at(l);
  const Eigen::Index n = x.rows();
  const std::size_t heads = lt.attention.size();

  GlobEncLayer out{Matrix(n, n), Matrix(n, n)};
  RowVector part(x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      part.setZero();
      for (std::size_t h = 0; h < heads; ++h) part += lt.attention[h](i, j) * lt.head_values[h].row(j);
      if (i == j) part += x.row(i);
      normalize_part(part, lt.attention_norm.std[i], weights.attention_norm.gamma);
      out.attention_block(i, j) = part.norm();
      normalize_part(part, lt.output_norm.std[i], weights.output_norm.gamma);
      out.encoder(i, j) = part.norm();
    }
  }
  return out;
}

AttributionMatrix globenc(const ForwardTrace& trace, const EncoderBundle& bundle) {
  std::vector<Matrix> per_layer;
  std::size_t degenerate = 0;
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    Matrix norms = globenc_layer(trace, bundle, l).encoder;
    const Eigen::Index n = norms.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sum = norms.row(i).sum();
      if (sum > 0.0 && std::isfinite(sum)) {
        norms.row(i) /= sum;
      } else {
        norms.row(i).setConstant(1.0 / static_cast<double>(n));
        ++degenerate;
      }
    }
    per_layer.push_back(std::move(norms));
  }
  return {rollout(per_layer), AttributionMethod::globenc, degenerate};
}

Vector activation_ratio(const Vector& zeta, Activation kind, double epsilon) {
  const double slope_at_zero = kind == Activation::identity ? 1.0 : 0.5;
  Vector theta(zeta.size());
  for (Eigen::Index t = 0; t < zeta.size(); ++t) {
    const double z = zeta[t];
    theta[t] = std::abs(z) >= epsilon ? activate(kind, z) / z : slope_at_zero;
  }
  return theta;
}

Matrix DecompState::total() const {
  Matrix sum = bias;
  for (const auto& s : sources) sum += s;
  return sum;
}

double Decomposition::max_error() const noexcept {
  double worst = head_error;
  for (const double e : layer_error) worst = std::max(worst, e);
  return worst;
}

namespace {

// Applies g_{z_i} row-wise to one decomposed part, using the recorded
// statistics of the undecomposed residual sum.
void normalize_rows(Matrix& part, const LayerNormStats& stats, const RowVector& gamma) {
  for (Eigen::Index i = 0; i < part.rows(); ++i) normalize_part(part.row(i), stats.std[i], gamma);
}

// Head-mixed value path without biases: sum_h alpha^h (s W_V)_h W_O,h.
Matrix mix_heads(const Matrix& s, const LayerTrace& lt, const EncoderLayer& w, Eigen::Index dh) {
  const Matrix values = s * w.value_weight;
  Matrix context(s.rows(), s.cols());
  for (std::size_t h = 0; h < lt.attention.size(); ++h) {
    const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
    context.middleCols(off, dh).noalias() = lt.attention[h] * values.middleCols(off, dh);
  }
  return context * w.output_weight;
}

void check_drift(double error, double tolerance, const std::string& where) {
  if (!(error <= tolerance)) {
    throw Error(Errc::consistency_failure,
                "decomposition drifted from the traced value at " + where + ": relative error " +
                    std::to_string(error) + " exceeds " + std::to_string(tolerance));
  }
}

}  // namespace

Decomposition decompose(const ForwardTrace& trace, const EncoderBundle& bundle,
                        const DecompOptions& options) {
  const auto& cfg = bundle.config;
  const Eigen::Index n = static_cast<Eigen::Index>(trace.length());
  const Eigen::Index d = cfg.hidden_dim;
  const Eigen::Index dh = cfg.head_dim();

  DecompState state;
  state.sources.assign(static_cast<std::size_t>(n), Matrix::Zero(n, d));
  for (Eigen::Index k = 0; k < n; ++k) state.sources[static_cast<std::size_t>(k)].row(k) = trace.hidden[0].row(k);
  state.bias = Matrix::Zero(n, d);

  Decomposition out;
  const auto record = [&](std::size_t depth) {
    const double err = max_row_error(state.total(), trace.hidden[depth]);
    out.layer_error.push_back(err);
    if (options.observer) options.observer(depth, state);
    check_drift(err, options.abort_tolerance, "depth " + std::to_string(depth));
  };
  record(0);

  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const auto& lt = trace.layers[l];
    const auto& w = bundle.layers[l];

    // Attention + residual. The value bias passes through row-stochastic
    // attention unchanged, so it lands on the bias track as b_V W_O.
    for (auto& src : state.sources) src += mix_heads(src, lt, w, dh);
    Matrix bias_attention = mix_heads(state.bias, lt, w, dh);
    bias_attention.rowwise() += w.value_bias * w.output_weight + w.output_bias;
    state.bias += bias_attention;

    // First LN.
    for (auto& src : state.sources) normalize_rows(src, lt.attention_norm, w.attention_norm.gamma);
    normalize_rows(state.bias, lt.attention_norm, w.attention_norm.gamma);
    state.bias.rowwise() += w.attention_norm.beta;

    // FFN, linearised per position by theta(zeta_i).
    Matrix theta(n, cfg.ffn_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      theta.row(i) = activation_ratio(lt.ffn_pre.row(i).transpose(), cfg.activation,
                                      options.ratio_epsilon).transpose();
    }
    for (auto& src : state.sources) {
      const Matrix zeta = src * w.ffn_in_weight;
      src += theta.cwiseProduct(zeta) * w.ffn_out_weight;
    }
    {
      Matrix zeta = state.bias * w.ffn_in_weight;
      zeta.rowwise() += w.ffn_in_bias;
      Matrix ffn = theta.cwiseProduct(zeta) * w.ffn_out_weight;
      ffn.rowwise() += w.ffn_out_bias;
      state.bias += ffn;
    }

    // Second LN.
    for (auto& src : state.sources) normalize_rows(src, lt.output_norm, w.output_norm.gamma);
    normalize_rows(state.bias, lt.output_norm, w.output_norm.gamma);
    state.bias.rowwise() += w.output_norm.beta;

    record(l + 1);
  }

  const Eigen::Index classes = cfg.num_classes;
  out.class_contributions.resize(classes, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.class_contributions.col(k) =
        bundle.classifier_weight * state.sources[static_cast<std::size_t>(k)].row(0).transpose();
  }
  out.class_bias = bundle.classifier_weight * state.bias.row(0).transpose() +
                   bundle.classifier_bias.transpose();

  const Vector reassembled = out.class_contributions.rowwise().sum() + out.class_bias;
  const Vector y = classify(bundle, trace);
  out.head_error = (reassembled - y).norm() / std::max(y.norm(), 1e-12);
  check_drift(out.head_error, options.abort_tolerance, "classifier head");
  return out;
}

SaliencyVector decompx(const ForwardTrace& trace, const EncoderBundle& bundle,
                       std::optional<int> target, const std::vector<bool>& special_mask,
                       ScoreSign sign) {
  if (special_mask.size() != trace.length()) {
    throw Error(Errc::length_mismatch, "special mask length does not match the trace");
  }
  const int classes = bundle.config.num_classes;
  int c = 0;
  if (target) {
    if (*target < 0 || *target >= classes) {
      throw Error(Errc::invalid_argument, "target class " + std::to_string(*target) +
                                              " outside [0, " + std::to_string(classes) + ")");
    }
    c = *target;
  } else {
    Eigen::Index best = 0;
    trace.logits.maxCoeff(&best);
    c = static_cast<int>(best);
  }

  const auto decomposition = decompose(trace, bundle);
  SaliencyVector out;
  out.unit = SaliencyUnit::subword;
  out.method = AttributionMethod::decompx;
  out.target_class = c;
  for (std::size_t k = 0; k < trace.length(); ++k) {
    if (special_mask[k]) continue;
    const double v = decomposition.class_contributions(c, static_cast<Eigen::Index>(k));
    out.scores.push_back(sign == ScoreSign::magnitude ? std::abs(v) : v);
  }
  return out;
}

SaliencyVector matrix_to_saliency(const AttributionMatrix& m, ReductionMode mode,
                                  const std::vector<bool>& special_mask) {
  const Eigen::Index n = m.values.rows();
  if (static_cast<Eigen::Index>(special_mask.size()) != n || m.values.cols() != n) {
    throw Error(Errc::length_mismatch, "special mask length does not match the attribution grid");
  }
  SaliencyVector out;
  out.method = m.method;
  out.unit = SaliencyUnit::subword;

  Eigen::Index cls = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (special_mask[static_cast<std::size_t>(i)]) {
      cls = i;
      break;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (special_mask[static_cast<std::size_t>(j)]) continue;
    double s = 0.0;
    if (mode == ReductionMode::cls_row) {
      s = m.values(cls, j);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!special_mask[static_cast<std::size_t>(i)]) s += m.values(i, j);
      }
    }
    out.scores.push_back(s);
  }
  return out;
}

SaliencyVector aggregate_to_words(const SaliencyVector& s, std::span<const std::int32_t> word_index,
                                  WordPooling pooling) {
  if (s.unit != SaliencyUnit::subword) {
    throw Error(Errc::invalid_argument, "aggregate_to_words expects subword scores");
  }
  if (word_index.size() != s.size()) {
    throw Error(Errc::length_mismatch, "word index length does not match the saliency vector");
  }
  std::int32_t words = 0;
  for (const auto w : word_index) {
    if (w < 0) throw Error(Errc::invalid_argument, "special token in word aggregation");
    words = std::max(words, w + 1);
  }
  std::vector<double> acc(static_cast<std::size_t>(words),
                          pooling == WordPooling::max ? -std::numeric_limits<double>::infinity() : 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(words), 0);
  for (std::size_t t = 0; t < s.size(); ++t) {
    const auto w = static_cast<std::size_t>(word_index[t]);
    acc[w] = pooling == WordPooling::max ? std::max(acc[w], s.scores[t]) : acc[w] + s.scores[t];
    ++counts[w];
  }
  for (std::size_t w = 0; w < acc.size(); ++w) {
    if (counts[w] == 0) {
      throw Error(Errc::invalid_argument, "word " + std::to_string(w) + " has no subword scores");
    }
    if (pooling == WordPooling::mean) acc[w] /= static_cast<double>(counts[w]);
  }
  SaliencyVector out = s;
  out.unit = SaliencyUnit::word;
  out.scores = std::move(acc);
  return out;
}

}  // namespace frugal
