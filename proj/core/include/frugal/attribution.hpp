#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "frugal/encoder.hpp"
#include "frugal/linalg.hpp"

namespace frugal {

enum class AttributionMethod { rollout, globenc, decompx };
enum class SaliencyUnit { subword, word };
enum class ReductionMode { cls_row, column_sum };
enum class WordPooling { mean, max };
enum class ScoreSign { signed_score, magnitude };

std::string_view to_string(AttributionMethod m) noexcept;
std::string_view to_string(SaliencyUnit u) noexcept;
std::string_view to_string(ReductionMode m) noexcept;
std::optional<AttributionMethod> parse_attribution_method(std::string_view s) noexcept;
std::optional<SaliencyUnit> parse_unit(std::string_view s) noexcept;
std::optional<ReductionMode> parse_reduction_mode(std::string_view s) noexcept;

/// Entry (i, j) is the influence of input token j on output token i.
struct AttributionMatrix {
  Matrix values;
  AttributionMethod method = AttributionMethod::rollout;
  /// Layers x rows whose norms were all zero and fell back to a uniform row.
  std::size_t degenerate_rows = 0;
};

struct SaliencyVector {
  std::vector<double> scores;
  SaliencyUnit unit = SaliencyUnit::subword;
  AttributionMethod method = AttributionMethod::rollout;
  int target_class = -1;  // decompx only

  std::size_t size() const noexcept { return scores.size(); }
};

/// 0.5 * m + 0.5 * I.
Matrix mix_with_identity(const Matrix& m);

/// Rolls out per-layer row-stochastic grids: result = mix(L) * ... * mix(1).
Matrix rollout(std::span<const Matrix> layers);

/// Head-averaged raw attention, rolled out across layers.
AttributionMatrix attention_rollout(const ForwardTrace& trace);

/// Per-layer norm analysis. `attention_block` holds ||z~_{i<-j}|| (residual +
/// first LN); `encoder` holds ||x~_{i<-j}|| after also applying the second
/// LN's scaling, with the FFN approximated by its residual path.
struct GlobEncLayer {
  Matrix attention_block;
  Matrix encoder;
};
GlobEncLayer globenc_layer(const ForwardTrace& trace, const EncoderBundle& bundle, std::size_t layer);

/// Row-normalised `encoder` norms, rolled out across layers with residual
/// mixing. All-zero rows fall back to uniform and are counted.
AttributionMatrix globenc(const ForwardTrace& trace, const EncoderBundle& bundle);

/// theta[t] = f(z[t]) / z[t] where |z[t]| >= epsilon, else the activation's
/// slope at the origin (gelu 0.5, relu 0.5, identity 1).
Vector activation_ratio(const Vector& zeta, Activation kind, double epsilon = 1e-8);

/// Source-attributed hidden states at one depth: sources[k].row(i) = x_{i<=k}.
struct DecompState {
  std::vector<Matrix> sources;
  Matrix bias;

  Matrix total() const;
};

struct DecompOptions {
  /// Reconstruction drift beyond this aborts with Errc::consistency_failure.
  double abort_tolerance = 1e-4;
  double ratio_epsilon = 1e-8;
  /// Called with depth 0..L after each state is built.
  std::function<void(std::size_t, const DecompState&)> observer;
};

struct Decomposition {
  Matrix class_contributions;  // C x n, entry (c, k) = y_{c<=k}
  Vector class_bias;           // head term of the bias track, per class
  std::vector<double> layer_error;  // relative error of each depth 0..L
  double head_error = 0.0;

  double max_error() const noexcept;
};

/// Propagates per-token decompositions through every layer and the
/// classifier head. Additive biases (projections, LN beta, FFN) accumulate
/// on a separate bias track so the parts sum exactly to the traced values.
Decomposition decompose(const ForwardTrace& trace, const EncoderBundle& bundle,
                        const DecompOptions& options = {});

/// Per-token y_{c*<=k} for non-special tokens. With no target, the
/// predicted (argmax) class is used.
SaliencyVector decompx(const ForwardTrace& trace, const EncoderBundle& bundle,
                       std::optional<int> target, const std::vector<bool>& special_mask,
                       ScoreSign sign = ScoreSign::signed_score);

/// cls_row: s_j = m[cls][j]; column_sum: s_j = sum over non-special i of
/// m[i][j]. Special tokens are dropped from the output.
SaliencyVector matrix_to_saliency(const AttributionMatrix& m, ReductionMode mode,
                                  const std::vector<bool>& special_mask);

/// `word_index` gives the word of each entry in `s`.
SaliencyVector aggregate_to_words(const SaliencyVector& s, std::span<const std::int32_t> word_index,
                                  WordPooling pooling = WordPooling::mean);

}  // namespace frugal
