#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/linalg.hpp"

namespace frugal {

enum class Activation { gelu, relu, identity };

std::string_view to_string(Activation a) noexcept;
std::optional<Activation> parse_activation(std::string_view s) noexcept;
double activate(Activation a, double x) noexcept;

struct EncoderConfig {
  int num_layers = 1;
  int num_heads = 1;
  int hidden_dim = 4;
  int ffn_dim = 4;
  int vocab_size = 1;
  int max_positions = 1;
  int num_classes = 1;
  double ln_epsilon = 1e-12;
  Activation activation = Activation::gelu;

  int head_dim() const noexcept { return hidden_dim / num_heads; }

  /// Throws Error{invalid_config}.
  void validate() const;
};

struct LayerNormParams {
  RowVector gamma;
  RowVector beta;
};

/// Projections act on row vectors: y = x W + b, with W stored (in x out).
struct EncoderLayer {
  Matrix query_weight, key_weight, value_weight, output_weight;  // d x d
  RowVector query_bias, key_bias, value_bias, output_bias;       // 1 x d
  LayerNormParams attention_norm;
  Matrix ffn_in_weight;   // d x ffn
  RowVector ffn_in_bias;  // 1 x ffn
  Matrix ffn_out_weight;  // ffn x d
  RowVector ffn_out_bias; // 1 x d
  LayerNormParams output_norm;
};

struct EncoderBundle {
  EncoderConfig config;
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_positions x d
  LayerNormParams embedding_norm;
  std::vector<EncoderLayer> layers;
  Matrix classifier_weight;   // C x d, applied to the final start-marker state
  RowVector classifier_bias;  // 1 x C

  /// Throws Error{shape_mismatch | non_finite_weight}.
  void validate() const;
};

/// Throws Error{missing_file | malformed_header | invalid_config |
/// shape_mismatch | non_finite_weight}. Layout is described in
/// docs/model_format.md.
EncoderBundle load_model(const std::filesystem::path& path);
void save_model(const EncoderBundle& bundle, const std::filesystem::path& path);

/// SHA-256 of the serialized container, hex encoded.
std::string model_hash(const EncoderBundle& bundle);

/// Deterministic small-scale random initialisation, for tests and tooling.
EncoderBundle random_bundle(const EncoderConfig& config, std::uint64_t seed);

struct LayerNormStats {
  Vector mean;  // per position
  Vector std;   // sqrt(var + eps), per position
};

struct LayerTrace {
  std::vector<Matrix> attention;    // per head, n x n, row i attends over j
  std::vector<Matrix> head_values;  // per head, n x d: f^h(x_j) = (x_j W_V + b_V)_h W_O,h
  Matrix attention_output;          // sum_h alpha^h f^h + b_O
  Matrix attention_residual;        // attention_output + x
  LayerNormStats attention_norm;
  Matrix attention_normed;
  Matrix ffn_pre;                   // zeta, n x ffn
  Matrix ffn_act;
  Matrix ffn_output;
  Matrix ffn_residual;              // ffn_output + attention_normed
  LayerNormStats output_norm;
};

struct ForwardTrace {
  std::vector<std::int32_t> ids;
  Matrix embedding_sum;             // token + position embedding, n x d
  LayerNormStats embedding_norm;
  std::vector<Matrix> hidden;       // L + 1 states; hidden[0] is the normed embedding
  std::vector<LayerTrace> layers;
  Vector logits;                    // class scores y

  std::size_t length() const noexcept { return ids.size(); }
};

/// Throws Error{sequence_too_long | id_out_of_range | empty_input}.
ForwardTrace forward(const EncoderBundle& bundle, std::span<const std::int32_t> ids);

/// y = W_cls x^L_0 + b_cls.
Vector classify(const EncoderBundle& bundle, const ForwardTrace& trace);

/// Row-wise post-LN: (z - mean) / sqrt(var + eps) * gamma + beta.
Matrix layer_norm(const Matrix& z, const LayerNormParams& params, double eps,
                  LayerNormStats* stats = nullptr);

}  // namespace frugal
