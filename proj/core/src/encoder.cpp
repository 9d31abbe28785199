#include "frugal/encoder.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "frugal/error.hpp"
#include "frugal/hash.hpp"
#include "frugal/random.hpp"

namespace frugal {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::gelu: return "gelu";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "unknown";
}

std::optional<Activation> parse_activation(std::string_view s) noexcept {
  if (s == "gelu") return Activation::gelu;
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  return std::nullopt;
}

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::gelu: return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

void EncoderConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(Errc::invalid_config, msg); };
  if (num_layers < 1 || num_heads < 1 || hidden_dim < 1 || ffn_dim < 1 || vocab_size < 1 ||
      max_positions < 1 || num_classes < 1) {
    fail("all encoder dimensions must be >= 1");
  }
  if (hidden_dim % num_heads != 0) {
    fail("hidden_dim " + std::to_string(hidden_dim) + " is not divisible by num_heads " +
         std::to_string(num_heads));
  }
  if (!(ln_epsilon > 0.0) || !std::isfinite(ln_epsilon)) fail("ln_epsilon must be > 0");
}

namespace {

// Every tensor of a bundle, in container order, with its expected shape.
struct TensorRef {
  std::string name;
  Eigen::Index rows;  // expected by the config
  Eigen::Index cols;
  Eigen::Index actual_rows;
  Eigen::Index actual_cols;
  double* data;
  const double* cdata;
};

template <typename Bundle>
std::vector<TensorRef> tensor_table(Bundle& b) {
  const auto& c = b.config;
  const Eigen::Index d = c.hidden_dim, f = c.ffn_dim;
  std::vector<TensorRef> out;
  auto add = [&](std::string name, auto& m, Eigen::Index rows, Eigen::Index cols) {
    double* data = nullptr;
    if constexpr (!std::is_const_v<std::remove_reference_t<decltype(m)>>) {
      m.resize(rows, cols);
      data = m.data();
    }
    out.push_back({std::move(name), rows, cols, m.rows(), m.cols(), data, m.data()});
  };
  add("embeddings.token", b.token_embedding, c.vocab_size, d);
  add("embeddings.position", b.position_embedding, c.max_positions, d);
  add("embeddings.norm.gamma", b.embedding_norm.gamma, 1, d);
  add("embeddings.norm.beta", b.embedding_norm.beta, 1, d);
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    auto& layer = b.layers[l];
    const std::string p = "layer." + std::to_string(l) + ".";
    add(p + "attention.query.weight", layer.query_weight, d, d);
    add(p + "attention.query.bias", layer.query_bias, 1, d);
    add(p + "attention.key.weight", layer.key_weight, d, d);
    add(p + "attention.key.bias", layer.key_bias, 1, d);
    add(p + "attention.value.weight", layer.value_weight, d, d);
    add(p + "attention.value.bias", layer.value_bias, 1, d);
    add(p + "attention.output.weight", layer.output_weight, d, d);
    add(p + "attention.output.bias", layer.output_bias, 1, d);
    add(p + "attention.norm.gamma", layer.attention_norm.gamma, 1, d);
    add(p + "attention.norm.beta", layer.attention_norm.beta, 1, d);
    add(p + "ffn.in.weight", layer.ffn_in_weight, d, f);
    add(p + "ffn.in.bias", layer.ffn_in_bias, 1, f);
    add(p + "ffn.out.weight", layer.ffn_out_weight, f, d);
    add(p + "ffn.out.bias", layer.ffn_out_bias, 1, d);
    add(p + "output.norm.gamma", layer.output_norm.gamma, 1, d);
    add(p + "output.norm.beta", layer.output_norm.beta, 1, d);
  }
  add("classifier.weight", b.classifier_weight, c.num_classes, d);
  add("classifier.bias", b.classifier_bias, 1, c.num_classes);
  return out;
}

// Shape table without touching storage, for validating an existing bundle.
std::vector<TensorRef> const_tensor_table(const EncoderBundle& b) {
  return tensor_table<const EncoderBundle>(b);
}

constexpr std::string_view kMagic = "frugalprompt-encoder 1";

void put_le_double(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xFF);
}

double get_le_double(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string serialize(const EncoderBundle& bundle) {
  const auto& c = bundle.config;
  std::ostringstream header;
  header << kMagic << '\n'
         << "num_layers=" << c.num_layers << '\n'
         << "num_heads=" << c.num_heads << '\n'
         << "hidden_dim=" << c.hidden_dim << '\n'
         << "ffn_dim=" << c.ffn_dim << '\n'
         << "vocab_size=" << c.vocab_size << '\n'
         << "max_positions=" << c.max_positions << '\n'
         << "num_classes=" << c.num_classes << '\n'
         << "ln_epsilon=" << format_double(c.ln_epsilon) << '\n'
         << "activation=" << to_string(c.activation) << '\n';
  std::string payload;
  for (const auto& t : const_tensor_table(bundle)) {
    header << "tensor=" << t.name << ' ' << t.rows << ' ' << t.cols << ' ' << payload.size()
           << '\n';
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i) put_le_double(payload, t.cdata[i]);
  }
  header << '\n';
  return header.str() + payload;
}

[[noreturn]] void malformed(const std::string& msg) {
  throw Error(Errc::malformed_header, "malformed model header: " + msg);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) malformed("bad value for " + key + ": '" + value + "'");
  return out;
}

struct ManifestEntry {
  Eigen::Index rows;
  Eigen::Index cols;
  std::size_t offset;
};

}  // namespace

void EncoderBundle::validate() const {
  config.validate();
  if (layers.size() != static_cast<std::size_t>(config.num_layers)) {
    throw Error(Errc::shape_mismatch, "layer count does not match num_layers");
  }
  for (const auto& t : const_tensor_table(*this)) {
    if (t.actual_rows != t.rows || t.actual_cols != t.cols) {
      throw Error(Errc::shape_mismatch,
                  "tensor " + t.name + " has shape " + std::to_string(t.actual_rows) + "x" +
                      std::to_string(t.actual_cols) + ", expected " + std::to_string(t.rows) +
                      "x" + std::to_string(t.cols));
    }
    for (Eigen::Index k = 0; k < t.rows * t.cols; ++k) {
      if (!std::isfinite(t.cdata[k])) {
        throw Error(Errc::non_finite_weight, "tensor " + t.name +
                                                 " has a non-finite value at flat index " +
                                                 std::to_string(k));
      }
    }
  }
}

EncoderBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open model file " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const auto header_end = blob.find("\n\n");
  if (header_end == std::string::npos) malformed("no blank line terminating the header");
  std::istringstream header(blob.substr(0, header_end + 1));
  const std::size_t payload_begin = header_end + 2;
  const std::size_t payload_size = blob.size() - payload_begin;

  std::string line;
  if (!std::getline(header, line) || line != kMagic) malformed("missing magic line");

  EncoderBundle bundle;
  auto& c = bundle.config;
  std::map<std::string, ManifestEntry> manifest;
  std::map<std::string, bool> seen;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> keys{
      {"num_layers", [&](auto& k, auto& v) { c.num_layers = parse_number<int>(k, v); }},
      {"num_heads", [&](auto& k, auto& v) { c.num_heads = parse_number<int>(k, v); }},
      {"hidden_dim", [&](auto& k, auto& v) { c.hidden_dim = parse_number<int>(k, v); }},
      {"ffn_dim", [&](auto& k, auto& v) { c.ffn_dim = parse_number<int>(k, v); }},
      {"vocab_size", [&](auto& k, auto& v) { c.vocab_size = parse_number<int>(k, v); }},
      {"max_positions", [&](auto& k, auto& v) { c.max_positions = parse_number<int>(k, v); }},
      {"num_classes", [&](auto& k, auto& v) { c.num_classes = parse_number<int>(k, v); }},
      {"ln_epsilon", [&](auto& k, auto& v) { c.ln_epsilon = parse_number<double>(k, v); }},
      {"activation",
       [&](auto&, auto& v) {
         auto a = parse_activation(v);
         if (!a) malformed("unknown activation '" + v + "'");
         c.activation = *a;
       }},
  };

  while (std::getline(header, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) malformed("line without '=': '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tensor") {
      std::istringstream fields(value);
      std::string name;
      long long rows = -1, cols = -1, offset = -1;
      std::string extra;
      if (!(fields >> name >> rows >> cols >> offset) || (fields >> extra) || rows < 0 ||
          cols < 0 || offset < 0) {
        malformed("bad tensor entry '" + value + "'");
      }
      if (!manifest.emplace(name, ManifestEntry{rows, cols, static_cast<std::size_t>(offset)}).second) {
        malformed("tensor " + name + " listed twice");
      }
      continue;
    }
    auto it = keys.find(key);
    if (it == keys.end()) malformed("unknown key '" + key + "'");
    if (seen[key]) malformed("key '" + key + "' repeated");
    seen[key] = true;
    it->second(key, value);
  }
  for (const auto& [key, _] : keys) {
    if (!seen[key]) malformed("missing key '" + key + "'");
  }
  c.validate();

  bundle.layers.resize(static_cast<std::size_t>(c.num_layers));
  auto table = tensor_table(bundle);
  if (manifest.size() != table.size()) {
    for (const auto& [name, _] : manifest) {
      bool known = false;
      for (const auto& t : table) known = known || t.name == name;
      if (!known) malformed("unexpected tensor '" + name + "'");
    }
  }
  const auto* payload = reinterpret_cast<const unsigned char*>(blob.data() + payload_begin);
  for (auto& t : table) {
    auto it = manifest.find(t.name);
    if (it == manifest.end()) malformed("missing tensor '" + t.name + "'");
    const auto& entry = it->second;
    if (entry.rows != t.rows || entry.cols != t.cols) {
      throw Error(Errc::shape_mismatch,
                  "tensor " + t.name + " declared " + std::to_string(entry.rows) + "x" +
                      std::to_string(entry.cols) + ", config requires " + std::to_string(t.rows) +
                      "x" + std::to_string(t.cols));
    }
    const std::size_t bytes = static_cast<std::size_t>(t.rows * t.cols) * 8;
    if (entry.offset > payload_size || bytes > payload_size - entry.offset) {
      malformed("tensor " + t.name + " extends past the end of the payload");
    }
    for (Eigen::Index k = 0; k < t.rows * t.cols; ++k) {
      const double v = get_le_double(payload + entry.offset + static_cast<std::size_t>(k) * 8);
      if (!std::isfinite(v)) {
        throw Error(Errc::non_finite_weight, "tensor " + t.name +
                                                 " has a non-finite value at flat index " +
                                                 std::to_string(k));
      }
      t.data[k] = v;
    }
  }
  return bundle;
}

void save_model(const EncoderBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::missing_file, "cannot write model file " + path.string());
  const auto blob = serialize(bundle);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error(Errc::missing_file, "write failed for " + path.string());
}

std::string model_hash(const EncoderBundle& bundle) { return sha256_hex(serialize(bundle)); }

EncoderBundle random_bundle(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  EncoderBundle bundle;
  bundle.config = config;
  bundle.layers.resize(static_cast<std::size_t>(config.num_layers));
  SplitMix64 rng(seed);
  for (auto& t : tensor_table(bundle)) {
    const bool is_gamma = t.name.ends_with(".gamma");
    const bool is_vector = t.rows == 1 || t.name == "classifier.bias";
    const bool is_embedding = t.name.starts_with("embeddings.") && !is_vector;
    // Projections: fan-in scaled so activations stay O(1) through the stack.
    const double fan_in = t.name == "classifier.weight" ? static_cast<double>(t.cols)
                                                        : static_cast<double>(t.rows);
    for (Eigen::Index k = 0; k < t.rows * t.cols; ++k) {
      double v;
      if (is_gamma) {
        v = 1.0 + rng.uniform(-0.2, 0.2);
      } else if (is_vector) {
        v = rng.uniform(-0.1, 0.1);
      } else if (is_embedding) {
        v = rng.uniform(-1.0, 1.0);
      } else {
        v = rng.uniform(-1.0, 1.0) * std::sqrt(3.0 / fan_in);
      }
      t.data[k] = v;
    }
  }
  return bundle;
}

Matrix layer_norm(const Matrix& z, const LayerNormParams& params, double eps,
                  LayerNormStats* stats) {
  const Eigen::Index n = z.rows();
  const double d = static_cast<double>(z.cols());
  Matrix out(n, z.cols());
  Vector means(n), stds(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = z.row(i).sum() / d;
    const double var = (z.row(i).array() - mean).square().sum() / d;
    const double sd = std::sqrt(var + eps);
    means[i] = mean;
    stds[i] = sd;
    out.row(i) = ((z.row(i).array() - mean) / sd * params.gamma.array() + params.beta.array()).matrix();
  }
  if (stats) {
    stats->mean = std::move(means);
    stats->std = std::move(stds);
  }
  return out;
}

ForwardTrace forward(const EncoderBundle& bundle, std::span<const std::int32_t> ids) {
  const auto& c = bundle.config;
  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw Error(Errc::empty_input, "forward() needs at least one token");
  if (n > c.max_positions) {
    throw Error(Errc::sequence_too_long, "sequence of " + std::to_string(n) +
                                             " tokens exceeds max_positions " +
                                             std::to_string(c.max_positions));
  }
  for (const auto id : ids) {
    if (id < 0 || id >= c.vocab_size) {
      throw Error(Errc::id_out_of_range, "token id " + std::to_string(id) + " outside vocab of " +
                                             std::to_string(c.vocab_size));
    }
  }

  ForwardTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  trace.embedding_sum.resize(n, c.hidden_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    trace.embedding_sum.row(i) = bundle.token_embedding.row(ids[static_cast<std::size_t>(i)]) +
                                 bundle.position_embedding.row(i);
  }
  trace.hidden.push_back(
      layer_norm(trace.embedding_sum, bundle.embedding_norm, c.ln_epsilon, &trace.embedding_norm));

  const Eigen::Index dh = c.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto& layer : bundle.layers) {
    const Matrix& x = trace.hidden.back();
    LayerTrace lt;
    const Matrix q = (x * layer.query_weight).rowwise() + layer.query_bias;
    const Matrix k = (x * layer.key_weight).rowwise() + layer.key_bias;
    const Matrix v = (x * layer.value_weight).rowwise() + layer.value_bias;

    lt.attention_output = Matrix::Zero(n, c.hidden_dim);
    for (int h = 0; h < c.num_heads; ++h) {
      const Eigen::Index off = h * dh;
      Matrix scores = q.middleCols(off, dh) * k.middleCols(off, dh).transpose() * scale;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp().matrix();
        scores.row(i) /= scores.row(i).sum();
      }
      Matrix values = v.middleCols(off, dh) * layer.output_weight.middleRows(off, dh);
      lt.attention_output.noalias() += scores * values;
      lt.attention.push_back(std::move(scores));
      lt.head_values.push_back(std::move(values));
    }
    lt.attention_output.rowwise() += layer.output_bias;
    lt.attention_residual = lt.attention_output + x;
    lt.attention_normed =
        layer_norm(lt.attention_residual, layer.attention_norm, c.ln_epsilon, &lt.attention_norm);
    lt.ffn_pre = (lt.attention_normed * layer.ffn_in_weight).rowwise() + layer.ffn_in_bias;
    lt.ffn_act = lt.ffn_pre.unaryExpr([a = c.activation](double z) { return activate(a, z); });
    lt.ffn_output = (lt.ffn_act * layer.ffn_out_weight).rowwise() + layer.ffn_out_bias;
    lt.ffn_residual = lt.ffn_output + lt.attention_normed;
    trace.hidden.push_back(
        layer_norm(lt.ffn_residual, layer.output_norm, c.ln_epsilon, &lt.output_norm));
    trace.layers.push_back(std::move(lt));
  }
  trace.logits = classify(bundle, trace);
  return trace;
}

Vector classify(const EncoderBundle& bundle, const ForwardTrace& trace) {
  const RowVector& cls = trace.hidden.back().row(0);
  return bundle.classifier_weight * cls.transpose() + bundle.classifier_bias.transpose();
}

}  // namespace frugal
