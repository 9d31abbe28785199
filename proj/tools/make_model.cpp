// Writes a randomly initialised encoder sized to a vocabulary file. Used by
// the build to produce the tiny demo model instead of committing a binary.
#include <iostream>

#include <CLI11.hpp>

#include "frugal/encoder.hpp"
#include "frugal/error.hpp"
#include "frugal/tokenizer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a random encoder container", "frugal-make-model"};
  std::string vocab_path;
  std::string output;
  std::uint64_t seed = 20250401;
  frugal::EncoderConfig cfg;
  cfg.num_layers = 2;
  cfg.num_heads = 4;
  cfg.hidden_dim = 32;
  cfg.ffn_dim = 64;
  cfg.max_positions = 64;
  cfg.num_classes = 2;
  std::string activation = "gelu";
  app.add_option("--vocab", vocab_path)->required();
  app.add_option("--output", output)->required();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--layers", cfg.num_layers)->capture_default_str();
  app.add_option("--heads", cfg.num_heads)->capture_default_str();
  app.add_option("--hidden", cfg.hidden_dim)->capture_default_str();
  app.add_option("--ffn", cfg.ffn_dim)->capture_default_str();
  app.add_option("--positions", cfg.max_positions)->capture_default_str();
  app.add_option("--classes", cfg.num_classes)->capture_default_str();
  app.add_option("--activation", activation)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto act = frugal::parse_activation(activation);
    if (!act) throw frugal::Error(frugal::Errc::invalid_config, "unknown activation " + activation);
    cfg.activation = *act;
    cfg.vocab_size = static_cast<int>(frugal::load_vocab(vocab_path).size());
    frugal::save_model(frugal::random_bundle(cfg, seed), output);
  } catch (const std::exception& e) {
    std::cerr << "frugal-make-model: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
