#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "recql/relation.hpp"

namespace recql {

// Shape of a generated training run. layer_sizes runs input..output, so
// weight layer l (1-based) connects layer l-1 to layer l.
struct FfnnConfig {
  std::vector<int> layer_sizes{32, 16, 16, 4};
  int iterations = 30;
  int batch_size = 64;
  double alpha = 0.05;
  int chunk = 16;
  uint64_t seed = 42;
  // When set, DATA_INPUT and DATA_OUTPUT carry a BATCH column with one fresh
  // batch per iteration and the layer-0 activations filter on it. Off by
  // default: every iteration reads the same rows.
  bool rotate_batch = false;

  int weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

// Throws Config when fewer than two layers are given, any size or count is
// non-positive, alpha is not a positive finite number, or chunk is narrower
// than the output layer. softmax and the one-hot labels act on whole rows,
// so the final layer must fit in a single chunk.
void validate_config(const FfnnConfig& config);

// Full recursive training program: weight and bias seeds from W_INIT and
// B_INIT, forward pass (A, WI), backward pass (E, W, B), a per-iteration
// LOSS table, and an EXECUTE block exporting each loss and materializing
// the final model. The text is deterministic for a given config.
std::string generate_program(const FfnnConfig& config);

struct SyntheticDataset {
  Relation data_input;   // DATA_INPUT: input activations, chunked by column
  Relation data_output;  // DATA_OUTPUT: one-hot labels, one chunk wide
};

// Inputs are uniform [0,1) samples; labels are one-hot by the argmax of a
// fixed random teacher matrix drawn first from the seed, so the mapping is
// exactly representable and learnable. Values depend on the seed and layer
// sizes only, never on chunk: samples are drawn densely in row-major order
// and then sliced.
SyntheticDataset generate_dataset(const FfnnConfig& config);

struct InitialModel {
  Relation w_init;  // W_INIT(LAYER, ROW, COL, MAT): chunk-blocked weights
  Relation b_init;  // B_INIT(LAYER, COL, VEC): zero bias blocks
};

// Glorot-uniform weights: layer l is drawn densely as fan_in x fan_out
// values in uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)), then
// sliced into chunk x chunk blocks, so values never depend on chunk.
// Biases are zero. The weight stream seeds with the bitwise complement of
// config.seed so it never shares draws with the dataset stream.
InitialModel initialize_model(const FfnnConfig& config);

struct FfnnFiles {
  std::filesystem::path program;              // ffnn.rsql
  std::vector<std::filesystem::path> tables;  // CSVs referenced by LOAD
};

// Writes ffnn.rsql plus the four base-table CSVs into dir (created if
// needed). Bytes are deterministic for a given config.
FfnnFiles write_ffnn_files(const FfnnConfig& config, const std::filesystem::path& dir);

}  // namespace recql
