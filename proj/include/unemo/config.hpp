#pragma once

#include <string>

#include "unemo/training.hpp"

namespace unemo {

// Flat key=value experiment configuration covering the world generator, the
// corpus layout, model dimensions and the training schedule. Unknown keys
// are rejected.
struct RunConfig {
  WorldSpec world;
  int train_worlds = 300;
  int val_worlds = 50;
  int episodes_per_world = 3;

  int d_model = 64;
  int z_dim = 16;
  int s_dim = 32;
  int mwm_layers = 3;
  int v_max = 12;
  int feedback_layers = 2;

  TrainConfig train;

  int ae_epochs = 20;
  double ae_lr = 1e-3;

  std::string corpus_dir = "corpus";
  std::string ae_checkpoint = "ae.ckpt";
};

ModelDims config_dims(const RunConfig& cfg);

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace unemo
