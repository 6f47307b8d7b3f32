#pragma once

#include <filesystem>
#include <string>

#include "glrc/trainer.hpp"

namespace glrc {

/// Parses the sectioned key=value run configuration. Unknown sections or
/// keys and out-of-range values raise ConfigError. Relative data paths are
/// resolved against the config file's directory.
///
///   [data]    interactions | split_dir, train_ratio, valid_ratio, test_ratio
///   [model]   dim, teacher_layers, student_layers, leaky_slope, average_layers
///   [loss]    lambda1..lambda4, teacher_decay, tau1..tau3, epsilon
///   [train]   mode, seed, learning_rate, epochs, teacher_lr, teacher_epochs,
///             patience, eval_every, batch_t1, batch_t2, batch_bpr, plain_sgd,
///             disable_l1, disable_l2, disable_l3
///   [output]  dir
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical key=value rendering of every field; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

/// FNV-1a 64 of the canonical rendering, hex encoded.
std::string config_hash(const RunConfig& config);

}  // namespace glrc
