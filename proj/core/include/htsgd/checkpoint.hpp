#pragma once

#include <filesystem>
#include <iosfwd>

#include "htsgd/network.hpp"

namespace htsgd {

// Checkpoint text format (UTF-8, LF):
//
//   htsgd-checkpoint 1
//   n <units>
//   d <features>
//   l <classes>
//   bias <0|1>
//   mode <fixed|trainable>
//   activation <relu|sigmoid|tanh>
//   data
//   <column 0: p values separated by single spaces>
//   ...
//   <column n-1>
//
// One line per unit (column-major Theta, p = unit_dim()). Values are written
// in shortest round-trip decimal form, so save/load is lossless.

void write_checkpoint(std::ostream& out, const NetworkParams& params);
NetworkParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace htsgd
