#pragma once

#include <iosfwd>
#include <string>

#include "motsc/nn/adamw.hpp"
#include "motsc/nn/dense_net.hpp"

namespace motsc::nn {

// Binary network checkpoint (layout in docs/formats.md). Round-trips are
// bit-exact, including optimizer moments when an optimizer is passed.
void save_checkpoint(std::ostream& os, const DenseNet& net, const AdamW* opt = nullptr);
void load_checkpoint(std::istream& is, DenseNet& net, AdamW* opt = nullptr);

void save_checkpoint_file(const std::string& path, const DenseNet& net,
                          const AdamW* opt = nullptr);
void load_checkpoint_file(const std::string& path, DenseNet& net, AdamW* opt = nullptr);

}  // namespace motsc::nn
