#ifndef OCNNA_PRESETS_HPP
#define OCNNA_PRESETS_HPP

#include <string>
#include <vector>

#include "ocnna/model.hpp"

namespace ocnna {

// Named desk-scale architectures for the CLI and the test fixtures.
// Weights come back uninitialized (zeros); run initialize_weights before
// training.

// tiny3: three 3x3 conv blocks of 16 filters (conv-relu-maxpool) and a
// dense classification head.
ModelGraph build_tiny3(const std::vector<std::size_t>& input_shape, std::size_t class_count);

// Lookup by preset name; throws ConfigError for unknown names.
ModelGraph build_preset(const std::string& name, const std::vector<std::size_t>& input_shape,
                        std::size_t class_count);

std::vector<std::string> preset_names();

} // namespace ocnna

#endif
