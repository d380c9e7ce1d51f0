#ifndef OCNNA_SERIALIZE_HPP
#define OCNNA_SERIALIZE_HPP

#include <cstdint>
#include <filesystem>

#include "ocnna/dataset.hpp"
#include "ocnna/model.hpp"

namespace ocnna {

// .ocnn / .ocnd layout: 4-byte magic, u16 format version, u64 manifest
// length, UTF-8 JSON manifest, then raw little-endian payload blobs
// (f32 tensor data; datasets append a u32 label blob).
inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

void save_model(const ModelGraph& g, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

void save_dataset(const LabeledDataset& d, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

} // namespace ocnna

#endif
