#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "signtopic/pipeline.hpp"

namespace signtopic {

inline constexpr char kModelMagic[8] = {'S', 'I', 'G', 'N', 'T', 'P', 'C', '1'};

// Layout: magic, u64 payload length, payload. All integers and floats are
// little-endian; every array carries its own length.
std::vector<std::uint8_t> serialize(const TrainedPipeline& pipeline);
// Throws ModelError with the failing byte offset.
TrainedPipeline deserialize(std::span<const std::uint8_t> bytes);

void save_pipeline(const TrainedPipeline& pipeline, const std::string& path);
TrainedPipeline load_pipeline(const std::string& path);

}  // namespace signtopic
