#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cardlv/lv_detector.hpp"
#include "cardlv/shape_net.hpp"

namespace cardlv {

/// Trained parameters persist as <base>.bin (raw little-endian float64
/// tensors, row-major, concatenated) plus a <base>.json sidecar recording the
/// model kind, tensor shapes/offsets and free-form metadata such as
/// hyperparameters and the training seed.
void save_detector(const DetectorParams& params, const std::filesystem::path& base,
                   const std::map<std::string, std::string>& meta = {});
DetectorParams load_detector(const std::filesystem::path& base);

void save_shape_net(const StackedAEParams& params, const std::filesystem::path& base,
                    const std::map<std::string, std::string>& meta = {});
StackedAEParams load_shape_net(const std::filesystem::path& base);

} // namespace cardlv
