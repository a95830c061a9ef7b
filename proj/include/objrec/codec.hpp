#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "objrec/image.hpp"

namespace objrec {

enum class ImageFormat { Png, Jpeg };

/// Quality passed to libjpeg; the encoder's default.
inline constexpr int kJpegQuality = 75;

struct EncodedStimulus {
  std::vector<std::uint8_t> bytes;
  ImageFormat format = ImageFormat::Png;
  bool lossy = false;
  int quality = 100;  ///< kJpegQuality for JPEG, 100 for PNG
};

/// 8-bit quantization round(v * 255) after clamping to [0,1].
std::uint8_t quantize(double v) noexcept;

EncodedStimulus encode_stimulus(const Image& img, ImageFormat format);
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Image load_image(const std::filesystem::path& path);
/// Format chosen from the extension (.jpg/.jpeg -> JPEG, otherwise PNG).
void save_image(const std::filesystem::path& path, const Image& img);

}  // namespace objrec
