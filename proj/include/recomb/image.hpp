#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recomb/prompt_kit.hpp"

namespace recomb {

/// Encoded image bytes (PNG or JPEG).
struct ImageBlob {
  std::vector<std::uint8_t> bytes;

  bool empty() const { return bytes.empty(); }
  bool operator==(const ImageBlob&) const = default;
};

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws invalid-argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

enum class ImageFormat { Png, Jpeg, Unknown };
ImageFormat sniff_format(std::span<const std::uint8_t> data);

struct ImageInfo {
  int width = 0;
  int height = 0;
  int channels = 0;
};

/// Fully decodes the blob; empty when it cannot be decoded.
std::optional<ImageInfo> probe_image(const ImageBlob& blob);

struct PngHeader {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

/// Reads the IHDR chunk without decoding pixel data.
std::optional<PngHeader> read_png_header(std::span<const std::uint8_t> data);

/// Decodes once and returns each region re-encoded as PNG. Throws
/// ProviderError(UndecodableImage) when the blob does not decode and
/// invalid-argument when a region leaves the image.
std::vector<ImageBlob> crop_regions(const ImageBlob& blob, std::span<const PixelRect> regions);

/// Deterministic colored-rectangle test picture, PNG encoded.
ImageBlob synthesize_image(int width, int height, std::uint64_t seed);

}  // namespace recomb
