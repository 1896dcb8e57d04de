#include "recomb/image.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "recomb/error.hpp"

namespace recomb {

std::string sha256_hex(std::span<const std::uint8_t> data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Storage, "sha256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_hex(std::string_view data) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) invalid_argument("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) invalid_argument("malformed base64");
  std::size_t size = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  if (!clean.empty() && clean.back() == '=') --size;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

ImageFormat sniff_format(std::span<const std::uint8_t> d) {
  static constexpr std::array<std::uint8_t, 8> kPng{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (d.size() >= kPng.size() && std::equal(kPng.begin(), kPng.end(), d.begin())) {
    return ImageFormat::Png;
  }
  if (d.size() >= 3 && d[0] == 0xff && d[1] == 0xd8 && d[2] == 0xff) return ImageFormat::Jpeg;
  return ImageFormat::Unknown;
}

namespace {

cv::Mat decode(const ImageBlob& blob) {
  if (blob.bytes.empty() || sniff_format(blob.bytes) == ImageFormat::Unknown) return {};
  try {
    cv::Mat raw(1, static_cast<int>(blob.bytes.size()), CV_8UC1,
                const_cast<std::uint8_t*>(blob.bytes.data()));
    return cv::imdecode(raw, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return {};
  }
}

ImageBlob encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", image, buf)) throw Error(ErrorCode::Storage, "png encoding failed");
  return ImageBlob{std::move(buf)};
}

}  // namespace

std::optional<ImageInfo> probe_image(const ImageBlob& blob) {
  cv::Mat m = decode(blob);
  if (m.empty()) return std::nullopt;
  return ImageInfo{m.cols, m.rows, m.channels()};
}

std::optional<PngHeader> read_png_header(std::span<const std::uint8_t> d) {
  if (sniff_format(d) != ImageFormat::Png || d.size() < 33) return std::nullopt;
  auto be32 = [&](std::size_t off) {
    return static_cast<int>((std::uint32_t{d[off]} << 24) | (std::uint32_t{d[off + 1]} << 16) |
                            (std::uint32_t{d[off + 2]} << 8) | std::uint32_t{d[off + 3]});
  };
  if (d[12] != 'I' || d[13] != 'H' || d[14] != 'D' || d[15] != 'R') return std::nullopt;
  return PngHeader{be32(16), be32(20), d[24], d[25]};
}

std::vector<ImageBlob> crop_regions(const ImageBlob& blob, std::span<const PixelRect> regions) {
  cv::Mat image = decode(blob);
  if (image.empty()) throw ProviderError(ProviderFailure::UndecodableImage, "image does not decode", false);
  std::vector<ImageBlob> out;
  out.reserve(regions.size());
  for (const PixelRect& r : regions) {
    if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0 || r.x + r.w > image.cols ||
        r.y + r.h > image.rows) {
      invalid_argument("crop region outside the image");
    }
    out.push_back(encode_png(image(cv::Rect(r.x, r.y, r.w, r.h))));
  }
  return out;
}

ImageBlob synthesize_image(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) invalid_argument("image dimensions must be positive");
  std::mt19937_64 rng(seed);
  cv::Mat img(height, width, CV_8UC3, cv::Scalar(245, 245, 245));
  std::uniform_int_distribution<int> color(0, 255);
  std::uniform_int_distribution<int> px(0, width - 1);
  std::uniform_int_distribution<int> py(0, height - 1);
  for (int i = 0; i < 6; ++i) {
    cv::Point a(px(rng), py(rng));
    cv::Point b(px(rng), py(rng));
    cv::rectangle(img, a, b, cv::Scalar(color(rng), color(rng), color(rng)), cv::FILLED);
  }
  return encode_png(img);
}

}  // namespace recomb
