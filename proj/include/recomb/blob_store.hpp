#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "recomb/image.hpp"

namespace recomb {

/// Content-addressed image storage; ids are sha256 hex of the bytes.
/// Implementations are safe for concurrent use.
class BlobStore {
 public:
  virtual ~BlobStore() = default;
  virtual std::string put(const ImageBlob& blob) = 0;
  virtual std::optional<ImageBlob> get(std::string_view id) const = 0;
};

class MemoryBlobStore final : public BlobStore {
 public:
  std::string put(const ImageBlob& blob) override;
  std::optional<ImageBlob> get(std::string_view id) const override;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ImageBlob, std::less<>> blobs_;
};

class FileBlobStore final : public BlobStore {
 public:
  explicit FileBlobStore(std::filesystem::path dir);

  std::string put(const ImageBlob& blob) override;
  std::optional<ImageBlob> get(std::string_view id) const override;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex write_mu_;
};

/// Writes via a temporary file and rename so readers never see partial data.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
std::string read_file(const std::filesystem::path& path);

}  // namespace recomb
