#include "recomb/blob_store.hpp"

#include <fstream>
#include <sstream>

#include "recomb/error.hpp"

namespace recomb {

namespace {

bool valid_id(std::string_view id) {
  if (id.size() != 64) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Storage, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Storage, "cannot commit " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string MemoryBlobStore::put(const ImageBlob& blob) {
  std::string id = sha256_hex(blob.bytes);
  std::lock_guard lock(mu_);
  blobs_.try_emplace(id, blob);
  return id;
}

std::optional<ImageBlob> MemoryBlobStore::get(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(id);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

std::size_t MemoryBlobStore::size() const {
  std::lock_guard lock(mu_);
  return blobs_.size();
}

FileBlobStore::FileBlobStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::Storage, "cannot create blob dir " + dir_.string());
}

std::string FileBlobStore::put(const ImageBlob& blob) {
  std::string id = sha256_hex(blob.bytes);
  const auto path = dir_ / id;
  std::lock_guard lock(write_mu_);
  if (!std::filesystem::exists(path)) {
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(blob.bytes.data()),
                                             blob.bytes.size()));
  }
  return id;
}

std::optional<ImageBlob> FileBlobStore::get(std::string_view id) const {
  if (!valid_id(id)) return std::nullopt;
  const auto path = dir_ / std::string(id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::string data = read_file(path);
  return ImageBlob{std::vector<std::uint8_t>(data.begin(), data.end())};
}

}  // namespace recomb
