#include "recomb/board_store.hpp"

#include "recomb/blob_store.hpp"
#include "recomb/error.hpp"

namespace recomb {

namespace fs = std::filesystem;

bool valid_board_id(std::string_view id) {
  if (id.size() != 18 || id.substr(0, 2) != "b-") return false;
  for (char c : id.substr(2)) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

BoardStore::BoardStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "boards", ec);
  if (ec) throw Error(ErrorCode::Storage, "cannot create " + (root_ / "boards").string() + ": " + ec.message());
}

fs::path BoardStore::board_file(std::string_view id) const {
  if (!valid_board_id(id)) throw Error(ErrorCode::NotFound, "no board " + std::string(id));
  return root_ / "boards" / std::string(id) / "board.json";
}

void BoardStore::save(const Board& board) const {
  const fs::path file = board_file(board.id);
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  if (ec) throw Error(ErrorCode::Storage, "cannot create " + file.parent_path().string());
  write_file_atomic(file, json(board).dump(1));
}

std::optional<Board> BoardStore::load(std::string_view id) const {
  if (!valid_board_id(id)) return std::nullopt;
  const fs::path file = board_file(id);
  if (!fs::exists(file)) return std::nullopt;
  const std::string text = read_file(file);
  try {
    return json::parse(text).get<Board>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Storage, "corrupt board document " + file.string() + ": " + e.what());
  }
}

std::vector<std::string> BoardStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "boards")) {
    const std::string name = entry.path().filename().string();
    if (valid_board_id(name) && fs::exists(entry.path() / "board.json")) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool BoardStore::exists(std::string_view id) const {
  return valid_board_id(id) && fs::exists(board_file(id));
}

}  // namespace recomb
