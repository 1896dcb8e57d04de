#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "recomb/core_model.hpp"

namespace recomb {

/// Directory-per-board JSON documents: <root>/boards/<id>/board.json.
class BoardStore {
 public:
  explicit BoardStore(std::filesystem::path root);

  /// Atomic replace of the board document.
  void save(const Board& board) const;
  std::optional<Board> load(std::string_view id) const;
  std::vector<std::string> list() const;
  bool exists(std::string_view id) const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path board_file(std::string_view id) const;

  std::filesystem::path root_;
};

/// Board ids are what create_board hands out: "b-" plus 16 hex digits.
bool valid_board_id(std::string_view id);

}  // namespace recomb
