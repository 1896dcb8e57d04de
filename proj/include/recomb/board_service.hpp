#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "recomb/board_store.hpp"
#include "recomb/orchestrator.hpp"

namespace recomb {

struct ReferenceResult {
  Reference reference;
  std::vector<Keyword> keywords;  // stored board keywords from this image
  std::vector<std::string> warnings;
};

struct ManualKeyword {
  KeywordCategory category = KeywordCategory::SubjectMatter;
  std::string text;
  std::optional<std::string> arrangement_id;  // arrangement keywords only
};

struct SelectionChange {
  std::vector<std::string> select;
  std::vector<std::string> deselect;
  std::vector<ManualKeyword> manual;  // stored as Manual and selected
};

enum class RecommendScope { Auto, Selected, Board };

RecommendScope scope_from_string(std::string_view name);

struct RecommendOutcome {
  std::vector<Keyword> keywords;  // stored board keywords, not selected
  RecommendScope scope_used = RecommendScope::Auto;
};

struct MergeOutcome {
  std::vector<Recombination> drafts;
  bool degraded = false;
  std::vector<std::string> warnings;
};

/// Boards in memory, mirrored to a BoardStore before every mutating call
/// returns. One writer per board at a time; readers get the last committed
/// snapshot without waiting for a running pipeline.
class BoardService {
 public:
  using Clock = std::function<std::int64_t()>;

  BoardService(std::shared_ptr<Orchestrator> orchestrator, std::shared_ptr<BoardStore> store,
               std::size_t max_image_bytes = 10 * 1024 * 1024, Clock clock = {});

  std::string create_board();
  Board get_board(std::string_view board_id) const;

  ReferenceResult add_reference(std::string_view board_id, const ImageBlob& image);
  /// Adds a keyword without selecting it.
  Keyword add_keyword(std::string_view board_id, const ManualKeyword& keyword);
  std::vector<std::string> select_keywords(std::string_view board_id, const SelectionChange& change);
  RecommendOutcome recommend(std::string_view board_id, RecommendScope scope = RecommendScope::Auto);
  /// Merges the given keyword ids, or the current selection when empty.
  MergeOutcome merge(std::string_view board_id, const std::vector<std::string>& keyword_ids = {});
  std::vector<Sketch> more_sketches(std::string_view board_id, std::string_view draft_id);
  Recombination complete_sketch(std::string_view board_id, std::string_view draft_id,
                                std::string_view blob_id);
  void move_reference(std::string_view board_id, std::string_view reference_id, const json& position);

  /// One JSON object per line, in applied order.
  std::string export_log(std::string_view board_id) const;

  const Orchestrator& orchestrator() const { return *orchestrator_; }
  std::size_t max_image_bytes() const { return max_image_bytes_; }

 private:
  struct Slot {
    std::mutex writer;             // serializes mutations of this board
    mutable std::mutex snapshot_mu;
    Board committed;
  };

  std::shared_ptr<Slot> slot(std::string_view board_id) const;
  /// Runs `mutate` on a copy of the board under the writer lock, persists
  /// it, appends one log record and publishes the copy.
  template <typename F>
  auto mutate(std::string_view board_id, ActionKind kind, const json& payload, F&& body);

  std::shared_ptr<Orchestrator> orchestrator_;
  std::shared_ptr<BoardStore> store_;
  std::size_t max_image_bytes_;
  Clock clock_;

  mutable std::mutex slots_mu_;
  mutable std::map<std::string, std::shared_ptr<Slot>, std::less<>> slots_;
};

/// Textual keywords of `keywords` as a KeywordSet (arrangement ones skipped).
KeywordSet to_keyword_set(const std::vector<Keyword>& keywords);

}  // namespace recomb
