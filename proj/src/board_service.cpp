#include "recomb/board_service.hpp"

#include <chrono>
#include <random>
#include <sstream>

namespace recomb {

namespace {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string new_board_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  std::ostringstream out;
  out << "b-" << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

}  // namespace

RecommendScope scope_from_string(std::string_view name) {
  if (name == "auto" || name.empty()) return RecommendScope::Auto;
  if (name == "selected") return RecommendScope::Selected;
  if (name == "board") return RecommendScope::Board;
  invalid_argument("scope must be auto, selected or board");
}

KeywordSet to_keyword_set(const std::vector<Keyword>& keywords) {
  KeywordSet set;
  for (const auto& k : keywords) {
    if (k.category != KeywordCategory::Arrangement) set.add(k.category, k.text);
  }
  return set;
}

BoardService::BoardService(std::shared_ptr<Orchestrator> orchestrator, std::shared_ptr<BoardStore> store,
                           std::size_t max_image_bytes, Clock clock)
    : orchestrator_(std::move(orchestrator)),
      store_(std::move(store)),
      max_image_bytes_(max_image_bytes),
      clock_(clock ? std::move(clock) : Clock(system_now_ms)) {
  if (!orchestrator_ || !store_) invalid_argument("board service needs an orchestrator and a store");
}

std::shared_ptr<BoardService::Slot> BoardService::slot(std::string_view board_id) const {
  std::lock_guard lock(slots_mu_);
  if (auto it = slots_.find(board_id); it != slots_.end()) return it->second;
  auto board = store_->load(board_id);
  if (!board) throw Error(ErrorCode::NotFound, "no board " + std::string(board_id));
  auto s = std::make_shared<Slot>();
  s->committed = std::move(*board);
  slots_.emplace(std::string(board_id), s);
  return s;
}

template <typename F>
auto BoardService::mutate(std::string_view board_id, ActionKind kind, const json& payload, F&& body) {
  auto s = slot(board_id);
  std::lock_guard writer(s->writer);
  Board working;
  {
    std::lock_guard snap(s->snapshot_mu);
    working = s->committed;
  }
  auto result = body(working);
  working.append_action(kind, sha256_hex(payload.dump()), clock_());
  store_->save(working);
  {
    std::lock_guard snap(s->snapshot_mu);
    s->committed = std::move(working);
  }
  return result;
}

std::string BoardService::create_board() {
  Board board;
  do {
    board.id = new_board_id();
  } while (store_->exists(board.id));
  store_->save(board);
  auto s = std::make_shared<Slot>();
  s->committed = board;
  std::lock_guard lock(slots_mu_);
  slots_.emplace(board.id, std::move(s));
  return board.id;
}

Board BoardService::get_board(std::string_view board_id) const {
  auto s = slot(board_id);
  std::lock_guard snap(s->snapshot_mu);
  return s->committed;
}

ReferenceResult BoardService::add_reference(std::string_view board_id, const ImageBlob& image) {
  slot(board_id);  // 404 before any size or format complaint
  if (image.bytes.size() > max_image_bytes_) {
    throw Error(ErrorCode::PayloadTooLarge, "image exceeds " + std::to_string(max_image_bytes_) + " bytes");
  }
  if (sniff_format(image.bytes) == ImageFormat::Unknown) {
    throw Error(ErrorCode::UnsupportedMedia, "reference must be PNG or JPEG");
  }
  const std::string blob_id = orchestrator_->blobs().put(image);
  const json payload = {{"blob_id", blob_id}};

  return mutate(board_id, ActionKind::AddReference, payload, [&](Board& board) {
    ExtractionResult extracted = orchestrator_->extract_keywords(image);
    ReferenceResult out;
    Reference ref;
    ref.id = board.make_id("ref");
    ref.blob_id = blob_id;
    ref.keywords = extracted.keywords;
    ref.degraded = extracted.degraded;
    if (extracted.arrangement) {
      ref.arrangement = std::move(extracted.arrangement);
      ref.arrangement->id = board.make_id("arr");
      ref.arrangement->source_image = ref.id;
    }
    board.references.push_back(ref);

    std::vector<std::string> ids;
    for (KeywordCategory c : {KeywordCategory::SubjectMatter, KeywordCategory::ActionPose,
                              KeywordCategory::ThemeMood}) {
      for (const auto& text : ref.keywords.list(c)) {
        ids.push_back(board.insert_keyword({"", c, text, KeywordSource::Extracted, ref.id, std::nullopt}));
      }
    }
    if (ref.arrangement) {
      ids.push_back(board.insert_keyword(
          {"", KeywordCategory::Arrangement, "", KeywordSource::Extracted, ref.id, ref.arrangement->id}));
    }
    for (const auto& id : ids) out.keywords.push_back(*board.find_keyword(id));
    out.reference = std::move(ref);
    out.warnings = std::move(extracted.warnings);
    return out;
  });
}

Keyword BoardService::add_keyword(std::string_view board_id, const ManualKeyword& keyword) {
  const json payload = {{"category", keyword.category}, {"text", keyword.text},
                        {"arrangement_id", keyword.arrangement_id.value_or("")}};
  return mutate(board_id, ActionKind::AddKeyword, payload, [&](Board& board) {
    const std::string id = board.insert_keyword(
        {"", keyword.category, keyword.text, KeywordSource::Manual, std::nullopt, keyword.arrangement_id});
    return *board.find_keyword(id);
  });
}

std::vector<std::string> BoardService::select_keywords(std::string_view board_id,
                                                       const SelectionChange& change) {
  json manual = json::array();
  for (const auto& m : change.manual) {
    manual.push_back({{"category", m.category}, {"text", m.text}, {"arrangement_id", m.arrangement_id.value_or("")}});
  }
  const json payload = {{"select", change.select}, {"deselect", change.deselect}, {"manual", manual}};
  return mutate(board_id, ActionKind::SelectKeyword, payload, [&](Board& board) {
    for (const auto& id : change.select) {
      if (!board.find_keyword(id)) throw Error(ErrorCode::NotFound, "no keyword " + id);
    }
    for (const auto& id : change.deselect) {
      if (!board.find_keyword(id)) throw Error(ErrorCode::NotFound, "no keyword " + id);
    }
    std::vector<std::string> to_select = change.select;
    for (const auto& m : change.manual) {
      to_select.push_back(
          board.insert_keyword({"", m.category, m.text, KeywordSource::Manual, std::nullopt, m.arrangement_id}));
    }
    auto& sel = board.selected_keyword_ids;
    for (const auto& id : change.deselect) sel.erase(std::remove(sel.begin(), sel.end(), id), sel.end());
    for (const auto& id : to_select) {
      if (std::find(sel.begin(), sel.end(), id) == sel.end()) sel.push_back(id);
    }
    return sel;
  });
}

RecommendOutcome BoardService::recommend(std::string_view board_id, RecommendScope scope) {
  const json payload = {{"scope", scope == RecommendScope::Selected ? "selected"
                                  : scope == RecommendScope::Board  ? "board"
                                                                    : "auto"}};
  return mutate(board_id, ActionKind::Recommend, payload, [&](Board& board) {
    RecommendOutcome out;
    KeywordSet input;
    if (scope == RecommendScope::Selected ||
        (scope == RecommendScope::Auto && !to_keyword_set(board.selected_keywords()).empty())) {
      input = to_keyword_set(board.selected_keywords());
      out.scope_used = RecommendScope::Selected;
    } else {
      input = to_keyword_set(board.keywords);
      out.scope_used = RecommendScope::Board;
    }
    if (input.empty()) {
      throw Error(ErrorCode::Conflict, out.scope_used == RecommendScope::Selected
                                           ? "no textual keyword is selected"
                                           : "the board has no textual keywords yet");
    }
    const RecommendResult rec = orchestrator_->recommend(input);
    for (KeywordCategory c : {KeywordCategory::SubjectMatter, KeywordCategory::ActionPose,
                              KeywordCategory::ThemeMood}) {
      for (const auto& text : rec.keywords.list(c)) {
        if (board.find_keyword(c, text)) continue;  // already on the board
        const std::string id =
            board.insert_keyword({"", c, text, KeywordSource::Recommended, std::nullopt, std::nullopt});
        out.keywords.push_back(*board.find_keyword(id));
      }
    }
    return out;
  });
}

MergeOutcome BoardService::merge(std::string_view board_id, const std::vector<std::string>& keyword_ids) {
  const json payload = {{"keyword_ids", keyword_ids}};
  return mutate(board_id, ActionKind::Merge, payload, [&](Board& board) {
    std::vector<Keyword> chosen;
    if (keyword_ids.empty()) {
      chosen = board.selected_keywords();
    } else {
      for (const auto& id : keyword_ids) {
        const Keyword* k = board.find_keyword(id);
        if (!k) throw Error(ErrorCode::NotFound, "no keyword " + id);
        chosen.push_back(*k);
      }
    }
    std::optional<Arrangement> arrangement;
    for (const auto& k : chosen) {
      if (k.category == KeywordCategory::Arrangement && k.arrangement_id) {
        if (const Arrangement* a = board.find_arrangement(*k.arrangement_id)) {
          arrangement = *a;
          break;
        }
      }
    }
    const std::uint64_t seed = mix_seed(orchestrator_->config().seed, board.next_seq);
    MergeResult merged = orchestrator_->merge(to_keyword_set(chosen), arrangement, seed);
    MergeOutcome out;
    out.degraded = merged.degraded;
    out.warnings = std::move(merged.warnings);
    for (auto& d : merged.drafts) {
      d.id = board.make_id("draft");
      board.drafts.push_back(d);
      out.drafts.push_back(std::move(d));
    }
    return out;
  });
}

std::vector<Sketch> BoardService::more_sketches(std::string_view board_id, std::string_view draft_id) {
  const json payload = {{"draft_id", draft_id}};
  return mutate(board_id, ActionKind::MoreSketches, payload, [&](Board& board) {
    Recombination* draft = board.find_draft(draft_id);
    if (!draft) throw Error(ErrorCode::NotFound, "no draft " + std::string(draft_id));
    return orchestrator_->more_sketches(*draft, orchestrator_->config().more_sketches_count);
  });
}

Recombination BoardService::complete_sketch(std::string_view board_id, std::string_view draft_id,
                                            std::string_view blob_id) {
  const json payload = {{"draft_id", draft_id}, {"blob_id", blob_id}};
  return mutate(board_id, ActionKind::CompleteSketch, payload, [&](Board& board) {
    Recombination* draft = board.find_draft(draft_id);
    if (!draft) throw Error(ErrorCode::NotFound, "no draft " + std::string(draft_id));
    const bool known = std::any_of(draft->sketches.begin(), draft->sketches.end(),
                                   [&](const Sketch& s) { return s.blob_id == blob_id; });
    if (!known) throw Error(ErrorCode::NotFound, "draft has no sketch " + std::string(blob_id));
    if (std::find(draft->completed.begin(), draft->completed.end(), blob_id) == draft->completed.end()) {
      draft->completed.emplace_back(blob_id);
    }
    return *draft;
  });
}

void BoardService::move_reference(std::string_view board_id, std::string_view reference_id,
                                  const json& position) {
  if (!position.is_object()) invalid_argument("position must be a JSON object");
  const json payload = {{"reference_id", reference_id}, {"position", position}};
  mutate(board_id, ActionKind::MoveReference, payload, [&](Board& board) {
    for (auto& r : board.references) {
      if (r.id == reference_id) {
        r.position = position;
        return 0;
      }
    }
    throw Error(ErrorCode::NotFound, "no reference " + std::string(reference_id));
  });
}

std::string BoardService::export_log(std::string_view board_id) const {
  const Board board = get_board(board_id);
  std::string out;
  for (const auto& record : board.action_log) out += json(record).dump() + "\n";
  return out;
}

}  // namespace recomb
