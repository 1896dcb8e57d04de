#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "recomb/board_service.hpp"
#include "recomb/eval_harness.hpp"
#include "recomb/orchestrator.hpp"
#include "recomb/stub_providers.hpp"

namespace testkit {

using namespace recomb;

std::filesystem::path golden_dir();
json load_json(const std::filesystem::path& file);

const TemplateLibrary& library();
PromptKit prompt_kit();

/// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Stub bundle orchestrator over a memory blob store.
std::shared_ptr<Orchestrator> stub_orchestrator(std::uint64_t seed = 42,
                                                std::function<void(ProviderBundle&)> tweak = {});

/// Chat model answering from a function of (template, user turn).
class ScriptedChat final : public ChatModel {
 public:
  using Script = std::function<std::string(TemplateId, const std::string&)>;
  explicit ScriptedChat(Script script) : script_(std::move(script)) {}
  ChatReply chat(const ChatRequest& request) override { return {script_(request.template_id, request.user_turn()), false}; }

 private:
  Script script_;
};

/// Fraction of `samples` uniform points inside both boxes over those inside
/// either; the independent IoU oracle.
double monte_carlo_iou(const BBox& a, const BBox& b, int samples, std::mt19937_64& rng);

/// n boxes on a jittered grid so that no two overlap and every nearest
/// centroid is the box itself.
std::vector<BBox> well_separated_layout(int n, std::mt19937_64& rng);

BBox random_valid_box(std::mt19937_64& rng);

/// All |layout| == |objects| multiset checks plus box validity.
bool draft_is_consistent(const Recombination& draft);

/// Five annotated images (widths 300..340) as JSON lines.
const char* synthetic_manifest();

/// The synthetic manifest and its images written to a temp directory.
/// orchestrator() captions crops by size, answers extraction per image
/// width from a fixed table, always returns the same three captions
/// (two equal) for recombination, echoes paraphrases and embeds one-hot.
struct SyntheticSet {
  TempDir dir;
  std::vector<AnnotatedImage> dataset;

  SyntheticSet();
  static std::shared_ptr<Orchestrator> orchestrator();
};

}  // namespace testkit
