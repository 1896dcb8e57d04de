#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

#include "recomb/providers.hpp"

namespace recomb {

/// Fails the first `fail_first` calls (counted across threads), then
/// delegates. fail_first < 0 fails every call.
struct FaultPlan {
  int fail_first = 0;
  ProviderFailure failure = ProviderFailure::Timeout;
};

class FaultCounter {
 public:
  explicit FaultCounter(FaultPlan plan) : plan_(plan) {}
  /// Throws the planned ProviderError when this call should fail.
  void maybe_fail(std::string_view what);
  int calls() const { return calls_.load(); }
  int failures() const { return failures_.load(); }

 private:
  FaultPlan plan_;
  std::atomic<int> calls_{0};
  std::atomic<int> failures_{0};
};

class FaultyCaptioner final : public Captioner {
 public:
  FaultyCaptioner(std::shared_ptr<Captioner> inner, FaultPlan plan)
      : inner_(std::move(inner)), counter_(plan) {}
  std::string caption(const ImageBlob& region) override;
  const FaultCounter& counter() const { return counter_; }

 private:
  std::shared_ptr<Captioner> inner_;
  FaultCounter counter_;
};

class FaultySegmenter final : public Segmenter {
 public:
  FaultySegmenter(std::shared_ptr<Segmenter> inner, FaultPlan plan)
      : inner_(std::move(inner)), counter_(plan) {}
  std::vector<ScoredSegment> segment(const ImageBlob& image) override;

 private:
  std::shared_ptr<Segmenter> inner_;
  FaultCounter counter_;
};

class FaultyGenerator final : public LayoutImageGenerator {
 public:
  FaultyGenerator(std::shared_ptr<LayoutImageGenerator> inner, FaultPlan plan)
      : inner_(std::move(inner)), counter_(plan) {}
  ImageBlob generate_image(std::string_view caption, std::span<const LayoutEntry> layout) override;

 private:
  std::shared_ptr<LayoutImageGenerator> inner_;
  FaultCounter counter_;
};

enum class ChatFault {
  Malformed,  // replies with text no parser accepts
  Timeout,
  Empty,
};

struct ChatFaultPlan {
  ChatFault fault = ChatFault::Malformed;
  int fail_first = -1;  // < 0: every call for the template
};

/// Injects faults per template; other templates pass through.
class FaultyChat final : public ChatModel {
 public:
  FaultyChat(std::shared_ptr<ChatModel> inner, std::map<TemplateId, ChatFaultPlan> plans)
      : inner_(std::move(inner)), plans_(std::move(plans)) {}
  ChatReply chat(const ChatRequest& request) override;
  int injected() const { return injected_.load(); }

 private:
  std::shared_ptr<ChatModel> inner_;
  std::map<TemplateId, ChatFaultPlan> plans_;
  std::map<TemplateId, std::atomic<int>> seen_;
  std::mutex mu_;
  std::atomic<int> injected_{0};
};

}  // namespace recomb
