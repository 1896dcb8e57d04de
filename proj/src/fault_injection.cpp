#include "recomb/fault_injection.hpp"

namespace recomb {

void FaultCounter::maybe_fail(std::string_view what) {
  const int n = calls_.fetch_add(1);
  if (plan_.fail_first < 0 || n < plan_.fail_first) {
    failures_.fetch_add(1);
    throw ProviderError(plan_.failure, "injected " + std::string(to_string(plan_.failure)) + " in " +
                                           std::string(what));
  }
}

std::string FaultyCaptioner::caption(const ImageBlob& region) {
  counter_.maybe_fail("caption");
  return inner_->caption(region);
}

std::vector<ScoredSegment> FaultySegmenter::segment(const ImageBlob& image) {
  counter_.maybe_fail("segment");
  return inner_->segment(image);
}

ImageBlob FaultyGenerator::generate_image(std::string_view caption,
                                          std::span<const LayoutEntry> layout) {
  counter_.maybe_fail("generate_image");
  return inner_->generate_image(caption, layout);
}

ChatReply FaultyChat::chat(const ChatRequest& request) {
  auto plan = plans_.find(request.template_id);
  if (plan == plans_.end()) return inner_->chat(request);
  int n = 0;
  {
    std::lock_guard lock(mu_);
    n = seen_[request.template_id].fetch_add(1);
  }
  if (plan->second.fail_first >= 0 && n >= plan->second.fail_first) return inner_->chat(request);
  injected_.fetch_add(1);
  switch (plan->second.fault) {
    case ChatFault::Malformed:
      return {"Sorry, I'm not able to help with that request. ))]] ((", false};
    case ChatFault::Timeout:
      throw ProviderError(ProviderFailure::Timeout, "injected chat timeout");
    case ChatFault::Empty:
      return {"", false};
  }
  return inner_->chat(request);
}

}  // namespace recomb
