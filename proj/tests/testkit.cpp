#include "testkit.hpp"

#include <fstream>
#include <map>

namespace testkit {

std::filesystem::path golden_dir() { return RECOMB_GOLDEN_DIR; }

json load_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return json::parse(in);
}

const TemplateLibrary& library() {
  static const TemplateLibrary lib = TemplateLibrary::load(TemplateLibrary::default_dir());
  return lib;
}

PromptKit prompt_kit() { return PromptKit(library()); }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("recomb-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::shared_ptr<Orchestrator> stub_orchestrator(std::uint64_t seed, std::function<void(ProviderBundle&)> tweak) {
  ProviderBundle bundle = make_stub_bundle(library());
  if (tweak) tweak(bundle);
  OrchestratorConfig config;
  config.seed = seed;
  return std::make_shared<Orchestrator>(std::move(bundle), prompt_kit(), std::make_shared<MemoryBlobStore>(),
                                        config);
}

double monte_carlo_iou(const BBox& a, const BBox& b, int samples, std::mt19937_64& rng) {
  // sample the bounding region of the union only
  const double x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  const double x1 = std::max(a.x + a.w, b.x + b.w), y1 = std::max(a.y + a.h, b.y + b.h);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  auto inside = [](const BBox& r, double x, double y) {
    return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
  };
  int both = 0, either = 0;
  for (int s = 0; s < samples; ++s) {
    const double x = ux(rng), y = uy(rng);
    const bool ia = inside(a, x, y), ib = inside(b, x, y);
    both += ia && ib;
    either += ia || ib;
  }
  return either == 0 ? 0.0 : static_cast<double>(both) / either;
}

std::vector<BBox> well_separated_layout(int n, std::mt19937_64& rng) {
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double cell = 1.0 / side;
  std::vector<int> cells(static_cast<std::size_t>(side * side));
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  std::uniform_real_distribution<double> extent(0.3, 0.8), slack(0.0, 1.0);
  std::vector<BBox> out;
  for (int i = 0; i < n; ++i) {
    const int c = cells[static_cast<std::size_t>(i)];
    const double cx = (c % side) * cell, cy = (c / side) * cell;
    // centered in its cell so the nearest centroid is always its own
    const double w = extent(rng) * cell, h = w;
    out.push_back({cx + (cell - w) / 2, cy + (cell - h) / 2, w, h});
  }
  return out;
}

BBox random_valid_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = 0.01 + 0.98 * u(rng), h = 0.01 + 0.98 * u(rng);
  return {u(rng) * (1 - w), u(rng) * (1 - h), w, h};
}

bool draft_is_consistent(const Recombination& draft) {
  if (draft.objects.empty() || !layout_matches_objects(draft)) return false;
  for (const auto& e : *draft.layout) {
    if (validate_bbox(e.box)) return false;
  }
  return true;
}

namespace {

/// Captions each crop with its size, so the full frame (last line of the
/// extraction turn) names the image width.
class SizeCaptioner final : public Captioner {
 public:
  std::string caption(const ImageBlob& region) override {
    const auto info = probe_image(region);
    return "frame " + std::to_string(info->width) + "x" + std::to_string(info->height);
  }
};

const std::map<int, std::string> kPredicted{
    {300, "Subject matter: Cat, sofa, window\nAction & pose: sleeping\nTheme & mood: cozy"},
    {310, "Subject matter: dog, ball, grass, tree\nAction & pose: \nTheme & mood: playful, sunny"},
    {320, "Subject matter: boat, sea\nAction & pose: \nTheme & mood: calm"},
    {330, "Subject matter: tower\nAction & pose: parking\nTheme & mood: quiet"},
    {340, "Subject matter: bird, tree, sky\nAction & pose: flying, singing\nTheme & mood: "},
};

const char* const kManifest = R"({"image_path": "img0.png", "subject_matter": ["cat", "sofa", "lamp"], "action_pose": ["sleeping"], "theme_mood": ["cozy", "warm"], "description": "a cat naps"}
{"image_path": "img1.png", "subject_matter": ["dog", "ball"], "action_pose": ["running", "jumping"], "theme_mood": ["playful"], "description": "a cat naps"}

{"image_path": "img2.png", "subject_matter": ["boat", "sea"], "theme_mood": ["calm"], "description": "boats at sea"}
{"image_path": "img3.png", "subject_matter": ["city", "car", "bus"], "action_pose": ["driving"], "theme_mood": ["busy", "noisy"], "description": "traffic"}
{"image_path": "img4.png", "subject_matter": ["tree", "bird", "nest", "sky", "cloud", "sun"], "action_pose": ["flying"], "theme_mood": ["bright"], "description": "birds nest"}
)";

std::string script(TemplateId id, const std::string& turn) {
  if (id == TemplateId::Extract) {
    const std::string last = turn.substr(turn.rfind('\n') + 1);
    const int width = std::stoi(last.substr(std::string("frame ").size()));
    return kPredicted.at(width);
  }
  if (id == TemplateId::Recombine) {
    return "1.\nCaption: A quiet scene.\nObjects: [(thing, a thing)]\n2.\nCaption: A quiet scene.\nObjects: "
           "[(thing, a thing)]\n3.\nCaption: A loud scene.\nObjects: [(drum, a drum)]";
  }
  return ReplayChat::synthesize(id, turn);  // paraphrases echo their input
}

}  // namespace

const char* synthetic_manifest() { return kManifest; }

SyntheticSet::SyntheticSet() {
  for (int i = 0; i < 5; ++i) {
    const ImageBlob img = synthesize_image(300 + 10 * i, 200, static_cast<std::uint64_t>(i));
    write_file_atomic(dir.path() / ("img" + std::to_string(i) + ".png"),
                      std::string(img.bytes.begin(), img.bytes.end()));
  }
  write_file_atomic(dir.path() / "manifest.jsonl", kManifest);
  dataset = load_manifest(dir.path() / "manifest.jsonl");
}

std::shared_ptr<Orchestrator> SyntheticSet::orchestrator() {
  return testkit::stub_orchestrator(42, [](ProviderBundle& b) {
    b.captioner = std::make_shared<SizeCaptioner>();
    b.chat = std::make_shared<testkit::ScriptedChat>(script);
    b.embedder = std::make_shared<OneHotEmbedder>();
  });
}

}  // namespace testkit
