#pragma once
// Shared builders for unit tests: in-memory frames, scripted QA backends,
// scratch directories.

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "etva/llm_backend.hpp"
#include "etva/qg_pipeline.hpp"
#include "etva/video_frames.hpp"

namespace testing {

// 1x1 PNG (valid magic + IHDR; enough for media-type sniffing).
inline std::vector<std::uint8_t> tiny_png(std::uint8_t shade = 0) {
  std::vector<std::uint8_t> b = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A, 0, 0, 0, 13, 'I', 'H', 'D', 'R',
                                 0,    0,   0,   1,   0,    0,    0,    1,    8, 2, 0, 0,  0};
  b.push_back(shade);
  return b;
}

inline etva::frames::FrameSet frame_set(std::size_t n = 8) {
  etva::frames::FrameSet fs;
  for (std::size_t i = 0; i < n; ++i)
    fs.frames.push_back(etva::frames::Frame{i, tiny_png(static_cast<std::uint8_t>(i)), "image/png"});
  fs.count = n;
  return fs;
}

inline etva::qg::AtomicQuestion question(std::string id, std::string prompt_id, std::string text,
                                         etva::Category c = etva::Category::Existence) {
  etva::qg::AtomicQuestion q;
  q.question_id = std::move(id);
  q.prompt_id = std::move(prompt_id);
  q.text = std::move(text);
  q.category = c;
  return q;
}

/// Scripted backend answering every stage; conclusions/direct answers say
/// `verdict` unless a question-specific rule was added first.
inline etva::llm::ScriptedBackend qa_backend(const std::string& verdict = "Yes") {
  etva::llm::ScriptedBackend b;
  b.add_rule({"knowledge", {}, "1. Liquids float in microgravity."});
  b.add_rule({"understanding", {}, "Frames show a cup and floating droplets."});
  b.add_rule({"reflection", {}, "The frames agree with the expectation."});
  b.add_rule({"conclusion", {}, "Answer: " + verdict});
  b.add_rule({"direct", {}, "Answer: " + verdict});
  return b;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("etva-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << body;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> purposes(const std::vector<etva::llm::CompletionRequest>& log) {
  std::vector<std::string> out;
  for (const auto& r : log) out.push_back(r.purpose);
  return out;
}

inline std::size_t images_in(const etva::llm::CompletionRequest& r) {
  std::size_t n = 0;
  for (const auto& m : r.messages) n += m.image_count();
  return n;
}

}  // namespace testing
