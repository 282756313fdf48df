#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "etva/errors.hpp"

namespace etva::frames {

inline constexpr std::size_t kDefaultFrameCount = 8;

struct Frame {
  std::size_t index = 0;  // position in the source's sorted frame list
  std::vector<std::uint8_t> bytes;
  std::string media_type;  // image/png or image/jpeg
};

struct FrameSet {
  std::vector<Frame> frames;
  std::filesystem::path source;
  std::size_t count = 0;
  std::string strategy = "uniform";
};

/// floor(i*N/count) for i in [0, count). Nondecreasing, within [0, N-1]; when
/// N < count every index appears and the surplus slots repeat the nearest one.
std::vector<std::size_t> uniform_indices(std::size_t available, std::size_t count);

/// "image/png" / "image/jpeg" by magic bytes, empty string if neither.
std::string sniff_media_type(const std::vector<std::uint8_t>& bytes);

/// Samples `count` frames from a directory of png/jpeg files sorted by name.
/// IoError if unreadable, EmptyInputError if no decodable frame exists.
FrameSet sample_directory(const std::filesystem::path& dir, std::size_t count);

/// Runs `extractor_command` (placeholders {input}, {outdir}; substituted shell-quoted) into a scratch
/// directory under `work_dir`, then samples that directory.
/// Throws ExtractionError carrying the command output on nonzero exit.
FrameSet sample_video(const std::filesystem::path& video, std::size_t count, const std::string& extractor_command,
                      const std::filesystem::path& work_dir);

class ExtractionError : public Error {
 public:
  ExtractionError(const std::string& what, std::string output)
      : Error(what), output_(std::move(output)) {}
  const std::string& output() const noexcept { return output_; }

 private:
  std::string output_;
};

}  // namespace etva::frames
