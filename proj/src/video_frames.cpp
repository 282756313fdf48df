#include "etva/video_frames.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "etva/errors.hpp"
#include "etva/text.hpp"

namespace etva::frames {

namespace fs = std::filesystem;

std::vector<std::size_t> uniform_indices(std::size_t available, std::size_t count) {
  if (count == 0) throw ArgumentError("frame count must be positive");
  if (available == 0) throw EmptyInputError("no frames to sample");
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = i * available / count;
  return out;
}

std::string sniff_media_type(const std::vector<std::uint8_t>& b) {
  static constexpr std::array<std::uint8_t, 8> kPng = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (b.size() >= kPng.size() && std::equal(kPng.begin(), kPng.end(), b.begin())) return "image/png";
  if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return "image/jpeg";
  return {};
}

namespace {

bool image_extension(const fs::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read frame " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

FrameSet sample_directory(const fs::path& dir, std::size_t count) {
  if (count == 0) throw ArgumentError("frame count must be positive");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("frames directory not found: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec))
    if (entry.is_regular_file() && image_extension(entry.path())) files.push_back(entry.path());
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  // keep only files that carry a recognizable image header
  std::vector<std::pair<std::vector<std::uint8_t>, std::string>> decodable;
  for (const auto& f : files) {
    auto bytes = read_bytes(f);
    auto type = sniff_media_type(bytes);
    if (!type.empty()) decodable.emplace_back(std::move(bytes), std::move(type));
  }
  if (decodable.empty()) throw EmptyInputError("no decodable frames in " + dir.string());

  FrameSet set;
  set.source = dir;
  set.count = count;
  for (std::size_t idx : uniform_indices(decodable.size(), count))
    set.frames.push_back(Frame{idx, decodable[idx].first, decodable[idx].second});
  return set;
}

namespace {

// POSIX single-quote escaping for paths spliced into the extractor command.
std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

}  // namespace

FrameSet sample_video(const fs::path& video, std::size_t count, const std::string& extractor_command,
                      const fs::path& work_dir) {
  std::error_code ec;
  if (!fs::is_regular_file(video, ec)) throw IoError("video not found: " + video.string());
  if (text::trim(extractor_command).empty()) throw ArgumentError("no extractor_command configured");

  const fs::path outdir = work_dir / ("frames_" + text::normalize_id(video.stem().string()));
  fs::remove_all(outdir, ec);
  fs::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create " + outdir.string() + ": " + ec.message());

  const std::string cmd =
      text::substitute(extractor_command, {{"input", shell_quote(video.string())}, {"outdir", shell_quote(outdir.string())}}) + " 2>&1";
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw ExtractionError("failed to launch extractor", {});
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) output += buf.data();
  const int status = pclose(pipe);
  if (status != 0)
    throw ExtractionError("extractor exited with status " + std::to_string(status) + ": " + cmd, output);

  FrameSet set = sample_directory(outdir, count);
  set.source = video;
  return set;
}

}  // namespace etva::frames
