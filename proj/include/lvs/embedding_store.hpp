#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lvs {

// Per-frame embeddings of one video, row-major. Values are held in double; the
// binary format narrows to f32 on save, so sequences that were loaded from a
// binary file round-trip bit-exactly.
struct embedding_sequence {
  std::string video_id;
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> vectors;       // n * d
  std::vector<double> timestamps_s;  // n, strictly increasing
  double duration_s = 0.0;
  double source_fps = 0.0;

  std::span<const double> row(std::size_t i) const {
    return {vectors.data() + i * d, d};
  }

  bool operator==(const embedding_sequence &) const = default;
};

enum class embedding_format { binary, csv };

// Throws lvs::error on any invariant violation. The offending row, if any, is
// attached to the error.
void validate(const embedding_sequence & seq);

// Binary: "EMB1", u32 n, u32 d, n*d f32, all little-endian, plus a JSON
// sidecar `<stem>.meta.json` next to the data file. CSV: header
// `t,e0,...,e{d-1}`; the sidecar is optional and only supplies metadata.
embedding_sequence load_embeddings(const std::filesystem::path & path, embedding_format format);
embedding_sequence load_embeddings(const std::filesystem::path & path);  // format from extension
void save_embeddings(const embedding_sequence & seq, const std::filesystem::path & path,
                     embedding_format format);

std::filesystem::path sidecar_path(const std::filesystem::path & data_path);

// Scales every row to unit L2 norm. Throws error_code::zero_norm naming the row.
embedding_sequence normalize(embedding_sequence seq);

// Sampling rate, stored in frames per second.
class rate {
 public:
  static rate per_second(double fps) { return rate(fps); }
  static rate per_minute(double fpm) { return rate(fpm / 60.0, fpm); }

  double fps() const noexcept { return fps_; }
  double fpm() const noexcept { return fpm_ ? fpm_ : fps_ * 60.0; }
  double interval_s() const noexcept { return fpm_ ? 60.0 / fpm_ : 1.0 / fps_; }
  // Frames in `duration_s` seconds, floor(duration * rate), robust to the
  // representation error of per-minute rates.
  std::size_t frames_in(double duration_s) const;

 private:
  explicit rate(double fps, double fpm = 0.0) : fps_(fps), fpm_(fpm) {}
  double fps_;
  double fpm_;
};

// Center-of-cell grid: t_i = (i + 0.5) / rate for i < floor(duration * rate).
std::vector<double> uniform_timestamps(double duration_s, rate r);

}  // namespace lvs
