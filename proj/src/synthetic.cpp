#include "lvs/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "lvs/localizer.hpp"

namespace lvs::synthetic {

namespace {

std::mt19937_64 seeded(uint64_t seed, std::string_view salt) { return std::mt19937_64(stable_hash(salt, seed)); }

// Box-Muller on the portable uniform source.
double normal(std::mt19937_64 & rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

qa_record make_record(std::size_t index, uint64_t seed, double duration_s) {
  char id[32];
  std::snprintf(id, sizeof(id), "q%05zu", index);
  auto rng = seeded(seed, id);

  qa_record rec;
  rec.id = id;
  char video[32];
  std::snprintf(video, sizeof(video), "video%05zu", index);
  rec.video_id = video;
  rec.question = std::string("What happens inside the target segment of ") + video + "?";
  for (std::size_t i = 0; i < 4; ++i) {
    rec.options[i] = "Synthetic option " + std::string(1, static_cast<char>('A' + i));
  }
  rec.answer = static_cast<char>('A' + rng() % 4);
  rec.duration_s = duration_s;
  const double length = std::min(duration_s, 120.0 + 120.0 * uniform01(rng));
  const double start = (duration_s - length) * uniform01(rng);
  rec.target = {start, std::min(duration_s, start + length)};
  return rec;
}

embedding_sequence make_embeddings(const std::string & video_id, std::span<const double> timestamps_s,
                                   double duration_s, std::size_t dim, uint64_t seed) {
  auto rng = seeded(seed, video_id);
  embedding_sequence seq;
  seq.video_id = video_id;
  seq.n = timestamps_s.size();
  seq.d = dim;
  seq.timestamps_s.assign(timestamps_s.begin(), timestamps_s.end());
  seq.duration_s = duration_s;
  seq.source_fps = seq.n >= 2 ? 1.0 / (timestamps_s[1] - timestamps_s[0]) : 0.0;

  std::vector<double> scene(dim);
  std::size_t remaining = 0;
  for (std::size_t i = 0; i < seq.n; ++i) {
    if (remaining == 0) {
      for (auto & v : scene) v = normal(rng);
      remaining = 3 + rng() % 12;
    }
    --remaining;
    for (std::size_t c = 0; c < dim; ++c) {
      seq.vectors.push_back(static_cast<float>(scene[c] + 0.2 * normal(rng)));
    }
  }
  return seq;
}

std::string make_reply(answerer kind, const qa_record & rec, uint64_t seed) {
  if (kind == answerer::correct) return "The answer is (" + std::string(1, rec.answer) + ").";
  auto rng = seeded(seed, "reply:" + rec.id);
  const char label = static_cast<char>('A' + rng() % 4);
  return std::string(1, label) + ". " + rec.options[static_cast<std::size_t>(label - 'A')];
}

}  // namespace lvs::synthetic
