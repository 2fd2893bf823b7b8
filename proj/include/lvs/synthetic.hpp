#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "lvs/embedding_store.hpp"
#include "lvs/eval.hpp"

namespace lvs::synthetic {

// Uniform in [0, 1) from the top 53 bits; portable, unlike std distributions.
inline double uniform01(std::mt19937_64 & rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// QA item `index` on a video of `duration_s` seconds: a 2-4 minute target
// segment and a uniformly drawn answer label.
qa_record make_record(std::size_t index, uint64_t seed, double duration_s);

// Scene-structured embeddings: piecewise-constant random directions plus
// noise, one row per timestamp. Values are float-representable so the binary
// format round-trips them.
embedding_sequence make_embeddings(const std::string & video_id, std::span<const double> timestamps_s,
                                   double duration_s, std::size_t dim, uint64_t seed);

enum class answerer { correct, random };

// Free-text reply of a simulated answering model.
std::string make_reply(answerer kind, const qa_record & rec, uint64_t seed);

}  // namespace lvs::synthetic
