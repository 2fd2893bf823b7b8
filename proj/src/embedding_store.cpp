#include "lvs/embedding_store.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lvs/error.hpp"

namespace lvs {

namespace {

constexpr std::array<char, 4> k_magic = {'E', 'M', 'B', '1'};
constexpr std::size_t k_header_size = 12;

using json = nlohmann::json;

uint32_t read_u32_le(const unsigned char * p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void write_u32_le(std::string & out, uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xffu));
  }
}

std::string read_file(const std::filesystem::path & path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw error(error_code::io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path & path, const std::string & bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw error(error_code::io, "cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw error(error_code::io, "short write to " + path.string());
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

double parse_double(std::string_view s, int64_t row) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  std::string tmp(s);
  // from_chars rejects "nan"/"inf" spellings in some forms; strtod accepts
  // them so they reach the finiteness check with the right error code.
  char * end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw error(error_code::malformed_header, "unparsable value '" + tmp + "'", row);
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

struct sidecar {
  std::optional<std::string> video_id;
  std::optional<double> duration_s;
  std::optional<std::vector<double>> timestamps_s;
  std::optional<double> source_fps;
};

std::optional<sidecar> read_sidecar(const std::filesystem::path & data_path) {
  const auto path = sidecar_path(data_path);
  if (!std::filesystem::exists(path)) {
    return std::nullopt;
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception & e) {
    throw error(error_code::malformed_header, "bad sidecar " + path.string() + ": " + e.what());
  }
  sidecar meta;
  try {
    if (j.contains("video_id")) meta.video_id = j.at("video_id").get<std::string>();
    if (j.contains("duration_s")) meta.duration_s = j.at("duration_s").get<double>();
    if (j.contains("timestamps_s")) meta.timestamps_s = j.at("timestamps_s").get<std::vector<double>>();
    if (j.contains("source_fps")) meta.source_fps = j.at("source_fps").get<double>();
  } catch (const json::exception & e) {
    throw error(error_code::malformed_header, "bad sidecar field in " + path.string() + ": " + e.what());
  }
  return meta;
}

void write_sidecar(const embedding_sequence & seq, const std::filesystem::path & data_path) {
  json j;
  j["video_id"] = seq.video_id;
  j["duration_s"] = seq.duration_s;
  j["timestamps_s"] = seq.timestamps_s;
  j["source_fps"] = seq.source_fps;
  write_file(sidecar_path(data_path), j.dump(2) + "\n");
}

embedding_sequence load_binary(const std::filesystem::path & path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < k_header_size || std::memcmp(bytes.data(), k_magic.data(), 4) != 0) {
    throw error(error_code::malformed_header, "missing EMB1 magic in " + path.string());
  }
  const auto * p = reinterpret_cast<const unsigned char *>(bytes.data());
  embedding_sequence seq;
  seq.n = read_u32_le(p + 4);
  seq.d = read_u32_le(p + 8);
  if (seq.n == 0 || seq.d == 0) {
    throw error(error_code::malformed_header, "n and d must be positive");
  }
  const std::size_t payload = bytes.size() - k_header_size;
  const std::size_t row_bytes = seq.d * 4;
  if (payload != seq.n * row_bytes) {
    throw error(error_code::dimension_mismatch,
                "header declares " + std::to_string(seq.n) + " rows of " + std::to_string(seq.d) +
                    " values but payload holds " + std::to_string(payload / 4) + " values",
                static_cast<int64_t>(std::min(seq.n, payload / row_bytes)));
  }
  seq.vectors.resize(seq.n * seq.d);
  for (std::size_t i = 0; i < seq.n * seq.d; ++i) {
    const float v = std::bit_cast<float>(read_u32_le(p + k_header_size + 4 * i));
    if (!std::isfinite(v)) {
      throw error(error_code::non_finite, "non-finite embedding value", static_cast<int64_t>(i / seq.d));
    }
    seq.vectors[i] = v;
  }

  const auto meta = read_sidecar(path);
  if (!meta || !meta->timestamps_s) {
    throw error(error_code::io, "binary embeddings need a sidecar with timestamps_s: " +
                                    sidecar_path(path).string());
  }
  seq.timestamps_s = *meta->timestamps_s;
  if (seq.timestamps_s.size() != seq.n) {
    throw error(error_code::dimension_mismatch,
                "sidecar has " + std::to_string(seq.timestamps_s.size()) + " timestamps for " +
                    std::to_string(seq.n) + " rows");
  }
  seq.video_id = meta->video_id.value_or(path.stem().string());
  seq.duration_s = meta->duration_s.value_or(seq.timestamps_s.back());
  seq.source_fps = meta->source_fps.value_or(0.0);
  return seq;
}

embedding_sequence load_csv(const std::filesystem::path & path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) {
    throw error(error_code::malformed_header, "empty CSV " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "t") {
    throw error(error_code::malformed_header, "CSV header must be t,e0,...");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] != "e" + std::to_string(c - 1)) {
      throw error(error_code::malformed_header, "unexpected CSV column '" + std::string(header[c]) + "'");
    }
  }

  embedding_sequence seq;
  seq.d = header.size() - 1;
  int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_commas(line);
    if (fields.size() != seq.d + 1) {
      throw error(error_code::dimension_mismatch,
                  "expected " + std::to_string(seq.d + 1) + " fields, got " + std::to_string(fields.size()),
                  row);
    }
    seq.timestamps_s.push_back(parse_double(fields[0], row));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const double v = parse_double(fields[c], row);
      if (!std::isfinite(v)) {
        throw error(error_code::non_finite, "non-finite embedding value", row);
      }
      seq.vectors.push_back(v);
    }
    ++row;
  }
  seq.n = seq.timestamps_s.size();
  if (seq.n == 0) {
    throw error(error_code::dimension_mismatch, "CSV has no rows");
  }

  const auto meta = read_sidecar(path);
  if (meta && meta->timestamps_s && meta->timestamps_s->size() != seq.n) {
    throw error(error_code::dimension_mismatch,
                "sidecar declares " + std::to_string(meta->timestamps_s->size()) + " frames but CSV has " +
                    std::to_string(seq.n) + " rows");
  }
  seq.video_id = meta && meta->video_id ? *meta->video_id : path.stem().string();
  seq.duration_s = meta && meta->duration_s ? *meta->duration_s : seq.timestamps_s.back();
  seq.source_fps = meta && meta->source_fps ? *meta->source_fps : 0.0;
  return seq;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path & data_path) {
  auto p = data_path;
  p.replace_extension(".meta.json");
  return p;
}

void validate(const embedding_sequence & seq) {
  if (seq.n < 1 || seq.d < 1) {
    throw error(error_code::dimension_mismatch, "sequence needs n >= 1 and d >= 1");
  }
  if (seq.vectors.size() != seq.n * seq.d) {
    throw error(error_code::dimension_mismatch, "vector storage does not hold n*d values");
  }
  for (std::size_t i = 0; i < seq.vectors.size(); ++i) {
    if (!std::isfinite(seq.vectors[i])) {
      throw error(error_code::non_finite, "non-finite embedding value", static_cast<int64_t>(i / seq.d));
    }
  }
  if (seq.timestamps_s.size() != seq.n) {
    throw error(error_code::dimension_mismatch, "timestamp count differs from row count");
  }
  for (std::size_t i = 0; i < seq.n; ++i) {
    const double t = seq.timestamps_s[i];
    if (!std::isfinite(t)) {
      throw error(error_code::non_finite, "non-finite timestamp", static_cast<int64_t>(i));
    }
    if (i > 0 && !(t > seq.timestamps_s[i - 1])) {
      throw error(error_code::non_monotone_timestamps, "timestamps must strictly increase",
                  static_cast<int64_t>(i));
    }
  }
  if (seq.timestamps_s.front() < 0.0) {
    throw error(error_code::out_of_range, "first timestamp is negative", 0);
  }
  if (seq.timestamps_s.back() > seq.duration_s) {
    throw error(error_code::out_of_range, "last timestamp exceeds duration_s",
                static_cast<int64_t>(seq.n - 1));
  }
}

embedding_sequence load_embeddings(const std::filesystem::path & path, embedding_format format) {
  embedding_sequence seq = format == embedding_format::binary ? load_binary(path) : load_csv(path);
  validate(seq);
  return seq;
}

embedding_sequence load_embeddings(const std::filesystem::path & path) {
  return load_embeddings(path, path.extension() == ".csv" ? embedding_format::csv : embedding_format::binary);
}

void save_embeddings(const embedding_sequence & seq, const std::filesystem::path & path,
                     embedding_format format) {
  validate(seq);
  std::string bytes;
  if (format == embedding_format::binary) {
    bytes.reserve(k_header_size + seq.vectors.size() * 4);
    bytes.append(k_magic.data(), k_magic.size());
    write_u32_le(bytes, static_cast<uint32_t>(seq.n));
    write_u32_le(bytes, static_cast<uint32_t>(seq.d));
    for (double v : seq.vectors) {
      write_u32_le(bytes, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
  } else {
    bytes += "t";
    for (std::size_t c = 0; c < seq.d; ++c) bytes += ",e" + std::to_string(c);
    bytes += "\n";
    for (std::size_t i = 0; i < seq.n; ++i) {
      bytes += format_double(seq.timestamps_s[i]);
      for (double v : seq.row(i)) {
        bytes += ",";
        bytes += format_double(v);
      }
      bytes += "\n";
    }
  }
  write_file(path, bytes);
  write_sidecar(seq, path);
}

embedding_sequence normalize(embedding_sequence seq) {
  for (std::size_t i = 0; i < seq.n; ++i) {
    double sq = 0.0;
    for (double v : seq.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
      throw error(error_code::zero_norm, "cannot normalize a zero-norm embedding", static_cast<int64_t>(i));
    }
    for (std::size_t c = 0; c < seq.d; ++c) seq.vectors[i * seq.d + c] /= norm;
  }
  return seq;
}

std::size_t rate::frames_in(double duration_s) const {
  const double exact = fpm_ ? duration_s * fpm_ / 60.0 : duration_s * fps_;
  return static_cast<std::size_t>(std::floor(exact + 1e-9));
}

std::vector<double> uniform_timestamps(double duration_s, rate r) {
  if (!(duration_s > 0.0) || !(r.fps() > 0.0)) {
    throw error(error_code::invalid_argument, "duration and rate must be positive");
  }
  const std::size_t count = r.frames_in(duration_s);
  const double interval = r.interval_s();
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back((static_cast<double>(i) + 0.5) * interval);
  }
  return out;
}

}  // namespace lvs
