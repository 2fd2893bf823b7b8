#include "lvs/localizer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <map>
#include <random>

#include "lvs/error.hpp"
#include "lvs_generated/localize_prompt_v1.hpp"

namespace lvs {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto & c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t skip_spaces(const std::string & s, std::size_t pos) {
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r')) ++pos;
  return pos;
}

bool starts_with_at(const std::string & s, std::size_t pos, std::string_view word) {
  return s.compare(pos, word.size(), word) == 0;
}

std::size_t read_number(const std::string & s, std::size_t pos, std::size_t & value) {
  value = 0;
  while (pos < s.size() && is_digit(s[pos])) {
    value = value * 10 + static_cast<std::size_t>(s[pos] - '0');
    ++pos;
  }
  return pos;
}

std::vector<std::size_t> segment_indices(const localization_request & req) {
  std::vector<std::size_t> out;
  for (const auto & s : req.segments) out.push_back(s.index);
  std::sort(out.begin(), out.end());
  return out;
}

void replace_all(std::string & text, std::string_view from, std::string_view to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

void validate(const localization_request & req) {
  if (req.keyframes.empty()) {
    throw error(error_code::invalid_argument, "localization request has no keyframes");
  }
  if (req.segments.empty()) {
    throw error(error_code::invalid_argument, "localization request has no segments");
  }
  if (req.max_selected < 1) {
    throw error(error_code::invalid_argument, "max_selected must be at least 1");
  }
  const auto known = segment_indices(req);
  for (std::size_t i = 0; i < req.keyframes.size(); ++i) {
    if (!std::binary_search(known.begin(), known.end(), req.keyframes[i].segment)) {
      throw error(error_code::out_of_range, "keyframe refers to an unknown segment", static_cast<int64_t>(i));
    }
  }
}

localization_request make_request(const stage1_result & stage1, std::string question,
                                  std::vector<std::string> options, std::size_t max_selected,
                                  const std::vector<std::string> & frame_refs) {
  if (!frame_refs.empty() && frame_refs.size() != stage1.keyframes.size()) {
    throw error(error_code::dimension_mismatch, "frame_refs must match the keyframe count");
  }
  localization_request req;
  req.question = std::move(question);
  req.options = std::move(options);
  req.segments = stage1.segments;
  req.max_selected = max_selected;
  for (std::size_t i = 0; i < stage1.keyframes.size(); ++i) {
    req.keyframes.push_back({stage1.segments[i].index, stage1.keyframes[i].t_s,
                             frame_refs.empty() ? std::string() : frame_refs[i]});
  }
  return req;
}

localization_result localize(localizer & impl, const localization_request & req) {
  validate(req);
  auto result = impl.localize(req);
  std::sort(result.selected.begin(), result.selected.end());
  result.selected.erase(std::unique(result.selected.begin(), result.selected.end()), result.selected.end());
  if (result.selected.empty()) {
    throw error(error_code::parse_error, std::string(impl.name()) + " localizer returned no segments");
  }
  if (result.selected.size() > req.max_selected) {
    throw error(error_code::capacity_exceeded,
                std::string(impl.name()) + " localizer selected more than max_selected segments");
  }
  const auto known = segment_indices(req);
  for (std::size_t s : result.selected) {
    if (!std::binary_search(known.begin(), known.end(), s)) {
      throw error(error_code::out_of_range, "localizer selected unknown segment " + std::to_string(s));
    }
  }
  return result;
}

std::set<std::size_t> parse_segment_reply(std::string_view text) {
  const std::string s = lowercase(text);
  std::set<std::size_t> found;
  constexpr std::string_view k_token = "segment";
  for (std::size_t pos = s.find(k_token); pos != std::string::npos; pos = s.find(k_token, pos + 1)) {
    std::size_t cur = pos + k_token.size();
    if (cur < s.size() && s[cur] == 's') ++cur;
    while (cur < s.size() && (s[cur] == ' ' || s[cur] == '\t' || s[cur] == ':' || s[cur] == '#')) ++cur;
    if (cur >= s.size() || !is_digit(s[cur])) continue;

    std::size_t value = 0;
    cur = read_number(s, cur, value);
    found.insert(value);
    while (true) {
      std::size_t next = skip_spaces(s, cur);
      bool separated = false;
      if (next < s.size() && (s[next] == ',' || s[next] == '&')) {
        next = skip_spaces(s, next + 1);
        separated = true;
      }
      if (starts_with_at(s, next, "and") && next + 3 < s.size() && !std::isalpha(static_cast<unsigned char>(s[next + 3]))) {
        next = skip_spaces(s, next + 3);
        separated = true;
      }
      if (!separated || next >= s.size() || !is_digit(s[next])) break;
      cur = read_number(s, next, value);
      found.insert(value);
    }
  }
  if (found.empty()) {
    throw error(error_code::parse_error, "no segment numbers in reply");
  }
  return found;
}

std::optional<std::size_t> most_mentioned_frame(std::string_view text) {
  const std::string s = lowercase(text);
  std::map<std::size_t, std::size_t> counts;
  constexpr std::string_view k_token = "frame";
  for (std::size_t pos = s.find(k_token); pos != std::string::npos; pos = s.find(k_token, pos + 1)) {
    std::size_t cur = pos + k_token.size();
    while (cur < s.size() && (s[cur] == ' ' || s[cur] == '#')) ++cur;
    if (cur >= s.size() || !is_digit(s[cur])) continue;
    std::size_t value = 0;
    read_number(s, cur, value);
    ++counts[value];
  }
  std::optional<std::size_t> best;
  std::size_t best_count = 0;
  for (const auto & [index, count] : counts) {
    if (count > best_count) {
      best = index;
      best_count = count;
    }
  }
  return best;
}

std::vector<std::size_t> selection_from_reply(std::string_view text, const localization_request & req) {
  std::set<std::size_t> parsed;
  try {
    parsed = parse_segment_reply(text);
  } catch (const error &) {
    const auto fallback = most_mentioned_frame(text);
    if (!fallback) throw;
    parsed = {*fallback};
  }
  const auto known = segment_indices(req);
  std::vector<std::size_t> out;
  for (std::size_t s : parsed) {
    if (std::binary_search(known.begin(), known.end(), s)) out.push_back(s);
    if (out.size() == req.max_selected) break;
  }
  if (out.empty()) {
    throw error(error_code::parse_error, "reply names no segment of this video");
  }
  return out;
}

std::string render_prompt(const localization_request & req) {
  std::string frames;
  char line[96];
  for (const auto & kf : req.keyframes) {
    std::snprintf(line, sizeof(line), "Frame %zu @ %.1fs\n", kf.segment, kf.t_s);
    frames += line;
  }
  if (!frames.empty()) frames.pop_back();

  std::string options;
  if (req.include_options) {
    for (std::size_t i = 0; i < req.options.size(); ++i) {
      options += std::string(1, static_cast<char>('A' + i)) + ". " + req.options[i] + "\n";
    }
  }

  std::string out(k_localize_prompt_v1);
  replace_all(out, "{{frames}}", frames);
  replace_all(out, "{{question}}", req.question);
  replace_all(out, "{{options}}", options);
  replace_all(out, "{{max_selected}}", std::to_string(req.max_selected));
  return out;
}

localization_result mock_localizer::localize(const localization_request & req) {
  const auto start = std::chrono::steady_clock::now();
  std::string reply = reply_;
  if (reply.empty()) {
    reply = "Segment " + std::to_string(req.segments[req.segments.size() / 2].index);
  }
  localization_result result;
  result.selected = selection_from_reply(reply, req);
  result.rationale = reply;
  result.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

localization_result oracle_localizer::localize(const localization_request & req) {
  localization_result result;
  for (const auto & s : req.segments) {
    const double overlap = std::min(s.end_s, target_.end_s) - std::max(s.start_s, target_.start_s);
    if (overlap > 0.0) result.selected.push_back(s.index);
  }
  std::sort(result.selected.begin(), result.selected.end());
  if (result.selected.empty()) {
    throw error(error_code::out_of_range, "target segment lies outside every segment");
  }
  if (result.selected.size() > req.max_selected) {
    throw error(error_code::capacity_exceeded,
                "target overlaps " + std::to_string(result.selected.size()) + " segments but max_selected is " +
                    std::to_string(req.max_selected));
  }
  result.rationale = "oracle: segments overlapping the target";
  return result;
}

localization_result random_localizer::localize(const localization_request & req) {
  auto pool = segment_indices(req);
  std::mt19937_64 rng(seed_ ^ stable_hash(req.question));
  const std::size_t take = std::min(req.max_selected, pool.size());
  // Partial Fisher-Yates on raw engine output, which is portable across
  // standard libraries, unlike std::uniform_int_distribution.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  localization_result result;
  result.selected.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(result.selected.begin(), result.selected.end());
  result.rationale = "random";
  return result;
}

uint64_t stable_hash(std::string_view text, uint64_t seed) {
  uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char k_alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
    out += k_alphabet[(v >> 18) & 63];
    out += k_alphabet[(v >> 12) & 63];
    out += k_alphabet[(v >> 6) & 63];
    out += k_alphabet[v & 63];
  }
  if (i < bytes.size()) {
    uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += k_alphabet[(v >> 18) & 63];
    out += k_alphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? k_alphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace lvs
