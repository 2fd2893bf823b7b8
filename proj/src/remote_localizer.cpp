#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lvs/error.hpp"
#include "lvs/localizer.hpp"

namespace lvs {

namespace {

using json = nlohmann::json;

std::optional<std::string> env(const char * name) {
  const char * v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

int env_int(const char * name, int fallback) {
  const auto v = env(name);
  if (!v) return fallback;
  try {
    return std::stoi(*v);
  } catch (const std::exception &) {
    throw error(error_code::invalid_argument, std::string(name) + " is not an integer");
  }
}

// Holds one in-flight slot for the lifetime of the object.
class slot_guard {
 public:
  slot_guard(std::mutex & m, std::condition_variable & cv, int & in_flight, int limit)
      : m_(m), cv_(cv), in_flight_(in_flight) {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return in_flight_ < limit; });
    ++in_flight_;
  }
  ~slot_guard() {
    {
      std::lock_guard lock(m_);
      --in_flight_;
    }
    cv_.notify_one();
  }
  slot_guard(const slot_guard &) = delete;
  slot_guard & operator=(const slot_guard &) = delete;

 private:
  std::mutex & m_;
  std::condition_variable & cv_;
  int & in_flight_;
};

std::string image_field(const std::string & frame_ref, bool embed) {
  if (frame_ref.empty()) return {};
  const auto path = std::filesystem::absolute(frame_ref);
  if (!embed) return "file://" + path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(error_code::io, "cannot read frame " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return base64_encode(bytes);
}

}  // namespace

remote_config remote_config::from_env(remote_config base) {
  if (auto v = env("LVS_LOCALIZER_URL")) base.url = *v;
  if (auto v = env("LVS_LOCALIZER_MODEL")) base.model = *v;
  base.timeout_ms = env_int("LVS_LOCALIZER_TIMEOUT_MS", base.timeout_ms);
  base.max_in_flight = env_int("LVS_LOCALIZER_MAX_IN_FLIGHT", base.max_in_flight);
  base.attempts = env_int("LVS_LOCALIZER_ATTEMPTS", base.attempts);
  return base;
}

remote_localizer::remote_localizer(remote_config cfg) : cfg_(std::move(cfg)) {
  if (cfg_.timeout_ms <= 0 || cfg_.max_in_flight < 1 || cfg_.attempts < 1) {
    throw error(error_code::invalid_argument, "remote localizer needs positive timeout, in-flight bound and attempts");
  }
  constexpr std::string_view k_scheme = "http://";
  if (cfg_.url.rfind(k_scheme, 0) != 0) {
    throw error(error_code::invalid_argument, "remote localizer URL must start with http://: " + cfg_.url);
  }
  const auto slash = cfg_.url.find('/', k_scheme.size());
  base_url_ = cfg_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : cfg_.url.substr(slash);
}

std::string remote_localizer::request_body(const localization_request & req) const {
  json frames = json::array();
  for (const auto & kf : req.keyframes) {
    frames.push_back({{"segment", kf.segment}, {"t_s", kf.t_s}, {"image", image_field(kf.frame_ref, cfg_.embed_images)}});
  }
  json body = {
      {"model", cfg_.model},
      {"question", req.question},
      {"frames", frames},
      {"instruction", render_prompt(req)},
      {"prompt_version", std::string(k_prompt_version)},
  };
  if (req.include_options) body["options"] = req.options;
  return body.dump();
}

std::string remote_localizer::exchange(const std::string & body) {
  slot_guard slot(gate_mutex_, gate_cv_, in_flight_, cfg_.max_in_flight);
  httplib::Client client(base_url_);
  const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           (err == httplib::Error::Read && std::chrono::steady_clock::now() - started >= timeout);
    throw error(timed_out ? error_code::timeout : error_code::transport,
                "request to " + cfg_.url + " failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw error(error_code::transport, "endpoint returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

localization_result remote_localizer::localize(const localization_request & req) {
  const std::string body = request_body(req);
  const auto start = std::chrono::steady_clock::now();

  std::string reply_body;
  for (int attempt = 1;; ++attempt) {
    try {
      reply_body = exchange(body);
      break;
    } catch (const error & e) {
      const bool retriable = e.code() == error_code::transport || e.code() == error_code::timeout;
      if (!retriable || attempt >= cfg_.attempts) throw;
    }
  }

  std::string text;
  try {
    text = json::parse(reply_body).at("text").get<std::string>();
  } catch (const json::exception & e) {
    throw error(error_code::parse_error, std::string("endpoint reply is not {\"text\": ...}: ") + e.what());
  }

  localization_result result;
  result.selected = selection_from_reply(text, req);
  result.rationale = std::move(text);
  result.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace lvs
