#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string_view>

#include "lvs/error.hpp"
#include "lvs/eval.hpp"

namespace lvs {

namespace {

constexpr double k_width = 1200.0;
constexpr double k_margin = 40.0;
constexpr double k_axis_y = 110.0;
constexpr double k_s1_top = 70.0;
constexpr double k_s2_top = 120.0;
constexpr double k_tick_len = 30.0;

std::string fmt(const char * pattern, auto... args) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_timeline_svg(const sampling_plan & plan, std::optional<time_window> gt) {
  double span = plan.duration_s;
  for (const auto & s : plan.segments) span = std::max(span, s.end_s);
  if (gt) span = std::max(span, gt->end_s);
  if (!(span > 0.0)) throw error(error_code::invalid_argument, "timeline needs a positive duration");

  const double plot = k_width - 2.0 * k_margin;
  const auto x = [&](double t) { return k_margin + plot * t / span; };

  std::string out;
  out += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"200\" viewBox=\"0 0 %.0f 200\">\n",
             k_width, k_width);
  out += "<style>.axis{stroke:#000;stroke-width:1.5}.s1{stroke:#1f77b4;stroke-width:1.5}"
         ".s2{stroke:#d62728;stroke-width:0.5}.sel{fill:#ffbf00;fill-opacity:0.3}"
         ".gt{fill:#2ca02c;fill-opacity:0.25}text{font:12px sans-serif}</style>\n";
  out += "<text x=\"" + fmt("%.2f", k_margin) + "\" y=\"20\">" + xml_escape(plan.video_id) + " (" +
         std::string(to_string(plan.mode)) + ")</text>\n";

  if (gt) {
    out += fmt("<rect class=\"gt\" x=\"%.2f\" y=\"40\" width=\"%.2f\" height=\"130\"/>\n", x(gt->start_s),
               x(gt->end_s) - x(gt->start_s));
  }
  for (std::size_t s : plan.selected) {
    if (s >= plan.segments.size()) continue;
    const auto & seg = plan.segments[s];
    out += fmt("<rect class=\"sel\" x=\"%.2f\" y=\"60\" width=\"%.2f\" height=\"100\"/>\n", x(seg.start_s),
               x(seg.end_s) - x(seg.start_s));
  }
  out += fmt("<line class=\"axis\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", x(0.0), k_axis_y, x(span),
             k_axis_y);
  for (const auto & kf : plan.stage1_keyframes) {
    out += fmt("<line class=\"tick s1\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", x(kf.t_s), k_s1_top,
               x(kf.t_s), k_s1_top + k_tick_len);
  }
  for (double t : plan.stage2_timestamps) {
    out += fmt("<line class=\"tick s2\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", x(t), k_s2_top, x(t),
               k_s2_top + k_tick_len);
  }
  out += fmt("<text x=\"%.2f\" y=\"190\">0 s</text>\n", x(0.0));
  out += fmt("<text x=\"%.2f\" y=\"190\" text-anchor=\"end\">%.1f s</text>\n", x(span), span);
  out += "</svg>\n";
  return out;
}

void emit_timeline(const sampling_plan & plan, std::optional<time_window> gt, const std::filesystem::path & out) {
  const std::string svg = render_timeline_svg(plan, gt);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw error(error_code::io, "cannot write " + out.string());
  file << svg;
  if (!file) throw error(error_code::io, "short write to " + out.string());
}

}  // namespace lvs
