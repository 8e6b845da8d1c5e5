#include "core/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace mxai {

namespace {

// Fixed-precision formatting keeps renderings byte-stable.
std::string num(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  // avoid "-0.00"
  std::string s = buf;
  bool all_zero = true;
  for (char c : s) {
    if (c >= '1' && c <= '9') {
      all_zero = false;
      break;
    }
  }
  if (all_zero && !s.empty() && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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

const char* kHighlightBlue = "#2b6cb8";
const char* kTraceGray = "#3a3a3a";
const char* kGridGray = "#d8d8d8";

struct Frame {
  double x0, y0, x1, y1;  // plot rectangle
};

std::string svg_open(int width, int height) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
       std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
       std::to_string(width) + " " + std::to_string(height) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" fill=\"white\"/>\n";
  return s;
}

std::string text_el(double x, double y, const std::string& content, int size,
                    const std::string& anchor = "start", const std::string& fill = "black") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
         xml_escape(content) + "</text>\n";
}

double nice_axis_max(double v) {
  if (v <= 0.0) return 1.0;
  const double raw = v * 1.05;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.5, 10.0}) {
    if (mult * mag >= raw) return mult * mag;
  }
  return 10.0 * mag;
}

std::string header_lines(const FeedbackSpec& spec, double width) {
  const std::string what = std::string(to_string(spec.characteristic) == std::string("cooking")
                                           ? "electric cooking"
                                       : spec.characteristic == Characteristic::kPresence
                                           ? "daytime presence"
                                           : "electric water heating");
  std::string s;
  s += text_el(width / 2.0, 26, "Your electricity use over a typical day", 16, "middle");
  s += text_el(width / 2.0, 46,
               "The model assessed this household for " + what + ": " +
                   (spec.predicted_class ? "yes" : "no"),
               12, "middle");
  return s;
}

std::string footer_lines(const FeedbackSpec& spec, double width, double y) {
  std::string s;
  s += text_el(width / 2.0, y,
               "Blue shading marks " + slot_to_hhmm(spec.highlight.start_slot) + "-" +
                   slot_to_hhmm(spec.highlight.end_slot) +
                   ", the period most relevant to the model",
               11, "middle");
  double yy = y + 18;
  if (spec.explanation_text) {
    s += text_el(width / 2.0, yy, *spec.explanation_text, 11, "middle");
    yy += 16;
  }
  if (spec.tip) {
    s += text_el(width / 2.0, yy, "Tip: " + tip_text(spec.characteristic, *spec.tip), 11, "middle");
  }
  return s;
}

std::string kwh_axis(const Frame& f, double axis_max) {
  std::string s;
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y0) + "\" x2=\"" + num(f.x0) + "\" y2=\"" +
       num(f.y1) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(f.y1) + "\" x2=\"" + num(f.x1) + "\" y2=\"" +
       num(f.y1) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = axis_max * i / 4.0;
    const double y = f.y1 - (f.y1 - f.y0) * i / 4.0;
    if (i > 0) {
      s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(y) + "\" x2=\"" + num(f.x1) + "\" y2=\"" +
           num(y) + "\" stroke=\"" + kGridGray + "\" stroke-width=\"0.5\"/>\n";
    }
    s += text_el(f.x0 - 6, y + 4, num(v), 10, "end");
  }
  s += text_el(f.x0 - 34, (f.y0 + f.y1) / 2.0,
               "kWh", 11, "middle");
  return s;
}

std::string time_axis(const Frame& f) {
  std::string s;
  for (int h = 0; h <= 24; h += 3) {
    const double x = f.x0 + (f.x1 - f.x0) * h / 24.0;
    s += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.y1) + "\" x2=\"" + num(x) + "\" y2=\"" +
         num(f.y1 + 4) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    char label[8];
    std::snprintf(label, sizeof(label), "%02d:00", h);
    s += text_el(x, f.y1 + 16, label, 10, "middle");
  }
  s += text_el((f.x0 + f.x1) / 2.0, f.y1 + 32, "Time of day", 11, "middle");
  return s;
}

std::string render_line_or_bar(const FeedbackSpec& spec, bool bars) {
  const int width = 640, height = 400;
  const Frame f{70, 70, 610, 300};
  double mx = 0.0;
  for (double v : spec.day_profile) mx = std::max(mx, v);
  const double axis_max = nice_axis_max(mx);
  auto xpos = [&](double slot) { return f.x0 + (f.x1 - f.x0) * slot / kSlotsPerDay; };
  auto ypos = [&](double v) { return f.y1 - (f.y1 - f.y0) * v / axis_max; };

  std::string s = svg_open(width, height);
  s += header_lines(spec, width);

  // highlight band under the trace
  s += "<rect x=\"" + num(xpos(spec.highlight.start_slot)) + "\" y=\"" + num(f.y0) + "\" width=\"" +
       num(xpos(spec.highlight.end_slot) - xpos(spec.highlight.start_slot)) + "\" height=\"" +
       num(f.y1 - f.y0) + "\" fill=\"" + kHighlightBlue + "\" fill-opacity=\"0.22\"/>\n";

  s += kwh_axis(f, axis_max);
  s += time_axis(f);

  if (bars) {
    const double bar_w = (f.x1 - f.x0) / kSlotsPerDay - 1.0;
    for (int i = 0; i < kSlotsPerDay; ++i) {
      const double v = spec.day_profile[static_cast<std::size_t>(i)];
      const bool lit = i >= spec.highlight.start_slot && i < spec.highlight.end_slot;
      s += "<rect x=\"" + num(xpos(i) + 0.5) + "\" y=\"" + num(ypos(v)) + "\" width=\"" +
           num(bar_w) + "\" height=\"" + num(f.y1 - ypos(v)) + "\" fill=\"" +
           (lit ? kHighlightBlue : kTraceGray) + "\"/>\n";
    }
  } else {
    std::string points;
    for (int i = 0; i < kSlotsPerDay; ++i) {
      if (i) points += ' ';
      points += num(xpos(i + 0.5)) + "," + num(ypos(spec.day_profile[static_cast<std::size_t>(i)]));
    }
    s += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + kTraceGray +
         "\" stroke-width=\"1.5\"/>\n";
  }

  s += footer_lines(spec, width, 346);
  s += "</svg>\n";
  return s;
}

std::string render_polar(const FeedbackSpec& spec) {
  const int width = 480, height = 480;
  const double cx = 240, cy = 258, r_max = 150;
  double mx = 0.0;
  for (double v : spec.day_profile) mx = std::max(mx, v);
  const double axis_max = nice_axis_max(mx);

  // slot k is centered at angle k * 7.5 degrees clockwise from 12 o'clock
  auto point = [&](double slot, double radius, double& x, double& y) {
    const double theta = (slot + 0.5) * 7.5 * 3.14159265358979323846 / 180.0;
    x = cx + radius * std::sin(theta);
    y = cy - radius * std::cos(theta);
  };

  std::string s = svg_open(width, height);
  s += header_lines(spec, width);

  // highlight wedge spanning [start, end)
  {
    const double a0 = spec.highlight.start_slot * 7.5 * 3.14159265358979323846 / 180.0;
    const double a1 = spec.highlight.end_slot * 7.5 * 3.14159265358979323846 / 180.0;
    const double x0 = cx + r_max * std::sin(a0), y0 = cy - r_max * std::cos(a0);
    const double x1 = cx + r_max * std::sin(a1), y1 = cy - r_max * std::cos(a1);
    const int large_arc = (spec.highlight.end_slot - spec.highlight.start_slot) > 24 ? 1 : 0;
    s += "<path d=\"M " + num(cx) + " " + num(cy) + " L " + num(x0) + " " + num(y0) + " A " +
         num(r_max) + " " + num(r_max) + " 0 " + std::to_string(large_arc) + " 1 " + num(x1) +
         " " + num(y1) + " Z\" fill=\"" + kHighlightBlue + "\" fill-opacity=\"0.22\"/>\n";
  }

  // radial grid rings labeled in kWh
  for (int i = 1; i <= 4; ++i) {
    const double r = r_max * i / 4.0;
    s += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
         "\" fill=\"none\" stroke=\"" + kGridGray + "\" stroke-width=\"0.5\"/>\n";
    s += text_el(cx + 4, cy - r - 2, num(axis_max * i / 4.0), 9);
  }
  s += text_el(cx + 10, cy - r_max - 14, "kWh", 10);

  // hour labels on the clock face
  for (int h = 0; h < 24; h += 6) {
    double x, y;
    point(h * 2 - 0.5, r_max + 14, x, y);
    char label[8];
    std::snprintf(label, sizeof(label), "%02d:00", h);
    s += text_el(x, y + 3, label, 10, "middle");
  }

  std::string points;
  for (int i = 0; i < kSlotsPerDay; ++i) {
    double x, y;
    point(i, r_max * spec.day_profile[static_cast<std::size_t>(i)] / axis_max, x, y);
    if (i) points += ' ';
    points += num(x) + "," + num(y);
  }
  s += "<polygon points=\"" + points + "\" fill=\"none\" stroke=\"" + kTraceGray +
       "\" stroke-width=\"1.5\"/>\n";

  s += footer_lines(spec, width, 440);
  s += "</svg>\n";
  return s;
}

std::string render_shap_diagram(const FeedbackSpec& spec) {
  const int width = 640, height = 400;
  const Frame f{70, 70, 610, 300};
  if (spec.phi.size() != static_cast<std::size_t>(kSlotsPerDay)) {
    throw usage_error("shap diagram requires 48 pooled phi values");
  }
  double mx = 1e-12;
  for (double v : spec.phi) mx = std::max(mx, std::abs(v));
  const double y_zero = (f.y0 + f.y1) / 2.0;
  const double scale = (f.y1 - f.y0) / 2.0 / mx;
  auto xpos = [&](double slot) { return f.x0 + (f.x1 - f.x0) * slot / kSlotsPerDay; };

  std::string s = svg_open(width, height);
  s += header_lines(spec, width);

  // signed bars around the zero baseline; the highlighted period is blue
  const double bar_w = (f.x1 - f.x0) / kSlotsPerDay - 1.0;
  for (int i = 0; i < kSlotsPerDay; ++i) {
    const double v = spec.phi[static_cast<std::size_t>(i)];
    const double h = std::abs(v) * scale;
    const double y = v >= 0 ? y_zero - h : y_zero;
    const bool lit = i >= spec.highlight.start_slot && i < spec.highlight.end_slot;
    s += "<rect x=\"" + num(xpos(i) + 0.5) + "\" y=\"" + num(y) + "\" width=\"" + num(bar_w) +
         "\" height=\"" + num(h) + "\" fill=\"" + (lit ? kHighlightBlue : kTraceGray) +
         "\" fill-opacity=\"" + (v >= 0 ? "1.0" : "0.45") + "\"/>\n";
  }
  s += "<line x1=\"" + num(f.x0) + "\" y1=\"" + num(y_zero) + "\" x2=\"" + num(f.x1) + "\" y2=\"" +
       num(y_zero) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  s += text_el(f.x0 - 6, y_zero + 4, "0", 10, "end");
  s += text_el(f.x0 - 10, f.y0 + 8, "pushes toward 'yes'", 9, "end");
  s += text_el(f.x0 - 10, f.y1, "pushes toward 'no'", 9, "end");
  s += time_axis(f);

  // window consumption note keeps the kWh unit on the diagram
  double win_mean = 0.0;
  int win_n = 0;
  for (int i = spec.highlight.start_slot; i < spec.highlight.end_slot; ++i) {
    win_mean += spec.day_profile[static_cast<std::size_t>(i)];
    ++win_n;
  }
  if (win_n > 0) win_mean /= win_n;
  s += text_el(static_cast<double>(width) / 2.0, 62,
               "Average use in the highlighted period: " + num(win_mean, 1) + " kWh per half hour",
               10, "middle");

  s += footer_lines(spec, width, 346);
  s += "</svg>\n";
  return s;
}

}  // namespace

const char* to_string(VizType v) {
  switch (v) {
    case VizType::kLine: return "line";
    case VizType::kBar: return "bar";
    case VizType::kPolar: return "polar";
    case VizType::kShapDiagram: return "shap";
    case VizType::kText: return "text";
  }
  return "?";
}

std::optional<VizType> viz_type_from_string(const std::string& s) {
  if (s == "line") return VizType::kLine;
  if (s == "bar") return VizType::kBar;
  if (s == "polar") return VizType::kPolar;
  if (s == "shap") return VizType::kShapDiagram;
  if (s == "text") return VizType::kText;
  return std::nullopt;
}

std::array<double, kSlotsPerDay> pool_phi_to_slots(const Attribution& a) {
  std::array<double, kSlotsPerDay> out{};
  for (int j = 0; j < a.scheme.n_segments; ++j) {
    const auto slots = a.scheme.segment_slots(j);
    if (slots.empty()) continue;
    const double share = a.phi[static_cast<std::size_t>(j)] / static_cast<double>(slots.size());
    for (int s : slots) out[static_cast<std::size_t>(s % kSlotsPerDay)] += share;
  }
  return out;
}

Highlight select_highlight(const std::array<double, kSlotsPerDay>& slot_phi, int min_len,
                           int max_len) {
  if (min_len < 1 || max_len < min_len || max_len > kSlotsPerDay) {
    throw usage_error("select_highlight: need 1 <= min_len <= max_len <= 48");
  }
  // Scan lengths ascending, starts ascending, replacing only on strictly
  // larger sums: ties therefore resolve to the shortest window, then the
  // earliest start, which keeps a unique positive block tight.
  Highlight best;
  bool found = false;
  for (int len = min_len; len <= max_len; ++len) {
    for (int start = 0; start + len <= kSlotsPerDay; ++start) {
      double sum = 0.0;
      for (int i = start; i < start + len; ++i) sum += slot_phi[static_cast<std::size_t>(i)];
      if (!found || sum > best.strength + 1e-15) {
        best = Highlight{start, start + len, sum};
        found = true;
      }
    }
  }

  double max_phi = slot_phi[0];
  for (double v : slot_phi) max_phi = std::max(max_phi, v);
  if (max_phi <= 0.0) {
    // no positive evidence anywhere: fall back to the single best slot
    int arg = 0;
    for (int i = 1; i < kSlotsPerDay; ++i) {
      if (slot_phi[static_cast<std::size_t>(i)] > slot_phi[static_cast<std::size_t>(arg)]) arg = i;
    }
    int start = std::min(arg, kSlotsPerDay - min_len);
    double sum = 0.0;
    for (int i = start; i < start + min_len; ++i) sum += slot_phi[static_cast<std::size_t>(i)];
    return Highlight{start, start + min_len, sum};
  }
  return best;
}

std::string render(const FeedbackSpec& spec) {
  switch (spec.viz) {
    case VizType::kLine: return render_line_or_bar(spec, /*bars=*/false);
    case VizType::kBar: return render_line_or_bar(spec, /*bars=*/true);
    case VizType::kPolar: return render_polar(spec);
    case VizType::kShapDiagram: return render_shap_diagram(spec);
    case VizType::kText: return generate_text(spec);
  }
  throw usage_error("unsupported viz type");
}

std::string slot_to_hhmm(int slot) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", (slot / 2) % 24, (slot % 2) * 30);
  return buf;
}

std::string generate_text(const FeedbackSpec& spec) {
  double win_mean = 0.0, day_mean = 0.0;
  for (double v : spec.day_profile) day_mean += v;
  day_mean /= kSlotsPerDay;
  int n = 0;
  for (int i = spec.highlight.start_slot; i < spec.highlight.end_slot; ++i) {
    win_mean += spec.day_profile[static_cast<std::size_t>(i)];
    ++n;
  }
  if (n > 0) win_mean /= n;

  const char* what = spec.characteristic == Characteristic::kCooking ? "cooks with electricity"
                     : spec.characteristic == Characteristic::kPresence
                         ? "is at home during the day"
                         : "heats water with electricity";

  std::string s;
  s += "Electricity feedback\n";
  s += "====================\n";
  s += std::string("The model assessed whether this household ") + what + ". Its answer: " +
       (spec.predicted_class ? "yes" : "no") + ".\n";
  s += "The period from " + slot_to_hhmm(spec.highlight.start_slot) + " to " +
       slot_to_hhmm(spec.highlight.end_slot) + " mattered most for this assessment.\n";
  s += "During that period the household uses on average " + num(win_mean, 1) +
       " kWh per half hour, compared with a daily average of " + num(day_mean, 1) + " kWh.\n";
  if (spec.explanation_text) {
    s += "\n" + *spec.explanation_text + "\n";
  }
  if (spec.tip) {
    s += "\nTip: " + tip_text(spec.characteristic, *spec.tip) + "\n";
  }
  return s;
}

const std::string& tip_text(Characteristic c, TipKind kind) {
  static const std::string catalog[3][2] = {
      {// cooking
       "Batch-cook several meals in one session so the stove runs less often.",
       "Consider replacing an old stove with an induction hob, which needs less electricity."},
      {// presence
       "Switch appliances off completely instead of leaving them on standby during the day.",
       "Consider a programmable thermostat so heating follows the hours you are actually at home."},
      {// water heating
       "Try shorter showers on a few days each week to cut hot-water electricity.",
       "Consider insulating the hot water tank to reduce standing losses."}};
  const int ci = c == Characteristic::kCooking ? 0 : c == Characteristic::kPresence ? 1 : 2;
  const int ki = kind == TipKind::kCurtailment ? 0 : 1;
  return catalog[ci][ki];
}

std::string feedback_spec_to_json(const FeedbackSpec& spec) {
  nlohmann::json j;
  j["viz"] = to_string(spec.viz);
  j["characteristic"] = to_string(spec.characteristic);
  j["predicted_class"] = spec.predicted_class;
  j["day_profile"] = spec.day_profile;
  j["highlight"] = {{"start_slot", spec.highlight.start_slot},
                    {"end_slot", spec.highlight.end_slot},
                    {"strength", spec.highlight.strength}};
  j["phi"] = spec.phi;
  if (spec.explanation_text) j["explanation_text"] = *spec.explanation_text;
  if (spec.tip) j["tip"] = spec.tip == TipKind::kCurtailment ? "cmt" : "et";
  return j.dump(2);
}

FeedbackSpec feedback_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("feedback spec is not valid JSON: ") + e.what());
  }
  FeedbackSpec spec;
  try {
    const auto viz = viz_type_from_string(j.at("viz").get<std::string>());
    if (!viz) throw data_error("unknown viz type '" + j.at("viz").get<std::string>() + "'");
    spec.viz = *viz;
    const auto c = characteristic_from_string(j.at("characteristic").get<std::string>());
    if (!c) throw data_error("unknown characteristic in feedback spec");
    spec.characteristic = *c;
    spec.predicted_class = j.at("predicted_class").get<bool>();
    const auto profile = j.at("day_profile").get<std::vector<double>>();
    if (profile.size() != static_cast<std::size_t>(kSlotsPerDay)) {
      throw data_error("day_profile must have 48 values");
    }
    std::copy(profile.begin(), profile.end(), spec.day_profile.begin());
    spec.highlight.start_slot = j.at("highlight").at("start_slot").get<int>();
    spec.highlight.end_slot = j.at("highlight").at("end_slot").get<int>();
    spec.highlight.strength = j.at("highlight").value("strength", 0.0);
    if (spec.highlight.start_slot < 0 || spec.highlight.end_slot > kSlotsPerDay ||
        spec.highlight.start_slot >= spec.highlight.end_slot) {
      throw data_error("highlight must satisfy 0 <= start < end <= 48");
    }
    if (j.contains("phi")) spec.phi = j.at("phi").get<std::vector<double>>();
    if (j.contains("explanation_text") && !j.at("explanation_text").is_null()) {
      spec.explanation_text = j.at("explanation_text").get<std::string>();
    }
    if (j.contains("tip") && !j.at("tip").is_null()) {
      const std::string t = j.at("tip").get<std::string>();
      if (t == "cmt") {
        spec.tip = TipKind::kCurtailment;
      } else if (t == "et") {
        spec.tip = TipKind::kEfficiency;
      } else if (t != "none") {
        throw data_error("tip must be one of cmt|et|none");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed feedback spec: ") + e.what());
  }
  return spec;
}

}  // namespace mxai
