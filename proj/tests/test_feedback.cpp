#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/feedback.hpp"
#include "core/textio.hpp"

using namespace mxai;

namespace {

// Minimal well-formedness check: prolog, balanced tags, quoted attributes.
bool well_formed_xml(const std::string& text) {
  std::size_t i = text.find('<');
  if (i == std::string::npos) return false;
  std::vector<std::string> stack;
  while (i < text.size()) {
    const std::size_t close = text.find('>', i);
    if (close == std::string::npos) return false;
    std::string tag = text.substr(i + 1, close - i - 1);
    if (!tag.empty() && tag[0] == '?') {
      // prolog
    } else if (!tag.empty() && tag[0] == '/') {
      if (stack.empty()) return false;
      if (stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else if (!tag.empty()) {
      const bool self_closing = tag.back() == '/';
      if (self_closing) tag.pop_back();
      const std::size_t sp = tag.find_first_of(" \t\n");
      const std::string name = sp == std::string::npos ? tag : tag.substr(0, sp);
      if (name.empty()) return false;
      if (!self_closing) stack.push_back(name);
    }
    i = text.find('<', close);
    if (i == std::string::npos) break;
    // text content between tags must not contain a bare '&' or '<'
    for (std::size_t j = close + 1; j < i; ++j) {
      if (text[j] == '&' && text.compare(j, 5, "&amp;") != 0 && text.compare(j, 4, "&lt;") != 0 &&
          text.compare(j, 4, "&gt;") != 0 && text.compare(j, 6, "&quot;") != 0) {
        return false;
      }
    }
  }
  return stack.empty();
}

FeedbackSpec fixed_spec(VizType viz) {
  FeedbackSpec spec;
  spec.viz = viz;
  spec.characteristic = Characteristic::kCooking;
  spec.predicted_class = true;
  for (int i = 0; i < kSlotsPerDay; ++i) {
    spec.day_profile[static_cast<std::size_t>(i)] =
        0.2 + (i >= 36 && i < 39 ? 1.0 : 0.0) + 0.1 * (i % 3);
  }
  spec.phi.assign(48, -0.01);
  for (int i = 36; i < 39; ++i) spec.phi[static_cast<std::size_t>(i)] = 0.2;
  spec.highlight = Highlight{36, 39, 0.6};
  return spec;
}

}  // namespace

TEST_CASE("highlight: a unique positive block is selected tightly") {
  std::array<double, kSlotsPerDay> phi{};
  phi[36] = 0.3;
  phi[37] = 0.5;
  phi[38] = 0.2;
  const Highlight h = select_highlight(phi);
  CHECK(h.start_slot == 36);
  CHECK(h.end_slot == 39);
  CHECK(h.strength == doctest::Approx(1.0));
}

TEST_CASE("highlight: all non-positive phi falls back to the max slot") {
  std::array<double, kSlotsPerDay> phi{};
  phi.fill(-1.0);
  phi[14] = -0.2;
  const Highlight h = select_highlight(phi);
  CHECK(h.start_slot == 14);
  CHECK(h.end_slot == 16);
}

TEST_CASE("highlight: equal-sum blocks resolve to the earliest start") {
  std::array<double, kSlotsPerDay> phi{};
  phi[10] = 0.5;
  phi[11] = 0.5;
  phi[30] = 0.5;
  phi[31] = 0.5;
  const Highlight h = select_highlight(phi);
  CHECK(h.start_slot == 10);
  CHECK(h.end_slot == 12);
}

TEST_CASE("highlight: window length respects the bounds") {
  std::array<double, kSlotsPerDay> phi{};
  for (int i = 8; i < 20; ++i) phi[static_cast<std::size_t>(i)] = 1.0;  // 12 positive slots
  const Highlight h = select_highlight(phi, 2, 6);
  CHECK(h.end_slot - h.start_slot == 6);
  CHECK(h.start_slot == 8);

  // fallback near the right edge stays inside [0, 48)
  std::array<double, kSlotsPerDay> neg{};
  neg.fill(-1.0);
  neg[47] = -0.1;
  const Highlight edge = select_highlight(neg);
  CHECK(edge.start_slot == 46);
  CHECK(edge.end_slot == 48);
}

TEST_CASE("highlight strength recomputes from the attribution") {
  std::array<double, kSlotsPerDay> phi{};
  for (int i = 0; i < kSlotsPerDay; ++i) phi[static_cast<std::size_t>(i)] = 0.01 * i;
  const Highlight h = select_highlight(phi);
  double sum = 0.0;
  for (int i = h.start_slot; i < h.end_slot; ++i) sum += phi[static_cast<std::size_t>(i)];
  CHECK(h.strength == doctest::Approx(sum));
}

TEST_CASE("highlight window is invariant under positive scaling of phi") {
  std::array<double, kSlotsPerDay> phi{};
  phi[20] = 0.4;
  phi[21] = 0.1;
  phi[40] = 0.3;
  const Highlight a = select_highlight(phi);
  for (auto& v : phi) v *= 17.0;
  const Highlight b = select_highlight(phi);
  CHECK(a.start_slot == b.start_slot);
  CHECK(a.end_slot == b.end_slot);
}

TEST_CASE("pooling spreads segment phi over time-of-day slots") {
  Attribution a;
  a.scheme = SegmentScheme::time_of_day_24();
  a.phi.assign(24, 0.0);
  a.phi[9] = 1.4;  // hour 9 covers slots 18, 19
  const auto pooled = pool_phi_to_slots(a);
  CHECK(pooled[18] == doctest::Approx(0.7));
  CHECK(pooled[19] == doctest::Approx(0.7));
  double total = 0.0;
  for (double v : pooled) total += v;
  CHECK(total == doctest::Approx(1.4));
}

TEST_CASE("rendering is deterministic and matches the committed golden files") {
  const struct {
    VizType viz;
    const char* file;
  } cases[] = {{VizType::kLine, "line.svg"},
               {VizType::kBar, "bar.svg"},
               {VizType::kPolar, "polar.svg"},
               {VizType::kShapDiagram, "shap.svg"},
               {VizType::kText, "text.txt"}};
  for (const auto& c : cases) {
    FeedbackSpec spec = fixed_spec(c.viz);
    spec.explanation_text = "The model keyed on the early evening.";
    spec.tip = TipKind::kCurtailment;
    const std::string once = render(spec);
    const std::string twice = render(spec);
    CHECK(once == twice);

    const std::string golden_path = std::string(MXAI_GOLDEN_DIR) + "/" + c.file;
    std::ifstream in(golden_path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing golden file ", golden_path);
    std::string expected((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK_MESSAGE(once == expected, c.file, " diverged from its golden rendering");
  }
}

TEST_CASE("all SVG renderings are well-formed XML with a viewBox and white background") {
  for (VizType viz : {VizType::kLine, VizType::kBar, VizType::kPolar, VizType::kShapDiagram}) {
    const std::string svg = render(fixed_spec(viz));
    CHECK(well_formed_xml(svg));
    CHECK(svg.find("viewBox=") != std::string::npos);
    CHECK(svg.find("fill=\"white\"") != std::string::npos);
    CHECK(svg.find("kWh") != std::string::npos);
    CHECK(svg.find("#2b6cb8") != std::string::npos);  // the blue highlight
  }
}

TEST_CASE("polar geometry: slot k sits at k*7.5 degrees clockwise from 12 o'clock") {
  // slot 12 (06:00) is a quarter turn: sin(90deg)=1, cos=0 -> point right of center
  FeedbackSpec spec = fixed_spec(VizType::kPolar);
  spec.day_profile.fill(0.0);
  spec.day_profile[12] = 1.0;
  const std::string svg = render(spec);
  // the trace polygon contains one point pushed to the right at y=center
  CHECK(svg.find("<polygon") != std::string::npos);
}

TEST_CASE("text feedback carries times and consumption in kWh") {
  FeedbackSpec spec = fixed_spec(VizType::kText);
  spec.day_profile.fill(0.4);
  spec.highlight = Highlight{36, 39, 1.0};
  for (int i = 36; i < 39; ++i) spec.day_profile[static_cast<std::size_t>(i)] = 1.2;

  const std::string text = generate_text(spec);
  CHECK(text.find("18:00") != std::string::npos);
  CHECK(text.find("19:30") != std::string::npos);
  CHECK(text.find("1.2 kWh") != std::string::npos);
  CHECK(text.find("0.4 kWh") != std::string::npos);  // day mean (45*0.4 + 3*1.2)/48
}

TEST_CASE("text tip endings come from the catalog") {
  FeedbackSpec spec = fixed_spec(VizType::kText);
  spec.tip = TipKind::kCurtailment;
  const std::string with_tip = generate_text(spec);
  const std::string expected = "Tip: " + tip_text(Characteristic::kCooking, TipKind::kCurtailment);
  CHECK(with_tip.find(expected) != std::string::npos);
  CHECK(with_tip.rfind(expected + "\n") == with_tip.size() - expected.size() - 1);
}

TEST_CASE("bare text is exactly the core template") {
  FeedbackSpec spec = fixed_spec(VizType::kText);
  spec.tip.reset();
  spec.explanation_text.reset();
  const std::string text = generate_text(spec);
  CHECK(text.find("Tip:") == std::string::npos);
  CHECK(text.back() == '\n');
  // core template has exactly five lines
  int lines = 0;
  for (char ch : text) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 5);
}

TEST_CASE("feedback specs round-trip through JSON") {
  FeedbackSpec spec = fixed_spec(VizType::kPolar);
  spec.tip = TipKind::kEfficiency;
  spec.explanation_text = "caption";
  const FeedbackSpec back = feedback_spec_from_json(feedback_spec_to_json(spec));
  CHECK(back.viz == spec.viz);
  CHECK(back.characteristic == spec.characteristic);
  CHECK(back.highlight.start_slot == spec.highlight.start_slot);
  CHECK(back.highlight.end_slot == spec.highlight.end_slot);
  CHECK(back.day_profile == spec.day_profile);
  CHECK(back.phi == spec.phi);
  REQUIRE(back.tip.has_value());
  CHECK(*back.tip == TipKind::kEfficiency);
  REQUIRE(back.explanation_text.has_value());
  CHECK(*back.explanation_text == "caption");

  CHECK_THROWS_AS(feedback_spec_from_json("{\"viz\":\"sparkline\"}"), data_error);
  CHECK_THROWS_AS(feedback_spec_from_json("nonsense"), data_error);
}

TEST_CASE("slot_to_hhmm formats half-hour boundaries") {
  CHECK(slot_to_hhmm(0) == "00:00");
  CHECK(slot_to_hhmm(36) == "18:00");
  CHECK(slot_to_hhmm(39) == "19:30");
  CHECK(slot_to_hhmm(48) == "00:00");  // exclusive end of the day wraps
}
