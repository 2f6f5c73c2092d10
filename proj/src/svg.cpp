#include "ecomp/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace ecomp {

namespace {

constexpr double kWidth = 900.0;
constexpr double kPanelH = 180.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 150.0;
constexpr double kGap = 40.0;
constexpr std::size_t kMaxPoints = 1500;

constexpr std::array<const char *, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                               "#ff7f0e", "#9467bd", "#7f7f7f"};

std::string esc(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  const std::vector<double> *values;
};

void panel(std::string &svg, double top, const std::string &title, const std::vector<Series> &lines,
           double rate) {
  const double plot_w = kWidth - kMarginL - kMarginR;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto &s : lines) {
    for (double v : *s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    n = std::max(n, s.values->size());
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  svg += fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="none" stroke="#000"/>)"
                     "\n",
                     kMarginL, top, plot_w, kPanelH);
  svg += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="12">{}</text>)"
                     "\n",
                     kMarginL, top - 6.0, esc(title));
  svg += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="end">{:.4g}</text>)"
                     "\n",
                     kMarginL - 4.0, top + 10.0, hi);
  svg += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="end">{:.4g}</text>)"
                     "\n",
                     kMarginL - 4.0, top + kPanelH, lo);
  const double t_end = n > 1 ? static_cast<double>(n - 1) / rate : 1.0;
  svg += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="end">{:.4g} s</text>)"
                     "\n",
                     kMarginL + plot_w, top + kPanelH + 12.0, t_end);

  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto &v = *lines[l].values;
    if (v.empty())
      continue;
    const std::size_t stride = std::max<std::size_t>(1, (v.size() + kMaxPoints - 1) / kMaxPoints);
    std::string pts;
    for (std::size_t k = 0; k < v.size(); k += stride) {
      const double x = kMarginL + plot_w * (n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0);
      const double y = top + kPanelH * (hi - v[k]) / (hi - lo);
      pts += fmt::format("{:.2f},{:.2f} ", x, y);
    }
    if (!pts.empty())
      pts.pop_back();
    const char *color = kColors[l % kColors.size()];
    svg += fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>)"
                       "\n",
                       color, pts);
    svg += fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11" fill="{}">{}</text>)"
                       "\n",
                       kMarginL + plot_w + 8.0, top + 14.0 * static_cast<double>(l + 1), color,
                       esc(lines[l].label));
  }
}

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("plot.io", fmt::format("{}: cannot open for writing", path.string()));
  out << text;
  if (!out)
    throw Error("plot.io", fmt::format("{}: write failed", path.string()));
}

} // namespace

std::string render_trace_svg(const CycleTrace &trace) {
  const auto &ts = trace.series;
  auto pick = [&](std::initializer_list<const char *> names) {
    std::vector<Series> out;
    for (const char *n : names)
      if (ts.has(n))
        out.push_back({n, &ts[n]});
    return out;
  };
  std::vector<std::pair<std::string, std::vector<Series>>> panels;
  if (auto s = pick({channel::current}); !s.empty())
    panels.emplace_back("current [A]", std::move(s));
  if (auto s = pick({"e_ecm", "e_ocsvm", "e_hull"}); !s.empty())
    panels.emplace_back("compensation [V]", std::move(s));
  if (auto s = pick({"y", "y_am", "y_ecm", "y_ocsvm", "y_hull"}); !s.empty())
    panels.emplace_back("voltage [V]", std::move(s));
  if (panels.empty())
    throw Error("plot.empty", fmt::format("trace '{}' has no plottable channels", trace.name));

  const double height =
      kGap + static_cast<double>(panels.size()) * (kPanelH + kGap) + 10.0;
  std::string svg = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{:.0f}" height="{:.0f}" viewBox="0 0 {:.0f} {:.0f}" font-family="sans-serif">)"
      "\n",
      kWidth, height, kWidth, height);
  svg += fmt::format(R"(<rect width="100%" height="100%" fill="#fff"/>)"
                     "\n"
                     R"(<text x="{:.2f}" y="16" font-size="14">{}</text>)"
                     "\n",
                     kMarginL, esc(trace.name));
  double top = kGap;
  for (const auto &[title, lines] : panels) {
    panel(svg, top, title, lines, ts.sample_rate_hz());
    top += kPanelH + kGap;
  }
  svg += "</svg>\n";
  return svg;
}

std::string render_scatter_svg(const Matrix &train, const std::vector<CycleTrace> &traces) {
  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  auto extend = [&](double a, double b, double c) {
    const std::array<double, 3> p{a, b, c};
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  };
  for (Eigen::Index r = 0; r < train.rows(); ++r)
    extend(train(r, 0), train(r, 1), train(r, 2));
  for (const auto &t : traces) {
    const auto &i = t.series[channel::current];
    const auto &T = t.series[channel::temperature];
    const auto &s = t.series[channel::soc];
    for (std::size_t k = 0; k < i.size(); ++k)
      extend(i[k], T[k], s[k]);
  }
  for (int d = 0; d < 3; ++d)
    if (!(hi[d] > lo[d])) {
      lo[d] -= 0.5;
      hi[d] += 0.5;
    }

  // Oblique projection: current to the right, soc up, temperature receding.
  const double size = 520.0;
  const double ox = 70.0;
  const double oy = 600.0;
  auto project = [&](double a, double b, double c) {
    const double u = (a - lo[0]) / (hi[0] - lo[0]);
    const double v = (b - lo[1]) / (hi[1] - lo[1]);
    const double w = (c - lo[2]) / (hi[2] - lo[2]);
    return std::pair{ox + size * (0.75 * u + 0.35 * v), oy - size * (0.75 * w + 0.35 * v)};
  };

  std::string svg =
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="800" height="660" viewBox="0 0 800 660" font-family="sans-serif">)"
      "\n"
      R"(<rect width="100%" height="100%" fill="#fff"/>)"
      "\n";
  const std::array<std::array<double, 3>, 3> axes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const std::array<const char *, 3> names{"current [A]", "temperature [degC]", "soc"};
  const auto [x0, y0] = project(lo[0], lo[1], lo[2]);
  for (int d = 0; d < 3; ++d) {
    const auto [x1, y1] = project(lo[0] + axes[d][0] * (hi[0] - lo[0]),
                                  lo[1] + axes[d][1] * (hi[1] - lo[1]),
                                  lo[2] + axes[d][2] * (hi[2] - lo[2]));
    svg += fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="#000"/>)"
                       "\n"
                       R"(<text x="{:.2f}" y="{:.2f}" font-size="11">{} ({:.3g} .. {:.3g})</text>)"
                       "\n",
                       x0, y0, x1, y1, x1 + 4.0, y1 - 4.0, names[d], lo[d], hi[d]);
  }
  for (Eigen::Index r = 0; r < train.rows(); ++r) {
    const auto [x, y] = project(train(r, 0), train(r, 1), train(r, 2));
    svg += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="1.2" fill="#999"/>)"
                       "\n",
                       x, y);
  }
  for (std::size_t c = 0; c < traces.size(); ++c) {
    const auto &i = traces[c].series[channel::current];
    const auto &T = traces[c].series[channel::temperature];
    const auto &s = traces[c].series[channel::soc];
    const std::size_t stride = std::max<std::size_t>(1, (i.size() + 399) / 400);
    const char *color = kColors[c % (kColors.size() - 1)];
    for (std::size_t k = 0; k < i.size(); k += stride) {
      const auto [x, y] = project(i[k], T[k], s[k]);
      svg += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="1.6" fill="{}"/>)"
                         "\n",
                         x, y, color);
    }
    svg += fmt::format(R"(<text x="640" y="{:.2f}" font-size="11" fill="{}">{}</text>)"
                       "\n",
                       20.0 + 14.0 * static_cast<double>(c), color, esc(traces[c].name));
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<ReportRow> &report,
                                              const std::vector<CycleTrace> &traces,
                                              const Matrix &train_projection,
                                              const std::filesystem::path &dir) {
  if (report.empty())
    throw Error("plot.empty", "report has no rows");
  if (traces.empty())
    throw Error("plot.empty", "no traces to plot");
  if (train_projection.rows() > 0 && train_projection.cols() != 3)
    throw Error("plot.schema", "training projection must have three columns");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error("plot.io", fmt::format("{}: {}", dir.string(), ec.message()));

  std::vector<std::filesystem::path> out;
  if (train_projection.rows() > 0) {
    out.push_back(dir / "scatter.svg");
    write_file(out.back(), render_scatter_svg(train_projection, traces));
  }
  for (const auto &t : traces) {
    out.push_back(dir / fmt::format("trace_{}.svg", t.name));
    write_file(out.back(), render_trace_svg(t));
  }
  return out;
}

} // namespace ecomp
