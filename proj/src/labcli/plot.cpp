#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ietlab/error.hpp"
#include "ietlab/gauges.hpp"
#include "ietlab/labcli.hpp"

namespace ietlab::lab {

namespace {

constexpr double kW = 640, kH = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
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

double to_number(const std::string& s, std::size_t row, const std::string& col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadCsv, "row " + std::to_string(row + 2) + ", column " + col + ": not a number: '" + s + "'");
  }
}

int require(const CsvTable& t, const std::string& name) {
  const int c = t.column(name);
  if (c < 0) throw Error(ErrorKind::BadCsv, "missing column '" + name + "'");
  return c;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  double value_at(double t) const { return log ? std::pow(10.0, lo + t * (hi - lo)) : lo + t * (hi - lo); }
};

Axis make_axis(double mn, double mx, bool log) {
  Axis a;
  a.log = log;
  if (log) {
    mn = std::log10(mn);
    mx = std::log10(mx);
  }
  if (mx <= mn) {
    const double pad = mn == 0 ? 1 : std::fabs(mn) * 0.1;
    mn -= pad;
    mx += pad;
  }
  a.lo = mn;
  a.hi = mx;
  return a;
}

class Canvas {
 public:
  Canvas(const std::string& title, Axis x, Axis y, const std::string& xl, const std::string& yl) : x_(x), y_(y) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\" width=\"640\" height=\"400\">\n";
    os_ << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    if (!title.empty())
      os_ << "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    os_ << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kW - kLeft - kRight)
        << "\" height=\"" << num(kH - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double t = i / 4.0;
      const double px = kLeft + t * (kW - kLeft - kRight);
      const double py = kH - kBottom - t * (kH - kTop - kBottom);
      os_ << "<text x=\"" << num(px) << "\" y=\"" << num(kH - kBottom + 16) << "\" text-anchor=\"middle\" font-size=\"10\">"
          << label(x_.value_at(t)) << "</text>\n";
      os_ << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
          << label(y_.value_at(t)) << "</text>\n";
    }
    os_ << "<text x=\"" << num((kLeft + kW - kRight) / 2) << "\" y=\"" << num(kH - 12)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(xl) << "</text>\n";
    os_ << "<text x=\"14\" y=\"" << num((kTop + kH - kBottom) / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 14 " << num((kTop + kH - kBottom) / 2) << ")\">" << escape(yl) << "</text>\n";
  }

  double px(double v) const { return x_.map(v, kLeft, kW - kRight); }
  double py(double v) const { return y_.map(v, kH - kBottom, kTop); }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, bool markers) {
    os_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os_ << (i ? " " : "") << num(px(pts[i].first)) << "," << num(py(pts[i].second));
    os_ << "\"/>\n";
    if (markers) {
      for (const auto& [x, y] : pts)
        os_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
  }

  void hline(double v, const std::string& text) {
    const double y = py(v);
    os_ << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kW - kRight) << "\" y2=\"" << num(y)
        << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    os_ << "<text x=\"" << num(kW - kRight - 4) << "\" y=\"" << num(y - 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << escape(text) << "</text>\n";
  }

  void legend(int row, const char* color, const std::string& text) {
    const double y = kTop + 14 + 14 * row;
    os_ << "<rect x=\"" << num(kLeft + 8) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"3\" fill=\"" << color << "\"/>\n";
    os_ << "<text x=\"" << num(kLeft + 22) << "\" y=\"" << num(y - 3) << "\" font-size=\"11\">" << escape(text) << "</text>\n";
  }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

 private:
  Axis x_, y_;
  std::ostringstream os_;
};

std::string plot_trace(const CsvTable& t, const PlotOptions& opt) {
  const int ch = require(t, "horizon"), cm = require(t, "running_min");
  const int cs = t.column("sample_id");
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmn = INFINITY, xmx = -INFINITY, ymn = INFINITY, ymx = -INFINITY;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string id = cs >= 0 ? t.rows[r][cs] : "0";
    if (!series.count(id) && series.size() >= 50) continue;
    const double x = to_number(t.rows[r][ch], r, "horizon");
    const double y = to_number(t.rows[r][cm], r, "running_min");
    if (!(x > 0)) throw Error(ErrorKind::BadCsv, "horizon must be positive");
    series[id].emplace_back(x, y);
    xmn = std::min(xmn, x);
    xmx = std::max(xmx, x);
    ymn = std::min(ymn, y);
    ymx = std::max(ymx, y);
  }
  if (series.empty()) throw Error(ErrorKind::BadCsv, "no data rows");
  if (opt.hline) {
    ymn = std::min(ymn, *opt.hline);
    ymx = std::max(ymx, *opt.hline);
  }
  const bool ylog = ymn > 0 && ymx / ymn > 100;
  Canvas c(opt.title.empty() ? "running minimum" : opt.title, make_axis(xmn, xmx, true), make_axis(ymn, ymx, ylog), "horizon N",
           "min s_n d");
  int i = 0;
  for (const auto& [id, pts] : series) c.polyline(pts, kPalette[i++ % 8], series.size() <= 8);
  if (opt.hline) c.hline(*opt.hline, opt.hline_label.empty() ? label(*opt.hline) : opt.hline_label);
  return c.finish();
}

std::string plot_histogram(const CsvTable& t, const PlotOptions& opt) {
  const int ch = require(t, "horizon"), cl = require(t, "bin_lo"), cc = require(t, "count");
  std::map<double, std::vector<std::pair<double, double>>> series;
  double xmn = INFINITY, xmx = -INFINITY, ymx = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double h = to_number(t.rows[r][ch], r, "horizon");
    const std::string& lo = t.rows[r][cl];
    // open bins print as -inf; place them one step left of the first edge
    const double x = lo == "-inf" ? -7.0 : to_number(lo, r, "bin_lo");
    const double y = to_number(t.rows[r][cc], r, "count");
    series[h].emplace_back(x, y);
    xmn = std::min(xmn, x);
    xmx = std::max(xmx, x);
    ymx = std::max(ymx, y);
  }
  if (series.empty()) throw Error(ErrorKind::BadCsv, "no data rows");
  Canvas c(opt.title.empty() ? "polarization" : opt.title, make_axis(xmn, xmx, false), make_axis(0, ymx, false),
           "log10 of block minimum (bin start)", "samples");
  int i = 0;
  for (const auto& [h, pts] : series) {
    c.polyline(pts, kPalette[i % 8], true);
    c.legend(i, kPalette[i % 8], "N = " + label(h));
    ++i;
  }
  return c.finish();
}

std::string plot_loglog(const CsvTable& t, const PlotOptions& opt) {
  if (t.header.size() < 2) throw Error(ErrorKind::BadCsv, "loglog needs two columns");
  std::vector<double> xs, ys;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double x = to_number(t.rows[r][0], r, t.header[0]);
    const double y = to_number(t.rows[r][1], r, t.header[1]);
    if (x > 0 && y > 0) {
      xs.push_back(x);
      ys.push_back(y);
      pts.emplace_back(x, y);
    }
  }
  if (pts.size() < 2) throw Error(ErrorKind::BadCsv, "loglog needs two positive points");
  const double slope = loglog_slope(xs, ys);
  const auto [xmn, xmx] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymn, ymx] = std::minmax_element(ys.begin(), ys.end());
  Canvas c(opt.title.empty() ? t.header[1] + " against " + t.header[0] : opt.title, make_axis(*xmn, *xmx, true),
           make_axis(*ymn, *ymx, true), t.header[0], t.header[1]);
  c.polyline(pts, kPalette[0], true);
  // fitted line through the centroid in log coordinates
  double lx = 0, ly = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx += std::log10(xs[i]);
    ly += std::log10(ys[i]);
  }
  lx /= xs.size();
  ly /= ys.size();
  auto fit = [&](double x) { return std::pow(10.0, ly + slope * (std::log10(x) - lx)); };
  std::vector<std::pair<double, double>> line{{*xmn, fit(*xmn)}, {*xmx, fit(*xmx)}};
  c.polyline(line, kPalette[1], false);
  char buf[64];
  std::snprintf(buf, sizeof buf, "fitted slope %.4f", std::abs(slope) < 5e-5 ? 0.0 : slope);
  c.legend(0, kPalette[1], buf);
  if (opt.hline) c.hline(*opt.hline, opt.hline_label.empty() ? label(*opt.hline) : opt.hline_label);
  return c.finish();
}

}  // namespace

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "trace") return PlotKind::Trace;
  if (s == "histogram") return PlotKind::Histogram;
  if (s == "loglog") return PlotKind::LogLog;
  throw Error(ErrorKind::Config, "unknown plot kind '" + s + "' (trace, histogram, loglog)");
}

std::string emit_plot(const CsvTable& csv, PlotKind kind, const PlotOptions& opt) {
  if (csv.rows.empty()) throw Error(ErrorKind::BadCsv, "no data rows");
  switch (kind) {
    case PlotKind::Trace: return plot_trace(csv, opt);
    case PlotKind::Histogram: return plot_histogram(csv, opt);
    case PlotKind::LogLog: return plot_loglog(csv, opt);
  }
  return {};
}

}  // namespace ietlab::lab
