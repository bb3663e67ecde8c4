#include "svg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sgdlb::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

struct Frame {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  bool log_y = false;

  void Include(double x, double y) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }

  void Finish() {
    if (!std::isfinite(x_min)) x_min = 0.0, x_max = 1.0;
    if (!std::isfinite(y_min)) y_min = log_y ? 0.0 : 0.0, y_max = 1.0;
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;
  }

  double Px(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  }
  double Py(double y) const {
    return kHeight - kBottom -
           (y - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  }
};

bool Usable(double x, double y, bool log_y) {
  return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0);
}

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

void Header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
     << "font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
     << "font-size=\"14\">" << title << "</text>\n";
}

void Axes(std::ostringstream& os, const Frame& f) {
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;
  os << "<path d=\"M" << x0 << ' ' << y1 << " L" << x0 << ' ' << y0 << " L"
     << x1 << ' ' << y0 << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    const double xv = f.x_min + t * (f.x_max - f.x_min);
    const double yv = f.y_min + t * (f.y_max - f.y_min);
    const double px = f.Px(xv);
    const double py = f.Py(yv);
    os << "<text x=\"" << px << "\" y=\"" << y0 + 16
       << "\" text-anchor=\"middle\">" << Fmt(xv) << "</text>\n";
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\">"
       << (f.log_y ? Fmt(std::pow(10.0, yv)) : Fmt(yv)) << "</text>\n";
  }
}

}  // namespace

std::string RenderLineChart(const std::string& title,
                            const std::vector<LineSeries>& series,
                            bool log_y) {
  Frame f;
  f.log_y = log_y;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (Usable(s.x[i], s.y[i], log_y)) {
        f.Include(s.x[i], log_y ? std::log10(s.y[i]) : s.y[i]);
      }
    }
  }
  f.Finish();

  std::ostringstream os;
  Header(os, title);
  Axes(os, f);
  double legend_y = kTop + 10;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color
       << "\" stroke-width=\"1.2\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!Usable(s.x[i], s.y[i], log_y)) continue;
      const double y = log_y ? std::log10(s.y[i]) : s.y[i];
      os << f.Px(s.x[i]) << ',' << f.Py(y) << ' ';
    }
    os << "\"/>\n";
    const double lx = kWidth - kRight + 12;
    os << "<line x1=\"" << lx << "\" y1=\"" << legend_y << "\" x2=\""
       << lx + 20 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
       << "\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
       << "<text x=\"" << lx + 26 << "\" y=\"" << legend_y + 4 << "\">"
       << s.label << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

std::string RenderScatter(const std::string& title,
                          const std::vector<ScatterGroup>& groups) {
  Frame f;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.x.size() && i < g.y.size(); ++i) {
      if (Usable(g.x[i], g.y[i], false)) f.Include(g.x[i], g.y[i]);
    }
  }
  f.Finish();

  std::ostringstream os;
  Header(os, title);
  Axes(os, f);
  double legend_y = kTop + 10;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.x.size() && i < g.y.size(); ++i) {
      if (!Usable(g.x[i], g.y[i], false)) continue;
      os << "<circle cx=\"" << f.Px(g.x[i]) << "\" cy=\"" << f.Py(g.y[i])
         << "\" r=\"1.5\" fill=\"" << g.color << "\"/>\n";
    }
    const double lx = kWidth - kRight + 12;
    os << "<circle cx=\"" << lx + 10 << "\" cy=\"" << legend_y
       << "\" r=\"3\" fill=\"" << g.color << "\"/>\n"
       << "<text x=\"" << lx + 26 << "\" y=\"" << legend_y + 4 << "\">"
       << g.label << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sgdlb::cli
