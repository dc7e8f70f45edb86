#include "hawkes/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hawkes/stats.hpp"

namespace hawkes {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
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

struct Frame {
  double x0, x1, y0, y1;
  [[nodiscard]] double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  [[nodiscard]] double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

Frame padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  return {x0, x1, y0, y1};
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
      << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& x_label, const std::string& y_label) {
  const double bx = kHeight - kBottom;
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(bx) << "\" x2=\"" << num(kWidth - kRight) << "\" y2=\""
      << num(bx) << "\"/>\n"
      << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(bx)
      << "\"/>\n</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    char xl[32], yl[32];
    std::snprintf(xl, sizeof(xl), "%.3g", xv);
    std::snprintf(yl, sizeof(yl), "%.3g", yv);
    out << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(bx + 16) << "\" text-anchor=\"middle\">" << xl
        << "</text>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << yl
        << "</text>\n";
  }
  out << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num((kTop + kHeight - kBottom) / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << num((kTop + kHeight - kBottom) / 2) << ")\">" << escape(y_label)
      << "</text>\n</g>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& labels) {
  out << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 14.0 * static_cast<double>(i);
    out << "<rect x=\"" << num(kWidth - 150) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % 6] << "\"/>\n<text x=\"" << num(kWidth - 135) << "\" y=\"" << num(y) << "\">"
        << escape(labels[i]) << "</text>\n";
  }
  out << "</g>\n";
}

}  // namespace

DensityCurve kernel_density(std::span<const double> draws, std::size_t points, std::string label) {
  if (draws.size() < 2) throw std::invalid_argument("kernel_density: need at least two draws");
  if (points < 2) throw std::invalid_argument("kernel_density: need at least two grid points");
  const double sd = stats::sd(draws);
  const double iqr = stats::quantile(draws, 0.75) - stats::quantile(draws, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1e-3;
  const double bw = 0.9 * spread * std::pow(static_cast<double>(draws.size()), -0.2);
  const auto [lo_it, hi_it] = std::minmax_element(draws.begin(), draws.end());
  const double lo = *lo_it - 4.0 * bw;
  const double hi = *hi_it + 4.0 * bw;
  DensityCurve c;
  c.label = std::move(label);
  c.x.resize(points);
  c.y.assign(points, 0.0);
  const double norm = 1.0 / (static_cast<double>(draws.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < points; ++g) {
    c.x[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
    double s = 0.0;
    for (double v : draws) {
      const double z = (c.x[g] - v) / bw;
      s += std::exp(-0.5 * z * z);
    }
    c.y[g] = s * norm;
  }
  return c;
}

std::string density_svg(const std::vector<DensityCurve>& curves, const std::string& title,
                        const std::string& x_label) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y1 = 0.0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y1 = std::max(y1, c.y[i]);
    }
  }
  if (curves.empty()) x0 = 0.0, x1 = 1.0;
  const Frame f = padded(x0, x1, 0.0, y1 * 1.05);
  std::ostringstream out;
  open_svg(out, title);
  axes(out, f, x_label, "density");
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    labels.push_back(c.label);
    out << "<path class=\"density\" fill=\"none\" stroke=\"" << kPalette[k % 6] << "\" stroke-width=\"2\" d=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      out << (i == 0 ? 'M' : 'L') << num(f.px(c.x[i])) << ',' << num(f.py(c.y[i])) << ' ';
    }
    out << "\"/>\n";
  }
  legend(out, labels);
  out << "</svg>\n";
  return out.str();
}

std::string sweep_svg(const std::vector<SweepSeries>& series, const std::string& title) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  std::size_t rows = 0;
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      x0 = std::min(x0, r.q05);
      x1 = std::max(x1, r.q95);
      ++rows;
    }
  }
  if (rows == 0) x0 = 0.0, x1 = 1.0;
  const Frame f = padded(x0, x1, 0.0, static_cast<double>(rows + 1));
  std::ostringstream out;
  open_svg(out, title);
  axes(out, f, "population branching factor", "model / delta");
  std::vector<std::string> labels;
  std::size_t slot = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    labels.push_back(series[k].label);
    for (const auto& r : series[k].rows) {
      ++slot;
      const double y = f.py(static_cast<double>(slot));
      out << "<g class=\"sweep\" data-delta=\"" << num(r.delta) << "\">"
          << "<line x1=\"" << num(f.px(r.q05)) << "\" y1=\"" << num(y) << "\" x2=\"" << num(f.px(r.q95))
          << "\" y2=\"" << num(y) << "\" stroke=\"" << kPalette[k % 6] << "\" stroke-width=\"2\""
          << (r.reliable ? "" : " stroke-dasharray=\"4 3\"") << "/>"
          << "<circle cx=\"" << num(f.px(r.mean)) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\""
          << kPalette[k % 6] << "\"/>"
          << "<text x=\"" << num(f.px(r.q95) + 6) << "\" y=\"" << num(y + 4)
          << "\" font-family=\"sans-serif\" font-size=\"10\">delta=" << num(r.delta) << "</text></g>\n";
    }
  }
  legend(out, labels);
  out << "</svg>\n";
  return out.str();
}

std::string branching_svg(const Session& session, const BranchingForest& forest, const ExogenousCurve& curve,
                          const std::string& title) {
  if (forest.size() != session.size()) throw std::invalid_argument("branching_svg: forest does not match session");
  const Frame f = padded(0.0, session.duration, 0.0, 1.0);
  std::ostringstream out;
  open_svg(out, title);
  axes(out, f, "minutes", "P(exogenous)");
  if (!curve.grid.empty()) {
    out << "<path class=\"band\" fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\" d=\"";
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
      out << (g == 0 ? 'M' : 'L') << num(f.px(curve.grid[g])) << ',' << num(f.py(curve.upper[g])) << ' ';
    }
    for (std::size_t g = curve.grid.size(); g-- > 0;) {
      out << 'L' << num(f.px(curve.grid[g])) << ',' << num(f.py(curve.lower[g])) << ' ';
    }
    out << "Z\"/>\n<path class=\"median\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" d=\"";
    for (std::size_t g = 0; g < curve.grid.size(); ++g) {
      out << (g == 0 ? 'M' : 'L') << num(f.px(curve.grid[g])) << ',' << num(f.py(curve.median[g])) << ' ';
    }
    out << "\"/>\n";
  }
  const double base = f.py(0.0) - 8.0;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    if (forest[i].kind != ParentLabel::Kind::event) continue;
    const double xa = f.px(session.times[forest[i].index]);
    const double xb = f.px(session.times[i]);
    const double h = std::min(120.0, 0.5 * (xb - xa) + 10.0);
    out << "<path class=\"arc\" data-parent=\"" << forest[i].index << "\" data-child=\"" << i
        << "\" fill=\"none\" stroke=\"#555\" stroke-width=\"1\" d=\"M" << num(xa) << ',' << num(base) << " Q"
        << num(0.5 * (xa + xb)) << ',' << num(base - h) << ' ' << num(xb) << ',' << num(base) << "\"/>\n";
  }
  for (std::size_t i = 0; i < forest.size(); ++i) {
    const char* color = forest[i].kind == ParentLabel::Kind::exogenous ? "#1f77b4"
                        : forest[i].kind == ParentLabel::Kind::edge    ? "#2ca02c"
                                                                        : "#d62728";
    out << "<circle class=\"event\" cx=\"" << num(f.px(session.times[i])) << "\" cy=\"" << num(base)
        << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
  legend(out, {"exogenous", "triggered", "edge"});
  out << "</svg>\n";
  return out.str();
}

}  // namespace hawkes
