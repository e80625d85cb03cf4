#include "mtdc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace mtdc::plot {

namespace {

constexpr std::array<const char*, 12> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                              "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};

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

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

std::vector<double> ticks(const Axis& ax) {
  std::vector<double> out;
  if (ax.log) {
    for (double e = std::ceil(std::log10(ax.lo)); e <= std::floor(std::log10(ax.hi)) + 1e-9; e += 1.0)
      out.push_back(std::pow(10.0, e));
    return out;
  }
  const double span = ax.hi - ax.lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  for (double t = std::ceil(ax.lo / step) * step; t <= ax.hi + 1e-9 * span; t += step)
    out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return out;
}

void render_panel(std::ostringstream& svg, const Panel& p, double top, double width, double height) {
  const double left = 70.0, right = width - 150.0, y0 = top + 30.0, y1 = top + height - 45.0;

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  if (p.window) {
    std::tie(xlo, xhi, ylo, yhi) = std::tuple{(*p.window)[0], (*p.window)[1], (*p.window)[2], (*p.window)[3]};
  } else {
    for (const auto& s : p.series)
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || (p.log_x && s.x[k] <= 0.0)) continue;
        xlo = std::min(xlo, s.x[k]);
        xhi = std::max(xhi, s.x[k]);
        ylo = std::min(ylo, s.y[k]);
        yhi = std::max(yhi, s.y[k]);
      }
    if (!std::isfinite(xlo)) xlo = p.log_x ? 1.0 : 0.0, xhi = p.log_x ? 10.0 : 1.0, ylo = 0.0, yhi = 1.0;
    if (xhi <= xlo) xhi = p.log_x ? xlo * 10.0 : xlo + 1.0;
    const double pad = 0.05 * std::max(yhi - ylo, 1e-9);
    ylo -= pad;
    yhi += pad;
  }
  const Axis ax{xlo, xhi, p.log_x}, ay{ylo, yhi, false};
  auto px = [&](double v) { return ax.map(v, left, right); };
  auto py = [&](double v) { return ay.map(v, y1, y0); };

  svg << "<g>\n<text x=\"" << num(left) << "\" y=\"" << num(top + 20.0) << "\" font-size=\"14\" font-weight=\"bold\">"
      << escape(p.title) << "</text>\n";
  for (const auto& [a, b] : p.bands) {
    const double xa = px(std::clamp(a, xlo, xhi)), xb = px(std::clamp(b, xlo, xhi));
    svg << "<rect x=\"" << num(xa) << "\" y=\"" << num(y0) << "\" width=\"" << num(std::max(xb - xa, 1.0))
        << "\" height=\"" << num(y1 - y0) << "\" fill=\"#ff0000\" fill-opacity=\"0.12\" stroke=\"#d62728\"/>\n";
  }
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(y0) << "\" width=\"" << num(right - left) << "\" height=\""
      << num(y1 - y0) << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (double t : ticks(ax)) {
    svg << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px(t)) << "\" y2=\"" << num(y1)
        << "\" stroke=\"#ddd\"/>\n<text x=\"" << num(px(t)) << "\" y=\"" << num(y1 + 15.0)
        << "\" font-size=\"10\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(right) << "\" y2=\""
        << num(py(t)) << "\" stroke=\"#ddd\"/>\n<text x=\"" << num(left - 5.0) << "\" y=\"" << num(py(t) + 3.0)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  svg << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(y1 + 32.0)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";
  svg << "<text x=\"15\" y=\"" << num((y0 + y1) / 2) << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << num((y0 + y1) / 2) << ")\">" << escape(p.y_label) << "</text>\n";

  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& ser = p.series[s];
    const char* color = kPalette[s % kPalette.size()];
    std::ostringstream path;
    bool pen = false;
    for (std::size_t k = 0; k < ser.x.size() && k < ser.y.size(); ++k) {
      const double x = ser.x[k], y = ser.y[k];
      const bool inside = ax.usable(x) && std::isfinite(y) && x >= xlo && x <= xhi && y >= ylo && y <= yhi;
      if (!inside) {
        pen = false;
        continue;
      }
      path << (pen ? " L" : " M") << num(px(x)) << ' ' << num(py(y));
      pen = true;
    }
    svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\""
        << (ser.dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
    const double ly = y0 + 12.0 + 14.0 * static_cast<double>(s);
    svg << "<line x1=\"" << num(right + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(right + 30) << "\" y2=\""
        << num(ly - 4) << "\" stroke=\"" << color << "\"/>\n<text x=\"" << num(right + 35) << "\" y=\"" << num(ly)
        << "\" font-size=\"10\">" << escape(ser.label) << "</text>\n";
  }
  for (const auto& [x, y] : p.markers) {
    if (!(x >= xlo && x <= xhi && y >= ylo && y <= yhi)) continue;
    svg << "<path d=\"M" << num(px(x) - 5) << ' ' << num(py(y) - 5) << " L" << num(px(x) + 5) << ' ' << num(py(y) + 5)
        << " M" << num(px(x) - 5) << ' ' << num(py(y) + 5) << " L" << num(px(x) + 5) << ' ' << num(py(y) - 5)
        << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  svg << "</g>\n";
}

}  // namespace

std::string render_svg(std::span<const Panel> panels, double width, double panel_height) {
  std::ostringstream svg;
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k)
    render_panel(svg, panels[k], panel_height * static_cast<double>(k), width, panel_height);
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const std::filesystem::path& path, std::span<const Panel> panels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_svg(panels);
  if (!out) throw IoError("cannot write " + path.string());
}

// -- Analysis figures ------------------------------------------------------------------

namespace {

std::vector<double> hz(const FrequencyGrid& g) { return {g.hz().begin(), g.hz().end()}; }

double db(Complex z) { return 20.0 * std::log10(std::abs(z)); }
double deg(Complex z) { return std::arg(z) * 180.0 / std::numbers::pi; }

std::vector<std::pair<double, double>> bands(const AnalysisReport& r) {
  std::vector<std::pair<double, double>> out;
  for (const auto& c : r.critical_loci) out.emplace_back(c.f_lo, c.f_hi);
  return out;
}

// Loci that never leave the structural null space carry no information.
std::vector<Index> visible_loci(const EigenLocusSet& loci) {
  std::vector<Index> out;
  const double scale = loci.values.cwiseAbs().maxCoeff();
  for (Index i = 0; i < loci.locus_count(); ++i)
    if (loci.values.col(i).cwiseAbs().maxCoeff() > 1e-6 * scale) out.push_back(i);
  return out;
}

std::pair<Panel, Panel> bode(const std::string& what, const FrequencyGrid& grid,
                             const std::vector<std::pair<std::string, std::vector<Complex>>>& curves,
                             std::vector<std::pair<double, double>> band) {
  Panel mag{"Magnitude of " + what, "Frequency (Hz)", "Magnitude (dB)", true, {}, band, {}, std::nullopt};
  Panel ph{"Phase of " + what, "Frequency (Hz)", "Phase (deg)", true, {}, band, {}, std::nullopt};
  for (const auto& [label, values] : curves) {
    Series m{label, hz(grid), {}}, p{label, hz(grid), {}};
    for (Complex z : values) {
      m.y.push_back(db(z));
      p.y.push_back(deg(z));
    }
    mag.series.push_back(std::move(m));
    ph.series.push_back(std::move(p));
  }
  return {std::move(mag), std::move(ph)};
}

}  // namespace

std::vector<std::filesystem::path> write_analysis_plots(const std::filesystem::path& dir, const Analysis& analysis) {
  const auto& d = analysis.data;
  const auto& r = analysis.report;
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, std::vector<Panel> panels) {
    write_svg(dir / name, panels);
    written.push_back(dir / name);
  };

  {
    std::vector<Complex> det(d.det_f.values().data(), d.det_f.values().data() + d.det_f.size());
    auto [m, p] = bode("det(F)", d.grid, {{"det(F)", det}}, bands(r));
    emit("bode_detF.svg", {std::move(m), std::move(p)});
  }

  const auto visible = visible_loci(d.loci);
  std::vector<std::pair<std::string, std::vector<Complex>>> curves;
  for (Index i : visible) {
    const auto l = d.loci.locus(i);
    curves.emplace_back("lambda " + std::to_string(i + 1), std::vector<Complex>(l.begin(), l.end()));
  }
  {
    auto [m, p] = bode("eigenloci", d.grid, curves, bands(r));
    emit("bode_loci.svg", {std::move(m), std::move(p)});
  }
  {
    Panel ny{"Nyquist diagram of eigenloci (window around -1)", "Real", "Imaginary", false, {}, {}, {{-1.0, 0.0}},
             std::array<double, 4>{-3.0, 1.0, -2.0, 2.0}};
    for (const auto& [label, values] : curves) {
      Series pos{label, {}, {}}, neg{label + " (-f)", {}, {}, true};
      for (Complex z : values) {
        pos.x.push_back(z.real());
        pos.y.push_back(z.imag());
        neg.x.push_back(z.real());
        neg.y.push_back(-z.imag());
      }
      ny.series.push_back(std::move(pos));
      ny.series.push_back(std::move(neg));
    }
    emit("nyquist_loci.svg", {std::move(ny)});
  }

  if (!r.sensitivity_computed || !d.participation) return written;
  for (const auto& c : r.critical_loci) {
    const std::string tag = std::to_string(c.index + 1);
    const auto band = std::vector<std::pair<double, double>>{{c.f_lo, c.f_hi}};
    Panel part{"Port participation in lambda " + tag, "Frequency (Hz)", "|p| ", true, {}, band, {}, std::nullopt};
    const Index ports = d.participation->p.empty() ? 0 : d.participation->p.front().cols();
    for (Index j = 0; j < ports; ++j) {
      Series s{"port " + std::to_string(j + 1), hz(d.grid), {}};
      for (std::size_t k = 0; k < d.grid.size(); ++k)
        s.y.push_back(d.participation->valid[k] ? std::abs(d.participation->p[k](c.index, j))
                                                : std::numeric_limits<double>::quiet_NaN());
      part.series.push_back(std::move(s));
    }
    emit("participation_l" + tag + ".svg", {std::move(part)});

    Panel sens{"Normalized station sensitivity of lambda " + tag, "Frequency (Hz)", "|S|", true, {}, band, {},
               std::nullopt};
    for (const auto& s : d.sensitivities) {
      Series ser{r.station_names.at(s.station) + " " + to_string(s.pole), hz(d.grid), {}};
      for (Index k = 0; k < s.normalized.rows(); ++k)
        ser.y.push_back(s.valid(k, c.index) ? std::abs(s.normalized(k, c.index))
                                            : std::numeric_limits<double>::quiet_NaN());
      sens.series.push_back(std::move(ser));
    }
    emit("station_sensitivity_l" + tag + ".svg", {std::move(sens)});
  }
  return written;
}

}  // namespace mtdc::plot
