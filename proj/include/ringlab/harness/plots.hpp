#pragma once
// SVG figures. Every coordinate is printed with %.3f and nothing depends on
// time or locale, so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ringlab/harness/run.hpp"

namespace ringlab::harness {

namespace svg {

inline std::string f3(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;  // data window
  double width = 480.0, height = 480.0, margin = 48.0;
  double px(double x) const { return margin + (x - x0) / (x1 - x0) * (width - 2.0 * margin); }
  double py(double y) const { return height - margin - (y - y0) / (y1 - y0) * (height - 2.0 * margin); }
};

inline std::string escape(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (ch == '<') s += "&lt;";
    else if (ch == '>') s += "&gt;";
    else if (ch == '&') s += "&amp;";
    else s += ch;
  }
  return s;
}

inline std::string open(const Frame& f, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f3(f.width) + "\" height=\"" + f3(f.height) +
                   "\" viewBox=\"0 0 " + f3(f.width) + " " + f3(f.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f3(f.width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape(title) + "</text>\n";
  return s;
}

inline std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string s = "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<rect x=\"" + f3(f.margin) + "\" y=\"" + f3(f.margin) + "\" width=\"" + f3(f.width - 2 * f.margin) +
       "\" height=\"" + f3(f.height - 2 * f.margin) + "\"/>\n</g>\n";
  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    s += "<text x=\"" + f3(f.px(x)) + "\" y=\"" + f3(f.height - f.margin + 14) + "\" text-anchor=\"middle\">" + f3(x) +
         "</text>\n";
    s += "<text x=\"" + f3(f.margin - 4) + "\" y=\"" + f3(f.py(y) + 4) + "\" text-anchor=\"end\">" + f3(y) + "</text>\n";
  }
  s += "<text x=\"" + f3(f.width / 2) + "\" y=\"" + f3(f.height - 8) + "\" text-anchor=\"middle\">" + xlabel +
       "</text>\n";
  s += "<text x=\"12\" y=\"" + f3(f.height / 2) + "\" transform=\"rotate(-90 12 " + f3(f.height / 2) +
       ")\" text-anchor=\"middle\">" + ylabel + "</text>\n</g>\n";
  return s;
}

inline std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
                            const std::string& color) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ' ';
    s += f3(f.px(x[i])) + "," + f3(f.py(y[i]));
  }
  return s + "\"/>\n";
}

inline std::string close() { return "</svg>\n"; }

/// Blue through green to yellow.
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = t < 0.5 ? 0.0 : (t - 0.5) * 2.0;
  const double g = t < 0.5 ? t * 2.0 : 1.0;
  const double b = t < 0.5 ? 1.0 - t * 2.0 : 0.0;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(40 + 215 * r)),
                static_cast<int>(std::lround(40 + 200 * g)), static_cast<int>(std::lround(80 + 175 * b)));
  return buf;
}

}  // namespace svg

inline const RingLaw* primary_law(const TheoryResult* t) {
  if (!t) return nullptr;
  if (t->stransform) return &*t->stransform;
  if (t->girko) return &*t->girko;
  return nullptr;
}

/// Eigenvalues of replica 0 with the theory circles |z| = a and |z| = b.
inline std::string eigenvalue_svg(const RunConfig& c, const TheoryResult* t, const SimulationResult* s) {
  const auto rr = c.radii();
  const double a = t ? t->radii.inner : rr.inner, b = t ? t->radii.outer : rr.outer;
  double lim = 1.15 * std::max(b, 1e-3);
  const std::vector<std::complex<double>>* eigs = nullptr;
  if (s && !s->replicas.empty() && s->replicas[0].ok) {
    eigs = &s->replicas[0].eigenvalues;
    for (const auto& l : *eigs) lim = std::max(lim, 1.05 * std::abs(l));
  }
  svg::Frame f{-lim, lim, -lim, lim};
  std::string out = svg::open(f, "eigenvalues, " + c.name);
  out += svg::axes(f, "Re", "Im");
  if (eigs) {
    out += "<g fill=\"#1f4e9a\" fill-opacity=\"0.6\">\n";
    for (const auto& l : *eigs)
      out += "<circle cx=\"" + svg::f3(f.px(l.real())) + "\" cy=\"" + svg::f3(f.py(l.imag())) + "\" r=\"1.2\"/>\n";
    out += "</g>\n";
  }
  const double scale = (f.width - 2.0 * f.margin) / (2.0 * lim);
  out += "<g fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\">\n";
  const bool collapsed = b - a <= 1e-12 * b;
  out += "<circle cx=\"" + svg::f3(f.px(0)) + "\" cy=\"" + svg::f3(f.py(0)) + "\" r=\"" + svg::f3(b * scale) + "\"/>\n";
  if (!collapsed && a > 0.0)
    out += "<circle cx=\"" + svg::f3(f.px(0)) + "\" cy=\"" + svg::f3(f.py(0)) + "\" r=\"" + svg::f3(a * scale) +
           "\"/>\n";
  out += "</g>\n";
  return out + svg::close();
}

/// Density of |lambda|: theory 2 pi r rho(r) against the pooled histogram.
inline std::string radial_svg(const RunConfig& c, const TheoryResult* t, const SimulationResult* s) {
  const RingLaw* law = primary_law(t);
  std::vector<double> pooled;
  if (s)
    for (const auto& m : s->moduli()) pooled.insert(pooled.end(), m.begin(), m.end());
  std::sort(pooled.begin(), pooled.end());
  double xmax = law ? law->r_grid.back() : 1.2 * c.outer_radius();
  if (!pooled.empty()) xmax = std::max(xmax, pooled.back() * 1.02);
  std::vector<double> tx, ty;
  if (law && !law->collapsed)
    for (std::size_t i = 0; i < law->r_grid.size(); ++i) {
      tx.push_back(law->r_grid[i]);
      ty.push_back(2.0 * kPi * law->r_grid[i] * law->density[i]);
    }
  const std::size_t bins = 60;
  std::vector<double> hist(bins, 0.0);
  const double w = xmax / static_cast<double>(bins);
  for (double r : pooled) hist[std::min(bins - 1, static_cast<std::size_t>(r / w))] += 1.0;
  for (auto& h : hist) h /= std::max<double>(1.0, static_cast<double>(pooled.size())) * w;
  double ymax = 1e-3;
  for (double v : ty) ymax = std::max(ymax, v);
  for (double v : hist) ymax = std::max(ymax, v);
  ymax *= 1.1;
  svg::Frame f{0.0, xmax, 0.0, ymax};
  std::string out = svg::open(f, "radial density, " + c.name);
  out += svg::axes(f, "r", "density of |lambda|");
  if (!pooled.empty()) {
    out += "<g fill=\"#95a5a6\" stroke=\"none\">\n";
    for (std::size_t k = 0; k < bins; ++k) {
      if (hist[k] <= 0.0) continue;
      const double x0 = w * static_cast<double>(k);
      out += "<rect x=\"" + svg::f3(f.px(x0)) + "\" y=\"" + svg::f3(f.py(hist[k])) + "\" width=\"" +
             svg::f3(f.px(x0 + w) - f.px(x0)) + "\" height=\"" + svg::f3(f.py(0) - f.py(hist[k])) + "\"/>\n";
    }
    out += "</g>\n";
  }
  if (!tx.empty()) out += svg::polyline(f, tx, ty, "#c0392b");
  if (law && law->collapsed)
    out += "<line x1=\"" + svg::f3(f.px(law->outer)) + "\" y1=\"" + svg::f3(f.py(0)) + "\" x2=\"" +
           svg::f3(f.px(law->outer)) + "\" y2=\"" + svg::f3(f.py(ymax)) +
           "\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
  return out + svg::close();
}

/// Heatmap of h(z): the replica 0 field when there is one, otherwise the
/// theory potential from the radial CDF.
inline std::string field_svg(const RunConfig& c, const TheoryResult* t, const SimulationResult* s) {
  const ZGrid g = s && s->field ? s->field->grid : c.z_grid();
  const std::size_t nx = g.re.size(), ny = g.im.size();
  std::vector<double> h(nx * ny, kNaN);
  const RingLaw* law = primary_law(t);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      if (s && s->field) h[i * ny + j] = s->field->h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      else if (law) h[i * ny + j] = law_log_potential(*law, std::abs(g.at(i, j)));
    }
  double lo = kInf, hi = -kInf;
  for (double v : h)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) hi = lo + 1.0;
  const double dx = g.step_re(), dy = g.step_im();
  svg::Frame f{g.re.front() - dx / 2, g.re.back() + dx / 2, g.im.front() - dy / 2, g.im.back() + dy / 2};
  std::string title = s && s->field ? "log potential h(z), replica 0, " : "log potential h(z), theory, ";
  std::string out = svg::open(f, title + c.name);
  out += "<g stroke=\"none\">\n";
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double v = h[i * ny + j];
      const std::string color = std::isfinite(v) ? svg::ramp((v - lo) / (hi - lo)) : "#808080";
      const double x0 = g.re[i] - dx / 2, y1 = g.im[j] + dy / 2;
      out += "<rect x=\"" + svg::f3(f.px(x0)) + "\" y=\"" + svg::f3(f.py(y1)) + "\" width=\"" +
             svg::f3(f.px(x0 + dx) - f.px(x0)) + "\" height=\"" + svg::f3(f.py(y1 - dy) - f.py(y1)) + "\" fill=\"" +
             color + "\"/>\n";
    }
  out += "</g>\n";
  out += svg::axes(f, "Re z", "Im z");
  out += "<text x=\"" + svg::f3(f.width - f.margin) + "\" y=\"36\" text-anchor=\"end\" font-family=\"sans-serif\" "
         "font-size=\"11\">min " + svg::f3(lo) + ", max " + svg::f3(hi) + "</text>\n";
  return out + svg::close();
}

/// Histogram of the kept chain states against the equilibrium density.
inline std::string fz_svg(const RunConfig& c, const FzSampleResult& z) {
  double xmax = z.equilibrium ? z.equilibrium->upper * 1.05 : 1.0;
  for (double x : z.kept) xmax = std::max(xmax, x);
  const std::size_t bins = 60;
  const double w = xmax / static_cast<double>(bins);
  std::vector<double> hist(bins, 0.0);
  for (double x : z.kept) hist[std::min(bins - 1, static_cast<std::size_t>(x / w))] += 1.0;
  for (auto& h : hist) h /= std::max<double>(1.0, static_cast<double>(z.kept.size())) * w;
  std::vector<double> tx, ty;
  if (z.equilibrium) {
    const auto& e = *z.equilibrium;
    for (std::size_t k = 1; k < 300; ++k) {
      const double x = e.lower + (e.upper - e.lower) * static_cast<double>(k) / 300.0;
      tx.push_back(x);
      ty.push_back(e.density(x));
    }
  }
  double ymax = 1e-3;
  for (double v : hist) ymax = std::max(ymax, v);
  for (double v : ty) ymax = std::max(ymax, std::min(v, 4.0 * ymax + 1.0));
  ymax *= 1.1;
  svg::Frame f{0.0, xmax, 0.0, ymax};
  std::string out = svg::open(f, "log-gas squared singular values, " + c.name);
  out += svg::axes(f, "x", "density");
  out += "<g fill=\"#95a5a6\" stroke=\"none\">\n";
  for (std::size_t k = 0; k < bins; ++k) {
    if (hist[k] <= 0.0) continue;
    const double x0 = w * static_cast<double>(k);
    out += "<rect x=\"" + svg::f3(f.px(x0)) + "\" y=\"" + svg::f3(f.py(hist[k])) + "\" width=\"" +
           svg::f3(f.px(x0 + w) - f.px(x0)) + "\" height=\"" + svg::f3(f.py(0) - f.py(hist[k])) + "\"/>\n";
  }
  out += "</g>\n";
  for (auto& v : ty) v = std::min(v, ymax);
  if (!tx.empty()) out += svg::polyline(f, tx, ty, "#c0392b");
  return out + svg::close();
}

/// Writes the three ring figures (plus the chain figure when given) and
/// returns their paths.
inline std::vector<std::string> emit_plots(const RunConfig& c, const std::string& dir, const TheoryResult* t,
                                           const SimulationResult* s, const FzSampleResult* z = nullptr) {
  ensure_dir(dir);
  std::vector<std::string> paths{dir + "/eigenvalues.svg", dir + "/radial_density.svg", dir + "/girko_field.svg"};
  write_text(paths[0], eigenvalue_svg(c, t, s));
  write_text(paths[1], radial_svg(c, t, s));
  write_text(paths[2], field_svg(c, t, s));
  if (z) {
    paths.push_back(dir + "/fz_density.svg");
    write_text(paths.back(), fz_svg(c, *z));
  }
  return paths;
}

}  // namespace ringlab::harness
