#include "rul2stage/report.hpp"

#include "rul2stage/dataio.hpp"
#include "rul2stage/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rul2stage::report {

using dataio::format_double;

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + file.string());
}

void write_fpc_csv(const std::vector<fpc::FpcDecision>& decisions, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "cell_id,fpc_cycle,triggered\n";
  for (const auto& d : decisions) {
    s << d.cell_id << ',' << (d.fpc_cycle ? std::to_string(*d.fpc_cycle) : "") << ','
      << (d.triggered ? "true" : "false") << '\n';
  }
  write_text(file, s.str());
}

void write_trace_csv(const fpc::FpcDecision& decision, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "cell_id,anchor_cycle,probability\n";
  for (const auto& [anchor, p] : decision.trace) {
    s << decision.cell_id << ',' << anchor << ',' << format_double(p) << '\n';
  }
  write_text(file, s.str());
}

void write_curve_csv(const rul::RulCurve& curve, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "cell_id,anchor_cycle,prediction,target\n";
  for (const auto& p : curve.points) {
    s << curve.cell_id << ',' << p.anchor_cycle << ',' << format_double(p.prediction) << ','
      << opt(p.target) << '\n';
  }
  write_text(file, s.str());
}

std::string curve_svg(const rul::RulCurve& curve) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
  const double x0 = curve.points.empty() ? curve.fpc_cycle : curve.points.front().anchor_cycle;
  const double x1 = curve.points.empty() ? x0 + 1 : std::max<double>(curve.points.back().anchor_cycle, x0 + 1);
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - std::clamp(y, 0.0, 1.05) / 1.05 * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << curve.cell_id;
  if (curve.points.empty()) {
    s << " (no FPC, EOL " << curve.eol << ")</text>\n";
  } else {
    s << " (FPC " << curve.fpc_cycle << ", EOL " << curve.eol << ")</text>\n";
  }
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (const double y : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    s << "<text x=\"" << L - 8 << "\" y=\"" << fixed(py(y) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(y) << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << fixed(py(y)) << "\" x2=\"" << W - R << "\" y2=\"" << fixed(py(y))
      << "\" stroke=\"#dddddd\"/>\n";
  }
  for (const double x : {x0, (x0 + x1) / 2, x1}) {
    s << "<text x=\"" << fixed(px(x)) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << static_cast<long>(x)
      << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">cycle</text>\n";
  s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">RUL fraction</text>\n";

  const auto polyline = [&](auto value, const char* style) {
    s << "<polyline fill=\"none\" " << style << " points=\"";
    bool first = true;
    for (const auto& p : curve.points) {
      const auto v = value(p);
      if (!v) continue;
      s << (first ? "" : " ") << fixed(px(p.anchor_cycle)) << ',' << fixed(py(*v));
      first = false;
    }
    s << "\"/>\n";
  };
  polyline([](const rul::CurvePoint& p) { return p.target; },
           "stroke=\"black\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"");
  polyline([](const rul::CurvePoint& p) { return std::optional<double>(p.prediction); },
           "stroke=\"#1f77b4\" stroke-width=\"1.5\"");
  s << "<text x=\"" << W - R - 120 << "\" y=\"" << T + 14
    << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">prediction</text>\n";
  s << "<text x=\"" << W - R - 120 << "\" y=\"" << T + 28
    << "\" font-family=\"sans-serif\" font-size=\"11\">target</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_curve_svg(const rul::RulCurve& curve, const std::filesystem::path& file) {
  write_text(file, curve_svg(curve));
}

std::string metrics_text(const eval::MetricsReport& report) {
  const auto& a = report.aggregate;
  std::ostringstream s;
  s << "# rul2stage metrics report\n";
  s << "# aggregate = unweighted mean of per-cell metrics over triggered cells\n";
  s << "# mape uses targets >= floor only; 'none' when no point qualifies\n";
  s << "aggregate.cells = " << a.n_cells << '\n';
  s << "aggregate.mse = " << format_double(a.mse) << '\n';
  s << "aggregate.mae = " << format_double(a.mae) << '\n';
  s << "aggregate.mape = " << (a.mape ? format_double(*a.mape) : "none") << '\n';
  s << "aggregate.mape_cells = " << a.n_mape_cells << '\n';
  s << "cells.total = " << report.cells.size() << '\n';
  s << "untriggered.count = " << report.untriggered.size() << '\n';
  s << "untriggered.cells = ";
  for (std::size_t i = 0; i < report.untriggered.size(); ++i) s << (i ? "," : "") << report.untriggered[i];
  s << '\n';
  for (const auto& c : report.cells) {
    const std::string k = "cell." + c.cell_id + ".";
    s << k << "eol = " << c.eol << '\n';
    s << k << "triggered = " << (c.triggered ? "true" : "false") << '\n';
    s << k << "fpc_cycle = " << (c.fpc_cycle ? std::to_string(*c.fpc_cycle) : "none") << '\n';
    if (c.metrics) {
      s << k << "n_points = " << c.metrics->n_points << '\n';
      s << k << "mse = " << format_double(c.metrics->mse) << '\n';
      s << k << "mae = " << format_double(c.metrics->mae) << '\n';
      s << k << "mape = " << (c.metrics->mape ? format_double(*c.metrics->mape) : "none") << '\n';
    }
  }
  return s.str();
}

void write_metrics_text(const eval::MetricsReport& report, const std::filesystem::path& file) {
  write_text(file, metrics_text(report));
}

void write_metrics_csv(const eval::MetricsReport& report, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "cell_id,eol,triggered,fpc_cycle,n_points,mse,mae,mape,n_mape_points\n";
  for (const auto& c : report.cells) {
    s << c.cell_id << ',' << c.eol << ',' << (c.triggered ? "true" : "false") << ','
      << (c.fpc_cycle ? std::to_string(*c.fpc_cycle) : "") << ',';
    if (c.metrics) {
      s << c.metrics->n_points << ',' << format_double(c.metrics->mse) << ',' << format_double(c.metrics->mae)
        << ',' << opt(c.metrics->mape) << ',' << c.metrics->n_mape_points;
    } else {
      s << ",,,,";
    }
    s << '\n';
  }
  write_text(file, s.str());
}

void write_history_csv(const std::vector<nn::EpochRecord>& history, const std::filesystem::path& file) {
  std::ostringstream s;
  s << "epoch,train_loss,validation_loss,improved\n";
  for (const auto& e : history) {
    s << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.validation_loss) << ','
      << (e.improved ? "true" : "false") << '\n';
  }
  write_text(file, s.str());
}

}  // namespace rul2stage::report
