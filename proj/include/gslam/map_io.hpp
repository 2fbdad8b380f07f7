#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/scatter_map.hpp"
#include "gslam/text_format.hpp"

namespace gslam {

// Portable text grid: "rows cols x0 y0 resolution", then one line per row.
inline void write_grid(std::ostream& os, const DensityGrid& g) {
  std::string line;
  line += std::to_string(g.rows) + ' ' + std::to_string(g.cols) + ' ';
  text::append_double(line, g.x0);
  line += ' ';
  text::append_double(line, g.y0);
  line += ' ';
  text::append_double(line, g.resolution);
  os << line << '\n';
  for (std::size_t r = 0; r < g.rows; ++r) {
    line.clear();
    for (std::size_t c = 0; c < g.cols; ++c) {
      if (c) line += ' ';
      text::append_double(line, g.at(r, c));
    }
    os << line << '\n';
  }
}

inline DensityGrid read_grid(std::istream& is) {
  DensityGrid g;
  std::string header;
  if (!std::getline(is, header)) throw ParseError(1, 1, "missing grid header");
  std::istringstream hs(header);
  std::string tok[5];
  for (auto& t : tok)
    if (!(hs >> t)) throw ParseError(1, 1, "grid header needs 'rows cols x0 y0 resolution'");
  const auto rows = text::parse_int<std::size_t>(tok[0]);
  const auto cols = text::parse_int<std::size_t>(tok[1]);
  const auto x0 = text::parse_double(tok[2]);
  const auto y0 = text::parse_double(tok[3]);
  const auto res = text::parse_double(tok[4]);
  if (!rows || !cols || !x0 || !y0 || !res || !(*res > 0.0)) throw ParseError(1, 1, "malformed grid header");
  g.rows = *rows;
  g.cols = *cols;
  g.x0 = *x0;
  g.y0 = *y0;
  g.resolution = *res;
  g.cells.reserve(g.rows * g.cols);
  std::string line;
  for (std::size_t r = 0; r < g.rows; ++r) {
    if (!std::getline(is, line)) throw ParseError(r + 2, 1, "missing grid row");
    std::istringstream ls(line);
    std::string v;
    std::size_t n = 0;
    while (ls >> v) {
      const auto d = text::parse_double(v);
      if (!d) throw ParseError(r + 2, n + 1, "bad grid value '" + v + "'");
      g.cells.push_back(*d);
      ++n;
    }
    if (n != g.cols) throw ParseError(r + 2, 1, "expected " + std::to_string(g.cols) + " values");
  }
  return g;
}

// Points CSV with header "x,y,prob".
inline void write_points_csv(std::ostream& os, const std::vector<MapPoint>& points) {
  os << "x,y,prob\n";
  std::string line;
  for (const MapPoint& p : points) {
    line.clear();
    text::append_double(line, p.location.x);
    line += ',';
    text::append_double(line, p.location.y);
    line += ',';
    text::append_double(line, p.prob);
    os << line << '\n';
  }
}

inline std::vector<MapPoint> read_points_csv(std::istream& is) {
  std::vector<MapPoint> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (n == 1 && t == "x,y,prob") continue;
    const auto c1 = t.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : t.find(',', c1 + 1);
    if (c2 == std::string_view::npos) throw ParseError(n, 1, "expected x,y,prob");
    const auto x = text::parse_double(t.substr(0, c1));
    const auto y = text::parse_double(t.substr(c1 + 1, c2 - c1 - 1));
    const auto p = text::parse_double(t.substr(c2 + 1));
    if (!x) throw ParseError(n, 1, "bad x");
    if (!y) throw ParseError(n, c1 + 2, "bad y");
    if (!p || *p < 0.0) throw ParseError(n, c2 + 2, "bad prob");
    out.push_back({{*x, *y}, *p});
  }
  return out;
}

// Trajectory CSV with header "t,x,y,phi".
inline void write_trajectory_csv(std::ostream& os, std::span<const double> times, std::span<const Pose2D> poses) {
  if (times.size() != poses.size()) throw InvalidArgument("write_trajectory_csv: times and poses differ in length");
  os << "t,x,y,phi\n";
  std::string line;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    line.clear();
    text::append_double(line, times[i]);
    for (double v : {poses[i].x(), poses[i].y(), poses[i].phi()}) {
      line += ',';
      text::append_double(line, v);
    }
    os << line << '\n';
  }
}

template <class Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  writer(os);
  os.flush();
  if (!os) throw Error("write failed: '" + path + "'");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return is;
}

}  // namespace gslam
