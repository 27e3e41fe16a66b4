#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "snkit/core.hpp"
#include "snkit/model.hpp"

namespace snkit {

/// A parsed problem file: the model plus any [solver] key/value defaults
/// (applied by the CLI, overridable by flags).
struct ParsedProblem {
  ProblemModel model;
  std::map<std::string, std::string> solver_options;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '#') break;
    if (ch == ' ' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// locale-independent decimal parsing
inline double parse_double(const std::string& s, int line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  return v;
}

inline long parse_int(const std::string& s, int line_no) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  return v;
}

inline std::vector<double> parse_doubles(const std::vector<std::string>& tok,
                                         std::size_t from, int line_no) {
  std::vector<double> out;
  for (std::size_t i = from; i < tok.size(); ++i)
    out.push_back(parse_double(tok[i], line_no));
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline Face face_from_name(const std::string& s, int line_no) {
  if (s == "left") return Face::xlo;
  if (s == "right") return Face::xhi;
  if (s == "bottom") return Face::ylo;
  if (s == "top") return Face::yhi;
  fail("line " + std::to_string(line_no) + ": unknown face '" + s +
       "' (use left/right/bottom/top)");
}

}  // namespace detail

/// Parses the line-oriented problem format. Sections: [mesh], [material N],
/// [boundary], [source], [solver]; '#' starts a comment. See the README for
/// the key reference.
inline ParsedProblem parse_problem(std::istream& in) {
  ParsedProblem out;
  ProblemModel& m = out.model;

  enum class Sect { none, mesh, material, boundary, source, solver };
  Sect sect = Sect::none;
  std::size_t mat_id = 0;
  std::map<std::size_t, CrossSectionSet> materials;
  std::vector<std::pair<int, std::vector<double>>> source_groups;
  std::vector<double> source_flat;
  bool have_ny = false;
  std::size_t nx = 0, ny = 1;
  std::vector<double> dx_vals, dy_vals;
  std::vector<long> mat_map;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::tokenize(line);
    if (tok.empty()) continue;

    if (tok[0].front() == '[') {
      std::string header;
      for (const auto& t : tok) header += (header.empty() ? "" : " ") + t;
      if (header == "[mesh]") {
        sect = Sect::mesh;
      } else if (header.rfind("[material", 0) == 0) {
        sect = Sect::material;
        std::string idtok = header.substr(9);
        while (!idtok.empty() && (idtok.front() == ' ')) idtok.erase(0, 1);
        if (idtok.empty() || idtok.back() != ']')
          fail("line " + std::to_string(line_no) +
               ": expected [material <id>]");
        idtok.pop_back();
        mat_id = static_cast<std::size_t>(detail::parse_int(idtok, line_no));
        materials[mat_id] = CrossSectionSet{};
      } else if (header == "[boundary]") {
        sect = Sect::boundary;
      } else if (header == "[source]") {
        sect = Sect::source;
      } else if (header == "[solver]") {
        sect = Sect::solver;
      } else {
        fail("line " + std::to_string(line_no) + ": unknown section " +
             header);
      }
      continue;
    }

    const std::string& key = tok[0];
    switch (sect) {
      case Sect::none:
        fail("line " + std::to_string(line_no) +
             ": content before any section header");
      case Sect::mesh: {
        if (key == "dim") {
          m.dimension = static_cast<int>(detail::parse_int(tok.at(1), line_no));
        } else if (key == "nx") {
          nx = static_cast<std::size_t>(detail::parse_int(tok.at(1), line_no));
        } else if (key == "ny") {
          ny = static_cast<std::size_t>(detail::parse_int(tok.at(1), line_no));
          have_ny = true;
        } else if (key == "dx") {
          dx_vals = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "dy") {
          dy_vals = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "quadrature") {
          m.quadrature_order =
              static_cast<int>(detail::parse_int(tok.at(1), line_no));
        } else if (key == "materials") {
          for (std::size_t i = 1; i < tok.size(); ++i)
            mat_map.push_back(detail::parse_int(tok[i], line_no));
        } else {
          fail("line " + std::to_string(line_no) + ": unknown mesh key '" +
               key + "'");
        }
        break;
      }
      case Sect::material: {
        auto& xs = materials[mat_id];
        if (key == "groups") {
          xs.group_count = static_cast<std::size_t>(
              detail::parse_int(tok.at(1), line_no));
          xs.scat.assign(xs.group_count,
                         std::vector<double>(xs.group_count, 0.0));
        } else if (key == "sigma_t") {
          xs.sigma_t = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "chi") {
          xs.chi = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "nu_sigma_f") {
          xs.nu_sigma_f = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "scat_row") {
          const std::size_t g = static_cast<std::size_t>(
              detail::parse_int(tok.at(1), line_no));
          if (g >= xs.group_count)
            fail("line " + std::to_string(line_no) +
                 ": scat_row group out of range (set 'groups' first)");
          const auto row = detail::parse_doubles(tok, 2, line_no);
          if (row.size() != xs.group_count)
            fail("line " + std::to_string(line_no) + ": scat_row " +
                 std::to_string(g) + " needs " +
                 std::to_string(xs.group_count) + " entries");
          xs.scat[g] = row;
        } else {
          fail("line " + std::to_string(line_no) +
               ": unknown material key '" + key + "'");
        }
        break;
      }
      case Sect::boundary: {
        if (tok.size() != 2)
          fail("line " + std::to_string(line_no) +
               ": expected '<face> vacuum|reflecting'");
        const Face f = detail::face_from_name(key, line_no);
        if (tok[1] == "vacuum")
          m.set_bc(f, Bc::vacuum);
        else if (tok[1] == "reflecting")
          m.set_bc(f, Bc::reflecting);
        else
          fail("line " + std::to_string(line_no) +
               ": unknown boundary condition '" + tok[1] + "'");
        break;
      }
      case Sect::source: {
        if (key == "flat") {
          source_flat = detail::parse_doubles(tok, 1, line_no);
        } else if (key == "group") {
          const int g = static_cast<int>(detail::parse_int(tok.at(1), line_no));
          source_groups.emplace_back(g, detail::parse_doubles(tok, 2, line_no));
        } else {
          fail("line " + std::to_string(line_no) + ": unknown source key '" +
               key + "'");
        }
        break;
      }
      case Sect::solver: {
        std::string value;
        for (std::size_t i = 1; i < tok.size(); ++i)
          value += (value.empty() ? "" : " ") + tok[i];
        out.solver_options[key] = value;
        break;
      }
    }
  }

  // assemble the mesh
  require(nx > 0, "problem file: [mesh] must set nx");
  if (m.dimension == 2) require(have_ny, "problem file: 2D mesh must set ny");
  if (dx_vals.size() == 1)
    m.cell_widths_x.assign(nx, dx_vals[0]);
  else
    m.cell_widths_x = dx_vals;
  require(m.cell_widths_x.size() == nx,
          "problem file: dx needs 1 or nx values");
  if (m.dimension == 2) {
    if (dy_vals.size() == 1)
      m.cell_widths_y.assign(ny, dy_vals[0]);
    else
      m.cell_widths_y = dy_vals;
    require(m.cell_widths_y.size() == ny,
            "problem file: dy needs 1 or ny values");
  }

  require(!materials.empty(), "problem file: no materials");
  const std::size_t n_mat = materials.size();
  m.materials.resize(n_mat);
  for (auto& [id, xs] : materials) {
    require(id < n_mat,
            "problem file: material ids must be contiguous from 0");
    m.materials[id] = std::move(xs);
  }
  m.material_id.assign(mat_map.begin(), mat_map.end());
  require(m.material_id.size() == m.n_cells(),
          "problem file: materials map needs nx*ny entries, got " +
              std::to_string(m.material_id.size()));

  const std::size_t G = m.groups();
  if (!source_flat.empty() || !source_groups.empty()) {
    require(source_flat.empty() || source_flat.size() == G,
            "problem file: flat source needs G entries");
    m.fixed_source.assign(G * m.n_cells(), 0.0);
    if (!source_flat.empty())
      for (std::size_t g = 0; g < G; ++g)
        for (std::size_t c = 0; c < m.n_cells(); ++c)
          m.fixed_source[g * m.n_cells() + c] = source_flat[g];
    for (const auto& [g, vals] : source_groups) {
      require(g >= 0 && static_cast<std::size_t>(g) < G,
              "problem file: source group out of range");
      require(vals.size() == m.n_cells(),
              "problem file: per-group source needs n_cells entries");
      for (std::size_t c = 0; c < m.n_cells(); ++c)
        m.fixed_source[g * m.n_cells() + c] = vals[c];
    }
  }
  return out;
}

inline ParsedProblem parse_problem(const std::string& text) {
  std::istringstream in(text);
  return parse_problem(in);
}

inline ParsedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open problem file: " + path);
  return parse_problem(in);
}

/// Writes the model back out in the same format; numeric fields survive the
/// round trip bit-exactly (17 significant digits).
inline std::string write_problem(const ProblemModel& m,
                                 const std::map<std::string, std::string>&
                                     solver_options = {}) {
  std::ostringstream s;
  auto fmt = detail::format_double;
  s << "[mesh]\n";
  s << "dim " << m.dimension << "\n";
  s << "nx " << m.nx() << "\n";
  s << "dx";
  for (double v : m.cell_widths_x) s << " " << fmt(v);
  s << "\n";
  if (m.dimension == 2) {
    s << "ny " << m.ny() << "\n";
    s << "dy";
    for (double v : m.cell_widths_y) s << " " << fmt(v);
    s << "\n";
  }
  s << "quadrature " << m.quadrature_order << "\n";
  s << "materials";
  for (int id : m.material_id) s << " " << id;
  s << "\n";

  for (std::size_t im = 0; im < m.materials.size(); ++im) {
    const auto& xs = m.materials[im];
    s << "\n[material " << im << "]\n";
    s << "groups " << xs.group_count << "\n";
    s << "sigma_t";
    for (double v : xs.sigma_t) s << " " << fmt(v);
    s << "\nchi";
    for (double v : xs.chi) s << " " << fmt(v);
    s << "\nnu_sigma_f";
    for (double v : xs.nu_sigma_f) s << " " << fmt(v);
    s << "\n";
    for (std::size_t g = 0; g < xs.group_count; ++g) {
      s << "scat_row " << g;
      for (double v : xs.scat[g]) s << " " << fmt(v);
      s << "\n";
    }
  }

  s << "\n[boundary]\n";
  const char* names[4] = {"left", "right", "bottom", "top"};
  const int nfaces = m.dimension == 2 ? 4 : 2;
  for (int f = 0; f < nfaces; ++f)
    s << names[f] << " "
      << (m.boundary[f] == Bc::vacuum ? "vacuum" : "reflecting") << "\n";

  if (!m.fixed_source.empty()) {
    s << "\n[source]\n";
    for (std::size_t g = 0; g < m.groups(); ++g) {
      s << "group " << g;
      for (std::size_t c = 0; c < m.n_cells(); ++c)
        s << " " << fmt(m.fixed_source[g * m.n_cells() + c]);
      s << "\n";
    }
  }

  if (!solver_options.empty()) {
    s << "\n[solver]\n";
    for (const auto& [k, v] : solver_options) s << k << " " << v << "\n";
  }
  return s.str();
}

}  // namespace snkit
