#include "biot/mesh.hpp"

#include "biot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <utility>

namespace biot {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Vertex pairs of the four local faces (bottom, right, top, left).
constexpr std::array<std::array<int, 2>, 4> kLocalFaceVertices{{{0, 1}, {1, 2}, {3, 2}, {0, 3}}};
constexpr std::array<Point, 4> kLocalFaceNormals{{{0.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}};

bool near(double a, double b) { return std::abs(a - b) < 1e-12; }

} // namespace

std::string to_string(UBoundary tag) {
  switch (tag) {
  case UBoundary::Interior:
    return "interior";
  case UBoundary::Dirichlet:
    return "dirichlet";
  case UBoundary::Neumann:
    return "neumann";
  case UBoundary::Directional:
    return "directional";
  case UBoundary::None:
    return "none";
  }
  return "none";
}

std::string to_string(PBoundary tag) {
  switch (tag) {
  case PBoundary::Interior:
    return "interior";
  case PBoundary::Dirichlet:
    return "dirichlet";
  case PBoundary::Neumann:
    return "neumann";
  case PBoundary::None:
    return "none";
  }
  return "none";
}

double Cell::diameter() const { return std::hypot(width(), height()); }

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
           const BoundaryTagger& tagger, int refinement_level)
    : vertices_(std::move(vertices)), refinement_level_(refinement_level) {
  build_cells(cells);
  build_faces();
  for (Face& face : faces_) {
    if (!face.at_boundary()) continue;
    const BoundaryTag tag =
        tagger(vertices_[face.vertices[0]], vertices_[face.vertices[1]], face.normal);
    if (tag.u == UBoundary::Interior || tag.p == PBoundary::Interior) {
      throw InvalidArgument("boundary face tagged as interior");
    }
    face.u_tag = tag.u;
    face.p_tag = tag.p;
    face.is_goal_segment = tag.goal;
  }
}

void Mesh::build_cells(const std::vector<std::array<int, 4>>& cells) {
  cells_.clear();
  cells_.reserve(cells.size());
  for (const auto& vs : cells) {
    for (int v : vs) {
      if (v < 0 || v >= static_cast<int>(vertices_.size())) {
        throw InvalidArgument("cell references unknown vertex");
      }
    }
    const Point p0 = vertices_[vs[0]], p1 = vertices_[vs[1]], p2 = vertices_[vs[2]],
                p3 = vertices_[vs[3]];
    if (!(p0.y == p1.y && p1.x == p2.x && p2.y == p3.y && p3.x == p0.x && p1.x > p0.x &&
          p3.y > p0.y)) {
      throw InvalidArgument("cells must be counterclockwise axis-aligned rectangles");
    }
    Cell cell;
    cell.vertices = vs;
    cell.lower = p0;
    cell.upper = p2;
    cells_.push_back(cell);
  }
}

void Mesh::build_faces() {
  faces_.clear();
  std::map<EdgeKey, int> lookup;
  for (int c = 0; c < static_cast<int>(cells_.size()); ++c) {
    Cell& cell = cells_[c];
    for (int lf = 0; lf < kFacesPerCell; ++lf) {
      const int a = cell.vertices[kLocalFaceVertices[lf][0]];
      const int b = cell.vertices[kLocalFaceVertices[lf][1]];
      auto [it, inserted] = lookup.try_emplace(edge_key(a, b), static_cast<int>(faces_.size()));
      if (inserted) {
        Face face;
        face.vertices = {a, b};
        face.cells = {c, -1};
        face.local_index = {lf, -1};
        face.normal = kLocalFaceNormals[lf];
        face.measure = std::hypot(vertices_[b].x - vertices_[a].x, vertices_[b].y - vertices_[a].y);
        faces_.push_back(face);
      } else {
        Face& face = faces_[it->second];
        if (face.cells[1] >= 0) throw InvalidArgument("face shared by more than two cells");
        face.cells[1] = c;
        face.local_index[1] = lf;
      }
      cell.faces[lf] = it->second;
    }
  }
  auto extent = [this](const Face& f, int side) {
    const Cell& c = cells_[f.cells[side]];
    return std::abs(f.normal.x) > 0.5 ? c.width() : c.height();
  };
  for (Face& face : faces_) {
    const double owner = cells_[face.cells[0]].area();
    const double e_plus = extent(face, 0);
    const double e_minus = face.at_boundary() ? e_plus : extent(face, 1);
    face.h_normal = 1.0 / (1.0 / e_plus + 1.0 / e_minus);
    if (face.at_boundary()) {
      face.h_F = owner;
      face.u_tag = UBoundary::None;
      face.p_tag = PBoundary::None;
    } else {
      face.h_F = 0.5 * (owner + cells_[face.cells[1]].area());
      face.u_tag = UBoundary::Interior;
      face.p_tag = PBoundary::Interior;
    }
  }
}

std::size_t Mesh::n_boundary_faces() const {
  return static_cast<std::size_t>(
      std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.at_boundary(); }));
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (const Cell& c : cells_) h = std::max(h, c.diameter());
  return h;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (const Cell& c : cells_) a += c.area();
  return a;
}

double Mesh::boundary_length() const {
  double l = 0.0;
  for (const Face& f : faces_) {
    if (f.at_boundary()) l += f.measure;
  }
  return l;
}

int Mesh::neighbor(int cell, int local_face) const {
  const Face& face = faces_[cells_[cell].faces[local_face]];
  if (face.at_boundary()) return -1;
  return face.cells[0] == cell ? face.cells[1] : face.cells[0];
}

void Mesh::write(std::ostream& out) const {
  const auto precision = out.precision(17);
  for (const Point& p : vertices_) out << "v " << p.x << ' ' << p.y << '\n';
  for (const Cell& c : cells_) {
    out << "c " << c.vertices[0] << ' ' << c.vertices[1] << ' ' << c.vertices[2] << ' '
        << c.vertices[3] << '\n';
  }
  for (const Face& f : faces_) {
    if (!f.at_boundary()) continue;
    out << "f " << f.vertices[0] << ' ' << f.vertices[1] << ' ' << to_string(f.u_tag) << ' '
        << to_string(f.p_tag) << '\n';
  }
  out.precision(precision);
}

BoundaryTag all_dirichlet(Point, Point, Point) {
  return {UBoundary::Dirichlet, PBoundary::Dirichlet, false};
}

Mesh unit_square_mesh(int n, const BoundaryTagger& tagger) {
  if (n < 1) throw InvalidArgument("unit_square_mesh: need at least one cell per side");
  std::vector<Point> vertices;
  vertices.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  std::vector<std::array<int, 4>> cells;
  cells.reserve(n * n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return Mesh(std::move(vertices), std::move(cells), tagger, 0);
}

LSegment classify_l_segment(const LShapeGeometry& g, Point mid, Point n) {
  if (n.y < -0.5 && near(mid.y, 0.0)) return LSegment::Bottom;
  if (n.x < -0.5 && near(mid.x, 0.0)) return LSegment::Left;
  if (n.y > 0.5 && near(mid.y, 1.0)) {
    return mid.x < g.load_end ? LSegment::TopLoaded : LSegment::TopRight;
  }
  if (n.x > 0.5 && near(mid.x, 1.0)) return LSegment::RightOuter;
  if (n.y < -0.5 && near(mid.y, g.notch_y)) return LSegment::NotchTop;
  if (n.x > 0.5 && near(mid.x, g.notch_x)) return LSegment::NotchSide;
  throw InvalidArgument("point does not lie on the L-shaped boundary");
}

double l_shape_area(const LShapeGeometry& g) { return 1.0 - (1.0 - g.notch_x) * g.notch_y; }

double l_shape_perimeter(const LShapeGeometry&) { return 4.0; }

Mesh l_shaped_mesh(int level, const LShapeGeometry& g) {
  if (level < 0) throw InvalidArgument("l_shaped_mesh: negative level");
  const double s = g.coarse_size;
  auto divides = [s](double v) {
    const double q = v / s;
    return std::abs(q - std::round(q)) < 1e-12;
  };
  if (!(s > 0.0) || !divides(1.0) || !divides(g.notch_x) || !divides(g.notch_y) ||
      !divides(g.load_end) || !(g.notch_x > 0.0 && g.notch_x < 1.0) ||
      !(g.notch_y > 0.0 && g.notch_y < 1.0) || !(g.load_end > 0.0 && g.load_end <= 1.0)) {
    throw InvalidArgument("l_shaped_mesh: geometry not aligned with the coarse cell size");
  }
  const int m = static_cast<int>(std::lround(1.0 / s));
  std::vector<int> index((m + 1) * (m + 1), -1);
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> cells;
  auto vid = [&](int i, int j) {
    int& slot = index[j * (m + 1) + i];
    if (slot < 0) {
      slot = static_cast<int>(vertices.size());
      vertices.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    }
    return slot;
  };
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const double cx = (i + 0.5) / m;
      const double cy = (j + 0.5) / m;
      if (cx > g.notch_x && cy < g.notch_y) continue;
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  auto tagger = [g](Point a, Point b, Point n) {
    const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const LSegment seg = classify_l_segment(g, mid, n);
    BoundaryTag tag;
    tag.u = std::find(g.rollers.begin(), g.rollers.end(), seg) != g.rollers.end()
                ? UBoundary::Directional
                : UBoundary::Neumann;
    tag.p = seg == LSegment::TopLoaded ? PBoundary::Dirichlet : PBoundary::Neumann;
    tag.goal = seg == LSegment::NotchSide && mid.y < g.notch_y;
    return tag;
  };
  Mesh mesh(std::move(vertices), std::move(cells), tagger, 0);
  for (int l = 0; l < level; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

Mesh refine_uniform(const Mesh& coarse) {
  Mesh fine;
  fine.refinement_level_ = coarse.refinement_level_ + 1;
  fine.vertices_ = coarse.vertices_;
  std::map<EdgeKey, int> midpoints;
  auto midpoint = [&](int a, int b) {
    auto [it, inserted] = midpoints.try_emplace(edge_key(a, b), -1);
    if (inserted) {
      const Point pa = fine.vertices_[a], pb = fine.vertices_[b];
      it->second = static_cast<int>(fine.vertices_.size());
      fine.vertices_.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    }
    return it->second;
  };
  std::vector<std::array<int, 4>> cells;
  cells.reserve(4 * coarse.n_cells());
  for (const Cell& cell : coarse.cells_) {
    const auto [v0, v1, v2, v3] = cell.vertices;
    const int mb = midpoint(v0, v1);
    const int mr = midpoint(v1, v2);
    const int mt = midpoint(v3, v2);
    const int ml = midpoint(v0, v3);
    const int center = static_cast<int>(fine.vertices_.size());
    fine.vertices_.push_back(
        {0.5 * (cell.lower.x + cell.upper.x), 0.5 * (cell.lower.y + cell.upper.y)});
    cells.push_back({v0, mb, center, ml});
    cells.push_back({mb, v1, mr, center});
    cells.push_back({center, mr, v2, mt});
    cells.push_back({ml, center, mt, v3});
  }
  fine.build_cells(cells);
  fine.build_faces();

  std::map<EdgeKey, const Face*> inherited;
  for (const Face& face : coarse.faces_) {
    if (!face.at_boundary()) continue;
    const int m = midpoints.at(edge_key(face.vertices[0], face.vertices[1]));
    inherited[edge_key(face.vertices[0], m)] = &face;
    inherited[edge_key(m, face.vertices[1])] = &face;
  }
  for (Face& face : fine.faces_) {
    if (!face.at_boundary()) continue;
    const Face* parent = inherited.at(edge_key(face.vertices[0], face.vertices[1]));
    face.u_tag = parent->u_tag;
    face.p_tag = parent->p_tag;
    face.is_goal_segment = parent->is_goal_segment;
  }
  return fine;
}

} // namespace biot
