#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace biot {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Boundary condition type for the displacement/velocity fields.
enum class UBoundary { Interior, Dirichlet, Neumann, Directional, None };
/// Boundary condition type for the pressure field.
enum class PBoundary { Interior, Dirichlet, Neumann, None };

std::string to_string(UBoundary tag);
std::string to_string(PBoundary tag);

struct BoundaryTag {
  UBoundary u = UBoundary::None;
  PBoundary p = PBoundary::None;
  bool goal = false;
};

/// Decides the tag of a coarse boundary face from its endpoints and outward normal.
using BoundaryTagger = std::function<BoundaryTag(Point a, Point b, Point outward_normal)>;

// Local face numbering of a rectangle: 0 bottom, 1 right, 2 top, 3 left.
inline constexpr int kFacesPerCell = 4;

struct Cell {
  /// Counterclockwise: (x0,y0), (x1,y0), (x1,y1), (x0,y1).
  std::array<int, 4> vertices{};
  std::array<int, 4> faces{};
  Point lower;
  Point upper;

  double width() const { return upper.x - lower.x; }
  double height() const { return upper.y - lower.y; }
  double area() const { return width() * height(); }
  double diameter() const;
};

struct Face {
  std::array<int, 2> vertices{};
  /// cells[0] is the owner K+, cells[1] the neighbour K- or -1 on the boundary.
  std::array<int, 2> cells{-1, -1};
  /// Local face index of this face within cells[0] and cells[1].
  std::array<int, 2> local_index{-1, -1};
  /// Unit normal pointing out of the owner.
  Point normal;
  double measure = 0.0;
  /// Averaged cell area: (|K+| + |K-|) / 2 inside, |K| on the boundary.
  double h_F = 0.0;
  /// Harmonic length 1 / (1/e+ + 1/e-) with e the cell extent normal to the face;
  /// on the boundary both sides are the owner.
  double h_normal = 0.0;
  UBoundary u_tag = UBoundary::Interior;
  PBoundary p_tag = PBoundary::Interior;
  bool is_goal_segment = false;

  bool at_boundary() const { return cells[1] < 0; }
};

/// Conforming mesh of axis-aligned rectangles. Immutable once built.
class Mesh {
public:
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
       const BoundaryTagger& tagger, int refinement_level = 0);

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Face>& faces() const { return faces_; }
  int refinement_level() const { return refinement_level_; }

  std::size_t n_cells() const { return cells_.size(); }
  std::size_t n_boundary_faces() const;
  std::size_t n_interior_faces() const { return faces_.size() - n_boundary_faces(); }

  /// Largest cell diameter.
  double mesh_size() const;
  double total_area() const;
  double boundary_length() const;

  /// Face-adjacent cell of `cell` across local face `local_face`, or -1.
  int neighbor(int cell, int local_face) const;

  /// Dump in the plain-text `v`/`c`/`f` format.
  void write(std::ostream& out) const;

private:
  friend Mesh refine_uniform(const Mesh& mesh);
  Mesh() = default;
  void build_cells(const std::vector<std::array<int, 4>>& cells);
  void build_faces();

  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<Face> faces_;
  int refinement_level_ = 0;
};

/// Default tagging of the unit square: Dirichlet for displacement and pressure everywhere.
BoundaryTag all_dirichlet(Point, Point, Point);

/// Uniform n x n mesh of (0,1)^2.
Mesh unit_square_mesh(int n_cells_per_side, const BoundaryTagger& tagger = all_dirichlet);

/// Named straight pieces of the L-shaped boundary.
enum class LSegment { Bottom, Left, TopLoaded, TopRight, RightOuter, NotchTop, NotchSide };

struct LShapeGeometry {
  /// The removed notch is [notch_x, 1] x [0, notch_y].
  double notch_x = 0.75;
  double notch_y = 0.5;
  /// Upper boundary portion [0, load_end] x {1} carries the traction and the pressure
  /// Dirichlet condition.
  double load_end = 0.5;
  /// Coarse cell size; must divide notch_x, notch_y and load_end.
  double coarse_size = 0.25;
  /// Segments carrying roller (directional) conditions.
  std::vector<LSegment> rollers{LSegment::Bottom, LSegment::Left};
};

LSegment classify_l_segment(const LShapeGeometry& geometry, Point midpoint, Point normal);
double l_shape_area(const LShapeGeometry& geometry);
double l_shape_perimeter(const LShapeGeometry& geometry);

/// L-shaped domain (0,1)^2 minus the notch, refined `level` times.
Mesh l_shaped_mesh(int level, const LShapeGeometry& geometry = {});

/// Splits every cell into four congruent children; boundary tags are inherited.
Mesh refine_uniform(const Mesh& mesh);

} // namespace biot
