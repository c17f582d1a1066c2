#include "biot/errors.hpp"
#include "biot/mesh.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

using namespace biot;

namespace {

double sum_cell_areas(const Mesh& mesh) {
  double s = 0.0;
  for (const Cell& c : mesh.cells()) s += c.area();
  return s;
}

double sum_boundary_measure(const Mesh& mesh) {
  double s = 0.0;
  for (const Face& f : mesh.faces()) {
    if (f.at_boundary()) s += f.measure;
  }
  return s;
}

std::set<std::pair<long, long>> vertex_set(const Mesh& mesh) {
  std::set<std::pair<long, long>> s;
  for (const Point& p : mesh.vertices()) s.insert({std::lround(p.x * 1e9), std::lround(p.y * 1e9)});
  return s;
}

Point outward_normal(const Cell& c, int local_face) {
  static const Point normals[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
  (void)c;
  return normals[local_face];
}

void check_structure(const Mesh& mesh, double area, double perimeter) {
  EXPECT_NEAR(sum_cell_areas(mesh), area, 1e-12 * area);
  EXPECT_NEAR(sum_boundary_measure(mesh), perimeter, 1e-12 * perimeter);
  std::vector<int> uses(mesh.faces().size(), 0);
  for (const Cell& c : mesh.cells()) {
    EXPECT_GT(c.area(), 0.0);
    for (int f : c.faces) ++uses[f];
  }
  for (std::size_t i = 0; i < mesh.faces().size(); ++i) {
    const Face& f = mesh.faces()[i];
    EXPECT_EQ(uses[i], f.at_boundary() ? 1 : 2);
    EXPECT_NEAR(std::hypot(f.normal.x, f.normal.y), 1.0, 1e-14);
    const Cell& owner = mesh.cells()[f.cells[0]];
    const Point n0 = outward_normal(owner, f.local_index[0]);
    EXPECT_EQ(f.normal.x, n0.x);
    EXPECT_EQ(f.normal.y, n0.y);
    if (f.at_boundary()) {
      EXPECT_NE(f.u_tag, UBoundary::Interior);
      EXPECT_NE(f.p_tag, PBoundary::Interior);
      EXPECT_NE(f.u_tag, UBoundary::None);
      EXPECT_NE(f.p_tag, PBoundary::None);
      EXPECT_NEAR(f.h_F, owner.area(), 1e-15);
    } else {
      const Cell& other = mesh.cells()[f.cells[1]];
      const Point n1 = outward_normal(other, f.local_index[1]);
      EXPECT_EQ(f.normal.x, -n1.x);
      EXPECT_EQ(f.normal.y, -n1.y);
      EXPECT_EQ(f.u_tag, UBoundary::Interior);
      EXPECT_EQ(f.p_tag, PBoundary::Interior);
      EXPECT_FALSE(f.is_goal_segment);
      EXPECT_NEAR(f.h_F, 0.5 * (owner.area() + other.area()), 1e-15);
    }
  }
}

} // namespace

TEST(UnitSquareMesh, FourCellsPerSideMatchesCoarsestLevel) {
  const Mesh m = unit_square_mesh(4);
  EXPECT_EQ(m.n_cells(), 16u);
  EXPECT_EQ(m.vertices().size(), 25u);
  EXPECT_NEAR(m.mesh_size(), 1.0 / (2.0 * std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(m.mesh_size(), 0.35355, 1e-5);
}

TEST(UnitSquareMesh, SingleCell) {
  const Mesh m = unit_square_mesh(1);
  EXPECT_EQ(m.n_cells(), 1u);
  EXPECT_EQ(m.n_boundary_faces(), 4u);
  EXPECT_EQ(m.n_interior_faces(), 0u);
}

TEST(UnitSquareMesh, TwoByTwoEnumeration) {
  const Mesh m = unit_square_mesh(2);
  EXPECT_EQ(m.n_cells(), 4u);
  EXPECT_EQ(m.n_interior_faces(), 4u);
  EXPECT_EQ(m.n_boundary_faces(), 8u);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-15);
}

TEST(UnitSquareMesh, RejectsZero) { EXPECT_THROW(unit_square_mesh(0), InvalidArgument); }

TEST(UnitSquareMesh, StructuralInvariants) {
  for (int n : {1, 2, 3, 4, 7}) check_structure(unit_square_mesh(n), 1.0, 4.0);
}

TEST(UnitSquareMesh, HarmonicPenaltyLengthOnUniformMesh) {
  const Mesh m = unit_square_mesh(4);
  for (const Face& f : m.faces()) EXPECT_NEAR(f.h_normal, 0.125, 1e-15);
}

TEST(LShapedMesh, LevelZeroCellsAndArea) {
  // (0,1)^2 minus [0.75,1]x[0,0.5] in 0.25 cells: 16 - 2 = 14 cells of area 1/16
  const Mesh m = l_shaped_mesh(0);
  const double area = 1.0 - 0.25 * 0.5;
  EXPECT_EQ(m.n_cells(), 14u);
  EXPECT_NEAR(area, 0.875, 1e-15);
  EXPECT_NEAR(m.total_area(), area, 1e-12);
}

TEST(LShapedMesh, LevelOnePreservesArea) {
  const Mesh m = l_shaped_mesh(1);
  EXPECT_EQ(m.n_cells(), 56u);
  EXPECT_NEAR(m.total_area(), 0.875, 1e-12);
}

TEST(LShapedMesh, GoalSegmentHasLengthHalf) {
  for (int level = 0; level <= 3; ++level) {
    const Mesh m = l_shaped_mesh(level);
    double length = 0.0;
    for (const Face& f : m.faces()) {
      const Point a = m.vertices()[f.vertices[0]], b = m.vertices()[f.vertices[1]];
      const bool on_segment = f.at_boundary() && std::abs(a.x - 0.75) < 1e-14 &&
                              std::abs(b.x - 0.75) < 1e-14 && std::max(a.y, b.y) <= 0.5 + 1e-14;
      EXPECT_EQ(f.is_goal_segment, on_segment);
      if (f.is_goal_segment) {
        length += f.measure;
        EXPECT_EQ(f.normal.x, 1.0);
      }
    }
    EXPECT_NEAR(length, 0.5, 1e-14) << "level " << level;
  }
}

TEST(LShapedMesh, BoundaryTags) {
  const Mesh m = l_shaped_mesh(1);
  for (const Face& f : m.faces()) {
    if (!f.at_boundary()) continue;
    const Point a = m.vertices()[f.vertices[0]], b = m.vertices()[f.vertices[1]];
    const Point mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const bool top_loaded = std::abs(mid.y - 1.0) < 1e-14 && mid.x < 0.5;
    EXPECT_EQ(f.p_tag, top_loaded ? PBoundary::Dirichlet : PBoundary::Neumann);
    const bool roller = std::abs(mid.y) < 1e-14 || std::abs(mid.x) < 1e-14;
    EXPECT_EQ(f.u_tag, roller ? UBoundary::Directional : UBoundary::Neumann);
  }
}

TEST(LShapedMesh, ConfigurableRollers) {
  LShapeGeometry g;
  g.rollers = {LSegment::Bottom};
  const Mesh m = l_shaped_mesh(0, g);
  for (const Face& f : m.faces()) {
    if (!f.at_boundary()) continue;
    const Point a = m.vertices()[f.vertices[0]], b = m.vertices()[f.vertices[1]];
    const bool bottom = std::abs(a.y) < 1e-14 && std::abs(b.y) < 1e-14;
    EXPECT_EQ(f.u_tag == UBoundary::Directional, bottom);
  }
}

TEST(LShapedMesh, StructuralInvariants) {
  for (int level = 0; level <= 3; ++level) check_structure(l_shaped_mesh(level), 0.875, 4.0);
}

TEST(RefineUniform, QuadruplesCellsAndHalvesMeshSize) {
  const Mesh coarse = unit_square_mesh(4);
  const Mesh fine = refine_uniform(coarse);
  EXPECT_EQ(fine.n_cells(), 64u);
  EXPECT_NEAR(fine.mesh_size(), coarse.mesh_size() / 2.0, 1e-14);
  EXPECT_EQ(fine.refinement_level(), coarse.refinement_level() + 1);
  check_structure(fine, 1.0, 4.0);
}

TEST(RefineUniform, TwiceEqualsDirectFinerMesh) {
  const Mesh twice = refine_uniform(refine_uniform(unit_square_mesh(2)));
  EXPECT_EQ(vertex_set(twice), vertex_set(unit_square_mesh(8)));
  const Mesh l2 = l_shaped_mesh(2);
  EXPECT_EQ(vertex_set(refine_uniform(refine_uniform(l_shaped_mesh(0)))), vertex_set(l2));
}

TEST(RefineUniform, InheritsBoundaryTags) {
  const Mesh coarse = l_shaped_mesh(0);
  const Mesh fine = refine_uniform(coarse);
  std::size_t goal_coarse = 0, goal_fine = 0, dirichlet_coarse = 0, dirichlet_fine = 0;
  for (const Face& f : coarse.faces()) {
    goal_coarse += f.is_goal_segment;
    dirichlet_coarse += f.p_tag == PBoundary::Dirichlet;
  }
  for (const Face& f : fine.faces()) {
    goal_fine += f.is_goal_segment;
    dirichlet_fine += f.p_tag == PBoundary::Dirichlet;
  }
  EXPECT_EQ(goal_fine, 2 * goal_coarse);
  EXPECT_EQ(dirichlet_fine, 2 * dirichlet_coarse);
}

TEST(MeshDump, PlainTextFormat) {
  const Mesh m = unit_square_mesh(2);
  std::ostringstream os;
  m.write(os);
  std::istringstream in(os.str());
  std::string line;
  std::size_t v = 0, c = 0, f = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "v") {
      double x, y;
      ASSERT_TRUE(ls >> x >> y);
      ++v;
    } else if (kind == "c") {
      int i0, i1, i2, i3;
      ASSERT_TRUE(ls >> i0 >> i1 >> i2 >> i3);
      ++c;
    } else if (kind == "f") {
      int i0, i1;
      std::string tu, tp;
      ASSERT_TRUE(ls >> i0 >> i1 >> tu >> tp);
      EXPECT_EQ(tu, "dirichlet");
      EXPECT_EQ(tp, "dirichlet");
      ++f;
    } else {
      FAIL() << "unexpected line " << line;
    }
  }
  EXPECT_EQ(v, 9u);
  EXPECT_EQ(c, 4u);
  EXPECT_EQ(f, 8u);
}
