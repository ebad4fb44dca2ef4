#pragma once

#include <vector>

#include "oldroyd/fields.hpp"

namespace oldroyd {

/// Feet of backward characteristics, one per evaluation point, located in the
/// mesh. Feet are clamped onto the boundary within the mesh tolerance.
struct CharacteristicFeet {
  struct Foot {
    Vec2 position;
    int element;
    std::array<double, 3> bary;
  };
  std::vector<Foot> feet;
};

/// Integrate the backward flow dX/dt = u(X), X(t+dt) = x over one time step
/// with `substeps` classical 4th-order steps. For u = 0 the feet equal the
/// points exactly.
CharacteristicFeet integrate_backward_flow(const Mesh& m, const VelocityEvaluator& u,
                                           const std::vector<Vec2>& points,
                                           const std::vector<int>& hints, double dt,
                                           int substeps);

/// Evaluate a stress field at characteristic feet (element value for P0,
/// barycentric interpolation within the landing element for P1disc).
std::vector<SymMat> pullback_field(const Mesh& m, const SymTensorField& f,
                                   const CharacteristicFeet& feet);

/// Per-edge upwind data at edge quadrature points: |u.n| and the upstream (-)
/// / downstream (+) element labels induced by the sign of u.n against the
/// fixed edge normal. Quadrature points where u.n = 0 contribute nothing.
struct EdgeUpwindData {
  struct Point {
    double s;        ///< edge parameter in [0,1] from the lower vertex
    double weight;   ///< quadrature weight times edge length
    double abs_un;   ///< |u.n|
    int upstream;
    int downstream;
  };
  /// Indexed by edge id; empty for boundary edges and where u.n vanishes.
  std::vector<std::vector<Point>> edges;
};

/// Requires a single-valued normal trace; a jump above 1e-10 in u.n across an
/// edge is a contract violation.
EdgeUpwindData build_edge_upwind(const Mesh& m, const VelocityEvaluator& u,
                                 int edge_points = 2);

}  // namespace oldroyd
